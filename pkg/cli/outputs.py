""" Output files and the run manifest written next to them """
import logging as log
import platform
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import numpy as np

from cli import __version__
from numerics.grid import DensityVector
from utils import create_folder_if_does_not_exist, file_sha256, get_current_utc_date_time_formatted, write_csv, \
    write_json

MANIFEST_NAME = "manifest.json"

_run_argv: List[str] = []


def set_run_argv(argv: Iterable[str]):
    """ Remembers the argument vector of the current invocation for the manifest """
    global _run_argv
    _run_argv = [str(arg) for arg in argv]


def get_run_argv() -> List[str]:
    return list(_run_argv)


def prepare_out_dir(out_dir: str) -> Path:
    create_folder_if_does_not_exist(out_dir)
    return Path(out_dir)


def write_density(path: Path, density: DensityVector, column: str = "g_hat"):
    write_csv(str(path), ["mu", column], [density.grid.points, density.values])
    log.info(f"Wrote {path}")


def write_table(path: Path, header: List[str], columns: List):
    write_csv(str(path), header, columns)
    log.info(f"Wrote {path}")


def write_report(path: Path, report: dict):
    write_json(str(path), report)
    log.info(f"Wrote {path}")


def write_manifest(out_dir: Path, subcommand: str, parameters: dict, outputs: List[str],
                   inputs: Optional[Dict[str, str]] = None, seed: Optional[int] = None) -> Path:
    """ Writes manifest.json describing how the files in out_dir were produced

    :param Path out_dir:
    :param str subcommand:
    :param dict parameters: resolved parameter map of the subcommand
    :param outputs: file names written into out_dir
    :param inputs: input files to fingerprint, by role
    :param int seed:
    :return: manifest path
    """
    manifest = {
        "subcommand": subcommand,
        "parameters": parameters,
        "seed": seed,
        "version": __version__,
        "argv": get_run_argv(),
        "created_utc": get_current_utc_date_time_formatted(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "inputs": {role: {"path": str(path), "sha256": file_sha256(str(path))}
                   for role, path in (inputs or {}).items() if path},
        "outputs": {name: file_sha256(str(out_dir / name)) for name in outputs},
    }
    path = out_dir / MANIFEST_NAME
    write_json(str(path), manifest)
    log.info(f"Wrote {path}")
    return path


def replay_argv(manifest: dict, out_dir: str) -> List[str]:
    """ Recorded argument vector with its output directory replaced """
    argv = list(manifest.get("argv") or [])
    if not argv:
        raise ValueError("manifest has no recorded argument vector")
    replaced = []
    skip = False
    for index, arg in enumerate(argv):
        if skip:
            skip = False
            continue
        if arg == "--out-dir" and index + 1 < len(argv):
            skip = True
            continue
        if arg.startswith("--out-dir="):
            continue
        replaced.append(arg)
    return replaced + ["--out-dir", out_dir]
