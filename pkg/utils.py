"""  General util functions for files, reports and shell calls """
# pylint: disable=too-many-arguments
import dataclasses
import datetime
import hashlib
import json
import logging as log
import re
import subprocess
from pathlib import Path
from typing import Sequence
from urllib.parse import urlparse

import numpy as np
import pandas as pd
import pytz

CSV_FLOAT_FORMAT = "%.17g"


def create_folder_if_does_not_exist(path_to_folder: str):
    """ Creates folder if one does not exist on the specified path

    :param str path_to_folder:
    """
    Path(path_to_folder).mkdir(parents=True, exist_ok=True)


def get_valid_filename(file_name: str) -> str:
    """
    Return the given string converted to a string that can be used for a clean
    filename. Remove leading and trailing spaces; convert other spaces to
    underscores; and remove anything that is not an alphanumeric, dash,
    underscore, or dot.

    :param str file_name:
    :return: Sanitised string
    :rtype: str
    """
    file_name = file_name.strip().replace(' ', '_')
    return re.sub(r'(?u)[^-\w.]', '', file_name)


def get_file_name_from_url(url: str) -> str:
    """ Last path segment of a URL, sanitised for use as a local file name

    :param str url:
    :return: File name
    :rtype: str
    """
    return get_valid_filename(Path(urlparse(url).path).name)


def get_current_utc_date_time_formatted(date_format: str = "%Y-%m-%dT%H:%M:%SZ") -> str:
    """ Get current UTC date and time formatted

    :param str date_format:
    :return: Current utc date/time in requested format
    :rtype: str
    """
    now = datetime.datetime.now(pytz.utc)
    return now.strftime(date_format)


def json_serial(obj):
    """JSON serializer for objects not serializable by default json code"""

    if isinstance(obj, (datetime.datetime, datetime.date)):
        return obj.isoformat()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "model_dump"):
        return obj.model_dump(mode="json")
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    return obj.__dict__


def write_json(file_name: str, data, indent: int = 2):
    """ Writes data as pretty JSON, NaN and inf as their JavaScript spellings

    :param str file_name:
    :param data: JSON-able structure, numpy values allowed
    :param int indent:
    """
    with open(file=file_name, mode='w', encoding='utf-8') as file:
        json.dump(data, file, default=json_serial, indent=indent, sort_keys=True)
        file.write("\n")


def file_sha256(file_name: str, chunk_size: int = 1 << 20) -> str:
    """ Hex SHA-256 digest of a file's bytes

    :param str file_name:
    :param int chunk_size:
    :return: Hex digest
    :rtype: str
    """
    digest = hashlib.sha256()
    with open(file_name, 'rb') as file:
        for chunk in iter(lambda: file.read(chunk_size), b''):
            digest.update(chunk)
    return digest.hexdigest()


def _csv_column(values: list) -> pd.Series:
    """ Numeric columns with gaps become float so every number gets the float format """
    series = pd.Series(values, dtype=object)
    present = series.dropna()
    numeric = all(isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, (bool, np.bool_))
                  for value in present)
    return pd.to_numeric(series) if numeric and len(present) else series.infer_objects()


def write_csv(file_name: str, header: Sequence[str], columns: Sequence, float_format: str = CSV_FLOAT_FORMAT):
    """ Writes equal-length columns as CSV with full round-trip float precision

    :param str file_name:
    :param header: column names
    :param columns: one sequence per column; None is written as an empty field
    :param str float_format: printf-style format for floats
    """
    columns = [list(column) for column in columns]
    if len(columns) != len(header):
        raise ValueError(f"{len(header)} column names for {len(columns)} columns")
    lengths = {len(column) for column in columns}
    if len(lengths) > 1:
        raise ValueError(f"columns have different lengths {sorted(lengths)}")
    frame = pd.DataFrame({name: _csv_column(column) for name, column in zip(header, columns)}, columns=list(header))
    frame.to_csv(file_name, index=False, float_format=float_format, na_rep="", lineterminator="\n")


def read_csv(file_name: str, **kwargs) -> pd.DataFrame:
    """ Reads a comma-separated file with a header row

    :param str file_name:
    :param kwargs: passed on to pandas.read_csv
    :return: DataFrame with stripped column names
    :raises ValueError: on empty or malformed files
    """
    try:
        frame = pd.read_csv(file_name, skipinitialspace=True, **kwargs)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise ValueError(f"{file_name}: {exc}") from exc
    frame.columns = [str(name).strip() for name in frame.columns]
    return frame


def read_numeric_column(file_name: str, column: str) -> np.ndarray:
    """ One named numeric column of a CSV file

    :param str file_name:
    :param str column: header name
    :return: float array
    :raises ValueError: when the column is missing or a value does not parse
    """
    frame = read_csv(file_name)
    if column not in frame.columns:
        raise ValueError(f"{file_name}: no column '{column}' in header {list(frame.columns)}")
    values = pd.to_numeric(frame[column], errors="coerce")
    bad = np.flatnonzero(values.isna().to_numpy())
    if bad.size:
        raise ValueError(f"{file_name}:{bad[0] + 2}: cannot parse '{frame[column].iloc[bad[0]]}' as a number")
    return values.to_numpy(dtype=float)


def run_shell_command(cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                      universal_newlines=True, check=False, timeout=None, shell=False):
    """ This function will run a shell command
    :param cmd: list of cmd arguments, or a string split on spaces
    :return: retval object of subprocess run
    """
    if isinstance(cmd, str):
        cmd = [c for c in cmd.split(' ') if c]
    log.debug(f"running: {' '.join(str(c) for c in cmd)}")
    return subprocess.run(
        [str(c) for c in cmd],
        stdout=stdout,
        stderr=stderr,
        universal_newlines=universal_newlines,
        check=check,
        timeout=timeout,
        shell=shell
    )
