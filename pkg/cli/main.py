""" decon entry point: subcommand dispatch, logging setup and exit codes """
import json
import logging as log
import sys
from typing import List, Optional

from pydantic import BaseModel, Field, ValidationError
from pydantic_settings import BaseSettings, CliApp, CliSubCommand, SettingsConfigDict, SettingsError

from cli.commands import Crime, Efficiency, Fit, Hermite, Minimax, Simulate
from cli.outputs import replay_argv, set_run_argv
from numerics.static import DeconvolutionError, ExitCodes

LOG_FORMAT = "%(asctime)s %(levelname)s %(module)s: %(message)s"


class Replay(BaseModel):
    """Re-run the command recorded in a manifest into a new output directory."""
    manifest: str = Field(description="manifest.json of an earlier run")
    out_dir: str = Field(description="directory for the re-created outputs")

    def cli_cmd(self):
        with open(self.manifest, 'r') as manifest_json:
            manifest = json.load(manifest_json)
        argv = replay_argv(manifest, self.out_dir)
        log.info(f"Replaying '{manifest.get('subcommand')}' from {self.manifest}")
        set_run_argv(argv)
        CliApp.run(DeconCLI, cli_args=argv)


class DeconCLI(BaseSettings):
    """Density deconvolution: exponential-family fits, efficiency spectra, minimax bounds and simulations."""
    model_config = SettingsConfigDict(cli_prog_name="decon", cli_kebab_case=True, cli_implicit_flags=True,
                                      env_prefix="DECON_")

    verbose: bool = Field(default=False, description="debug logging")
    fit: CliSubCommand[Fit]
    efficiency: CliSubCommand[Efficiency]
    minimax: CliSubCommand[Minimax]
    simulate: CliSubCommand[Simulate]
    crime: CliSubCommand[Crime]
    hermite: CliSubCommand[Hermite]
    replay: CliSubCommand[Replay]

    def cli_cmd(self):
        if self.verbose:
            log.getLogger().setLevel(log.DEBUG)
        CliApp.run_subcommand(self)


def main(argv: Optional[List[str]] = None) -> int:
    """ Runs one decon command

    :param argv: arguments without the program name, sys.argv[1:] by default
    :return: exit status, 0 on success
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    log.basicConfig(level=log.INFO, format=LOG_FORMAT)
    set_run_argv(argv)
    try:
        CliApp.run(DeconCLI, cli_args=argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else ExitCodes.USAGE
    except (ValidationError, SettingsError) as exc:
        log.error(f"invalid arguments: {exc}")
        return ExitCodes.USAGE
    except (DeconvolutionError, ValueError, OSError) as exc:
        log.error(f"{type(exc).__name__}: {exc}")
        return ExitCodes.for_exception(exc)
    return ExitCodes.SUCCESS


if __name__ == "__main__":
    sys.exit(main())
