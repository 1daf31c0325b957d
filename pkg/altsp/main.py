#!/usr/bin/env python

"""
Usage:
    altsp [options] design
    altsp [options] k-factor
    altsp [options] oc-curve
    altsp [options] fit
    altsp [options] simulate-case
    altsp [options] bench-links
    altsp [options] feasibility
    altsp --version

Options:
    --help -h             Print this message
    --version             Print the version
    --config PATH         YAML configuration file
    --preset NAME         Risk preset, case1 .. case6
    --objective KIND      Design objective, cost or variance
    --seed N              Random seed (overrides the configuration)
    --out DIR             Output directory
    --data PATH           Sample CSV with columns stress,log_time,status
    --no-progress         Hide progress bars
    --debug               Debug logging

Description:

design
    Optimize the sampling plan (sample size, stress levels, allocation and
    censoring time) for the chosen objective under the producer's and
    consumer's risks.  Writes plan.csv.

k-factor
    Print the acceptability constant k and the quantiles it is built from.

oc-curve
    Write the OC curve (oc.csv) of the configured plan, or of an optimized
    plan when the configuration has no plan section.

fit
    Fit PLA and linear stress links to a censored sample by maximum
    likelihood.  Writes fit.csv and comparison.csv.

simulate-case
    Run the Arrhenius case study replications.  Writes replications.csv.

bench-links
    Compare link shapes by least-squares SSE.  Writes sse.csv.

feasibility
    Audit the constraints of the plan given in the configuration.

Every command writes result.yaml and records the run in runs.db inside the
output directory.  Exit status is 2 for configuration or input errors and 3
for numerical failures.
"""

import sys
import logging

from docopt import DocoptExit, docopt
from icecream import ic
from dotenv import load_dotenv

from . import __version__
from .errors import ConfigError, DomainError, InputError, NumericalError

load_dotenv()

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _selected_command(options) -> str:
    from .commands import COMMANDS

    for name in COMMANDS:
        if options.get(name):
            return name
    raise ConfigError("no command given")


def _overrides(options):
    seed = options["--seed"]
    if seed is not None:
        try:
            seed = int(seed)
        except ValueError:
            raise ConfigError(f"--seed must be an integer, got {seed!r}")
    return {
        "preset": options["--preset"],
        "objective": options["--objective"],
        "seed": seed,
        "output_dir": options["--out"],
    }


def load_run_config(options):
    """Effective configuration and the bytes its provenance hash covers."""
    from .config import apply_overrides, config_from_dict, read_config_document

    overrides = {k: v for k, v in _overrides(options).items() if v is not None}
    doc, raw = {}, None
    if options["--config"]:
        doc, raw = read_config_document(options["--config"])
    doc = apply_overrides(doc, overrides)
    if options["--data"]:
        doc["data"] = {**(doc.get("data") or {}), "path": options["--data"]}
    config = config_from_dict(doc)

    if raw is not None:
        extra = dict(overrides)
        if options["--data"]:
            extra["data"] = options["--data"]
        if extra:
            raw += b"\n# overrides " + repr(sorted(extra.items())).encode("utf-8")
    return config, raw


def run_command(argv=None) -> int:
    try:
        options = docopt(__doc__, argv=argv, version=__version__)
    except DocoptExit as e:
        print(e, file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as e:
        # --help and --version
        return EXIT_OK if e.code in (None, 0) else EXIT_CONFIG

    loglevel = "INFO"
    ic.disable()
    if options["--debug"]:
        ic.enable()
        loglevel = "DEBUG"

    logging.basicConfig(level=loglevel, format="%(levelname)s: %(message)s")

    try:
        from common.bootstrap import open_workspace
        from .commands import CommandContext, run

        command = _selected_command(options)
        config, raw = load_run_config(options)
        workspace = open_workspace(config.output_dir)
        try:
            ctx = CommandContext(
                workspace, config, raw, progress=not options["--no-progress"]
            )
            run(command, ctx)
        finally:
            workspace.close()
    except (ConfigError, InputError, DomainError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
