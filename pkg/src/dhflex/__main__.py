import argparse
import asyncio
import logging
import pathlib
import sys

from . import __version__ as dhflexVersion
from .backends.meterdata import IngestError
from .core.classes import BadSpec, DegenerateInput
from .core.lp import LPError
from .strategies import StrategyError
from .workflow.command import (
    ValidationFailed,
    cmdRank,
    cmdRun,
    cmdSweep,
    cmdSynth,
    cmdValidate,
)
from .workflow.config import UsageError, loadRunConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_STRATEGY = 3

logger = logging.getLogger("dhflex")

if hasattr(logging, "getLevelNamesMapping"):
    levelNamesMapping = logging.getLevelNamesMapping()
else:
    # Python < 3.11
    levelNamesMapping = {
        "CRITICAL": 50,
        "FATAL": 50,
        "ERROR": 40,
        "WARN": 30,
        "WARNING": 30,
        "INFO": 20,
        "DEBUG": 10,
        "NOTSET": 0,
    }

sortedlevelNames = [
    name for name, value in sorted(levelNamesMapping.items(), key=lambda item: item[1])
]


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def floatList(text):
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers: {text!r}")


def intList(text):
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers: {text!r}")


def seedValue(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 bits: {text!r}")
    return value


def addCommonArguments(parser) -> None:
    parser.add_argument(
        "--config",
        type=pathlib.Path,
        help="A YAML or JSON file with the run configuration",
    )
    parser.add_argument(
        "--out",
        type=pathlib.Path,
        default=pathlib.Path(),
        help="The folder for the output files, created when missing",
    )
    parser.add_argument("--meters", help="Meter data CSV file")
    parser.add_argument("--metas", help="Meter meta data CSV file")
    parser.add_argument("--seed", type=seedValue, help="Seed for synthetic data")
    parser.add_argument("--days", type=int, help="Days of synthetic data")
    parser.add_argument("--rho", type=float, help="Water density, kg/m³")
    parser.add_argument("--cp", type=float, help="Heat capacity, kWh/(kg·°C)")
    parser.add_argument("--eta-pump", type=float, help="Pump efficiency")
    parser.add_argument(
        "--lambda",
        dest="lambdas",
        type=floatList,
        help="Comma separated pump exponents for the pumping energy ratios",
    )
    parser.add_argument(
        "--alpha", type=floatList, help="Comma separated flexibility levels"
    )
    parser.add_argument(
        "--beta", type=floatList, help="Comma separated flow limitation levels"
    )
    parser.add_argument(
        "--include",
        type=intList,
        help="Comma separated meter ids taking part; default is all meters",
    )
    parser.add_argument(
        "--strategy",
        action="append",
        help="A scenario such as ls20, fl10, tl or tl+ls20; may be repeated",
    )
    parser.add_argument(
        "--supply-temp-max",
        type=float,
        help="Maximum district heating supply temperature, °C",
    )
    parser.add_argument("--top-hours", type=int, help="Rows in duration_curves_top.csv")
    parser.add_argument("--jobs", type=int, help="Worker processes for solving")
    parser.add_argument(
        "--logging-level",
        choices=sortedlevelNames,
        default="WARNING",
        help="The logging level for stdout output",
    )
    parser.add_argument(
        "--log-file",
        type=argparse.FileType("w"),
        help="A path for a log file that captures all log activity",
    )


def buildParser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    addCommonArguments(common)

    parser = ArgumentParser(prog="dhflex")
    parser.add_argument(
        "-V",
        "--version",
        action="version",
        version=dhflexVersion,
        help="Show dhflex's version number and exit",
    )
    subParsers = parser.add_subparsers(required=True, dest="commandName")
    for name, command, description in [
        ("synth", cmdSynth, "Write synthetic meter and meta data"),
        ("validate", cmdValidate, "Fill gaps in the input and check it"),
        ("run", cmdRun, "Apply strategies and report their metrics"),
        ("sweep", cmdSweep, "Sweep load shifting and flow limitation levels"),
        ("rank", cmdRank, "Rank meters greedily by peak flow reduction"),
    ]:
        subParser = subParsers.add_parser(
            name, parents=[common], help=description, description=description
        )
        subParser.set_defaults(command=command)
    return parser


def configOverrides(args) -> dict:
    overrides: dict = {}
    if args.meters is not None or args.metas is not None:
        if args.meters is None or args.metas is None:
            raise UsageError("--meters and --metas go together")
        overrides["input"] = {"meters": args.meters, "metas": args.metas}
        overrides["synth"] = None
    synth = {
        key: value
        for key, value in [("seed", args.seed), ("days", args.days)]
        if value is not None
    }
    if synth:
        overrides["synth"] = synth
    constants = {
        key: value
        for key, value in [
            ("rho", args.rho),
            ("cp", args.cp),
            ("etaPump", args.eta_pump),
        ]
        if value is not None
    }
    if constants:
        overrides["constants"] = constants
    for key, value in [
        ("lambdas", args.lambdas),
        ("alphas", args.alpha),
        ("betas", args.beta),
        ("include", args.include),
        ("supplyTempMax", args.supply_temp_max),
        ("topHours", args.top_hours),
        ("jobs", args.jobs),
    ]:
        if value is not None:
            overrides[key] = value
    if args.strategy:
        overrides["scenarios"] = args.strategy
        overrides["rankVariants"] = args.strategy
    return overrides


def setupLogging(args) -> None:
    rootLogger = logging.getLogger()
    rootLogger.setLevel(logging.NOTSET)
    rootLogger.handlers.clear()
    stdoutHandler = logging.StreamHandler(sys.stdout)
    stdoutHandler.setLevel(levelNamesMapping[args.logging_level])
    stdoutHandler.setFormatter(
        logging.Formatter(
            "%(asctime)s %(name)-17s %(levelname)-8s %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )
    )
    rootLogger.addHandler(stdoutHandler)

    if args.log_file is not None:
        logFileHandler = logging.StreamHandler(args.log_file)
        logFileHandler.setLevel(logging.DEBUG)
        logFileHandler.setFormatter(
            logging.Formatter(
                "%(asctime)s %(name)-17s %(levelname)-8s %(message)s",
                datefmt="%Y-%m-%d %H:%M:%S",
            )
        )
        rootLogger.addHandler(logFileHandler)


async def mainAsync(argv=None) -> int:
    args = buildParser().parse_args(argv)
    setupLogging(args)

    try:
        config = loadRunConfig(args.config, configOverrides(args))
        outDir = args.out
        outDir.mkdir(parents=True, exist_ok=True)
        await args.command(config, outDir)
    except (UsageError, BadSpec) as e:
        logger.error(f"{args.commandName}: {e}")
        return EXIT_USAGE
    except (ValidationFailed, IngestError) as e:
        logger.error(f"{args.commandName}: {e}")
        return EXIT_VALIDATION
    except (StrategyError, LPError, DegenerateInput) as e:
        logger.error(f"{args.commandName}: {e}")
        return EXIT_STRATEGY
    except OSError as e:
        logger.error(f"{args.commandName}: IoError: {e}")
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    sys.exit(asyncio.run(mainAsync()))


if __name__ == "__main__":
    main()
