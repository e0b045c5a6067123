"""
Command-line entry point ``trivium-hf``.

Subcommands:
    keystream   print keystream bits of a (possibly faulted) machine as hex
    detect      run blind case detection and print the detection record
    attack      detect, run the matching attack and score it against the key
    campaign    Monte Carlo campaign; NDJSON trial records plus a summary
    verify      run one check of the verification catalog

Exit codes: 0 success, 1 attack or verification failure, 2 usage error.
Logs go to stderr so stdout stays machine-readable.
"""

import argparse
import logging
import sys
from contextlib import contextmanager
from typing import IO, Iterator, List, Optional

from pydantic import ValidationError

from . import config
from .attack_engine import run_attack
from .campaign import CampaignConfig, run_campaign
from .case_detector import FaultedMachine, detect_case
from .exceptions import ClassificationError, InvalidInputError, TriviumHardFaultError
from .fault_model import FaultMask, ground_truth_case
from .reports import (
    AttackReport,
    DetectionRecord,
    to_json_line,
    write_ndjson,
    write_summary_csv,
)
from .trivium_core import Iv, Key, initialize, keystream
from .verification import list_checks, run_check

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _key(text: Optional[str]) -> Key:
    return Key.from_hex(text) if text else Key.zero()


def _iv(text: Optional[str]) -> Iv:
    return Iv.from_hex(text) if text else Iv.zero()


def _seed(value: Optional[int]) -> int:
    seed = value if value is not None else config.DEFAULT_SEED
    if seed is None:
        raise InvalidInputError(
            "A seed is required: pass --seed or set TRIVIUM_HF_SEED"
        )
    return seed


@contextmanager
def _output(path: Optional[str]) -> Iterator[IO[str]]:
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as stream:
        yield stream


def cmd_keystream(args: argparse.Namespace) -> int:
    mask = FaultMask.parse(args.mask)
    if args.bits < 0:
        raise InvalidInputError("--bits must be non-negative")
    ks = keystream(initialize(_key(args.key), _iv(args.iv), mask), mask, args.bits)
    if len(ks):
        print(ks.to_hex())
    return EXIT_OK


def cmd_detect(args: argparse.Namespace) -> int:
    mask = FaultMask.parse(args.mask)
    machine = FaultedMachine(_key(args.key), mask)
    result = detect_case(machine, args.resolve_case5)
    print(to_json_line(DetectionRecord.from_result(result, ground_truth_case(mask))))
    return EXIT_OK


def cmd_attack(args: argparse.Namespace) -> int:
    key = _key(args.key)
    mask = FaultMask.parse(args.mask)
    machine = FaultedMachine(key, mask)
    detection = detect_case(machine, args.resolve_case5)
    outcome = run_attack(machine, detection.label)
    report = AttackReport.from_outcome(outcome, key)
    print(to_json_line(report))
    if report.success is False:
        logger.error(f"Attack for {report.case} failed: {report.error or 'unsound'}")
        return EXIT_FAILURE
    return EXIT_OK


def cmd_campaign(args: argparse.Namespace) -> int:
    settings = CampaignConfig(
        trials=args.trials,
        model=args.model,
        seed=_seed(args.seed),
        attack=args.attack,
        resolve_case5=args.resolve_case5,
        workers=args.workers,
        out=args.out,
        format=args.format,
    )
    records, summary = run_campaign(settings)
    with _output(settings.out) as stream:
        if settings.format == "csv":
            write_summary_csv(summary, stream)
        else:
            write_ndjson([*records, summary], stream)
    if summary.mismatches:
        logger.error(
            f"Detector disagreed with the mask on {len(summary.mismatches)} trials"
        )
        return EXIT_FAILURE
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    if args.list:
        for check in list_checks():
            print(f"{check.check_id:14} {check.description}")
        return EXIT_OK
    if args.check_id is None:
        raise InvalidInputError("verify needs a check id (or --list)")
    report = run_check(args.check_id, args.trials, _seed(args.seed))
    print(to_json_line(report))
    return EXIT_OK if report.passed else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trivium-hf",
        description="Trivium hard-fault simulation, detection and key recovery",
    )
    parser.add_argument(
        "--log-level",
        choices=LOG_LEVELS,
        type=str.upper,
        default=None,
        help="Logging level on stderr (default: TRIVIUM_HF_LOG_LEVEL or WARNING)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    ks = commands.add_parser("keystream", help="Print keystream bits as hex")
    ks.add_argument("--key", help="80-bit key as 20 hex digits (default zero)")
    ks.add_argument("--iv", help="80-bit IV as 20 hex digits (default zero)")
    ks.add_argument(
        "--mask", help="Faulted positions (100, 94-100) or a 0x-prefixed hex mask"
    )
    ks.add_argument("--bits", type=int, default=288, help="Number of bits")
    ks.set_defaults(handler=cmd_keystream)

    for name, handler, text in (
        ("detect", cmd_detect, "Detect the fault case from keystream features"),
        ("attack", cmd_attack, "Detect, attack and score against the key"),
    ):
        sub = commands.add_parser(name, help=text)
        sub.add_argument("--key", help="80-bit key as 20 hex digits (default zero)")
        sub.add_argument(
            "--mask", help="Faulted positions (100, 94-100) or a 0x-prefixed hex mask"
        )
        sub.add_argument(
            "--resolve-case5",
            action="store_true",
            help="Report Case5or6 as Case5",
        )
        sub.set_defaults(handler=handler)

    camp = commands.add_parser("campaign", help="Run a Monte Carlo campaign")
    camp.add_argument("--model", default="single", help="single, k:<n>, bernoulli:<p>")
    camp.add_argument("--trials", type=int, required=True, help="Number of trials")
    camp.add_argument("--seed", type=int, help="Master seed (or TRIVIUM_HF_SEED)")
    camp.add_argument("--out", help="Output file (default stdout)")
    camp.add_argument("--format", choices=("json", "csv"), default="json")
    camp.add_argument("--workers", type=int, default=1, help="Worker threads")
    camp.add_argument("--attack", action="store_true", help="Attack every trial")
    camp.add_argument("--resolve-case5", action="store_true")
    camp.set_defaults(handler=cmd_campaign)

    ver = commands.add_parser("verify", help="Run a verification check")
    ver.add_argument("check_id", nargs="?", help="Check id, e.g. lemma9 or prop2-rank")
    ver.add_argument("--trials", type=int, default=10, help="Random trials")
    ver.add_argument("--seed", type=int, help="Seed (or TRIVIUM_HF_SEED)")
    ver.add_argument("--list", action="store_true", help="List check ids")
    ver.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=args.log_level or config.LOG_LEVEL.upper(),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return int(args.handler(args))
    except (InvalidInputError, ClassificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"error: invalid campaign settings\n{exc}", file=sys.stderr)
        return EXIT_USAGE
    except TriviumHardFaultError as exc:
        logger.error(f"{args.command} failed: {exc}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
