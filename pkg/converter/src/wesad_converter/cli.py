"""Command-line interface for the wrist-channel converter.

Two subcommands::

    wesad-converter convert --in S2.pkl --out data/S2 [--code-map map.txt]
    wesad-converter validate data/S2

Exit codes: 0 success, 1 validation violations, 2 unreadable or corrupt
input, 64 usage error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .code_map import parse_code_map
from .convert import convert_subject
from .errors import CodeMapError, ConverterError
from .validate import validate_conversion

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INPUT = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the convention here is 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="wesad-converter",
        description="Convert native wrist recordings to per-channel CSV.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_convert = sub.add_parser("convert", help="convert one native .pkl file")
    p_convert.add_argument("--in", dest="in_file", required=True, metavar="FILE")
    p_convert.add_argument("--out", dest="out_dir", required=True, metavar="DIR")
    p_convert.add_argument("--code-map", dest="code_map", metavar="FILE")

    p_validate = sub.add_parser("validate", help="check a converted directory")
    p_validate.add_argument("directory", metavar="DIR")
    return parser


def cmd_convert(args) -> int:
    code_map = None
    if args.code_map is not None:
        try:
            code_map = parse_code_map(args.code_map)
        except FileNotFoundError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        except CodeMapError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    try:
        report = convert_subject(args.in_file, args.out_dir, code_map=code_map)
    except (OSError, ConverterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"converted subject {report.subject_id} -> {report.out_dir}")
    print(
        f"  intervals: {len(report.intervals)}  "
        f"runs: {report.n_runs} ({report.n_dropped_runs} dropped as sub-second)"
    )
    print(
        f"  label stream: {report.label_stream_s:.1f} s, "
        f"labeled: {report.labeled_s:.1f} s"
    )
    if report.unknown_codes:
        codes = ", ".join(str(c) for c in sorted(report.unknown_codes))
        print(f"  unknown label codes mapped to 'other': {codes}")
    return EXIT_OK


def cmd_validate(args) -> int:
    report = validate_conversion(args.directory)
    if report.ok:
        durations = ", ".join(
            f"{name} {dur:.1f} s" for name, dur in sorted(report.channel_durations_s.items())
        )
        print(f"ok: {report.directory} ({report.n_intervals} intervals; {durations})")
        return EXIT_OK
    for problem in report.problems:
        print(f"violation: {problem}", file=sys.stderr)
    print(f"{len(report.problems)} violation(s) in {report.directory}", file=sys.stderr)
    return EXIT_VALIDATION


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "convert":
        return cmd_convert(args)
    return cmd_validate(args)


if __name__ == "__main__":
    sys.exit(main())
