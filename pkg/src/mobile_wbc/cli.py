"""Command-line scenario runner.

::

    mobile-wbc run --scenario trajectory_tracking --out log.csv
    mobile-wbc validate --scenario my_scenario.json
    mobile-wbc list-scenarios

``--scenario`` accepts a file path or the name of a bundled scenario.
Exit codes: 0 success, 1 configuration or usage error, 2 the controller
could not resolve a cycle.
"""
import argparse
import io
import os
import sys

from .config import bundled_scenario_text, bundled_scenarios, build_scenario, parse_config
from .errors import ScenarioError, SingularTask
from .sim import ScenarioLog, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SINGULAR = 2


def format_csv(log):
    """CSV text of a log: fixed header, 9 significant digits, ``\\n`` endings."""
    buf = io.StringIO()
    buf.write(",".join(ScenarioLog.columns) + "\n")
    for row in log.data:
        buf.write(",".join("%.9g" % v for v in row) + "\n")
    return buf.getvalue()


def export_csv(log, path):
    """Write :func:`format_csv` output to ``path`` (``"-"`` for stdout)."""
    text = format_csv(log)
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser():
    parser = _Parser(prog="mobile-wbc", description="Run whole-body control scenarios.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="simulate a scenario and export the log as CSV")
    run.add_argument("--scenario", required=True, help="JSON file or bundled scenario name")
    run.add_argument("--out", default="-", help="CSV output path (default: stdout)")
    run.add_argument("--duration", type=float, help="override the duration in s")
    run.add_argument("--seed", type=int, help="override the random seed")
    run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                     help="set a dotted config field, e.g. controller.sigma_xy=0.2")
    val = sub.add_parser("validate", help="check a scenario file without running it")
    val.add_argument("--scenario", required=True)
    val.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    sub.add_parser("list-scenarios", help="print the bundled scenario names")
    return parser


def _read_scenario(ref):
    if os.path.exists(ref):
        with open(ref, encoding="utf-8") as fh:
            return fh.read()
    if ref in bundled_scenarios():
        return bundled_scenario_text(ref)
    raise ScenarioError(f"scenario {ref!r} is neither a file nor a bundled scenario")


def _load(args, extra=()):
    return parse_config(_read_scenario(args.scenario), list(args.override) + list(extra))


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name in bundled_scenarios():
            print(name)
        return EXIT_OK
    extra = []
    if getattr(args, "duration", None) is not None:
        extra.append(f"duration={args.duration!r}")
    if getattr(args, "seed", None) is not None:
        extra.append(f"seed={args.seed}")
    try:
        cfg = _load(args, extra)
    except (ScenarioError, OSError) as exc:
        print(f"mobile-wbc: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(f"{cfg.name}: ok")
        return EXIT_OK
    try:
        log = run_scenario(build_scenario(cfg))
    except SingularTask as exc:
        print(f"mobile-wbc: aborted at {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    try:
        export_csv(log, args.out)
    except OSError as exc:
        print(f"mobile-wbc: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
