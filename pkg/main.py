"""
iqrewrite command-line entry point.

    python main.py decide --target alci --in corpus/self_loop.omq --json

Exit codes: 0 success or positive verdict, 1 negative verdict (not rewritable,
discrepancy found, inconsistent ABox), 2 unknown within the bounds, 3 usage or
parse error, 4 resource limit.
"""

import sys
import argparse
import logging

from commands import analyze, decide, evaluate, parse_check, rewrite, sentences, verify
from deps import load_settings
from errors import IQRewriteError, UsageError
from middleware import CommandLoggingMiddleware
from models import ErrorOut, ReportEnvelope
from utils import colorize, dumps

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


class ArgumentParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of printing and exiting with 2."""

    def error(self, message):
        raise UsageError(message)


def common_parser() -> argparse.ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--in", dest="input", metavar="FILE", help="input document ('-' or omitted: stdin)")
    common.add_argument("--out", metavar="FILE", help="write the output here instead of stdout")
    common.add_argument("--json", action="store_true", help="machine-readable JSON report")
    common.add_argument("--config", metavar="FILE", help="settings file (default: ./iqrewrite.env if present)")
    common.add_argument("--jobs", type=int, help="worker processes for ABox enumeration")
    common.add_argument("--seed", type=int)
    common.add_argument("--max-ind", type=int, help="individuals per enumerated ABox")
    common.add_argument("--max-extra", type=int, help="anonymous elements per countermodel")
    common.add_argument("--deadline", type=float, metavar="SECS", help="wall-clock budget for bounded searches")
    common.add_argument("--target", help="target dialect or construction")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    return common


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="iqrewrite", description="Rewrite ontology-mediated queries into instance queries.")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    common = common_parser()
    for module in (analyze, rewrite, decide, evaluate, verify, sentences, parse_check):
        module.register(subparsers, common)
    return parser


def configure_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def _write(text: str, path: str | None):
    if path is None:
        print(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text.rstrip("\n") + "\n")
    except OSError as e:
        raise UsageError(f"cannot write {path}: {e.strerror}") from None


def _report_error(error: IQRewriteError, command: str | None, json_mode: bool):
    if json_mode:
        data = error.to_dict()
        details = {k: v for k, v in data.items() if k not in ("type", "message")}
        envelope = ReportEnvelope(
            command=command or "",
            exit_code=error.exit_code,
            error=ErrorOut(type=data["type"], message=data["message"], details=details),
        )
        print(dumps(envelope.model_dump()))
    else:
        print(f"error: {error}", file=sys.stderr)


def run(argv=None) -> int:
    """Parse ``argv``, run one command and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    json_mode = "--json" in argv
    command = None
    try:
        args = build_parser().parse_args(argv)
        command = args.command
        configure_logging(args.verbose)
        settings = load_settings(args.config).override(
            max_ind=args.max_ind,
            max_extra=args.max_extra,
            deadline=args.deadline,
            seed=args.seed,
            jobs=args.jobs,
            target=args.target,
        )
        logger.debug(f"settings: {settings.model_dump()}")
        result = CommandLoggingMiddleware(args.handler)(args, settings)
        if args.json:
            envelope = ReportEnvelope(command=command, exit_code=result.exit_code, result=result.payload)
            _write(dumps(envelope.model_dump()), args.out)
        else:
            text = result.text
            if result.style and args.out is None:
                first, _, rest = text.partition("\n")
                text = colorize(first, result.style) + (f"\n{rest}" if rest else "")
            _write(text, args.out)
        return result.exit_code
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else 0
    except IQRewriteError as e:
        _report_error(e, command, json_mode)
        return e.exit_code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
