"""
parse-check: parse a document of the given kind and print its canonical rendering.
"""

from commands import EXIT_OK, CommandResult, read_text
from models import ParseCheckOut
from syntax import parse, render

KINDS = ("omq", "concept", "role", "tbox", "abox", "query", "mmsnp", "instance")


def register(subparsers, common):
    parser = subparsers.add_parser("parse-check", parents=[common], help="parse and re-render a document")
    parser.add_argument("--kind", choices=KINDS, default="omq")
    parser.add_argument("--allow-reserved", action="store_true",
                        help="accept generated '@' names (rewriting output)")
    parser.set_defaults(handler=handle)


def handle(args, settings) -> CommandResult:
    obj = parse(args.kind, read_text(args.input), allow_reserved=args.allow_reserved)
    rendered = str(obj) if args.kind in ("mmsnp", "instance") else render(obj)
    out = ParseCheckOut(kind=args.kind, rendered=rendered)
    return CommandResult(EXIT_OK, out.model_dump(), rendered.rstrip())
