"""
Shared utility functions for iqrewrite.

Pure helpers with no dependency on the logic modules; safe to import anywhere.
"""

from __future__ import annotations

import os
import sys
import json
import logging
from itertools import islice
from typing import Iterable, Iterator, Sequence, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")


def set_partitions(items: Sequence[T]) -> Iterator[list[list[T]]]:
    """Yield every partition of ``items``, finest partition first.

    Blocks keep the input order of their elements, and blocks are ordered by
    their first element, so the output is deterministic.
    """
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in set_partitions(rest):
        yield [[first]] + partition
        for i in range(len(partition)):
            yield partition[:i] + [[first] + partition[i]] + partition[i + 1:]


def chunked(iterable: Iterable[T], size: int) -> Iterator[list[T]]:
    """Split an iterable into lists of at most ``size`` elements."""
    iterator = iter(iterable)
    while True:
        chunk = list(islice(iterator, size))
        if not chunk:
            return
        yield chunk


def dumps(payload) -> str:
    """Deterministic JSON text used for every --json output."""
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False)


_COLORS = {"green": "32", "red": "31", "yellow": "33", "bold": "1"}


def colorize(text: str, color: str, stream=None) -> str:
    """Wrap text in an ANSI colour unless NO_COLOR is set or the stream is not a tty."""
    stream = stream or sys.stdout
    if os.environ.get("NO_COLOR") is not None:
        return text
    if not getattr(stream, "isatty", lambda: False)():
        return text
    return f"\033[{_COLORS[color]}m{text}\033[0m"
