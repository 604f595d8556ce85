"""
Tests for the shared helpers (utils.py).
"""
import io

from utils import chunked, colorize, dumps, set_partitions


def test_set_partitions_counts():
    """Bell numbers: 1, 1, 2, 5, 15."""
    assert [len(list(set_partitions(list(range(n))))) for n in range(5)] == [1, 1, 2, 5, 15]


def test_set_partitions_finest_first():
    """The first partition keeps every element apart."""
    first = next(set_partitions(["x", "y", "z"]))
    assert first == [["x"], ["y"], ["z"]]


def test_chunked():
    """The last chunk may be short."""
    assert list(chunked(range(5), 2)) == [[0, 1], [2, 3], [4]]
    assert list(chunked([], 3)) == []


def test_dumps_is_sorted():
    """Keys are sorted so reports diff cleanly."""
    assert dumps({"b": 1, "a": "⊤"}) == '{\n  "a": "⊤",\n  "b": 1\n}'


class FakeTty(io.StringIO):
    def isatty(self):
        return True


def test_colorize_only_on_tty(monkeypatch):
    """Plain text for pipes and under NO_COLOR."""
    monkeypatch.delenv("NO_COLOR", raising=False)
    assert colorize("ok", "green", io.StringIO()) == "ok"
    assert colorize("ok", "green", FakeTty()) == "\033[32mok\033[0m"
    monkeypatch.setenv("NO_COLOR", "1")
    assert colorize("ok", "green", FakeTty()) == "ok"
