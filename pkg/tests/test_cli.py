"""
Tests for the command-line surface (main.py and commands/).

Every test goes through main.run, so argument parsing, settings, the logging
middleware and the JSON envelope are exercised together.
"""
import json

import pytest

from tests.conftest import corpus_path
from main import run


def run_json(capsys, *argv):
    """Run with --json and return (exit code, parsed envelope)."""
    code = run([*argv, "--json"])
    return code, json.loads(capsys.readouterr().out)


# ---------------------------------------------------------------------------
# analyze / parse-check
# ---------------------------------------------------------------------------

def test_analyze_reports_x_cycle(capsys):
    """The loop behind the edge is named in the report."""
    code, envelope = run_json(capsys, "analyze", "--in", corpus_path("loop_behind_edge.omq"))
    assert code == 0
    assert envelope["schema_version"] == 1
    assert envelope["command"] == "analyze"
    (disjunct,) = envelope["result"]["disjuncts"]
    assert disjunct["x_acyclic"] is False
    assert disjunct["x_cycle"] == "r(y,y)"
    assert envelope["result"]["tbox_kind"] == "empty"


def test_analyze_text_and_q_acyc(capsys):
    """--acyc adds the size of q_acyc to the text report."""
    assert run(["analyze", "--acyc", "--in", corpus_path("loop_behind_edge.omq")]) == 0
    out = capsys.readouterr().out
    assert "x-cycle r(y,y)" in out
    assert "q_acyc: 1 disjuncts" in out


def test_analyze_functional_flags(capsys):
    """Functionality assertions add the f-acyclicity column."""
    _, envelope = run_json(capsys, "analyze", "--in", corpus_path("func_clusters.omq"))
    assert envelope["result"]["tbox_kind"] == "functionality-only"
    assert envelope["result"]["disjuncts"][0]["f_acyclic"] is False


def test_parse_check_concept(capsys, tmp_path):
    """Concepts come back in canonical form."""
    path = tmp_path / "c.txt"
    path.write_text("(exists r-. A and B)\n")
    assert run(["parse-check", "--kind", "concept", "--in", str(path)]) == 0
    assert capsys.readouterr().out.strip() == "(B and exists r-. A)"


def test_parse_check_reserved_names(capsys, tmp_path):
    """Generated names need --allow-reserved."""
    path = tmp_path / "c.txt"
    path.write_text("@p0\n")
    assert run(["parse-check", "--kind", "concept", "--in", str(path)]) == 3
    assert run(["parse-check", "--kind", "concept", "--allow-reserved", "--in", str(path)]) == 0


def test_parse_check_mmsnp(capsys):
    """Sentences are re-rendered in the DSL."""
    assert run(["parse-check", "--kind", "mmsnp", "--in", corpus_path("2col.mmsnp")]) == 0
    assert "so R." in capsys.readouterr().out


# ---------------------------------------------------------------------------
# rewrite / decide
# ---------------------------------------------------------------------------

def test_rewrite_self_loop(capsys):
    """The ALCI rewriting is printed as an OMQ document."""
    assert run(["rewrite", "--in", corpus_path("self_loop.omq")]) == 0
    out = capsys.readouterr().out
    assert "[query]" in out
    assert "q(x) := (exists r. @p0 or not @p0)." in out


def test_rewrite_json_with_verification(capsys):
    """--verify attaches a passing report."""
    code, envelope = run_json(capsys, "rewrite", "--verify", "--max-ind", "2",
                              "--in", corpus_path("self_loop.omq"))
    assert code == 0
    result = envelope["result"]
    assert result["construction"] == "alci"
    assert result["fresh_concepts"] == ["@p0"]
    assert result["verification"]["passed"] is True


def test_rewrite_precondition_failure(capsys):
    """ALC needs x-accessibility; the failure exits with 1 and an error envelope."""
    code, envelope = run_json(capsys, "rewrite", "--target", "alc", "--in", corpus_path("shared_parent.omq"))
    assert code == 1
    assert envelope["error"]["type"] == "PreconditionError"
    assert envelope["result"] is None


def test_rewrite_functional_target(capsys):
    """The functional construction is selected by target."""
    code, envelope = run_json(capsys, "rewrite", "--target", "functional", "--in", corpus_path("func_s_loop.omq"))
    assert code == 0
    assert envelope["result"]["construction"] == "functional"


def test_decide_rewritable(capsys):
    """The self-loop is rewritable; exit 0."""
    code, envelope = run_json(capsys, "decide", "--in", corpus_path("self_loop.omq"))
    assert code == 0
    assert envelope["result"]["verdict"] == "rewritable"
    assert envelope["result"]["rewriting"]["construction"] == "alci"


def test_decide_not_rewritable(capsys):
    """The loop behind the edge is not; exit 1 with a structural certificate."""
    code, envelope = run_json(capsys, "decide", "--in", corpus_path("loop_behind_edge.omq"))
    assert code == 1
    assert envelope["result"]["verdict"] == "not-rewritable"
    assert envelope["result"]["certificate"]["witness"] == "r(y,y)"


def test_decide_text_summary(capsys):
    """The first line names the verdict."""
    assert run(["decide", "--target", "alci+u", "--in", corpus_path("diamond.omq")]) == 1
    assert capsys.readouterr().out.splitlines()[0].startswith("not-rewritable")


def test_decide_unsupported_target(capsys):
    """Functional decisions need inverse roles in the target."""
    assert run(["decide", "--target", "alc", "--in", corpus_path("func_s_loop.omq")]) == 3


# ---------------------------------------------------------------------------
# eval / verify
# ---------------------------------------------------------------------------

def test_eval_uses_abox_section(capsys):
    """a has the loop; b does not."""
    code, envelope = run_json(capsys, "eval", "--in", corpus_path("self_loop_abox.omq"))
    assert code == 0
    answers = envelope["result"]["answers"]
    assert answers["a"]["kind"] == "yes"
    assert answers["b"]["kind"] == "no"


def test_eval_single_individual(capsys):
    """--individual restricts the table."""
    assert run(["eval", "--individual", "a", "--in", corpus_path("self_loop_abox.omq")]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "certain answers: a"


def test_eval_without_abox_is_a_usage_error(capsys):
    """No --abox and no [abox] section."""
    assert run(["eval", "--in", corpus_path("self_loop.omq")]) == 3


def test_eval_inconsistent_abox(capsys, tmp_path):
    """A ⊑ ⊥ with A(a) exits with 1."""
    path = tmp_path / "bad.omq"
    path.write_text("[tbox]\nA sub bot\n[query]\nq(x) :- A(x).\n[abox]\nA(a)\n")
    code, envelope = run_json(capsys, "eval", "--in", str(path))
    assert code == 1
    assert envelope["result"]["consistent"] is False


def test_verify_json_pair(capsys):
    """The stored pair passes on every ABox with two individuals."""
    code, envelope = run_json(capsys, "verify", "--max-ind", "2", "--in", corpus_path("self_loop_pair.json"))
    assert code == 0
    assert envelope["result"]["passed"] is True
    assert envelope["result"]["aboxes"] == 10


def test_verify_wrong_rewriting(capsys, tmp_path):
    """∃r.⊤ is caught by a discrepancy; exit 1."""
    path = tmp_path / "wrong.omq"
    path.write_text("[query]\nq(x) := exists r. top.\n")
    code = run(["verify", "--max-ind", "2", "--in", corpus_path("self_loop.omq"), "--rewriting", str(path)])
    assert code == 1
    assert capsys.readouterr().out.startswith("FAIL")


def test_verify_rejects_non_pair(capsys):
    """An OMQ document is not a JSON pair."""
    assert run(["verify", "--in", corpus_path("self_loop.omq")]) == 3


# ---------------------------------------------------------------------------
# MMSNP commands
# ---------------------------------------------------------------------------

def test_mmsnp_eval(capsys):
    """An edge is 2-colourable (exit 0), a triangle is not (exit 1)."""
    sentence = corpus_path("2col.mmsnp")
    assert run(["mmsnp-eval", "--in", sentence, "--instance", corpus_path("edge.inst")]) == 0
    assert capsys.readouterr().out.startswith("true")
    assert run(["mmsnp-eval", "--in", sentence, "--instance", corpus_path("triangle.inst")]) == 1


def test_mmsnp_acyc(capsys):
    """The triangle sentence has no acyclic rules."""
    code, envelope = run_json(capsys, "mmsnp-acyc", "--in", corpus_path("mono_triangle.mmsnp"))
    assert code == 0
    assert envelope["result"]["rules"] == 0


def test_mmsnp_colored_rejects_unknown_names(capsys):
    """--n1 must list nullary predicates."""
    assert run(["mmsnp-colored", "--n1", "E", "--in", corpus_path("2col.mmsnp")]) == 3


def test_mmsnp_check_certificate(capsys):
    """The triangle sentence fails on a single reflexive edge."""
    code, envelope = run_json(capsys, "mmsnp-check", "--max-dom", "3", "--in", corpus_path("mono_triangle.mmsnp"))
    assert code == 1
    assert envelope["result"]["kind"] == "no"
    assert envelope["result"]["certificate"]["instance"] == "E(a,a)."


def test_mmsnp_check_bounded(capsys):
    """2-colourability holds up to the bound; exit 2."""
    code, envelope = run_json(capsys, "mmsnp-check", "--max-dom", "3", "--in", corpus_path("2col.mmsnp"))
    assert code == 2
    assert envelope["result"]["reason"] == "holds up to bound 3"
    assert envelope["result"]["bounds"]["max_dom"] == 3


# ---------------------------------------------------------------------------
# Errors, output and help
# ---------------------------------------------------------------------------

def test_unknown_command_is_usage_error(capsys):
    """argparse errors exit with 3."""
    assert run(["frobnicate"]) == 3
    assert "error:" in capsys.readouterr().err


def test_missing_input_file(capsys):
    """A missing --in file is reported in the JSON envelope."""
    code, envelope = run_json(capsys, "analyze", "--in", "no/such/file.omq")
    assert code == 3
    assert envelope["error"]["type"] == "UsageError"


def test_parse_error_carries_line(capsys, tmp_path):
    """ParseError details include the line number."""
    path = tmp_path / "broken.omq"
    path.write_text("[query]\nq(x) :- r(x,.\n")
    code, envelope = run_json(capsys, "analyze", "--in", str(path))
    assert code == 3
    assert envelope["error"]["details"]["line"] == 2


def test_out_writes_file(capsys, tmp_path):
    """--out sends the output to a file instead of stdout."""
    target = tmp_path / "rewriting.omq"
    assert run(["rewrite", "--in", corpus_path("self_loop.omq"), "--out", str(target)]) == 0
    assert capsys.readouterr().out == ""
    assert "@p0" in target.read_text()


def test_help_exits_zero(capsys):
    """--help prints usage and returns 0."""
    assert run(["--help"]) == 0
    assert "decide" in capsys.readouterr().out


def test_config_file_sets_bounds(capsys, tmp_path):
    """MAX_IND from the config file reaches the verifier; flags win."""
    config = tmp_path / "iqrewrite.env"
    config.write_text("MAX_IND=1\n")
    args = ["verify", "--config", str(config), "--in", corpus_path("self_loop_pair.json")]
    _, envelope = run_json(capsys, *args)
    assert envelope["result"]["bounds"]["max_ind"] == 1
    _, envelope = run_json(capsys, *args, "--max-ind", "2")
    assert envelope["result"]["bounds"]["max_ind"] == 2


@pytest.mark.slow
def test_decide_diamond_with_tbox(capsys):
    """The TBox makes the diamond rewritable."""
    code, envelope = run_json(capsys, "decide", "--in", corpus_path("diamond_tbox.omq"))
    assert code == 0
    assert envelope["result"]["verdict"] == "rewritable"
