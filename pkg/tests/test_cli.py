"""CLI tests: grammar, q-de Rham base construction, task pipeline, exit codes,
and byte-determinism of reports."""

import re

import pytest

from prismalg.cli import InputError, main, parse, parse_poly, q_base_rewrite, run
from prismalg.algebra import make_pd_extension, make_poly_algebra

MINIMAL = """
prism p=5 N=1 mode=crystalline
ring T cap 3
higgs rank=1
caps W=4 imax=3 jmax=3 nilbound=8
task check
task dr
"""

THETA_T = """
prism p=5 N=1 mode=crystalline
ring T cap 3
higgs rank=1
theta 1 [1,1] = T
caps W=5 imax=3 jmax=3 nilbound=8
task check
task dr
task stratify
task cocycle
task ca-compare
task duality
task base-change
"""

BAD_THETA = """
prism p=5 N=1 mode=crystalline
ring T1 cap 2
ring T2 cap 2
higgs rank=2
theta 1 [1,2] = 1
theta 2 [2,1] = 1
task check
"""


def test_parse_minimal():
    spec = parse(MINIMAL)
    assert (spec.p, spec.N, spec.mode) == (5, 1, "crystalline")
    assert spec.ring_gens == [("T", 3, False)]
    assert spec.tasks == ["check", "dr"]


def test_parse_rejects_nonprime():
    with pytest.raises(InputError):
        parse(MINIMAL.replace("p=5", "p=6"))


def test_parse_rejects_malformed_poly():
    bad = MINIMAL.replace("higgs rank=1", "higgs rank=1\ntheta 1 [1,1] = T +* 2")
    with pytest.raises(InputError) as err:
        parse(bad)
    assert "column" in str(err.value) or "unexpected" in str(err.value)


def test_parse_poly_grammar():
    R = make_pd_extension(make_poly_algebra(5, 2, [("T", 3)]), 1, 4, names=["xi1"])
    assert parse_poly("2*T^2 + 3", R, 1) == R.element({(2, 0): 2, (0, 0): 3})
    assert parse_poly("-T + xi1[2]", R, 1) == R.element({(1, 0): -1, (0, 2): 1})
    assert parse_poly("T*xi1[1]*2", R, 1) == R.element({(1, 1): 2})


def test_qdr_base_ring_construction():
    # [3]_q: (q-1)^2 -> -3 - 3(q-1); K = 4 vanishes mod 9
    assert q_base_rewrite(3) == [-3, -3]
    spec = parse("""
prism p=3 N=2 mode=qdr K=4
ring T cap 2
higgs rank=1
task check
""")
    assert spec.qcap == 4


def test_qdr_rejects_bad_K():
    with pytest.raises(InputError):
        parse("""
prism p=3 N=2 mode=qdr K=2
ring T cap 2
higgs rank=1
task check
""")
    with pytest.raises(InputError):
        parse("""
prism p=3 N=2 mode=qdr
ring T cap 2
higgs rank=1
task check
""")


def test_run_minimal_tasks():
    spec = parse(MINIMAL)
    report = run(spec)
    assert report.exit_code == 0
    kv = dict(report.kv)
    assert kv["check.verdict"] == "PASS"
    assert kv["check.W_theta"] == "0"
    assert kv["dr.H0"] == "(Z/5^1) ⊕ (Z/5^1) ⊕ (Z/5^1)"


def test_run_full_pipeline_theta_T():
    spec = parse(THETA_T)
    report = run(spec)
    kv = dict(report.kv)
    assert report.exit_code == 0, kv
    assert kv["check.verdict"] == "PASS"
    assert kv["dr.H0"] == "(Z/5^1)"
    assert kv["dr.H1"] == "(Z/5^1)"
    assert kv["stratify.verdict"] == "PASS"
    assert kv["cocycle.verdict"] == "PASS"
    assert kv["ca-compare.verdict"] == "PASS"
    assert kv["duality.verdict"] == "PASS"
    assert kv["base-change.verdict"] == "PASS"


def test_run_commutator_violation_fails():
    spec = parse(BAD_THETA)
    report = run(spec)
    kv = dict(report.kv)
    assert report.exit_code == 1
    assert kv["check.verdict"] == "FAIL"


def test_qdr_pipeline_small():
    spec = parse("""
prism p=2 N=2 mode=qdr K=2
ring T cap 2
higgs rank=1
theta 1 [1,1] = T
caps W=4 nilbound=8
task check
task dr
task cocycle
task duality
""")
    report = run(spec)
    assert report.exit_code == 0, dict(report.kv)


def test_cli_main_and_determinism(tmp_path, capsys):
    f = tmp_path / "probe.prism"
    f.write_text(THETA_T)
    outputs = []
    for _ in range(2):
        code = main(["run", str(f), "--emit=structured"])
        outputs.append(capsys.readouterr().out)
        assert code == 0
    assert outputs[0] == outputs[1]
    # text stream is deterministic modulo the timing trailer
    texts = []
    for _ in range(2):
        main(["run", str(f)])
        texts.append(re.sub(r"# elapsed-ms \d+", "", capsys.readouterr().out))
    assert texts[0] == texts[1]


def test_cli_corpus_mode(tmp_path, capsys):
    (tmp_path / "a.prism").write_text(MINIMAL)
    (tmp_path / "b.prism").write_text(BAD_THETA)
    code = main(["run", str(tmp_path), "--emit=structured"])
    out = capsys.readouterr().out
    assert code == 1
    assert "=== a.prism ===" in out and "=== b.prism ===" in out


def test_cli_input_error_exit_code(tmp_path, capsys):
    f = tmp_path / "bad.prism"
    f.write_text("prism p=6 N=1 mode=crystalline\nring T cap 2\ntask check\n")
    code = main(["run", str(f)])
    capsys.readouterr()
    assert code == 2
