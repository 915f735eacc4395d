"""Acceptance gate: the seven headline behaviors, one test per criterion.

Every test prints a single `ACCEPTANCE <n> PASS/FAIL/SKIP` line directly
to the terminal (bypassing pytest capture) so the gate is visible in any
run mode; the assertion that follows carries the details.
"""

import json
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import pytest

from conftest import find_solver
from randprog import random_masked_expr, random_program

from maskcheck import (
    RUD,
    SDD,
    SID,
    EngineConfig,
    check_si,
    check_uniform,
    corpus_dir,
    expr_of,
    infer,
    make_domain,
    parse,
    pm_check,
    pretty,
    qms_compute,
    qms_exact,
    qms_smt,
    simplify,
)
from maskcheck import expr as ex
from maskcheck.cli import run

CUBE = str(corpus_dir() / "cube.mv")
SECMULT = str(corpus_dir() / "secmult.mv")


@contextmanager
def verdict(capsys, n, description):
    try:
        yield
    except pytest.skip.Exception:
        with capsys.disabled():
            print(f"ACCEPTANCE {n} SKIP: {description}")
        raise
    except BaseException:
        with capsys.disabled():
            print(f"ACCEPTANCE {n} FAIL: {description}")
        raise
    else:
        with capsys.disabled():
            print(f"ACCEPTANCE {n} PASS: {description}")


def test_criterion_1_type_only_judgements(capsys):
    with verdict(capsys, 1,
                 "type-only engine reproduces the Cube judgement list "
                 "in under 1 s"):
        started = time.monotonic()
        code = run(["check", CUBE, "--engine", "type-only",
                    "--format", "json"])
        elapsed = time.monotonic() - started
        doc = json.loads(capsys.readouterr().out)
        assert code == 3
        got = {v["name"]: v["type"] for v in doc["variables"]}
        assert got == {
            "x": "RUD", "x0": "SID", "x1": "SID", "x2": "UKD",
            "x3": "UKD", "x4": "RUD", "x5": "RUD", "x6": "UKD",
            "x7": "RUD", "x8": "SID", "x9": "RUD",
        }
        assert elapsed < 1.0, f"took {elapsed:.2f}s"


def test_criterion_2_hybrid_verdicts(capsys):
    with verdict(capsys, 2,
                 "hybrid engine at n=8 finds exactly {x2, x3} leaky with "
                 "2 counted decisions in under 60 s"):
        started = time.monotonic()
        p_cube = parse((corpus_dir() / "cube.mv").read_text())
        report = pm_check(p_cube, EngineConfig(make_domain(8)))
        elapsed = time.monotonic() - started
        leaky = {v.name for v in report.verdicts if v.dist is SDD}
        assert leaky == {"x2", "x3"}
        assert report.totals["sdd"] == 2
        assert report.totals["counted"] == 2
        x6 = next(v for v in report.verdicts if v.name == "x6")
        assert x6.dist is SID
        assert x6.method == "reduced-type-rule"
        assert x6.rule_trace == ("no-secret",)
        assert pretty(report.reduced["x6"]) == "((r0 @ r0) @ r0)"
        assert elapsed < 60.0, f"took {elapsed:.2f}s"


def test_criterion_3_qms_values(capsys):
    with verdict(capsys, 3,
                 "QMS of x2 and x3 at n=8 is exactly 253/256, rounding "
                 "to 0.988, in under 10 min"):
        started = time.monotonic()
        p_cube = parse((corpus_dir() / "cube.mv").read_text())
        report = qms_compute(p_cube, EngineConfig(make_domain(8)))
        elapsed = time.monotonic() - started
        by_name = {v.name: v for v in report.verdicts}
        q2, q3 = by_name["x2"].qms, by_name["x3"].qms
        assert q2.fraction == q3.fraction == Fraction(253, 256)
        assert abs(round(float(q2), 3) - 0.988) <= 0.0005
        assert report.program_qms.fraction == Fraction(253, 256)
        assert elapsed < 600.0, f"took {elapsed:.2f}s"


def test_criterion_4_secmult_control(capsys):
    with verdict(capsys, 4,
                 "SecMult verifies clean: exit code 0 and program QMS 1"):
        code = run(["check", SECMULT, "--qms", "--format", "json"])
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert doc["perfectly_masked"] is True
        q = doc["program_qms"]
        assert q["num"] == q["den"]
        assert all(v["type"] in ("RUD", "SID") for v in doc["variables"])


def test_criterion_5_random_program_soundness(capsys):
    with verdict(capsys, 5,
                 "500 random programs at n in {1,2}: every type verdict "
                 "matches exhaustive enumeration and reduction preserves "
                 "QMS, in under 2 min"):
        started = time.monotonic()
        rng = random.Random(20260815)
        violations = []
        for i in range(500):
            bits = 1 + (i % 2)
            d = make_domain(bits)
            p = random_program(rng, bits)
            for name in p.internals:
                e = expr_of(p, name)
                j = infer(e, d)
                if j.dist is RUD and not check_uniform(e, d):
                    violations.append((i, name, "RUD not uniform"))
                elif j.dist is SID and not check_si(e, d)[0]:
                    violations.append((i, name, "SID not independent"))
                elif j.dist is SDD and check_si(e, d)[0]:
                    violations.append((i, name, "SDD but independent"))
                if qms_exact(simplify(e, d), d).fraction != \
                        qms_exact(e, d).fraction:
                    violations.append((i, name, "reduction changed QMS"))
        elapsed = time.monotonic() - started
        assert violations == []
        assert elapsed < 120.0, f"took {elapsed:.2f}s"


def test_criterion_6_smt_agreement(capsys):
    solver = find_solver()
    with verdict(capsys, 6,
                 "binary search over a solver equals exact counting on "
                 "50 random expressions"
                 if solver else
                 "no SMT solver available (set MASKCHECK_SOLVER)"):
        if solver is None:
            pytest.skip("no SMT solver available (set MASKCHECK_SOLVER)")
        rng = random.Random(99)
        for i in range(50):
            bits = rng.choice((1, 2))
            d = make_domain(bits)
            e = random_masked_expr(rng, bits, max_copy_bits=8)
            m = d.bits * len(ex.rvars(e))
            stats = {}
            got = qms_smt(e, d, solver, stats=stats)
            want = qms_exact(e, d)
            assert got.fraction == want.fraction, (i, pretty(e))
            assert stats["queries"] <= m + 1, (i, stats)


def test_criterion_7_parallel_determinism(capsys):
    with verdict(capsys, 7,
                 "corpus JSON is byte-identical for --jobs 1 and --jobs 8"):
        assert run(["corpus", "--format", "json", "--jobs", "1"]) == 1
        serial = capsys.readouterr().out
        assert run(["corpus", "--format", "json", "--jobs", "8"]) == 1
        threaded = capsys.readouterr().out
        assert serial == threaded
        assert len(json.loads(serial)) == 3
