"""SMT encoding, solver driving, and the binary-search strength procedure."""

import stat
import time
from fractions import Fraction
from pathlib import Path

import pytest

from maskcheck import (
    SAT,
    UNKNOWN,
    UNSAT,
    InconclusiveSolver,
    Qms,
    ShiftOutOfRange,
    SolverSpawnFailure,
    TooManyCopies,
    binop,
    check_sat,
    const,
    encode_psi,
    make_domain,
    qms_exact,
    qms_smt,
    var,
)
from maskcheck import expr as ex

K = var("k", ex.SECRET)
R0 = var("r0", ex.RANDOM)
R1 = var("r1", ex.RANDOM)
P = var("p", ex.PUBLIC)

D2 = make_domain(2)
D8 = make_domain(8)

X3_N2 = binop("@", binop("@", R0, R0), binop("^", K, R0))

GOLDEN = Path(__file__).parent / "golden"


def stub_solver(tmp_path, name, body):
    """An executable shell script standing in for a solver binary."""
    path = tmp_path / name
    path.write_text(f"#!/bin/sh\n{body}\n")
    path.chmod(path.stat().st_mode | stat.S_IXUSR)
    return str(path)


class TestEncode:
    def test_golden_script(self):
        got = encode_psi(X3_N2, Fraction(1, 2), D2, "bv")
        assert got.text == (GOLDEN / "x3_q1_2.smt2").read_text()
        assert (got.m, got.delta, got.q) == (2, 2, Fraction(1, 2))

    def test_deterministic(self):
        a = encode_psi(X3_N2, Fraction(1, 4), D2)
        b = encode_psi(X3_N2, Fraction(1, 4), D2)
        assert a == b

    def test_delta_rounding(self):
        e = binop("&", K, R0)
        assert encode_psi(e, 1, D2).delta == 0
        assert encode_psi(e, 0, D2).delta == 4
        assert encode_psi(e, Fraction(3, 4), D2).delta == 1
        # non-dyadic thresholds round up: ceil(2/3 * 4)
        assert encode_psi(e, Fraction(1, 3), D2).delta == 3

    def test_q_accepts_floats(self):
        assert encode_psi(binop("&", K, R0), 0.5, D2).q == Fraction(1, 2)

    def test_q_out_of_range(self):
        with pytest.raises(ValueError):
            encode_psi(K, 2, D2)
        with pytest.raises(ValueError):
            encode_psi(K, -0.5, D2)

    def test_bad_profile(self):
        with pytest.raises(ValueError):
            encode_psi(K, 1, D2, "smtlib")

    def test_too_many_copies(self):
        e = binop("^", binop("^", R0, R1), var("r2", ex.RANDOM))
        with pytest.raises(TooManyCopies):
            encode_psi(e, 1, D8)

    def test_copy_cap_boundary(self):
        # 2 randoms x 8 bits = 16 bits of copies: allowed, if large
        e = binop("^", binop("&", K, R0), R1)
        assert encode_psi(e, 1, D8).m == 16

    def test_gfmul_only_when_needed(self):
        with_mul = encode_psi(binop("@", K, R0), 1, D2).text
        without = encode_psi(binop("&", K, R0), 1, D2).text
        assert "define-fun gfmul" in with_mul
        assert "gfmul" not in without

    def test_declarations(self):
        e = binop("|", binop("&", K, R0), P)
        text = encode_psi(e, 1, D2).text
        assert "(declare-fun p_p () (_ BitVec 2))" in text
        assert "(declare-fun k_k () (_ BitVec 2))" in text
        assert "(declare-fun kk_k () (_ BitVec 2))" in text
        assert "(declare-fun c () (_ BitVec 2))" in text
        # publics are shared between the two copies: no primed form
        assert "pp_p" not in text

    def test_int_profile(self):
        text = encode_psi(X3_N2, Fraction(1, 2), D2, "int").text
        assert "(set-logic ALL)" in text
        assert "(define-fun i_0 () Int" in text
        assert "(assert (> (- " in text
        assert "bvugt" not in text

    def test_shift_rendering(self):
        text = encode_psi(binop("<<", binop("^", K, R0), const(1)), 1, D2).text
        assert "(bvshl " in text

    def test_non_const_shift_rejected(self):
        with pytest.raises(ShiftOutOfRange):
            encode_psi(binop("<<", K, R0), 1, D2)

    def test_indicator_width_never_wraps(self):
        # sum of 2^m indicators plus delta up to 2^m fits in m+2 bits
        text = encode_psi(binop("&", K, R0), 0, D2).text
        assert "(_ BitVec 4) (ite" in text
        assert "(_ bv4 4)" in text  # delta 4 rendered at the wide width


class TestCheckSat:
    @pytest.fixture
    def query(self):
        return encode_psi(binop("&", K, R0), Fraction(1, 2), D2)

    def test_sat(self, tmp_path, query):
        cmd = stub_solver(tmp_path, "yes.sh", "echo sat")
        assert check_sat(query, cmd).kind == SAT

    def test_unsat(self, tmp_path, query):
        cmd = stub_solver(tmp_path, "no.sh", "echo unsat")
        assert check_sat(query, cmd).kind == UNSAT

    def test_verdict_needs_bare_word_line(self, tmp_path, query):
        cmd = stub_solver(tmp_path, "chatty.sh",
                          "echo 'the answer is sat'\necho unsat")
        got = check_sat(query, cmd)
        assert got.kind == UNSAT

    def test_garbage_is_unknown(self, tmp_path, query):
        cmd = stub_solver(tmp_path, "confused.sh", "echo flurble")
        got = check_sat(query, cmd)
        assert got.kind == UNKNOWN
        assert got.reason == "flurble"

    def test_silent_is_unknown(self, tmp_path, query):
        cmd = stub_solver(tmp_path, "mute.sh", "true")
        got = check_sat(query, cmd)
        assert got.kind == UNKNOWN
        assert got.reason == "no output"

    def test_timeout(self, tmp_path, query):
        cmd = stub_solver(tmp_path, "slow.sh", "sleep 5; echo sat")
        got = check_sat(query, cmd, timeout=0.2)
        assert got.kind == UNKNOWN
        assert got.reason == "timeout"

    def test_missing_binary(self, query):
        with pytest.raises(SolverSpawnFailure):
            check_sat(query, "/no/such/solver")

    def test_not_executable(self, tmp_path, query):
        path = tmp_path / "solver.txt"
        path.write_text("sat\n")
        with pytest.raises(SolverSpawnFailure):
            check_sat(query, str(path))

    def test_script_path_is_kept(self, tmp_path, query):
        cmd = stub_solver(tmp_path, "yes.sh", "echo sat")
        script = tmp_path / "query.smt2"
        check_sat(query, cmd, script_path=script)
        assert script.read_text() == query.text

    def test_solver_sees_the_script(self, tmp_path, query):
        cmd = stub_solver(tmp_path, "head.sh", 'head -c 200 "$1"')
        got = check_sat(query, cmd)
        assert got.kind == UNKNOWN
        assert got.reason.startswith("; masking-strength query")


class TestQmsSmt:
    def test_matches_exact_counting(self, solver_cmd):
        for e in (X3_N2, binop("&", K, R0), binop("^", K, R0),
                  binop("|", binop("&", K, R0), P)):
            got = qms_smt(e, D2, solver_cmd)
            assert got.fraction == qms_exact(e, D2).fraction, ex.pretty(e)
            assert got.witness is None

    def test_frozen_values_and_query_counts(self, solver_cmd):
        stats = {}
        got = qms_smt(X3_N2, D2, solver_cmd, stats=stats)
        assert (got.num, got.den) == (1, 4)
        assert stats == {"queries": 2, "m": 2}

    def test_uniform_needs_m_plus_one_queries(self, solver_cmd):
        stats = {}
        got = qms_smt(binop("^", K, R0), D2, solver_cmd, stats=stats)
        assert (got.num, got.den) == (4, 4)
        assert stats == {"queries": 3, "m": 2}

    def test_two_randoms(self, solver_cmd):
        stats = {}
        e = binop("^", binop("&", R1, K), R0)
        got = qms_smt(e, D2, solver_cmd, stats=stats)
        assert (got.num, got.den) == (16, 16)
        assert stats["queries"] <= stats["m"] + 1 == 5

    def test_int_profile_agrees(self, solver_cmd):
        got = qms_smt(X3_N2, D2, solver_cmd, profile="int")
        assert (got.num, got.den) == (1, 4)

    def test_emit_dir(self, solver_cmd, tmp_path):
        out = tmp_path / "queries"
        qms_smt(X3_N2, D2, solver_cmd, emit_dir=out, var_name="x3")
        names = sorted(p.name for p in out.iterdir())
        assert names == ["x3_q1_2.smt2", "x3_q1_4.smt2"]
        assert (out / "x3_q1_2.smt2").read_text() == \
            (GOLDEN / "x3_q1_2.smt2").read_text()

    def test_always_sat_pins_zero(self, tmp_path):
        cmd = stub_solver(tmp_path, "yes.sh", "echo sat")
        got = qms_smt(binop("&", K, R0), D2, cmd)
        assert (got.num, got.den) == (0, 4)

    def test_always_unsat_pins_one(self, tmp_path):
        cmd = stub_solver(tmp_path, "no.sh", "echo unsat")
        got = qms_smt(binop("&", K, R0), D2, cmd)
        assert (got.num, got.den) == (4, 4)

    def test_unknown_raises(self, tmp_path):
        cmd = stub_solver(tmp_path, "confused.sh", "echo flurble")
        with pytest.raises(InconclusiveSolver, match="flurble"):
            qms_smt(binop("&", K, R0), D2, cmd)

    def test_exhausted_deadline_raises(self, solver_cmd):
        with pytest.raises(InconclusiveSolver, match="deadline"):
            qms_smt(X3_N2, D2, solver_cmd,
                    deadline=time.monotonic() - 1.0)

    def test_no_randoms_is_immediate(self, tmp_path):
        # m = 0: the interval [0, 1] needs a single query
        cmd = stub_solver(tmp_path, "yes.sh", "echo sat")
        stats = {}
        got = qms_smt(K, D2, cmd, stats=stats)
        assert (got.num, got.den) == (0, 1)
        assert stats == {"queries": 1, "m": 0}
        assert isinstance(got, Qms)
