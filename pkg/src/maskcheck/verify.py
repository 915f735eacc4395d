"""Whole-program verification: perfect masking check and strength computation.

For every internal variable x, in SSA order:

1. Type the expansion Expr(x). A non-UKD answer settles x.
2. Otherwise simplify to e-hat and type again.
3. Otherwise ask the registered transformation oracles for a rewrite.
4. Otherwise decide by model counting on e-hat: the bruteforce engine
   enumerates exactly, the smt engine asks a solver whether the
   strength is below 1. Results are stored against Expr(x) so that
   later variables containing it can reuse the verdict.

The "type-only" engine stops after step 1, leaving UKD variables as
potentially leaky. Strength computation assigns 1 to every RUD/SID
variable, 0 when the leaky expansion retains no randomness, and the
exact gap otherwise (binary search over a solver, or enumeration).

Budget or deadline overruns mark the variable inconclusive and the run
continues. Reports serialize to stable JSON: identical inputs and
configuration produce identical bytes; wall-clock timings are only
embedded on request.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import expr as ex
from .counting import DEFAULT_BUDGET, Qms, check_si, qms_exact
from .domain import DomainConfig
from .errors import (
    BudgetExceeded,
    InconclusiveSolver,
    SolverSpawnFailure,
    VariableTimeout,
)
from .infer import SDD, SID, UKD, DistType, infer
from .program import Program, expr_of
from .reduction import apply_oracle, simplify
from .smt import SAT, UNSAT, check_sat, encode_psi, qms_smt

ENGINES = ("type-only", "bruteforce", "smt")

METHOD_TYPE = "type-rule"
METHOD_REDUCED = "reduced-type-rule"
METHOD_ORACLE = "oracle"
METHOD_COUNT_BF = "counting-bruteforce"
METHOD_COUNT_SMT = "counting-smt"
METHOD_INCONCLUSIVE = "inconclusive"


@dataclass
class EngineConfig:
    domain: DomainConfig
    engine: str = "bruteforce"
    budget: int = DEFAULT_BUDGET
    jobs: int = 1
    solver_cmd: str | None = None
    smt_profile: str = "bv"
    var_timeout: float | None = 60.0
    oracles: list = field(default_factory=list)
    meta_patterns: list | None = None
    emit_smt_dir: str | Path | None = None
    parallel_variables: bool = False

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.engine == "smt" and not self.solver_cmd:
            raise ValueError("smt engine needs solver_cmd")


@dataclass
class VariableVerdict:
    name: str
    dist: DistType
    method: str
    rule_trace: tuple[str, ...] = field(default=(), compare=False)
    qms: Qms | None = None
    witness: tuple | None = None
    note: str | None = None
    elapsed: float = field(default=0.0, compare=False)


@dataclass
class Report:
    program: str
    bits: int
    poly: int
    verdicts: list[VariableVerdict]
    program_qms: Qms | None = None
    elapsed: float = field(default=0.0, compare=False)
    # reduced expansions kept so strength computation reuses them
    reduced: dict[str, ex.Expr] = field(default_factory=dict, repr=False,
                                        compare=False)

    @property
    def perfectly_masked(self) -> bool:
        return all(v.dist is not SDD for v in self.verdicts)

    @property
    def totals(self) -> dict[str, int]:
        counted = sum(1 for v in self.verdicts
                      if v.method in (METHOD_COUNT_BF, METHOD_COUNT_SMT))
        return {
            "internal": len(self.verdicts),
            "sid": sum(1 for v in self.verdicts
                       if v.dist in (DistType.RUD, DistType.SID)),
            "sdd": sum(1 for v in self.verdicts if v.dist is SDD),
            "counted": counted,
            "unknown": sum(1 for v in self.verdicts if v.dist is UKD),
        }


def _deadline(cfg: EngineConfig) -> float | None:
    if cfg.var_timeout is None:
        return None
    return time.monotonic() + cfg.var_timeout


def _emit_query(cfg: EngineConfig, var_name: str, query):
    out = Path(cfg.emit_smt_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = f"{var_name}_q{query.q.numerator}_{query.q.denominator}.smt2"
    (out / name).write_text(query.text)


def _count_decide(x: str, e_hat: ex.Expr, cfg: EngineConfig,
                  deadline: float | None):
    """SID/SDD by model counting. Returns (dist, method, witness)."""
    if cfg.engine == "smt":
        query = encode_psi(e_hat, 1, cfg.domain, cfg.smt_profile)
        if cfg.emit_smt_dir is not None:
            _emit_query(cfg, x, query)
        timeout = None if deadline is None else deadline - time.monotonic()
        verdict = check_sat(query, cfg.solver_cmd, timeout)
        if verdict.kind == SAT:
            return SDD, METHOD_COUNT_SMT, None
        if verdict.kind == UNSAT:
            return SID, METHOD_COUNT_SMT, None
        # fall through to enumeration on an unknown answer
    elif cfg.emit_smt_dir is not None:
        try:
            _emit_query(cfg, x, encode_psi(e_hat, 1, cfg.domain,
                                           cfg.smt_profile))
        except Exception:
            pass  # emission is best-effort outside the smt engine
    si, witness = check_si(e_hat, cfg.domain, cfg.budget, cfg.jobs, deadline)
    return (SID if si else SDD), METHOD_COUNT_BF, witness


def _classify(p: Program, x: str, cfg: EngineConfig,
              store: dict[ex.Expr, DistType],
              hats: dict[str, ex.Expr]) -> VariableVerdict:
    started = time.monotonic()
    deadline = _deadline(cfg)
    e = expr_of(p, x)
    try:
        j = infer(e, cfg.domain, store)
        if j.dist is not UKD:
            return VariableVerdict(x, j.dist, METHOD_TYPE, j.rule_trace,
                                   elapsed=time.monotonic() - started)
        if cfg.engine == "type-only":
            return VariableVerdict(
                x, UKD, METHOD_TYPE, j.rule_trace,
                note="potentially leaky: counting disabled",
                elapsed=time.monotonic() - started)

        e_hat = simplify(e, cfg.domain, cfg.meta_patterns)
        hats[x] = e_hat
        j_hat = infer(e_hat, cfg.domain, store)
        if j_hat.dist is not UKD:
            store[e] = j_hat.dist
            return VariableVerdict(x, j_hat.dist, METHOD_REDUCED,
                                   j_hat.rule_trace,
                                   elapsed=time.monotonic() - started)

        rewritten = apply_oracle(e_hat, cfg.domain, cfg.oracles)
        if rewritten is not None:
            j_oracle = infer(rewritten, cfg.domain, store)
            if j_oracle.dist is not UKD:
                store[e] = j_oracle.dist
                store[e_hat] = j_oracle.dist
                return VariableVerdict(x, j_oracle.dist, METHOD_ORACLE,
                                       j_oracle.rule_trace,
                                       elapsed=time.monotonic() - started)

        dist, method, witness = _count_decide(x, e_hat, cfg, deadline)
        store[e] = dist
        store[e_hat] = dist
        return VariableVerdict(x, dist, method, ("counted",), witness=witness,
                               elapsed=time.monotonic() - started)
    except (BudgetExceeded, VariableTimeout, InconclusiveSolver,
            SolverSpawnFailure) as err:
        return VariableVerdict(x, UKD, METHOD_INCONCLUSIVE,
                               note=f"{type(err).__name__}: {err}",
                               elapsed=time.monotonic() - started)


def pm_check(p: Program, cfg: EngineConfig) -> Report:
    """Classify every internal variable (perfect masking check)."""
    started = time.monotonic()
    store: dict[ex.Expr, DistType] = {}
    hats: dict[str, ex.Expr] = {}
    names = p.internals
    if cfg.parallel_variables and cfg.jobs > 1:
        # independent analyses against store snapshots; results merged
        # in SSA order so the outcome matches the serial run
        def task(x):
            return _classify(p, x, cfg, dict(store), hats)
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            verdicts = list(pool.map(task, names))
    else:
        verdicts = [_classify(p, x, cfg, store, hats) for x in names]
    return Report(p.name, cfg.domain.bits, cfg.domain.poly, verdicts,
                  elapsed=time.monotonic() - started, reduced=hats)


def _strength(p: Program, v: VariableVerdict, cfg: EngineConfig,
              hats: dict) -> None:
    deadline = _deadline(cfg)
    e_hat = hats.get(v.name)
    if e_hat is None:
        e_hat = simplify(expr_of(p, v.name), cfg.domain, cfg.meta_patterns)
        hats[v.name] = e_hat
    den = cfg.domain.size ** len(ex.rvars(e_hat))
    if v.dist in (DistType.RUD, DistType.SID):
        v.qms = Qms(den, den)
        return
    if v.dist is UKD:
        return  # inconclusive: no strength claim
    if not ex.rvars(e_hat):
        v.qms = Qms(0, 1)
        return
    if cfg.engine == "smt":
        try:
            v.qms = qms_smt(e_hat, cfg.domain, cfg.solver_cmd,
                            cfg.smt_profile, deadline,
                            cfg.emit_smt_dir, v.name)
            return
        except (InconclusiveSolver, SolverSpawnFailure) as err:
            v.note = f"solver fallback: {err}"
    try:
        qms = qms_exact(e_hat, cfg.domain, cfg.budget, cfg.jobs, deadline)
    except (BudgetExceeded, VariableTimeout) as err:
        v.note = f"{type(err).__name__}: {err}"
        return
    v.qms = qms
    if qms.witness is not None:
        v.witness = qms.witness


def qms_compute(p: Program, cfg: EngineConfig) -> Report:
    """pm_check plus a quantitative strength for every variable."""
    if cfg.engine == "type-only":
        raise ValueError("strength computation needs a counting engine")
    started = time.monotonic()
    report = pm_check(p, cfg)
    for v in report.verdicts:
        _strength(p, v, cfg, report.reduced)
    strengths = [v.qms.fraction for v in report.verdicts if v.qms is not None]
    if strengths:
        worst = min(strengths)
        for v in report.verdicts:
            if v.qms is not None and v.qms.fraction == worst:
                report.program_qms = Qms(v.qms.num, v.qms.den)
                break
    report.elapsed = time.monotonic() - started
    return report


# --- serialization ------------------------------------------------------------

def _qms_to_json(qms: Qms | None):
    if qms is None:
        return None
    return {"num": qms.num, "den": qms.den}


def _witness_to_json(witness):
    if witness is None:
        return None
    if len(witness) == 3:
        s1, s2, c = witness
        return {"sigma1": dict(sorted(s1.items())),
                "sigma2": dict(sorted(s2.items())), "c": c}
    s1, s2 = witness
    return {"sigma1": dict(sorted(s1.items())),
            "sigma2": dict(sorted(s2.items()))}


def report_to_dict(report: Report, timings: bool = False) -> dict:
    doc = {
        "version": 1,
        "program": report.program,
        "bits": report.bits,
        "poly": report.poly,
        "variables": [
            {
                "name": v.name,
                "type": v.dist.value,
                "method": v.method,
                "qms": _qms_to_json(v.qms),
                "witness": _witness_to_json(v.witness),
                "note": v.note,
            }
            for v in report.verdicts
        ],
        "program_qms": _qms_to_json(report.program_qms),
        "perfectly_masked": report.perfectly_masked,
        "timings": None,
    }
    if timings:
        doc["timings"] = {
            "total": report.elapsed,
            "variables": {v.name: v.elapsed for v in report.verdicts},
        }
    return doc


def report_to_json(report: Report, timings: bool = False) -> str:
    return json.dumps(report_to_dict(report, timings), indent=2) + "\n"


def _witness_from_json(doc):
    if doc is None:
        return None
    s1 = {k: int(v) for k, v in doc["sigma1"].items()}
    s2 = {k: int(v) for k, v in doc["sigma2"].items()}
    if "c" in doc:
        return (s1, s2, doc["c"])
    return (s1, s2)


def report_from_dict(doc: dict) -> Report:
    verdicts = []
    for item in doc["variables"]:
        qms = item.get("qms")
        witness = _witness_from_json(item.get("witness"))
        verdicts.append(VariableVerdict(
            name=item["name"],
            dist=DistType(item["type"]),
            method=item["method"],
            qms=None if qms is None else Qms(qms["num"], qms["den"],
                                             witness if witness and
                                             len(witness) == 3 else None),
            witness=witness,
            note=item.get("note"),
        ))
    pq = doc.get("program_qms")
    return Report(doc["program"], doc["bits"], doc["poly"], verdicts,
                  None if pq is None else Qms(pq["num"], pq["den"]))


def report_from_json(text: str) -> Report:
    return report_from_dict(json.loads(text))
