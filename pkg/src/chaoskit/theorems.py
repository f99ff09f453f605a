"""Empirical harnesses for the bounded-gap equivalence, DC2' iterate
invariance, the F = 0 transfer between f and f^N, and the example1
construction.

Each harness returns a :class:`HarnessReport` with one entry per case in
input order; cases that break a checked property land in
``counterexamples`` with enough parameters to rerun them.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ._parallel import pmap
from .classify import Thresholds, sdc_from_profile, verdict_from_profile
from .distfn import (
    SequenceSpec,
    checkpoint_schedule,
    distance_profile,
    distribution_estimate,
    empirical_density,
    profile_checkpoints,
    subsample_profile,
)
from .errors import ConfigError
from .systems import Example1, Example1Point, Iterate, System, SystemSpec, example1_blocks, iterate, make_system


@dataclass
class HarnessReport:
    harness: str
    system: str
    cases: list[dict[str, Any]] = field(default_factory=list)
    counterexamples: list[dict[str, Any]] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    passed: bool = False
    runtime: float = 0.0

    def to_dict(self, include_runtime: bool = False) -> dict[str, Any]:
        out = {"harness": self.harness, "system": self.system, "cases": self.cases,
               "counterexamples": self.counterexamples, "summary": self.summary, "passed": self.passed}
        if include_runtime:
            out["runtime"] = self.runtime
        return out


def _is_noncompact(system: System) -> bool:
    while isinstance(system, Iterate):
        system = system.base
    return isinstance(system, Example1)


def _counting_check(full: np.ndarray, sub: np.ndarray, checkpoints: Sequence[int], M: int,
                    t_grid: np.ndarray) -> tuple[int, list[dict[str, Any]]]:
    """#{i < n//M : sub_i < t} <= #{i < n : full_i < t}, and the same for >= t."""
    checks, bad = 0, []
    for n in checkpoints:
        m = min(n // M, sub.size)
        for t in t_grid:
            below_sub = int(np.count_nonzero(sub[:m] < t))
            below_full = int(np.count_nonzero(full[:n] < t))
            above_sub, above_full = m - below_sub, n - below_full
            checks += 2
            if below_sub > below_full or above_sub > above_full:
                bad.append({"n": int(n), "m": int(m), "t": float(t), "below": [below_sub, below_full],
                            "at_or_above": [above_sub, above_full]})
    return checks, bad


def theorem1_harness(system: System, pairs: Sequence[tuple], q: SequenceSpec, horizon: int,
                     th: Thresholds | None = None, t_grid: Sequence[float] | None = None,
                     allow_noncompact: bool = False, min_agreement: float = 0.95) -> HarnessReport:
    """DC1 verdict unrestricted vs along a bounded-gap sequence, pair by pair."""
    start = time.perf_counter()
    th = th or Thresholds()
    if q.gap_bound is None:
        raise ConfigError("sequence.gap_bound", "bounded-gap harness needs a gap bound M")
    if _is_noncompact(system) and not allow_noncompact:
        raise ConfigError("system", f"{system.name} is not compact; pass allow_noncompact to run anyway")
    q.check_gap_bound(horizon)
    M = q.gap_bound

    def one(item):
        k, (x, y) = item
        profile = distance_profile(system, x, y, horizon)
        verdict, est = verdict_from_profile(profile, th, t_grid)
        record = sdc_from_profile(profile, q, th, t_grid)
        sub = subsample_profile(profile, q)
        grid = est.t_grid if est is not None else np.empty(0)
        checks, bad = _counting_check(profile.values, sub.values, est.checkpoints if est else (), M, grid)
        case = {"case_id": k, "x": system.point_label(x), "y": system.point_label(y),
                "dc1": verdict.dc1, "sdc1": record.sdc1, "agree": verdict.dc1 == record.sdc1,
                "counting_checks": checks, "counting_violations": len(bad)}
        return case, bad

    results = pmap(one, list(enumerate(pairs)))
    report = HarnessReport("theorem1", system.name)
    for case, bad in results:
        report.cases.append(case)
        for b in bad:
            report.counterexamples.append({"case_id": case["case_id"], "kind": "counting", **b})
    agree = sum(c["agree"] for c in report.cases)
    rate = agree / len(report.cases) if report.cases else 0.0
    checks = sum(c["counting_checks"] for c in report.cases)
    violations = sum(c["counting_violations"] for c in report.cases)
    report.summary = {"sequence": q.to_dict(), "M": M, "horizon": horizon, "pairs": len(report.cases),
                      "agreement_rate": rate, "counting_checks": checks, "counting_violations": violations,
                      "min_agreement": min_agreement}
    report.passed = bool(report.cases) and rate >= min_agreement and violations == 0
    report.runtime = time.perf_counter() - start
    return report


def remark3_check(system: System, pair: tuple, q: SequenceSpec, horizon: int,
                  th: Thresholds | None = None, t_grid: Sequence[float] | None = None) -> HarnessReport:
    """If the pair is SDC along q but not DC, q's gaps should look unbounded."""
    start = time.perf_counter()
    th = th or Thresholds()
    x, y = pair
    profile = distance_profile(system, x, y, horizon)
    verdict, _ = verdict_from_profile(profile, th, t_grid)
    record = sdc_from_profile(profile, q, th, t_grid)
    idx = q.materialize(horizon)
    # index windows horizon^(1/4), horizon^(1/2), ... so early long gaps do not mask growth
    limits = sorted({max(2, round(horizon ** p)) for p in (0.25, 0.5, 0.75, 1.0)})
    prefix_max = [q.max_gap(lim) for lim in limits]
    case = {"case_id": 0, "dc1": verdict.dc1, "sdc1": record.sdc1, "materialized": int(idx.size),
            "max_gap": q.max_gap(horizon), "prefix_max_gaps": prefix_max, "prefix_limits": limits}
    if record.sdc1 and not verdict.dc1:
        grows = prefix_max[-1] > prefix_max[0]
        if grows:
            status = "consistent"
        else:
            # the bounded-gap equivalence needs compactness; without it this is no contradiction
            status = "noncompact" if _is_noncompact(system) else "inconsistent"
    else:
        status = "vacuous"
    case["status"] = status
    report = HarnessReport("remark3", system.name, cases=[case])
    if status == "inconsistent":
        report.counterexamples.append({"case_id": 0, "sequence": q.to_dict(), "horizon": horizon})
    report.summary = {"status": status, "sequence": q.label, "horizon": horizon}
    report.passed = status != "inconsistent"
    report.runtime = time.perf_counter() - start
    return report


def theorem2_harness(system: System, pairs: Sequence[tuple], N: int, horizon: int,
                     th: Thresholds | None = None, t_grid: Sequence[float] | None = None) -> HarnessReport:
    """DC2' flag of f at horizon N*m against f^N at horizon m (``horizon`` = m)."""
    start = time.perf_counter()
    th = th or Thresholds()
    if N < 1:
        raise ConfigError("N", "must be >= 1")
    if N * horizon > system.horizon_cap:
        raise ConfigError("horizon", f"N * horizon = {N * horizon} exceeds horizon_cap {system.horizon_cap}")
    fN = iterate(system, N)

    def one(item):
        k, (x, y) = item
        vf, _ = verdict_from_profile(distance_profile(system, x, y, N * horizon), th, t_grid)
        vN, _ = verdict_from_profile(distance_profile(fN, x, y, horizon), th, t_grid)
        return {"case_id": k, "x": system.point_label(x), "y": system.point_label(y),
                "flag_f": bool(vf.dc2prime), "flag_fN": bool(vN.dc2prime),
                "agree": bool(vf.dc2prime) == bool(vN.dc2prime)}

    report = HarnessReport("theorem2", system.name, cases=pmap(one, list(enumerate(pairs))))
    for c in report.cases:
        if not c["agree"]:
            report.counterexamples.append({**c, "N": N, "horizon_fN": horizon, "horizon_f": N * horizon})
    agree = sum(c["agree"] for c in report.cases)
    report.summary = {"N": N, "horizon_fN": horizon, "horizon_f": N * horizon, "pairs": len(report.cases),
                      "agreement_rate": agree / len(report.cases) if report.cases else 0.0}
    report.passed = bool(report.cases) and agree == len(report.cases)
    report.runtime = time.perf_counter() - start
    return report


def theorem2_csv(report: HarnessReport) -> str:
    rows = ["case_id,flag_f,flag_fN,agree"]
    rows += [f"{c['case_id']},{int(c['flag_f'])},{int(c['flag_fN'])},{int(c['agree'])}" for c in report.cases]
    return "\n".join(rows) + "\n"


def lemma3_harness(system: System, pair: tuple, t: float, N: int, horizon: int,
                   th: Thresholds | None = None, matched_checkpoint: int | None = None) -> HarnessReport:
    """Lower estimate at t for f (budget N*m) and f^N (budget m), both directions."""
    start = time.perf_counter()
    th = th or Thresholds()
    if N * horizon > system.horizon_cap:
        raise ConfigError("horizon", f"N * horizon = {N * horizon} exceeds horizon_cap {system.horizon_cap}")
    x, y = pair
    pf = distance_profile(system, x, y, N * horizon)
    pN = distance_profile(iterate(system, N), x, y, horizon)
    ef = distribution_estimate(pf, [t])
    eN = distribution_estimate(pN, [t])
    zero_f = bool(ef.lower[0] <= th.zero_tol)
    zero_N = bool(eN.lower[0] <= th.zero_tol)
    case = {"case_id": 0, "t": t, "N": N, "lower_f": float(ef.lower[0]), "lower_f_at": ef.lower_at[0],
            "lower_fN": float(eN.lower[0]), "lower_fN_at": eN.lower_at[0],
            "zero_f": zero_f, "zero_fN": zero_N,
            "part_i": (not zero_f) or zero_N, "part_ii": (not zero_N) or zero_f}
    if matched_checkpoint is not None:
        case["matched"] = {"n_f": matched_checkpoint, "density_f": empirical_density(pf, t, matched_checkpoint),
                           "n_fN": matched_checkpoint // N,
                           "density_fN": empirical_density(pN, t, matched_checkpoint // N)}
    report = HarnessReport("lemma3", system.name, cases=[case])
    if not (case["part_i"] and case["part_ii"]):
        report.counterexamples.append({**case, "horizon": horizon})
    report.summary = {"agree": zero_f == zero_N}
    report.passed = zero_f == zero_N
    report.runtime = time.perf_counter() - start
    return report


def even_block_sequence(system: Example1, horizon: int) -> SequenceSpec:
    """Even indices lying in the blocks [L_{2k}, L_{2k+1}), k >= 1, below ``horizon``."""
    L = system.blocks.exact_L
    out = []
    for m in range(2, len(L), 2):
        lo = L[m] + (L[m] % 2)
        hi = min(L[m + 1] if m + 1 < len(L) else horizon, horizon)
        out.extend(range(lo, hi, 2))
    return SequenceSpec.explicit(out)


def _even_count(lo: int, hi: int) -> int:
    """Number of even integers in [lo, hi)."""
    if hi <= lo:
        return 0
    return (hi - 1) // 2 - (lo - 1) // 2


def example1_upper_oracle(n: int, t: float) -> float:
    """Exact density of ``d < t`` over the first n iterates of a seed pair with offset 0.

    Counts even positions inside blocks [L_{2k}, L_{2k+1}) with 2^-k < t by
    direct arithmetic on the block table; independent of the profile code.
    """
    L = [0, 1]
    while L[-1] < n:
        L.append(L[-1] + 2 ** L[-1])
    count = 0
    for m in range(2, len(L), 2):
        k = m // 2
        if 2.0**-k < t:
            hi = L[m + 1] if m + 1 < len(L) else n
            count += _even_count(L[m], min(hi, n))
    return count / n


def example1_reproduction(horizon: int, pair_seeds: Sequence[tuple[float, float]],
                          th: Thresholds | None = None, t_upper: float = 0.3) -> HarnessReport:
    """Parity law, upper density near 1/2, zero density at L_4, DC2' but not DC1."""
    start = time.perf_counter()
    th = th or Thresholds()
    l4 = example1_blocks(2**12).exact_L[4]
    if horizon < l4:
        raise ConfigError("horizon", f"must be >= L_4 = {l4}, got {horizon}")
    system = make_system(SystemSpec("example1", horizon_cap=horizon))
    L = system.blocks.exact_L
    if not 0.25 < t_upper < 0.5:
        raise ConfigError("t_upper", "must lie in (1/4, 1/2)")
    report = HarnessReport("example1", system.name)

    def one(item):
        k, (s1, s2) = item
        if s1 == s2:
            raise ConfigError("pair_seeds", f"seeds of pair {k} coincide")
        x, y = Example1Point(s1, 0), Example1Point(s2, 0)
        profile = distance_profile(system, x, y, horizon)
        v = profile.values
        parity = bool(np.all(v[1::2] == 1.0))
        ck = sorted(set([L[3], L[4]] + checkpoint_schedule(horizon)))
        est = distribution_estimate(profile, [t_upper], ck)
        upper = float(est.upper[0])
        oracle = example1_upper_oracle(est.upper_at[0], t_upper)
        tail = [empirical_density(profile, t_upper, n) for n in ck if n > L[4]]
        monotone = all(b >= a for a, b in zip(tail, tail[1:]))
        low = empirical_density(profile, 0.5, L[4])
        bound = (L[3] + 1) / L[4]
        verdict, _ = verdict_from_profile(profile, th)
        case = {
            "case_id": k, "seeds": [s1, s2],
            "A_parity": parity,
            "B_upper": upper, "B_upper_at": est.upper_at[0], "B_oracle": oracle,
            "B_delta_to_half": 0.5 - upper, "B_monotone_past_L4": monotone,
            "B_ok": upper == oracle and upper <= 0.5 and monotone,
            "C_density_at_L4": low, "C_bound": bound, "C_ok": low == 0.0 and low <= bound,
            "D_dc2prime": bool(verdict.dc2prime), "D_dc1": bool(verdict.dc1),
            "D_ok": bool(verdict.dc2prime) and not verdict.dc1,
        }
        case["ok"] = case["A_parity"] and case["B_ok"] and case["C_ok"] and case["D_ok"]
        return case

    report.cases = pmap(one, list(enumerate(pair_seeds)))
    report.counterexamples = [{**c, "horizon": horizon} for c in report.cases if not c["ok"]]
    report.summary = {
        "horizon": horizon, "t_upper": t_upper, "L": [int(v) for v in L],
        "max_upper": max(c["B_upper"] for c in report.cases) if report.cases else None,
        "all_ok": all(c["ok"] for c in report.cases),
    }
    report.passed = bool(report.cases) and report.summary["all_ok"]
    report.runtime = time.perf_counter() - start
    return report
