"""Finite-horizon chaos verdicts for orbit pairs.

The exact conditions (F = 0, F* = 1, F* > 0, F < F* on an interval) become
threshold comparisons controlled by :class:`Thresholds`; every verdict
carries the thresholds and witnesses it was issued with.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations
from typing import Any, Sequence

import numpy as np

from ._parallel import pmap
from .distfn import (
    DistanceProfile,
    DistributionEstimate,
    SequenceSpec,
    distance_profile,
    distribution_estimate,
    effective_t_grid,
    subsample_profile,
)
from .errors import ConfigError, InsufficientData
from .systems import System

MIN_SDC_SAMPLES = 16
_SLACK = 1e-12


@dataclass(frozen=True)
class Thresholds:
    zero_tol: float = 0.05
    one_tol: float = 0.05
    gap_tol: float = 0.1
    j_min_width: int = 3
    proximal_tol: float = 1e-3
    separation_tol: float = 0.1

    def __post_init__(self):
        for name in ("zero_tol", "one_tol", "gap_tol", "proximal_tol", "separation_tol"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ConfigError(f"thresholds.{name}", f"must lie in (0, 1), got {value!r}")
        if self.zero_tol + self.one_tol >= 1:
            raise ConfigError("thresholds.one_tol", "zero_tol + one_tol must be < 1")
        if self.gap_tol <= max(self.zero_tol, self.one_tol):
            raise ConfigError("thresholds.gap_tol", "must exceed both zero_tol and one_tol")
        if self.gap_tol + max(self.zero_tol, self.one_tol) > 1:
            raise ConfigError("thresholds.gap_tol", "gap_tol + max(zero_tol, one_tol) must be <= 1")
        if self.j_min_width < 1:
            raise ConfigError("thresholds.j_min_width", "must be >= 1")

    @property
    def dc3_gap(self) -> float:
        """Separation ``upper - lower`` that counts as a strict gap."""
        return self.gap_tol - max(self.zero_tol, self.one_tol)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> Thresholds:
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"thresholds.{sorted(unknown)[0]}", "unknown field")
        return cls(**data)


@dataclass
class SDCRecord:
    sequence: SequenceSpec
    sdc1: bool
    sdc2: bool
    sdc3: bool
    samples: int
    witness: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"sequence": self.sequence.to_dict(), "sdc1": self.sdc1, "sdc2": self.sdc2,
                "sdc3": self.sdc3, "samples": self.samples, "witness": self.witness}


@dataclass
class ChaosVerdict:
    horizon: int
    thresholds: Thresholds
    liyorke: bool | None = None
    liyorke_evidence: dict[str, float] = field(default_factory=dict)
    dc1: bool | None = None
    dc2: bool | None = None
    dc2prime: bool | None = None
    dc3: bool | None = None
    witness: dict[str, Any] = field(default_factory=dict)
    t_grid_min: float | None = None
    sdc: list[SDCRecord] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def flag(self, name: str) -> bool:
        if name.startswith("sdc"):
            return any(getattr(r, name) for r in self.sdc)
        return bool(getattr(self, name))

    def to_dict(self) -> dict[str, Any]:
        return {
            "horizon": self.horizon,
            "thresholds": self.thresholds.to_dict(),
            "liyorke": self.liyorke,
            "liyorke_evidence": self.liyorke_evidence,
            "dc1": self.dc1,
            "dc2": self.dc2,
            "dc2prime": self.dc2prime,
            "dc3": self.dc3,
            "witness": self.witness,
            "t_grid_min": self.t_grid_min,
            "sdc": [r.to_dict() for r in self.sdc],
            "notes": self.notes,
        }


def liyorke_verdict(profile: DistanceProfile, th: Thresholds | None = None,
                    burn_in: int = 0) -> tuple[bool, dict[str, float]]:
    """Proximal (tail min small) and not asymptotic (tail max large).

    The proximal threshold is raised to the profile's resolution when the
    metric cannot get closer within the horizon.
    """
    th = th or Thresholds()
    if len(profile) < 2:
        raise ValueError("Li-Yorke verdict needs a profile of length >= 2")
    tail = profile.values[min(burn_in, len(profile) - 1):]
    proximal = max(th.proximal_tol, profile.resolution)
    lo, hi = float(tail.min()), float(tail.max())
    evidence = {"min": lo, "max": hi, "proximal_threshold": proximal,
                "separation_threshold": th.separation_tol}
    return bool(lo <= proximal and hi >= th.separation_tol), evidence


def _flags(est: DistributionEstimate, th: Thresholds) -> tuple[dict[str, bool], dict[str, Any], list[str]]:
    keep = est.t_grid > est.resolution
    t, lower, upper = est.t_grid[keep], est.lower[keep], est.upper[keep]
    flags = dict(f1=False, f2=False, f2p=False, f3=False)
    witness: dict[str, Any] = {}
    notes: list[str] = []
    if t.size == 0:
        notes.append("effective t grid is empty: metric resolution above every grid value")
        return flags, witness, notes

    # an epsilon needs j_min_width - 1 grid points below it so that F < F* can be seen on an interval
    eligible = np.arange(t.size) >= th.j_min_width - 1

    def largest(mask: np.ndarray) -> float | None:
        hits = np.flatnonzero(mask & eligible)
        return float(t[hits[-1]]) if hits.size else None

    all_one = bool(np.all(upper >= 1 - th.one_tol))
    eps0 = largest(lower <= th.zero_tol)
    eps_below_one = largest(lower <= 1 - th.gap_tol)

    if eps0 is not None and all_one:
        flags["f1"] = True
        witness["dc1_epsilon"] = eps0
    if eps_below_one is not None and all_one:
        flags["f2"] = True
        witness["dc2_epsilon"] = eps_below_one
    if eps0 is not None and bool(np.all(upper >= th.gap_tol)):
        flags["f2p"] = True
        witness["dc2prime_epsilon"] = eps0

    gap = upper - lower >= th.dc3_gap - _SLACK
    best_len, best_start, run = 0, 0, 0
    for j, g in enumerate(gap):
        run = run + 1 if g else 0
        if run > best_len:
            best_len, best_start = run, j - run + 1
    if best_len >= th.j_min_width:
        flags["f3"] = True
        witness["dc3_interval"] = [float(t[best_start]), float(t[best_start + best_len - 1])]
    return flags, witness, notes


def dc_verdict(estimate: DistributionEstimate, th: Thresholds | None = None,
               horizon: int | None = None) -> ChaosVerdict:
    th = th or Thresholds()
    flags, witness, notes = _flags(estimate, th)
    keep = estimate.t_grid[estimate.t_grid > estimate.resolution]
    return ChaosVerdict(
        horizon=horizon if horizon is not None else int(estimate.checkpoints[-1]),
        thresholds=th,
        dc1=flags["f1"], dc2=flags["f2"], dc2prime=flags["f2p"], dc3=flags["f3"],
        witness=witness,
        t_grid_min=float(keep[0]) if keep.size else None,
        notes=notes,
    )


def sdc_from_profile(profile: DistanceProfile, q: SequenceSpec, th: Thresholds | None = None,
                     t_grid: Sequence[float] | None = None, burn_in: int = 0) -> SDCRecord:
    th = th or Thresholds()
    sub = subsample_profile(profile, q)
    if len(sub) < MIN_SDC_SAMPLES:
        raise InsufficientData(f"only {len(sub)} indices of {q.label} below horizon {len(profile)}; "
                               f"need {MIN_SDC_SAMPLES}")
    grid = effective_t_grid(t_grid, sub.resolution)
    if grid.size == 0:
        return SDCRecord(q, False, False, False, len(sub), {"note": "empty effective t grid"})
    est = distribution_estimate(sub, grid, burn_in=min(burn_in, len(sub) - 1))
    flags, witness, _ = _flags(est, th)
    if sub.truncated:
        witness["truncated"] = True
    return SDCRecord(q, flags["f1"], flags["f2"], flags["f3"], len(sub),
                     {k.replace("dc", "sdc", 1): v for k, v in witness.items() if not k.startswith("dc2prime")})


def sdc_verdict(system: System, x, y, q: SequenceSpec, horizon: int, th: Thresholds | None = None,
                t_grid: Sequence[float] | None = None) -> SDCRecord:
    return sdc_from_profile(distance_profile(system, x, y, horizon), q, th, t_grid)


def verdict_from_profile(profile: DistanceProfile, th: Thresholds | None = None,
                         t_grid: Sequence[float] | None = None, sequences: Sequence[SequenceSpec] = (),
                         burn_in: int = 0) -> tuple[ChaosVerdict, DistributionEstimate | None]:
    """Li-Yorke, DC and SDC flags of a single profile."""
    th = th or Thresholds()
    grid = effective_t_grid(t_grid, profile.resolution)
    if grid.size:
        est = distribution_estimate(profile, grid, burn_in=burn_in)
        verdict = dc_verdict(est, th, horizon=len(profile))
    else:
        est = None
        verdict = ChaosVerdict(horizon=len(profile), thresholds=th, dc1=False, dc2=False,
                               dc2prime=False, dc3=False,
                               notes=["effective t grid is empty: metric resolution above every grid value"])
    if len(profile) >= 2:
        verdict.liyorke, verdict.liyorke_evidence = liyorke_verdict(profile, th, burn_in)
    for q in sequences:
        verdict.sdc.append(sdc_from_profile(profile, q, th, t_grid, burn_in))
    return verdict, est


def classify_pair(system: System, x, y, horizon: int, th: Thresholds | None = None,
                  t_grid: Sequence[float] | None = None, sequences: Sequence[SequenceSpec] = (),
                  burn_in: int = 0) -> ChaosVerdict:
    profile = distance_profile(system, x, y, horizon)
    return verdict_from_profile(profile, th, t_grid, sequences, burn_in)[0]


def consistency_check(v: ChaosVerdict) -> list[str]:
    """Violations of the implication lattice among the flags of ``v``."""
    out = []
    rules = [
        (v.dc1, v.dc2, "DC1 implies DC2"),
        (v.dc1, v.dc2prime, "DC1 implies DC2'"),
        (v.dc2, v.dc3, "DC2 implies DC3"),
        (v.dc2prime, v.dc3, "DC2' implies DC3"),
    ]
    if v.sdc:
        rules.append((v.dc1, any(r.sdc1 for r in v.sdc), "DC1 implies SDC"))
    if v.liyorke is not None:
        rules += [
            (v.dc1, v.liyorke, "DC1 implies Li-Yorke"),
            (v.dc2, v.liyorke, "DC2 implies Li-Yorke"),
            (v.dc2prime, v.liyorke, "DC2' implies Li-Yorke"),
        ]
        rules += [(r.sdc1, v.liyorke, f"SDC along {r.sequence.label} implies Li-Yorke") for r in v.sdc]
    for r in v.sdc:
        rules.append((r.sdc1, r.sdc2, f"SDC1 implies SDC2 along {r.sequence.label}"))
        rules.append((r.sdc2, r.sdc3, f"SDC2 implies SDC3 along {r.sequence.label}"))
    for premise, conclusion, label in rules:
        if premise and not conclusion:
            out.append(label)
    return out


@dataclass
class ScrambledSearchResult:
    flag: str
    members: list[int]
    pairwise: dict[tuple[int, int], bool]

    def to_dict(self) -> dict[str, Any]:
        return {"flag": self.flag, "members": self.members, "size": len(self.members),
                "pairwise": [[i, j, f] for (i, j), f in sorted(self.pairwise.items())]}


def scrambled_search(system: System, candidates: Sequence, horizon: int, th: Thresholds | None = None,
                     flag: str = "dc1", t_grid: Sequence[float] | None = None) -> ScrambledSearchResult:
    """Greedy clique of candidates whose every pair carries ``flag``."""
    if len(candidates) < 2:
        raise ValueError("scrambled_search needs at least 2 candidates")
    if flag not in ("liyorke", "dc1", "dc2", "dc2prime", "dc3"):
        raise ValueError(f"unsupported flag {flag!r}")
    pairs = list(combinations(range(len(candidates)), 2))

    def one(pair):
        i, j = pair
        return classify_pair(system, candidates[i], candidates[j], horizon, th, t_grid).flag(flag)

    pairwise = dict(zip(pairs, pmap(one, pairs)))
    members = [0]
    for k in range(1, len(candidates)):
        if all(pairwise[(m, k)] for m in members):
            members.append(k)
    return ScrambledSearchResult(flag, members, pairwise)


def witness_sequence(profile: DistanceProfile, th: Thresholds | None = None,
                     t_grid: Sequence[float] | None = None, runs: int = 4) -> SequenceSpec | None:
    """Index sequence along which a Li-Yorke pair looks distributionally chaotic.

    Alternates runs of close indices (distance below every grid value)
    until their share reaches ``1 - one_tol`` with runs of far indices
    until it drops to ``zero_tol``. Returns None when a pool runs dry
    before ``runs`` runs are complete.
    """
    th = th or Thresholds()
    grid = effective_t_grid(t_grid, profile.resolution)
    if grid.size < th.j_min_width:
        return None
    v = profile.values
    close_pool = np.flatnonzero((v < grid[0]) & (v <= max(th.proximal_tol, profile.resolution)))
    far_pool = np.flatnonzero(v >= max(th.separation_tol, grid[th.j_min_width - 1]))
    if close_pool.size == 0 or far_pool.size == 0:
        return None

    picked: list[np.ndarray] = []
    run_ends: list[int] = []
    total = close = 0
    last = -1
    for r in range(runs):
        if r % 2 == 0:
            target = 1 - th.one_tol
            need = max(1, math.ceil((target * total - close) / (1 - target)))
            while (close + need) / (total + need) < target:
                need += 1
            pool = close_pool
        else:
            need = max(1, math.ceil(close / th.zero_tol - total))
            while close / (total + need) > th.zero_tol:
                need += 1
            pool = far_pool
        chunk = pool[np.searchsorted(pool, last, side="right"):][:need]
        if chunk.size < need:
            return None
        picked.append(chunk)
        total += need
        close += need if r % 2 == 0 else 0
        last = int(chunk[-1])
        run_ends.append(total)
    return SequenceSpec.explicit(np.concatenate(picked), kind="witness", boundaries=run_ends)
