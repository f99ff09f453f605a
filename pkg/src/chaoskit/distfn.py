"""Distance profiles and empirical lower/upper distribution functions.

The lower and upper distribution functions of a pair are the liminf and
limsup over ``n`` of the fraction of ``0 <= i < n`` with ``d(f^i x, f^i y) < t``.
At finite horizon they are estimated as the min and max of that fraction
over a checkpoint schedule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ConfigError, InsufficientData
from .systems import System

T_MIN = 1e-4
T_POINTS = 32
GEOMETRIC_RATIO = 1.25
# grid floor sits this factor above a system's resolution so that t > resolution strictly
RESOLUTION_MARGIN = 1.01


@dataclass(frozen=True)
class SequenceSpec:
    """A strictly increasing index sequence q_0 < q_1 < ... (indexed from 0).

    ``arith`` is ``start + step*i``; ``explicit`` and ``witness`` carry a
    finite list. ``boundaries`` are natural checkpoints in subsample units.
    """

    kind: str
    step: int = 1
    start: int = 0
    values: tuple[int, ...] = field(default=(), repr=False)
    gap_bound: int | None = None
    boundaries: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in ("arith", "explicit", "witness"):
            raise ConfigError("sequence.kind", f"unknown kind {self.kind!r}")
        if self.kind == "arith":
            if self.step < 1:
                raise ConfigError("sequence.step", "must be >= 1")
            if self.start < 0:
                raise ConfigError("sequence.start", "must be >= 0")
        else:
            v = np.asarray(self.values, dtype=np.int64)
            if v.size == 0:
                raise ConfigError("sequence.values", "empty sequence")
            if v[0] < 0 or np.any(np.diff(v) <= 0):
                raise ConfigError("sequence.values", "must be strictly increasing nonnegative integers")
        if self.gap_bound is not None and self.gap_bound < 1:
            raise ConfigError("sequence.gap_bound", "must be a positive integer")

    @classmethod
    def arith(cls, step: int, start: int = 0) -> SequenceSpec:
        return cls("arith", step=step, start=start, gap_bound=step)

    @classmethod
    def explicit(cls, values: Iterable[int], gap_bound: int | None = None, kind: str = "explicit",
                 boundaries: Iterable[int] = ()) -> SequenceSpec:
        return cls(kind, values=tuple(int(v) for v in values), gap_bound=gap_bound,
                   boundaries=tuple(int(b) for b in boundaries))

    @property
    def label(self) -> str:
        if self.kind == "arith":
            return f"arith(step={self.step},start={self.start})"
        return f"{self.kind}[{len(self.values)}]"

    @property
    def is_finite(self) -> bool:
        return self.kind != "arith"

    def materialize(self, limit: int) -> np.ndarray:
        """All q_i < limit."""
        if self.kind == "arith":
            if self.start >= limit:
                return np.empty(0, dtype=np.int64)
            return np.arange(self.start, limit, self.step, dtype=np.int64)
        v = np.asarray(self.values, dtype=np.int64)
        return v[v < limit]

    def max_gap(self, limit: int) -> int:
        q = self.materialize(limit)
        return int(np.diff(q).max()) if q.size > 1 else 0

    def check_gap_bound(self, limit: int) -> None:
        if self.gap_bound is None:
            raise ConfigError("sequence.gap_bound", "no gap bound set")
        if self.max_gap(limit) > self.gap_bound:
            raise ConfigError("sequence.gap_bound",
                              f"materialized gap {self.max_gap(limit)} exceeds bound {self.gap_bound}")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "gap_bound": self.gap_bound}
        if self.kind == "arith":
            out.update(step=self.step, start=self.start)
        else:
            out["values"] = list(self.values)
            if self.boundaries:
                out["boundaries"] = list(self.boundaries)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SequenceSpec:
        kind = data.get("kind")
        if kind == "arith":
            spec = cls.arith(int(data.get("step", 1)), int(data.get("start", 0)))
            if "gap_bound" in data:
                spec = cls("arith", step=spec.step, start=spec.start, gap_bound=data["gap_bound"])
            return spec
        if kind in ("explicit", "witness"):
            return cls.explicit(data.get("values", ()), data.get("gap_bound"), kind=kind,
                                boundaries=data.get("boundaries", ()))
        raise ConfigError("sequence.kind", f"unknown kind {kind!r}")


@dataclass(frozen=True)
class DistanceProfile:
    values: np.ndarray
    source: str = ""
    sequence: SequenceSpec | None = None
    resolution: float = 0.0
    boundaries: tuple[int, ...] = ()
    truncated: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise InsufficientData("distance profile must hold at least one value")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("distance profile values must be finite and >= 0")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


def distance_profile(system: System, x, y, horizon: int, source: str | None = None) -> DistanceProfile:
    values = system.profile_values(x, y, horizon)
    return DistanceProfile(
        values=values,
        source=source or f"{system.name}:({system.point_label(x)}, {system.point_label(y)})",
        resolution=system.resolution(x, y, horizon),
        boundaries=tuple(system.block_boundaries(horizon)),
    )


def subsample_profile(profile: DistanceProfile, q: SequenceSpec) -> DistanceProfile:
    """Profile along q: ``result.values[i] = profile.values[q_i]``."""
    idx = q.materialize(len(profile))
    truncated = q.is_finite and idx.size < len(q.values)
    if idx.size == 0:
        raise InsufficientData(f"sequence {q.label} has no index below {len(profile)}")
    mapped = {int(np.searchsorted(idx, b)) for b in profile.boundaries}
    mapped.update(q.boundaries)
    return DistanceProfile(
        values=profile.values[idx],
        source=profile.source,
        sequence=q,
        resolution=profile.resolution,
        boundaries=tuple(sorted(b for b in mapped if 0 < b <= idx.size)),
        truncated=truncated,
    )


def empirical_density(profile: DistanceProfile, t: float, n: int) -> float:
    """Fraction of ``0 <= i < n`` with ``values[i] < t`` (strict)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > len(profile):
        raise ValueError(f"n = {n} exceeds profile length {len(profile)}")
    if not t > 0:
        raise ValueError("t must be positive")
    return int(np.count_nonzero(profile.values[:n] < t)) / n


def checkpoint_schedule(horizon: int, burn_in: int = 0, policy: str = "geometric",
                        ratio: float = GEOMETRIC_RATIO, boundaries: Sequence[int] = ()) -> list[int]:
    """Strictly increasing checkpoints in ``(burn_in, horizon]``.

    ``geometric`` starts at ``burn_in + 1`` and multiplies by ``ratio``
    (rounded up), always ending at ``horizon``. ``block_boundaries`` passes
    the given values through, filtered to the window.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not 0 <= burn_in < horizon:
        raise ValueError("burn_in must satisfy 0 <= burn_in < horizon")
    if policy == "geometric":
        if ratio <= 1:
            raise ValueError("ratio must exceed 1")
        out = []
        n = burn_in + 1
        while n < horizon:
            out.append(n)
            n = max(n + 1, math.ceil(n * ratio))
        out.append(horizon)
        return out
    if policy == "block_boundaries":
        out = sorted({int(b) for b in boundaries if burn_in < b <= horizon})
        if not out:
            raise ValueError("no block boundary falls inside the checkpoint window")
        return out
    raise ValueError(f"unknown checkpoint policy {policy!r}")


def profile_checkpoints(profile: DistanceProfile, burn_in: int = 0, ratio: float = GEOMETRIC_RATIO) -> list[int]:
    """Geometric schedule merged with the profile's own block boundaries."""
    n = len(profile)
    merged = set(checkpoint_schedule(n, burn_in, "geometric", ratio))
    merged.update(b for b in profile.boundaries if burn_in < b <= n)
    return sorted(merged)


def default_t_grid(resolution: float = 0.0, size: int = T_POINTS) -> np.ndarray:
    """Log-spaced grid on [1e-4, 1], floored just above the metric's resolution."""
    lo = max(T_MIN, resolution * RESOLUTION_MARGIN)
    if lo >= 1.0:
        return np.empty(0)
    return np.geomspace(lo, 1.0, size)


def effective_t_grid(t_grid: Sequence[float] | None, resolution: float) -> np.ndarray:
    if t_grid is None:
        return default_t_grid(resolution)
    grid = np.asarray(t_grid, dtype=float)
    return grid[grid > resolution]


@dataclass(frozen=True)
class DistributionEstimate:
    t_grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    checkpoints: tuple[int, ...]
    burn_in: int = 0
    resolution: float = 0.0
    # checkpoint n realising each min / max, for audit
    lower_at: tuple[int, ...] = field(default=(), repr=False)
    upper_at: tuple[int, ...] = field(default=(), repr=False)

    def to_csv(self) -> str:
        rows = ["t,F_lower,F_upper"]
        rows += [f"{t:.9g},{lo:.9g},{up:.9g}" for t, lo, up in zip(self.t_grid, self.lower, self.upper)]
        return "\n".join(rows) + "\n"

    def to_dict(self) -> dict[str, Any]:
        return {
            "t_grid": self.t_grid.tolist(),
            "F_lower": self.lower.tolist(),
            "F_upper": self.upper.tolist(),
            "lower_at": list(self.lower_at),
            "upper_at": list(self.upper_at),
            "checkpoints": list(self.checkpoints),
            "burn_in": self.burn_in,
            "resolution": self.resolution,
        }


def distribution_estimate(profile: DistanceProfile, t_grid: Sequence[float] | None = None,
                          checkpoints: Sequence[int] | None = None, burn_in: int = 0) -> DistributionEstimate:
    """min / max of the empirical density over ``checkpoints`` for every t.

    ``t_grid=None`` uses the default grid floored at the profile's
    resolution; an explicit grid is used as given.
    """
    grid = default_t_grid(profile.resolution) if t_grid is None else np.asarray(t_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty t_grid")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("t_grid must be positive and strictly increasing")
    if checkpoints is None:
        checkpoints = profile_checkpoints(profile, burn_in)
    ck = np.asarray(sorted(set(int(n) for n in checkpoints)), dtype=np.int64)
    if ck.size == 0:
        raise ValueError("empty checkpoint list")
    if ck[0] < 1 or ck[-1] > len(profile):
        raise ValueError(f"checkpoints must lie in (0, {len(profile)}]")

    order = np.sort(profile.values)
    lower = np.empty(grid.size)
    upper = np.empty(grid.size)
    lower_at, upper_at = [], []
    values = profile.values[: ck[-1]]
    for j, t in enumerate(grid):
        if t > order[-1]:
            dens = np.ones(ck.size)
        elif t <= order[0]:
            dens = np.zeros(ck.size)
        else:
            dens = np.cumsum(values < t)[ck - 1] / ck
        lo, hi = int(np.argmin(dens)), int(np.argmax(dens))
        lower[j], upper[j] = dens[lo], dens[hi]
        lower_at.append(int(ck[lo]))
        upper_at.append(int(ck[hi]))
    return DistributionEstimate(grid, lower, upper, tuple(int(n) for n in ck), burn_in,
                                profile.resolution, tuple(lower_at), tuple(upper_at))
