"""Sampled indicators for Ruelle-Takens chaos: sensitivity and a dense orbit.

Both quantifiers are sampled, so results are estimates under a fixed seed.
Samples are drawn from per-(point, radius) generators, so raising the
sample count only appends witnesses.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .systems import System

DELTA_LADDER = (0.5, 0.25, 0.1, 0.05, 0.01)
DEFAULT_RADII = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


def separation_table(system: System, base_points: Sequence, radii: Sequence[float], horizon: int,
                     samples_per_radius: int = 64, seed: int = 0) -> np.ndarray:
    """Best separation reached within ``horizon``, indexed [point, radius]."""
    if not base_points or not radii or samples_per_radius < 1:
        raise ValueError("base_points, radii and samples_per_radius must be non-empty")
    radii = list(radii)
    if any(r <= 0 for r in radii) or any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be positive and strictly decreasing")
    table = np.zeros((len(base_points), len(radii)))
    for bi, p in enumerate(base_points):
        for ri, r in enumerate(radii):
            rng = np.random.default_rng([seed, bi, ri])
            best = 0.0
            for _ in range(samples_per_radius):
                q = system.perturb(p, r, rng)
                best = max(best, float(system.profile_values(p, q, horizon).max()))
            table[bi, ri] = best
    return table


def sensitivity_estimate(system: System, base_points: Sequence, radii: Sequence[float] = DEFAULT_RADII,
                         horizon: int = 200, samples_per_radius: int = 64, seed: int = 0,
                         ladder: Sequence[float] = DELTA_LADDER) -> float:
    """Largest ladder value every (point, radius) cell separates by; 0.0 if none."""
    table = separation_table(system, base_points, radii, horizon, samples_per_radius, seed)
    worst = float(table.min())
    surviving = [d for d in ladder if d <= worst]
    return float(max(surviving)) if surviving else 0.0


@dataclass
class TransitivityResult:
    transitive: bool
    cells_visited: int
    cells_total: int
    start_index: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def transitivity_probe(system: System, grid_eps: float, horizon: int, start_samples: int = 64,
                       seed: int = 0) -> TransitivityResult:
    """Does some sampled start visit every grid_eps-cell within the horizon?

    ``cells_visited`` reports the best start; ``start_index`` is the first
    start that covered everything, or the best one otherwise.
    """
    if grid_eps <= 0 or start_samples < 1:
        raise ValueError("grid_eps must be positive and start_samples >= 1")
    rng = np.random.default_rng(seed)
    starts = [system.sample_point(rng) for _ in range(start_samples)]
    best, best_i, total = -1, 0, 0
    for i, p in enumerate(starts):
        cells, total = system.orbit_cells(p, horizon, grid_eps)
        visited = int(np.unique(cells).size)
        if visited > best:
            best, best_i = visited, i
        if visited == total:
            return TransitivityResult(True, visited, total, i)
    return TransitivityResult(False, best, total, best_i)


@dataclass(frozen=True)
class RTParams:
    base_points: int = 8
    radii: tuple[float, ...] = DEFAULT_RADII
    sensitivity_horizon: int = 200
    samples_per_radius: int = 64
    grid_eps: float = 0.01
    transitivity_horizon: int = 100_000
    start_samples: int = 64
    seed: int = 0


@dataclass
class RTReport:
    system: str
    sensitivity_constant_estimate: float
    transitive: bool
    cells_visited: int
    cells_total: int
    params: RTParams = field(default_factory=RTParams)

    @property
    def rt_chaotic(self) -> bool:
        return self.transitive and self.sensitivity_constant_estimate > 0

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["params"]["radii"] = list(self.params.radii)
        out["rt_chaotic"] = self.rt_chaotic
        return out


def rt_verdict(system: System, params: RTParams | None = None) -> RTReport:
    params = params or RTParams()
    rng = np.random.default_rng([params.seed, 1])
    bases = [system.sample_point(rng) for _ in range(params.base_points)]
    delta = sensitivity_estimate(system, bases, params.radii, params.sensitivity_horizon,
                                 params.samples_per_radius, params.seed)
    trans = transitivity_probe(system, params.grid_eps, params.transitivity_horizon,
                               params.start_samples, params.seed)
    return RTReport(system.name, delta, trans.transitive, trans.cells_visited, trans.cells_total, params)
