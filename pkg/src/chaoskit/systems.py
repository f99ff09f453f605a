"""Discrete dynamical systems: state space, self-map and metric.

Every system exposes ``step``, ``distance`` and a vectorised
``profile_values`` that returns ``d(f^i x, f^i y)`` for ``0 <= i < n``.
Built-ins: tent, logistic4, rotation, shift2, example1, identity, and the
``iterate`` wrapper for N-fold composition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, DomainError, HorizonExceeded, UnsupportedSystem

KINDS = ("tent", "logistic4", "rotation", "shift2", "example1", "identity", "iterate")

DESCRIPTIONS = {
    "tent": "tent map on [0,1]; exact on rationals, sampled points use a prime-denominator lattice",
    "logistic4": "logistic map x -> 4x(1-x) on [0,1], floating point",
    "rotation": "circle rotation by alpha on a 1e-15 lattice (exact isometry)",
    "shift2": "full one-sided 2-shift, metric 2^-(first disagreement)",
    "example1": "x -> x+1 on [0, inf) with the block metric built from b_1=1, b_i=2^(b_1+...+b_{i-1})",
    "identity": "identity map on [0,1]",
    "iterate": "N-fold composition of a base system",
}

# (sqrt(5) - 1) / 2 to 15 digits
GOLDEN_ALPHA = 0.618033988749895
ROTATION_DENOM = 10**15
# prime with 2 as a primitive root: tent orbits on k/TENT_DENOM are long and exact
TENT_DENOM = 2305843009213693907
# extra symbols stored past horizon_cap so late distances stay resolved
PREFIX_MARGIN = 64


class _BeyondHorizon:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "beyond-horizon"


BEYOND_HORIZON = _BeyondHorizon()


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    horizon_cap: int = 100_000
    alpha: float | None = None
    base: SystemSpec | None = None
    N: int | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "horizon_cap": self.horizon_cap}
        if self.kind == "rotation":
            out["alpha"] = GOLDEN_ALPHA if self.alpha is None else self.alpha
        if self.kind == "iterate":
            out["N"] = self.N
            out["base"] = self.base.to_dict() if self.base is not None else None
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SystemSpec:
        if not isinstance(data, dict):
            raise ConfigError("system", "expected an object")
        if "kind" not in data:
            raise ConfigError("system.kind", "missing")
        unknown = set(data) - {"kind", "horizon_cap", "alpha", "base", "N"}
        if unknown:
            raise ConfigError(f"system.{sorted(unknown)[0]}", "unknown field")
        base = data.get("base")
        return cls(
            kind=data["kind"],
            horizon_cap=data.get("horizon_cap", 100_000),
            alpha=data.get("alpha"),
            base=cls.from_dict(base) if base is not None else None,
            N=data.get("N"),
        )


@dataclass(frozen=True)
class BlockTable:
    """Block lengths ``b`` and partial sums ``L`` of the example1 space.

    ``b[i-1]`` holds b_i and ``L[m]`` holds L_m, with ``L[0] = 0``. Entries
    past ``saturated_at`` (1-based index of the first b_i above the cap) are
    the ``BEYOND_HORIZON`` sentinel.
    """

    b: list
    L: list
    saturated_at: int | None
    horizon_cap: int

    @property
    def exact_L(self) -> list[int]:
        return [v for v in self.L if v is not BEYOND_HORIZON]

    def block_of(self, position: int) -> int:
        """Index m with L_m <= position < L_{m+1}."""
        exact = self.exact_L
        if position < 0:
            raise DomainError(f"negative position {position}")
        if position >= exact[-1] and position > self.horizon_cap:
            raise HorizonExceeded(
                f"position {position} lies past the last exact block boundary "
                f"{exact[-1]} and horizon_cap {self.horizon_cap}"
            )
        return int(np.searchsorted(exact, position, side="right")) - 1


def example1_blocks(horizon_cap: int) -> BlockTable:
    if horizon_cap < 1:
        raise ValueError("horizon_cap must be >= 1")
    b: list = [1]
    L: list = [0, 1]
    saturated_at = None
    i = 2
    while True:
        exponent = L[-1]
        # 2**exponent > horizon_cap without materialising huge powers
        if exponent >= horizon_cap.bit_length():
            b.append(BEYOND_HORIZON)
            L.append(BEYOND_HORIZON)
            saturated_at = i
            break
        b.append(2**exponent)
        L.append(L[-1] + b[-1])
        i += 1
    return BlockTable(b=b, L=L, saturated_at=saturated_at, horizon_cap=horizon_cap)


def family_boundaries(limit: int) -> list[int]:
    """Block starts A_1, A_2, ... <= limit of the scrambled 2-shift family."""
    out = []
    a = 0
    while True:
        a = 30 * (a + 1)
        if a > limit:
            return out
        out.append(a)


def scrambled_family_point(c: Sequence[int] | bytes | np.ndarray, horizon_cap: int) -> bytes:
    """Point of the 2-shift that is 0 on even blocks and copies ``c`` on odd ones.

    Blocks are ``[A_m, A_{m+1})`` with ``A_0 = 0`` and ``A_{m+1} = 30 (A_m + 1)``,
    so each block is 29 times longer than everything before it. Odd blocks
    are filled with ``c[0], c[1], ...`` from their first position.
    """
    total = horizon_cap + PREFIX_MARGIN
    bits = np.frombuffer(bytes(c), dtype=np.uint8) if isinstance(c, (bytes, bytearray)) else np.asarray(c, dtype=np.uint8)
    if bits.size and bits.max() > 1:
        raise ValueError("c must contain only symbols 0 and 1")
    out = np.zeros(total, dtype=np.uint8)
    starts = [0] + family_boundaries(total)
    starts.append(30 * (starts[-1] + 1))
    for m in range(1, len(starts) - 1, 2):
        lo, hi = starts[m], min(starts[m + 1], total)
        if lo >= total:
            break
        if bits.size < hi - lo:
            raise ValueError(f"c prefix has {bits.size} symbols, odd block [{lo}, {hi}) needs {hi - lo}")
        out[lo:hi] = bits[: hi - lo]
    return out.tobytes()


def family_point(seed: int, horizon_cap: int) -> bytes:
    """Scrambled-family point whose parameter ``c`` is drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    c = rng.integers(0, 2, size=horizon_cap + PREFIX_MARGIN, dtype=np.uint8)
    return scrambled_family_point(c, horizon_cap)


class Example1Point(NamedTuple):
    """The real number ``seed + offset`` with ``seed`` in (0, 1)."""

    seed: float
    offset: int

    @classmethod
    def from_real(cls, x: float) -> Example1Point:
        offset = math.floor(x)
        return cls(x - offset, offset)


class System:
    """Base class. Subclasses override what differs from the generic loop."""

    kind = "abstract"

    def __init__(self, spec: SystemSpec):
        self.spec = spec
        self.horizon_cap = spec.horizon_cap

    @property
    def name(self) -> str:
        return self.kind

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name} cap={self.horizon_cap}>"

    # -- to override -------------------------------------------------------
    def validate(self, p) -> None:
        raise NotImplementedError

    def _step(self, p):
        raise NotImplementedError

    def distance(self, p, q) -> float:
        raise NotImplementedError

    def sample_point(self, rng: np.random.Generator):
        raise NotImplementedError

    def parse_point(self, text: str):
        raise NotImplementedError

    def perturb(self, p, radius: float, rng: np.random.Generator):
        raise UnsupportedSystem(f"{self.name} does not support perturbation sampling")

    def orbit_cells(self, p, n: int, eps: float) -> tuple[np.ndarray, int]:
        raise UnsupportedSystem(f"{self.name} has no bounded cell partition")

    def block_boundaries(self, limit: int) -> list[int]:
        return []

    def resolution(self, x, y, n: int) -> float:
        """Smallest positive distance the pair can reach within ``n`` iterates.

        0.0 means no known floor.
        """
        return 0.0

    # -- shared ------------------------------------------------------------
    def step(self, p):
        self.validate(p)
        return self._step(p)

    def orbit(self, p, n: int) -> list:
        self._check_horizon(n)
        self.validate(p)
        out = [p]
        for _ in range(n - 1):
            p = self._step(p)
            out.append(p)
        return out

    def profile_values(self, x, y, n: int) -> np.ndarray:
        self._check_horizon(n)
        self.validate(x)
        self.validate(y)
        out = np.empty(n)
        for i in range(n):
            out[i] = self.distance(x, y)
            if i + 1 < n:
                x, y = self._step(x), self._step(y)
        return out

    def point_label(self, p) -> str:
        return repr(p)

    def _check_horizon(self, n: int) -> None:
        if n < 1:
            raise ValueError("horizon must be >= 1")
        if n > self.horizon_cap:
            raise HorizonExceeded(f"{self.name}: horizon {n} exceeds horizon_cap {self.horizon_cap}")


class IntervalSystem(System):
    """Maps of [0, 1] with the metric |x - y|."""

    def validate(self, p) -> None:
        if isinstance(p, bool) or not isinstance(p, (float, int, Fraction, np.floating)):
            raise DomainError(f"{self.name}: expected a real coordinate, got {type(p).__name__}")
        if not 0 <= p <= 1:
            raise DomainError(f"{self.name}: {p} outside [0, 1]")

    def distance(self, p, q) -> float:
        self.validate(p)
        self.validate(q)
        if isinstance(p, Fraction) and isinstance(q, Fraction):
            return float(abs(p - q))
        return abs(float(p) - float(q))

    def sample_point(self, rng):
        return float(rng.random())

    def parse_point(self, text: str):
        return float(text)

    def perturb(self, p, radius, rng):
        return float(np.clip(float(p) + rng.uniform(-1.0, 1.0) * radius, 0.0, 1.0))

    def profile_values(self, x, y, n):
        self._check_horizon(n)
        self.validate(x)
        self.validate(y)
        if isinstance(x, Fraction) or isinstance(y, Fraction):
            return super().profile_values(x, y, n)
        xs, ys = np.empty(n), np.empty(n)
        a, b = float(x), float(y)
        for i in range(n):
            xs[i], ys[i] = a, b
            a, b = self._step(a), self._step(b)
        return np.abs(xs - ys)

    def orbit_cells(self, p, n, eps):
        ncells = math.ceil(1.0 / eps)
        xs = np.array([float(v) for v in self.orbit(p, n)])
        return np.minimum((xs * ncells).astype(np.int64), ncells - 1), ncells


class Tent(IntervalSystem):
    kind = "tent"

    def _step(self, p):
        return 2 * p if p < Fraction(1, 2) else 2 - 2 * p

    def sample_point(self, rng):
        return Fraction(int(rng.integers(1, TENT_DENOM)), TENT_DENOM)

    def parse_point(self, text):
        return Fraction(round(float(text) * TENT_DENOM), TENT_DENOM)

    def perturb(self, p, radius, rng):
        if not isinstance(p, Fraction):
            return super().perturb(p, radius, rng)
        q = p.denominator
        shift = int(round(rng.uniform(-1.0, 1.0) * radius * q))
        return Fraction(min(max(p.numerator + shift, 0), q), q)

    @staticmethod
    def _numerators(k: int, q: int, n: int) -> list[int]:
        out = []
        for _ in range(n):
            out.append(k)
            k = 2 * k if 2 * k < q else 2 * (q - k)
        return out

    def _exact_orbit(self, p, n):
        return self._numerators(p.numerator, p.denominator, n), p.denominator

    def profile_values(self, x, y, n):
        if not (isinstance(x, Fraction) and isinstance(y, Fraction)):
            return super().profile_values(x, y, n)
        self._check_horizon(n)
        self.validate(x)
        self.validate(y)
        q = x.denominator * y.denominator // math.gcd(x.denominator, y.denominator)
        kx = self._numerators(x.numerator * (q // x.denominator), q, n)
        ky = self._numerators(y.numerator * (q // y.denominator), q, n)
        return np.array([abs(a - b) / q for a, b in zip(kx, ky)])

    def orbit_cells(self, p, n, eps):
        if not isinstance(p, Fraction):
            return super().orbit_cells(p, n, eps)
        self._check_horizon(n)
        self.validate(p)
        ncells = math.ceil(1.0 / eps)
        ks, q = self._exact_orbit(p, n)
        cells = np.array([k * ncells // q for k in ks], dtype=np.int64)
        return np.minimum(cells, ncells - 1), ncells

    def point_label(self, p):
        return str(p)


class Logistic4(IntervalSystem):
    kind = "logistic4"

    def _step(self, p):
        p = float(p)
        return 4.0 * p * (1.0 - p)


class Identity(IntervalSystem):
    kind = "identity"

    def _step(self, p):
        return p

    def profile_values(self, x, y, n):
        self._check_horizon(n)
        return np.full(n, self.distance(x, y))


class Rotation(System):
    """Rotation of the circle [0, 1) computed on the lattice k / 10^15."""

    kind = "rotation"

    def __init__(self, spec):
        super().__init__(spec)
        self.alpha = GOLDEN_ALPHA if spec.alpha is None else spec.alpha
        self._a = round(self.alpha * ROTATION_DENOM)

    def _k(self, p) -> int:
        return round(float(p) * ROTATION_DENOM) % ROTATION_DENOM

    def validate(self, p):
        if isinstance(p, bool) or not isinstance(p, (float, int, np.floating)):
            raise DomainError(f"rotation: expected a real coordinate, got {type(p).__name__}")
        if not 0 <= p < 1:
            raise DomainError(f"rotation: {p} outside [0, 1)")

    def _step(self, p):
        return ((self._k(p) + self._a) % ROTATION_DENOM) / ROTATION_DENOM

    def distance(self, p, q):
        self.validate(p)
        self.validate(q)
        dk = abs(self._k(p) - self._k(q))
        return min(dk, ROTATION_DENOM - dk) / ROTATION_DENOM

    def _orbit_k(self, p, n) -> np.ndarray:
        steps = np.arange(n, dtype=object) * self._a
        return ((steps + self._k(p)) % ROTATION_DENOM).astype(np.int64)

    def profile_values(self, x, y, n):
        self._check_horizon(n)
        self.validate(x)
        self.validate(y)
        dk = np.abs(self._orbit_k(x, n) - self._orbit_k(y, n))
        return np.minimum(dk, ROTATION_DENOM - dk) / ROTATION_DENOM

    def sample_point(self, rng):
        return int(rng.integers(0, ROTATION_DENOM)) / ROTATION_DENOM

    def parse_point(self, text):
        return self._k(float(text)) / ROTATION_DENOM

    def perturb(self, p, radius, rng):
        shift = int(round(rng.uniform(-1.0, 1.0) * radius * ROTATION_DENOM))
        return ((self._k(p) + shift) % ROTATION_DENOM) / ROTATION_DENOM

    def orbit_cells(self, p, n, eps):
        self._check_horizon(n)
        self.validate(p)
        ncells = math.ceil(1.0 / eps)
        cells = (self._orbit_k(p, n).astype(object) * ncells // ROTATION_DENOM).astype(np.int64)
        return cells, ncells


class Shift2(System):
    """One-sided full shift on {0,1}; points are byte strings of 0/1 symbols.

    Distances below 2^-1074 underflow to 0.0 in floating point.
    """

    kind = "shift2"

    def validate(self, p):
        if not isinstance(p, (bytes, bytearray)):
            raise DomainError(f"shift2: expected a bytes symbol prefix, got {type(p).__name__}")
        if len(p) < 1:
            raise DomainError("shift2: empty prefix")
        if p.strip(b"\x00\x01"):
            raise DomainError("shift2: symbols must be 0 or 1")

    def _step(self, p):
        if len(p) < 2:
            raise DomainError("shift2: prefix exhausted")
        return bytes(p[1:])

    def distance(self, p, q):
        self.validate(p)
        self.validate(q)
        m = min(len(p), len(q))
        diff = np.flatnonzero(np.frombuffer(p[:m], np.uint8) != np.frombuffer(q[:m], np.uint8))
        return float(np.ldexp(1.0, -int(diff[0]))) if diff.size else 0.0

    def profile_values(self, x, y, n):
        self._check_horizon(n)
        self.validate(x)
        self.validate(y)
        m = min(len(x), len(y))
        if m < n:
            raise DomainError(f"shift2: prefix length {m} shorter than horizon {n}")
        diff = np.flatnonzero(np.frombuffer(x[:m], np.uint8) != np.frombuffer(y[:m], np.uint8))
        i = np.arange(n)
        pos = np.searchsorted(diff, i)
        out = np.zeros(n)
        has = pos < diff.size
        out[has] = np.ldexp(1.0, -(diff[pos[has]] - i[has]))
        return out

    def block_boundaries(self, limit):
        return family_boundaries(limit)

    def sample_point(self, rng):
        return rng.integers(0, 2, size=self.horizon_cap + PREFIX_MARGIN, dtype=np.uint8).tobytes()

    def parse_point(self, text):
        """An integer parses as the family point seeded by it; a 0/1 string is taken literally."""
        text = text.strip()
        if text and set(text) <= {"0", "1"} and len(text) > 20:
            return bytes(int(ch) for ch in text)
        return family_point(int(text), self.horizon_cap)

    def perturb(self, p, radius, rng):
        j = max(0, math.ceil(-math.log2(radius))) + int(rng.integers(0, 4))
        if j >= len(p):
            raise DomainError("shift2: perturbation position beyond prefix")
        out = bytearray(p)
        out[j] ^= 1
        return bytes(out)

    def orbit_cells(self, p, n, eps):
        self._check_horizon(n)
        self.validate(p)
        k = max(1, math.ceil(-math.log2(eps)))
        if len(p) < n + k - 1:
            raise DomainError("shift2: prefix too short for the requested cells")
        sym = np.frombuffer(p, np.uint8).astype(np.int64)
        codes = np.zeros(n, dtype=np.int64)
        for j in range(k):
            codes = (codes << 1) | sym[j : j + n]
        return codes, 2**k

    def point_label(self, p):
        return f"shift2[{len(p)} symbols, head={bytes(p[:16]).hex()}]"


class Example1(System):
    """Translation x -> x + 1 on [0, inf) with the block metric of the example1 space.

    Points are ``Example1Point(seed, offset)`` so floors and block membership
    are exact integers. Distinct points at the same even integer part inside
    [L_{2k}, L_{2k+1}), k >= 1, are 2^-k apart; all other distinct pairs are
    at distance 1.
    """

    kind = "example1"

    def __init__(self, spec):
        super().__init__(spec)
        self.blocks = example1_blocks(spec.horizon_cap)
        self._L = np.array(self.blocks.exact_L, dtype=np.int64)

    def validate(self, p):
        if not isinstance(p, Example1Point):
            raise DomainError(f"example1: expected Example1Point, got {type(p).__name__}")
        if not 0 < p.seed < 1:
            raise DomainError(f"example1: seed {p.seed} outside (0, 1)")
        if p.offset < 0:
            raise DomainError(f"example1: negative offset {p.offset}")

    def _step(self, p):
        return Example1Point(p.seed, p.offset + 1)

    def distance(self, p, q):
        self.validate(p)
        self.validate(q)
        if p == q:
            return 0.0
        if p.offset != q.offset or p.offset % 2:
            return 1.0
        m = self.blocks.block_of(p.offset)
        return 2.0 ** -(m // 2) if m >= 2 and m % 2 == 0 else 1.0

    def profile_values(self, x, y, n):
        self._check_horizon(n)
        self.validate(x)
        self.validate(y)
        if x == y:
            return np.zeros(n)
        if x.offset != y.offset:
            return np.ones(n)
        last = x.offset + n - 1
        self.blocks.block_of(last)  # raises past the resolved table
        pos = x.offset + np.arange(n, dtype=np.int64)
        m = np.searchsorted(self._L, pos, side="right") - 1
        inside = (pos % 2 == 0) & (m % 2 == 0) & (m >= 2)
        return np.where(inside, np.ldexp(1.0, -(m // 2)), 1.0)

    def block_boundaries(self, limit):
        return [int(v) for v in self.blocks.exact_L[1:] if v <= limit]

    def resolution(self, x, y, n):
        if x == y or x.offset != y.offset:
            return 0.0
        lo, hi = x.offset, x.offset + n  # positions [lo, hi)
        L = self.blocks.exact_L
        finest = None
        for m in range(2, len(L), 2):
            start = max(L[m], lo)
            end = L[m + 1] if m + 1 < len(L) else self.horizon_cap + 1
            first_even = start + (start % 2)
            if first_even < min(end, hi):
                finest = m // 2
        return 1.0 if finest is None else 2.0**-finest

    def sample_point(self, rng):
        seed = 0.0
        while seed == 0.0:
            seed = float(rng.random())
        return Example1Point(seed, 0)

    def parse_point(self, text):
        p = Example1Point.from_real(float(text))
        self.validate(p)
        return p

    def point_label(self, p):
        return f"{p.seed!r}+{p.offset}"


class Iterate(System):
    """N-fold composition of a base system."""

    kind = "iterate"

    def __init__(self, spec, base: System, N: int):
        super().__init__(spec)
        self.base = base
        self.N = N
        self.horizon_cap = min(spec.horizon_cap, (base.horizon_cap - 1) // N + 1)

    @property
    def name(self):
        return f"iterate({self.base.name},{self.N})"

    def _base_len(self, n):
        return self.N * (n - 1) + 1

    def validate(self, p):
        self.base.validate(p)

    def _step(self, p):
        for _ in range(self.N):
            p = self.base._step(p)
        return p

    def distance(self, p, q):
        return self.base.distance(p, q)

    def profile_values(self, x, y, n):
        self._check_horizon(n)
        return self.base.profile_values(x, y, self._base_len(n))[:: self.N]

    def block_boundaries(self, limit):
        mapped = {-(-b // self.N) for b in self.base.block_boundaries(self.N * limit)}
        return sorted(v for v in mapped if 0 < v <= limit)

    def resolution(self, x, y, n):
        return self.base.resolution(x, y, self._base_len(n))

    def sample_point(self, rng):
        return self.base.sample_point(rng)

    def parse_point(self, text):
        return self.base.parse_point(text)

    def perturb(self, p, radius, rng):
        return self.base.perturb(p, radius, rng)

    def orbit_cells(self, p, n, eps):
        self._check_horizon(n)
        cells, total = self.base.orbit_cells(p, self._base_len(n), eps)
        return cells[:: self.N], total

    def point_label(self, p):
        return self.base.point_label(p)


_SIMPLE = {
    "tent": Tent,
    "logistic4": Logistic4,
    "rotation": Rotation,
    "shift2": Shift2,
    "example1": Example1,
    "identity": Identity,
}


def make_system(spec: SystemSpec | dict) -> System:
    if isinstance(spec, dict):
        spec = SystemSpec.from_dict(spec)
    if spec.kind not in KINDS:
        raise ConfigError("kind", f"unknown system kind {spec.kind!r}; expected one of {', '.join(KINDS)}")
    if isinstance(spec.horizon_cap, bool) or not isinstance(spec.horizon_cap, int) or spec.horizon_cap < 1:
        raise ConfigError("horizon_cap", f"must be a positive integer, got {spec.horizon_cap!r}")
    if spec.kind == "rotation" and spec.alpha is not None and not 0 < spec.alpha < 1:
        raise ConfigError("alpha", f"must lie in (0, 1), got {spec.alpha!r}")
    if spec.kind == "iterate":
        if isinstance(spec.N, bool) or not isinstance(spec.N, int) or spec.N < 1:
            raise ConfigError("N", f"must be a positive integer, got {spec.N!r}")
        if spec.base is None:
            raise ConfigError("base", "iterate needs a base system")
        return Iterate(spec, make_system(spec.base), spec.N)
    return _SIMPLE[spec.kind](spec)


def iterate(base: System, N: int) -> System:
    """Shorthand for ``make_system`` of an iterate spec over an existing system."""
    if isinstance(N, bool) or not isinstance(N, int) or N < 1:
        raise ConfigError("N", f"must be a positive integer, got {N!r}")
    spec = SystemSpec("iterate", horizon_cap=base.horizon_cap, base=base.spec, N=N)
    return Iterate(spec, base, N)
