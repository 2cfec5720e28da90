"""Built-in parametric families, conjugated into the unit ball.

Every family is defined on the real line in its natural coordinates. A
:class:`Frame` records the affine change of coordinates that sends the
family's invariant hull ``[lo, hi]`` onto ``[-1, 1]``, so that lengths and
measures computed on the normalized system can be reported in natural units.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .ifs import AffineMap, System

FULL_MEASURE = "FULL_MEASURE"
DIMENSION_DEFICIT = "DIMENSION_DEFICIT"


@dataclass(frozen=True)
class Frame:
    """Affine 1-D change of coordinates ``[lo, hi] -> [-1, 1]``."""

    lo: float
    hi: float
    lattice: tuple | None = None  # natural interval whose b-adic subdivision aligns with the maps

    def __post_init__(self):
        if not self.hi > self.lo:
            raise DomainError("frame needs hi > lo")

    @property
    def scale(self):
        return 2.0 / (self.hi - self.lo)

    def to_normalized(self, x):
        return self.scale * (np.asarray(x, dtype=float) - self.lo) - 1.0

    def to_natural(self, y):
        return (np.asarray(y, dtype=float) + 1.0) / self.scale + self.lo

    def length(self, normalized_length):
        return normalized_length / self.scale

    def volume(self, normalized_volume, dim=1):
        return normalized_volume / self.scale**dim

    def conjugate(self, a, c):
        """Normalized form ``y -> a*y + b`` of the natural map ``x -> a*x + c``."""
        return a, a - 1.0 + self.scale * ((a - 1.0) * self.lo + c)

    def to_dict(self):
        return {"lo": self.lo, "hi": self.hi, "lattice": self.lattice}


def affine_family(pairs, frame):
    """System of the natural 1-D maps ``x -> a*x + c`` for ``(a, c)`` in ``pairs``."""
    maps = []
    for a, c in pairs:
        sa, sb = frame.conjugate(a, c)
        maps.append(AffineMap([[sa]], [sb]))
    return System(tuple(maps), frame=frame)


def make_three_branch(t):
    """F_t: x/3, (x+t)/3, (x+1)/3 for t in [0, 1/2]; hull [0, 1/2]."""
    t = float(t)
    if not 0.0 <= t <= 0.5:
        raise DomainError(f"three_branch needs t in [0, 1/2], got {t}")
    return affine_family([(1 / 3, 0.0), (1 / 3, t / 3), (1 / 3, 1 / 3)], Frame(0.0, 0.5))


def make_cantor():
    """Middle-thirds Cantor system x/3, (x+2)/3 on [0, 1]."""
    return affine_family([(1 / 3, 0.0), (1 / 3, 2 / 3)], Frame(0.0, 1.0))


def make_g_lambda(lam):
    """G_lambda: lam*x, lam*(x+1), lam*(x+3); hull [0, 3*lam/(1-lam)]."""
    lam = float(lam)
    if not 0.0 < lam <= 0.25:
        raise DomainError(
            f"g_lambda is supported for lambda in (0, 1/4], got {lam}; "
            "above 1/4 the images of the natural unit interval leave it"
        )
    return affine_family([(lam, 0.0), (lam, lam), (lam, 3 * lam)], Frame(0.0, 3 * lam / (1 - lam), (0.0, 1.0)))


def make_tiling():
    """x/2 and (x+1)/2 on [0, 1]: two halves tiling the interval."""
    return affine_family([(0.5, 0.0), (0.5, 0.5)], Frame(0.0, 1.0))


def make_custom(spec):
    """System from a JSON-style dict, either natural 1-D pairs or a raw system spec."""
    if "maps" in spec:
        return System.from_dict(spec)
    frame = Frame(*spec.get("frame", (0.0, 1.0)))
    return affine_family([tuple(p) for p in spec["pairs"]], frame)


@dataclass(frozen=True)
class Classification:
    label: str
    p: int
    q: int
    measure: float | None = None

    def __str__(self):
        if self.label == FULL_MEASURE:
            return f"{FULL_MEASURE}(1/{self.q})"
        return DIMENSION_DEFICIT


def classify_rational(p, q):
    """Case label for rational t = p/q, decided on the reduced fraction."""
    if q <= 0:
        raise DomainError("q must be positive")
    t = Fraction(int(p), int(q))
    if not 0 <= t <= Fraction(1, 2):
        raise DomainError("p/q must lie in [0, 1/2]")
    p, q = t.numerator, t.denominator
    if (p * q) % 3 == 2:
        return Classification(FULL_MEASURE, p, q, 1.0 / q)
    return Classification(DIMENSION_DEFICIT, p, q)


_BUILDERS = {
    "three_branch": ("t", make_three_branch),
    "g_lambda": ("lambda", make_g_lambda),
}


@dataclass(frozen=True)
class FamilySpec:
    """A named family with parameter values; ``build`` returns the normalized System."""

    name: str
    params: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if self.name not in ("three_branch", "g_lambda", "cantor", "tiling", "custom"):
            raise DomainError(f"unknown family {self.name!r}")

    @property
    def parameter(self):
        return _BUILDERS[self.name][0] if self.name in _BUILDERS else None

    def build(self, value=None):
        if self.name in _BUILDERS:
            key, fn = _BUILDERS[self.name]
            return fn(self.params[key] if value is None else value)
        if self.name == "cantor":
            return make_cantor()
        if self.name == "tiling":
            return make_tiling()
        return make_custom(self.params)

    def with_value(self, value):
        return FamilySpec(self.name, {**self.params, self.parameter: value})

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        name = d.pop("family")
        return cls(name, d)

    def to_dict(self):
        return {"family": self.name, **self.params}


def parallel_map(fn, items, workers=1):
    """``[fn(x) for x in items]`` in input order, on a thread pool when ``workers > 1``."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def sweep_values(t_star, radius, steps, lo=-math.inf, hi=math.inf):
    """Symmetric parameter grid around ``t_star``, clipped to ``[lo, hi]`` and deduplicated."""
    if steps < 1:
        raise DomainError("steps must be >= 1")
    if radius == 0 or steps == 1:
        return np.array([t_star])
    ts = np.linspace(t_star - radius, t_star + radius, steps)
    ts = np.clip(ts, lo, hi)
    return np.unique(np.round(ts, 15))


@dataclass
class DimensionSweep:
    rows: list
    baseline: float
    threshold: float
    passed: bool

    def to_csv(self):
        lines = [
            "# columns: t (parameter), lower (dimensionless), upper (dimensionless), capacity (dimensionless)",
            "t,lower,upper,capacity",
        ]
        for r in self.rows:
            lines.append(f"{r['t']!r},{r['lower']!r},{r['upper']!r},{r['capacity']!r}")
        lines.append(f"# baseline={self.baseline!r} threshold={self.threshold!r} pass={self.passed}")
        return "\n".join(lines) + "\n"


def dimension_semicontinuity_probe(family, t_star, radius, steps, n, levels=None, level=12,
                                   slack=1.0, tolerance=0.05, baseline=None, workers=1):
    """Lower bound of the dimension bracket along a parameter sweep.

    Passes when no probed parameter has a lower bound below the bound at
    ``t_star`` minus ``tolerance``. ``baseline`` overrides the reference value
    (for instance an exact Moran dimension at ``t_star``). Rows do not depend
    on ``workers``.
    """
    from .dimension import hdim_bracket, limit_capacity

    bounds = {"three_branch": (0.0, 0.5), "g_lambda": (1e-9, 0.25)}.get(family.name, (-math.inf, math.inf))
    ts = sweep_values(t_star, radius, steps, *bounds) if family.parameter else np.array([t_star])

    def one(t):
        F = family.build(t) if family.parameter else family.build()
        br = hdim_bracket(F, n, slack=slack)
        cap = math.nan
        if levels is not None:
            from .ifs import attractor, min_feasible_tol

            A = attractor(F, 2 * min_feasible_tol(F, level), level)
            cap = limit_capacity(A, levels, frame=F.frame).slope
        return {"t": float(t), "lower": br.lower, "upper": br.upper, "capacity": cap}

    rows = parallel_map(one, ts, workers)
    ref = one(t_star)["lower"] if baseline is None else baseline
    threshold = ref - tolerance
    passed = min(r["lower"] for r in rows) >= threshold
    return DimensionSweep(rows, ref, threshold, passed)
