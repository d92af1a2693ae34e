"""Truncated character group over the forest algebra.

A rough-path increment is stored as a :class:`GroupElement`: real values on
the populated multi-indices of degree ≤ N, extended to forests by
multiplicativity (forest values are computed on demand, never stored).  The
group law is Chen composition, realised by embedding both factors as formal
sums Σ X(u)/S(u)·u over the forest basis, multiplying with the exact
Grossman–Larson structure constants, and contracting against the pairing.
Only that final contraction is floating point; the structure constants stay
rational and are cached across calls.

:class:`LieElement` holds the logarithm: a primitive element, nonzero only on
single multi-indices.  ``exp_element``/``log_element`` are truncated power
series in the same product; :class:`RoughPathGrid` strings increments along a
time grid with composition on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .algebra import (
    EMPTY_FOREST,
    Forest,
    Grading,
    MultiIndex,
    _star_basis,
    enumerate_populated,
    forest_basis,
)

__all__ = [
    "GroupElement",
    "LieElement",
    "RoughPathGrid",
    "GradingMismatchError",
    "InvalidKeyError",
    "PrimitivityError",
    "char_eval",
    "chen_compose",
    "exp_element",
    "log_element",
    "identity_character",
    "random_character",
    "rp_norm",
]


class GradingMismatchError(ValueError):
    """Operands carry different truncation levels or Hölder indices."""


class InvalidKeyError(ValueError):
    """A value was requested or supplied outside the populated truncated basis."""


class PrimitivityError(ValueError):
    """log_element produced non-negligible mass on a forest of cardinality ≥ 2,
    meaning the input was not a character of the group."""


def _check_keys(values: Mapping[MultiIndex, float], d: int, grading: Grading) -> None:
    for key in values:
        if not key.is_populated():
            raise InvalidKeyError(f"key {key!r} is not populated")
        if key.degree() > grading.max_norm:
            raise InvalidKeyError(
                f"key {key!r} has degree {key.degree()} above truncation "
                f"{grading.max_norm}"
            )
        if any(i > d for (i, _), _ in key.entries):
            raise InvalidKeyError(f"key {key!r} uses a letter above d={d}")


@dataclass(frozen=True)
class GroupElement:
    """A character of the truncated group: values on populated multi-indices.

    The value on the empty forest is implicitly 1; forest values follow by
    multiplicativity via :func:`char_eval`.  Missing keys read as 0.
    """

    d: int
    grading: Grading
    values: dict[MultiIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        _check_keys(self.values, self.d, self.grading)

    def value(self, key: MultiIndex) -> float:
        if not key.is_populated() or key.degree() > self.grading.max_norm:
            raise InvalidKeyError(
                f"{key!r} outside the populated basis of degree ≤ {self.grading.max_norm}"
            )
        return self.values.get(key, 0.0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupElement):
            return NotImplemented
        if (self.d, self.grading) != (other.d, other.grading):
            return False
        keys = set(self.values) | set(other.values)
        return all(
            self.values.get(k, 0.0) == other.values.get(k, 0.0) for k in keys
        )


@dataclass(frozen=True)
class LieElement:
    """A primitive element: log-coordinates on populated multi-indices.

    Its formal-sum image carries single-component forests only, so
    evaluation against any forest of cardinality ≥ 2 is zero by definition.
    """

    d: int
    grading: Grading
    values: dict[MultiIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        _check_keys(self.values, self.d, self.grading)

    def value(self, key: MultiIndex) -> float:
        if not key.is_populated() or key.degree() > self.grading.max_norm:
            raise InvalidKeyError(
                f"{key!r} outside the populated basis of degree ≤ {self.grading.max_norm}"
            )
        return self.values.get(key, 0.0)


def identity_character(d: int, grading: Grading) -> GroupElement:
    return GroupElement(d=d, grading=grading, values={})


def char_eval(x: GroupElement, f: Forest | MultiIndex) -> float:
    """Evaluate a character on a forest by multiplicativity (1 on ∅)."""
    if isinstance(f, MultiIndex):
        return x.value(f)
    if f.degree() > x.grading.max_norm:
        raise InvalidKeyError(
            f"forest degree {f.degree()} above truncation {x.grading.max_norm}"
        )
    out = 1.0
    for c in f.components:
        out *= x.value(c)
    return out


# ---------------------------------------------------------------------------
# Embedding and numeric product over the forest basis
# ---------------------------------------------------------------------------


def _embed(x: GroupElement) -> dict[Forest, float]:
    """Σ X(u)/S(u) · u over the forest basis of degree ≤ N."""
    out: dict[Forest, float] = {EMPTY_FOREST: 1.0}
    for u in forest_basis(x.d, x.grading.max_norm):
        if u.is_empty:
            continue
        val = 1.0
        for c in u.components:
            val *= x.values.get(c, 0.0)
            if val == 0.0:
                break
        if val != 0.0:
            out[u] = val / u.symmetry_factor()
    return out


def _embed_lie(x: LieElement) -> dict[Forest, float]:
    """Primitive embedding: single-component forests only, no unit term."""
    out: dict[Forest, float] = {}
    for key, v in x.values.items():
        if v != 0.0:
            out[Forest([key])] = v / key.symmetry_factor()
    return out


def _numeric_star(
    a: dict[Forest, float], b: dict[Forest, float], trunc: int
) -> dict[Forest, float]:
    out: dict[Forest, float] = {}
    for fu, cu in a.items():
        if cu == 0.0:
            continue
        du = fu.degree()
        for fv, cv in b.items():
            if cv == 0.0 or du + fv.degree() > trunc:
                continue
            w = cu * cv
            for g, c in _star_basis(fu, fv).items():
                out[g] = out.get(g, 0.0) + w * float(c)
    return out


def _read_character(coeffs: dict[Forest, float], d: int, grading: Grading) -> dict[MultiIndex, float]:
    values: dict[MultiIndex, float] = {}
    for f, c in coeffs.items():
        if f.cardinality() == 1 and c != 0.0:
            mi = f.components[0]
            values[mi] = c * mi.symmetry_factor()
    return values


def chen_compose(a: GroupElement, b: GroupElement) -> GroupElement:
    """Group law on increments: (s,u) followed by (u,t).

    Both factors must share grading and dimension.  The composition is read
    off the product of the embedded formal sums, truncated at N termwise.
    """
    if (a.d, a.grading) != (b.d, b.grading):
        raise GradingMismatchError(
            f"cannot compose d={a.d},{a.grading} with d={b.d},{b.grading}"
        )
    prod = _numeric_star(_embed(a), _embed(b), a.grading.max_norm)
    return GroupElement(d=a.d, grading=a.grading, values=_read_character(prod, a.d, a.grading))


def exp_element(x: LieElement) -> GroupElement:
    """Truncated exponential Σ_{n≤N} x^⋆ⁿ/n! of a primitive element."""
    n_max = x.grading.max_norm
    base = _embed_lie(x)
    acc: dict[Forest, float] = {EMPTY_FOREST: 1.0}
    power: dict[Forest, float] = {EMPTY_FOREST: 1.0}
    fact = 1.0
    for n in range(1, n_max + 1):
        power = _numeric_star(power, base, n_max)
        fact *= n
        for f, c in power.items():
            acc[f] = acc.get(f, 0.0) + c / fact
    return GroupElement(d=x.d, grading=x.grading, values=_read_character(acc, x.d, x.grading))


def log_element(x: GroupElement, defect_tolerance: float = 1e-9) -> LieElement:
    """Truncated logarithm Σ_{n≤N} (−1)^{n+1}(x−∅)^⋆ⁿ/n of a character.

    The result must be primitive: any coefficient mass left on a forest of
    cardinality ≥ 2 beyond ``defect_tolerance`` (relative to the largest
    stored value) raises :class:`PrimitivityError` rather than being dropped
    silently.
    """
    n_max = x.grading.max_norm
    y = _embed(x)
    y.pop(EMPTY_FOREST, None)
    acc: dict[Forest, float] = {}
    power = dict(y)
    for n in range(1, n_max + 1):
        sign = 1.0 if n % 2 == 1 else -1.0
        for f, c in power.items():
            acc[f] = acc.get(f, 0.0) + sign * c / n
        if n < n_max:
            power = _numeric_star(power, y, n_max)
    scale = max(1.0, max((abs(c) for c in acc.values()), default=0.0))
    values: dict[MultiIndex, float] = {}
    for f, c in acc.items():
        if f.cardinality() == 1:
            mi = f.components[0]
            v = c * mi.symmetry_factor()
            if v != 0.0:
                values[mi] = v
        elif abs(c) > defect_tolerance * scale:
            raise PrimitivityError(
                f"logarithm left coefficient {c:.3e} on {f!r}; input is not a character"
            )
    return LieElement(d=x.d, grading=x.grading, values=values)


def random_character(d: int, grading: Grading, rng: np.random.Generator) -> GroupElement:
    """Uniform(−1,1) values on every populated multi-index of degree ≤ N."""
    values = {
        mi: float(rng.uniform(-1.0, 1.0))
        for mi in enumerate_populated(d, grading.max_norm)
    }
    return GroupElement(d=d, grading=grading, values=values)


# ---------------------------------------------------------------------------
# Grids of increments
# ---------------------------------------------------------------------------


class OffGridTimeError(ValueError):
    """A query time is not a grid point (no interpolation is defined)."""


@dataclass(frozen=True)
class RoughPathGrid:
    """Consecutive increments X_{t_j,t_{j+1}} over a strictly increasing grid.

    Increments over non-adjacent grid pairs are produced by Chen composition
    on demand; off-grid times are rejected, never interpolated.
    """

    d: int
    grading: Grading
    times: tuple[float, ...]
    increments: tuple[GroupElement, ...]

    def __post_init__(self):
        if len(self.times) < 2:
            raise ValueError("a grid needs at least two time points")
        if len(self.increments) != len(self.times) - 1:
            raise ValueError(
                f"{len(self.times)} times require {len(self.times) - 1} increments, "
                f"got {len(self.increments)}"
            )
        for a, b in zip(self.times, self.times[1:]):
            if not b > a:
                raise ValueError(f"times not strictly increasing at {a} .. {b}")
        for inc in self.increments:
            if (inc.d, inc.grading) != (self.d, self.grading):
                raise GradingMismatchError("increment grading differs from grid grading")

    def index_of(self, t: float) -> int:
        for j, tj in enumerate(self.times):
            if tj == t or math.isclose(tj, t, rel_tol=1e-12, abs_tol=1e-14):
                return j
        raise OffGridTimeError(f"time {t} is not a grid point")

    def increment_by_index(self, i: int, j: int) -> GroupElement:
        """X_{t_i,t_j} by left-to-right composition of stored increments."""
        if not 0 <= i <= j < len(self.times):
            raise ValueError(f"index pair ({i},{j}) out of range")
        out = identity_character(self.d, self.grading)
        for m in range(i, j):
            out = chen_compose(out, self.increments[m])
        return out

    def increment_between(self, s: float, t: float) -> GroupElement:
        return self.increment_by_index(self.index_of(s), self.index_of(t))


def rp_norm(path: RoughPathGrid) -> float:
    """Grid Hölder norm: max over basis forests u of
    sup_{s<t} (|X_{s,t}(u)| / (t−s)^{|u|_γ})^{1/deg u}."""
    basis = [f for f in forest_basis(path.d, path.grading.max_norm) if not f.is_empty]
    gamma = path.grading.gamma
    exponents = [(u, float(u.gamma_degree(gamma)), 1.0 / u.degree()) for u in basis]
    best = 0.0
    n = len(path.times)
    for i in range(n - 1):
        running = identity_character(path.d, path.grading)
        for j in range(i + 1, n):
            running = chen_compose(running, path.increments[j - 1])
            dt = path.times[j] - path.times[i]
            for u, gdeg, inv_deg in exponents:
                v = abs(char_eval(running, u))
                if v == 0.0:
                    continue
                best = max(best, (v / dt**gdeg) ** inv_deg)
    return best
