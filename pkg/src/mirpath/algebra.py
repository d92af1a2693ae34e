"""Exact combinatorial kernel: multi-indices, forests, and their products.

A *multi-index* is a sparse monomial in abstract variables ``z(i,k)`` where
the letter ``i`` tags a driving signal (``0`` is reserved for time) and the
arity ``k`` counts how many derivatives of the corresponding vector field the
variable stands for.  A *forest* is an unordered multiset of multi-indices.
Everything in this module is exact: coefficients are :class:`fractions.Fraction`,
identities hold as rational equalities, and no floating point ever enters.

The products implemented here are the raising derivation ``D``, the pre-Lie
graft ``a ▷ b = a · D b``, the simultaneous graft (many components raised at
once), the deshuffle coproduct, and the associative Grossman–Larson product
built from the last two.  Truncation by total degree is optional and applied
termwise, never during expansion.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Callable, Iterable, Iterator

__all__ = [
    "MultiIndex",
    "Forest",
    "FormalSum",
    "Grading",
    "mi_product",
    "degree",
    "gamma_degree",
    "is_populated",
    "symmetry_factor",
    "pairing",
    "derivation_d",
    "prelie_graft",
    "graft_simultaneous",
    "deshuffle",
    "gl_product",
    "enumerate_populated",
    "forest_basis",
    "EMPTY_FOREST",
]


class AlphabetMismatchError(ValueError):
    """Two multi-indices over different alphabets were combined."""


Entry = tuple[tuple[int, int], int]


class MultiIndex:
    """Sparse monomial ``Π z(i,k)^m`` with positive frequencies only.

    ``letters`` is the alphabet size ``d+1`` (letters run over ``0..d``).
    Equality and hashing look at the entry map alone, so the same monomial
    over two alphabet sizes compares equal; combining them raises.  Arities
    are unbounded — the sparse map needs no ceiling, raising an arity simply
    creates a new key.
    """

    __slots__ = ("entries", "letters", "_hash")

    def __init__(self, entries: Iterable[Entry] | dict[tuple[int, int], int], letters: int):
        if isinstance(entries, dict):
            items = entries.items()
        else:
            items = list(entries)
        cleaned = []
        for (i, k), m in items:
            if m == 0:
                continue
            if m < 0:
                raise ValueError(f"negative frequency {m} for z({i},{k})")
            if i < 0 or k < 0:
                raise ValueError(f"negative letter or arity in z({i},{k})")
            if i >= letters:
                raise ValueError(f"letter {i} outside alphabet of size {letters}")
            cleaned.append(((i, k), m))
        cleaned.sort()
        self.entries: tuple[Entry, ...] = tuple(cleaned)
        self.letters = letters
        self._hash = hash((letters, self.entries))

    # -- identity -----------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, MultiIndex)
            and self.letters == other.letters
            and self.entries == other.entries
        )

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "MultiIndex") -> bool:
        # Canonical total order: lexicographic on the sorted entry triples.
        return self.entries < other.entries

    def __le__(self, other: "MultiIndex") -> bool:
        return self.entries <= other.entries

    def __repr__(self) -> str:
        from .grammar import format_multi_index

        return f"MultiIndex({format_multi_index(self)!r}, d={self.letters - 1})"

    # -- structure ----------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return not self.entries

    def frequency(self, i: int, k: int) -> int:
        for (a, b), m in self.entries:
            if (a, b) == (i, k):
                return m
        return 0

    def degree(self) -> int:
        return sum(m for _, m in self.entries)

    def arity_weight(self) -> int:
        """Σ k·β(i,k) — the total arity carried by the monomial."""
        return sum(k * m for (_, k), m in self.entries)

    def population_count(self) -> int:
        """|β| − Σ k·β(i,k); populated means this equals 1."""
        return self.degree() - self.arity_weight()

    def is_populated(self) -> bool:
        return self.population_count() == 1

    def letter_count(self, letter: int) -> int:
        """Number of variables (with multiplicity) carrying ``letter``."""
        return sum(m for (i, _), m in self.entries if i == letter)

    def gamma_degree(self, gamma: Fraction) -> Fraction:
        total = Fraction(0)
        inv = 1 / Fraction(gamma)
        for (i, _), m in self.entries:
            total += m * inv if i == 0 else Fraction(m)
        return total

    def symmetry_factor(self) -> int:
        s = 1
        for (_, k), m in self.entries:
            s *= _factorial(k) ** m
        return s

    # -- arithmetic on the monomial ----------------------------------------

    def mul(self, other: "MultiIndex") -> "MultiIndex":
        if self.letters != other.letters:
            raise AlphabetMismatchError(
                f"alphabet sizes differ: {self.letters} vs {other.letters}"
            )
        merged = dict(self.entries)
        for key, m in other.entries:
            merged[key] = merged.get(key, 0) + m
        return MultiIndex(merged, self.letters)

    def with_bumped(self, i: int, k: int) -> "MultiIndex":
        """Replace one copy of z(i,k) by z(i,k+1)."""
        merged = dict(self.entries)
        merged[(i, k)] -= 1
        if merged[(i, k)] == 0:
            del merged[(i, k)]
        merged[(i, k + 1)] = merged.get((i, k + 1), 0) + 1
        return MultiIndex(merged, self.letters)

    def without(self, i: int, k: int, count: int = 1) -> "MultiIndex":
        """Remove ``count`` copies of z(i,k); raises if not present."""
        merged = dict(self.entries)
        have = merged.get((i, k), 0)
        if have < count:
            raise ValueError(f"cannot remove z({i},{k})^{count}: only {have} present")
        if have == count:
            del merged[(i, k)]
        else:
            merged[(i, k)] = have - count
        return MultiIndex(merged, self.letters)

    def minus(self, other: "MultiIndex") -> "MultiIndex":
        """Multiset difference; raises if ``other`` is not contained in self."""
        out = self
        for (i, k), m in other.entries:
            out = out.without(i, k, m)
        return out

    def contains(self, other: "MultiIndex") -> bool:
        return all(self.frequency(i, k) >= m for (i, k), m in other.entries)

    def sub_multi_indices(self) -> Iterator["MultiIndex"]:
        """All divisors of the monomial (including the empty one and itself)."""
        keys = [key for key, _ in self.entries]
        ranges = [range(m + 1) for _, m in self.entries]
        for choice in itertools.product(*ranges):
            yield MultiIndex(
                [(key, c) for key, c in zip(keys, choice) if c > 0], self.letters
            )


@lru_cache(maxsize=None)
def _factorial(n: int) -> int:
    out = 1
    for j in range(2, n + 1):
        out *= j
    return out


def empty_multi_index(d: int) -> MultiIndex:
    """The unit of the multi-index product (not populated)."""
    return MultiIndex((), d + 1)


def single(i: int, k: int, d: int, m: int = 1) -> MultiIndex:
    """The monomial z(i,k)^m over letters 0..d."""
    return MultiIndex([((i, k), m)], d + 1)


class Forest:
    """Unordered multiset of multi-indices, stored sorted (canonical form).

    The empty forest is the unit of the forest product and of the
    Grossman–Larson product.
    """

    __slots__ = ("components", "_hash")

    def __init__(self, components: Iterable[MultiIndex] = ()):
        comps = [c for c in components]
        for c in comps:
            if c.is_empty:
                raise ValueError("a forest component must be a nonempty multi-index")
        comps.sort(key=lambda c: c.entries)
        self.components: tuple[MultiIndex, ...] = tuple(comps)
        self._hash = hash(self.components)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Forest) and self.components == other.components
        )

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Forest") -> bool:
        return tuple(c.entries for c in self.components) < tuple(
            c.entries for c in other.components
        )

    def __repr__(self) -> str:
        from .grammar import format_forest

        return f"Forest({format_forest(self)!r})"

    @property
    def is_empty(self) -> bool:
        return not self.components

    def cardinality(self) -> int:
        return len(self.components)

    def degree(self) -> int:
        return sum(c.degree() for c in self.components)

    def gamma_degree(self, gamma: Fraction) -> Fraction:
        return sum((c.gamma_degree(gamma) for c in self.components), Fraction(0))

    def symmetry_factor(self) -> int:
        s = 1
        for mi, r in self.multiplicities():
            s *= _factorial(r) * mi.symmetry_factor() ** r
        return s

    def multiplicities(self) -> list[tuple[MultiIndex, int]]:
        """Distinct components with their repetition counts."""
        out: list[tuple[MultiIndex, int]] = []
        for c in self.components:
            if out and out[-1][0] == c:
                out[-1] = (c, out[-1][1] + 1)
            else:
                out.append((c, 1))
        return out

    def merge(self, other: "Forest") -> "Forest":
        """Forest product: disjoint union of the multisets."""
        return Forest(self.components + other.components)

    def all_populated(self) -> bool:
        return all(c.is_populated() for c in self.components)


EMPTY_FOREST = Forest()


def forest_of(*components: MultiIndex) -> Forest:
    return Forest(components)


class FormalSum:
    """Finite linear combination of hashable basis elements over ℚ.

    Zero coefficients are dropped eagerly, addition and scalar multiplication
    are exact, and the term map is never mutated after construction.  The basis
    may hold :class:`MultiIndex`, :class:`Forest`, or tuples of those (for
    tensor-square targets).
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        clean = {}
        if terms:
            for b, c in terms.items():
                c = Fraction(c)
                if c != 0:
                    clean[b] = c
        self.terms: dict = clean

    @classmethod
    def zero(cls) -> "FormalSum":
        return cls()

    @classmethod
    def of(cls, basis_element, coefficient=1) -> "FormalSum":
        return cls({basis_element: Fraction(coefficient)})

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FormalSum) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "FormalSum") -> "FormalSum":
        out = dict(self.terms)
        for b, c in other.terms.items():
            out[b] = out.get(b, Fraction(0)) + c
        return FormalSum(out)

    def __sub__(self, other: "FormalSum") -> "FormalSum":
        return self + other.scale(-1)

    def scale(self, scalar) -> "FormalSum":
        s = Fraction(scalar)
        if s == 0:
            return FormalSum()
        return FormalSum({b: c * s for b, c in self.terms.items()})

    def __neg__(self) -> "FormalSum":
        return self.scale(-1)

    def coefficient(self, basis_element) -> Fraction:
        return self.terms.get(basis_element, Fraction(0))

    def items(self):
        return self.terms.items()

    def map_terms(self, fn: Callable) -> "FormalSum":
        """Apply ``fn: basis -> FormalSum`` linearly."""
        out = FormalSum()
        for b, c in self.terms.items():
            out = out + fn(b).scale(c)
        return out

    def filter_terms(self, keep: Callable) -> "FormalSum":
        return FormalSum({b: c for b, c in self.terms.items() if keep(b)})

    def __repr__(self) -> str:
        from .grammar import format_formal_sum

        return f"FormalSum({format_formal_sum(self)!r})"


@dataclass(frozen=True)
class Grading:
    """Degree truncation ``max_norm`` together with an exact Hölder index.

    ``n_gamma`` (= ⌊1/γ⌋) is always recomputed from γ so the two can never
    drift apart.  γ being rational makes every degree-filter comparison exact,
    in particular at the boundary |z^β|_γ = n_gamma.
    """

    max_norm: int
    gamma: Fraction

    def __post_init__(self):
        g = Fraction(self.gamma)
        object.__setattr__(self, "gamma", g)
        if not (0 < g < 1):
            raise ValueError(f"gamma must lie in (0,1), got {g}")
        if self.max_norm < 1:
            raise ValueError(f"max_norm must be >= 1, got {self.max_norm}")

    @property
    def n_gamma(self) -> int:
        return int(1 / self.gamma)  # floor of the exact reciprocal


# ---------------------------------------------------------------------------
# Free-standing operations (the module's public algebra surface)
# ---------------------------------------------------------------------------


def mi_product(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    """Entrywise sum of frequency maps (commutative, degree-additive)."""
    return a.mul(b)


def degree(u: Forest | MultiIndex) -> int:
    return u.degree()


def gamma_degree(u: Forest | MultiIndex, grading: Grading) -> Fraction:
    return u.gamma_degree(grading.gamma)


def is_populated(a: MultiIndex) -> bool:
    return a.is_populated()


def symmetry_factor(u: Forest | MultiIndex) -> int:
    return u.symmetry_factor()


def pairing(u: FormalSum, v: FormalSum) -> Fraction:
    """⟨·,·⟩ with basis forests orthogonal and ⟨F,F⟩ = S(F)."""
    total = Fraction(0)
    small, large = (u, v) if len(u.terms) <= len(v.terms) else (v, u)
    for b, c in small.terms.items():
        other = large.terms.get(b)
        if other is not None:
            total += c * other * _sym(b)
    return total


def _sym(b) -> int:
    return b.symmetry_factor()


def _derive_mi(a: MultiIndex) -> FormalSum:
    """D on a single multi-index: raise each variable's arity once, with
    the frequency as coefficient."""
    out: dict[MultiIndex, Fraction] = {}
    for (i, k), m in a.entries:
        term = a.with_bumped(i, k)
        out[term] = out.get(term, Fraction(0)) + m
    return FormalSum(out)


def _derive_mi_sum(s: FormalSum) -> FormalSum:
    return s.map_terms(_derive_mi)


def derivation_d(u: FormalSum | Forest | MultiIndex) -> FormalSum:
    """The raising derivation, with the Leibniz rule over forest components.

    Accepts a bare multi-index, a bare forest, or a formal sum of forests;
    a multi-index input yields a sum of multi-indices, forest inputs yield
    sums of forests.  ``D ∅ = 0``.
    """
    if isinstance(u, MultiIndex):
        return _derive_mi(u)
    if isinstance(u, Forest):
        out = FormalSum()
        comps = u.components
        for j, c in enumerate(comps):
            rest = comps[:j] + comps[j + 1 :]
            for mi, coeff in _derive_mi(c).items():
                out = out + FormalSum.of(Forest(rest + (mi,)), coeff)
        return out
    return u.map_terms(lambda f: derivation_d(f))


def prelie_graft(a: MultiIndex, b: MultiIndex) -> FormalSum:
    """a ▷ b = a · (D b), a sum of multi-indices of degree |a|+|b|."""
    return _derive_mi(b).map_terms(lambda m: FormalSum.of(a.mul(m)))


def _multi_graft(parts: tuple[MultiIndex, ...], target: MultiIndex) -> FormalSum:
    """Graft every one of ``parts`` onto the single multi-index ``target``:
    (Π parts) · D^n target, a sum of multi-indices."""
    s = FormalSum.of(target)
    for _ in parts:
        s = _derive_mi_sum(s)
    if parts:
        prefix = reduce(MultiIndex.mul, parts)
        s = s.map_terms(lambda m: FormalSum.of(prefix.mul(m)))
    return s


def graft_simultaneous(left: Forest, right: Forest) -> FormalSum:
    """Simultaneous grafting of each component of ``left`` onto ``right``.

    Every component of ``left`` is assigned to one component of ``right``
    (all assignments summed); a component receiving n parts is replaced by
    (Π parts)·Dⁿ of itself.  The empty forest is a two-sided identity.
    Returns a sum of forests.
    """
    if left.is_empty:
        return FormalSum.of(right)
    if right.is_empty:
        return FormalSum.of(left)
    n = left.cardinality()
    m = right.cardinality()
    total = FormalSum()
    for assignment in itertools.product(range(m), repeat=n):
        buckets: list[list[MultiIndex]] = [[] for _ in range(m)]
        for part_idx, slot in enumerate(assignment):
            buckets[slot].append(left.components[part_idx])
        slot_sums = [
            _multi_graft(tuple(bucket), comp)
            for bucket, comp in zip(buckets, right.components)
        ]
        total = total + _combine_slots(slot_sums)
    return total


def _combine_slots(slot_sums: list[FormalSum]) -> FormalSum:
    """Cartesian product of per-component sums into a sum of forests."""
    out: dict[Forest, Fraction] = {}
    for combo in itertools.product(*(list(s.items()) for s in slot_sums)):
        coeff = Fraction(1)
        comps = []
        for mi, c in combo:
            coeff *= c
            comps.append(mi)
        forest = Forest(comps)
        out[forest] = out.get(forest, Fraction(0)) + coeff
    return FormalSum(out)


def deshuffle(u: Forest) -> FormalSum:
    """Δ on a forest: all splits of the multiset of components into an
    ordered pair (left, right), as a sum over ``(Forest, Forest)`` keys.

    On a single multi-index this is primitive; on products it is
    multiplicative, so a forest with r copies of a component contributes
    binomial weights C(r, j).
    """
    out: dict[tuple[Forest, Forest], Fraction] = {}
    mults = u.multiplicities()
    choices = [range(r + 1) for _, r in mults]
    for pick in itertools.product(*choices):
        coeff = 1
        left: list[MultiIndex] = []
        right: list[MultiIndex] = []
        for (mi, r), j in zip(mults, pick):
            coeff *= _binomial(r, j)
            left.extend([mi] * j)
            right.extend([mi] * (r - j))
        key = (Forest(left), Forest(right))
        out[key] = out.get(key, Fraction(0)) + coeff
    return FormalSum(out)


@lru_cache(maxsize=None)
def _binomial(n: int, k: int) -> int:
    return _factorial(n) // (_factorial(k) * _factorial(n - k))


@lru_cache(maxsize=None)
def _star_basis(u: Forest, v: Forest) -> FormalSum:
    """Grossman–Larson product of two basis forests, untruncated.

    μ(id ⊗ (· ⋆₂ v)) Δ u: one part of the deshuffle of u stays aside as a
    forest factor, the other is grafted simultaneously onto v.  Every output
    term has degree exactly deg(u)+deg(v).
    """
    if u.is_empty:
        return FormalSum.of(v)
    if v.is_empty:
        return FormalSum.of(u)
    out = FormalSum()
    for (kept, grafted), split_coeff in deshuffle(u).items():
        grafted_sum = graft_simultaneous(grafted, v)
        for forest, c in grafted_sum.items():
            out = out + FormalSum.of(kept.merge(forest), c * split_coeff)
    return out


def gl_product(
    u: FormalSum | Forest, v: FormalSum | Forest, trunc: int | None = None
) -> FormalSum:
    """Associative product on formal sums of forests, unit ∅.

    With ``trunc=N`` every output term of degree > N is dropped (termwise,
    after expansion — the graded quotient, not a different product).
    """
    if isinstance(u, Forest):
        u = FormalSum.of(u)
    if isinstance(v, Forest):
        v = FormalSum.of(v)
    out: dict[Forest, Fraction] = {}
    for fu, cu in u.items():
        for fv, cv in v.items():
            if trunc is not None and fu.degree() + fv.degree() > trunc:
                continue
            for w, c in _star_basis(fu, fv).items():
                out[w] = out.get(w, Fraction(0)) + cu * cv * c
    s = FormalSum(out)
    if trunc is not None:
        s = s.filter_terms(lambda f: f.degree() <= trunc)
    return s


# ---------------------------------------------------------------------------
# Graded bases
# ---------------------------------------------------------------------------


def enumerate_populated(d: int, max_degree: int) -> list[MultiIndex]:
    """All populated multi-indices of degree ≤ max_degree over letters 0..d,
    each exactly once, in the canonical total order.

    A populated monomial of degree n carries total arity n−1, so arities never
    exceed max_degree−1 and the search space is finite.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if max_degree < 0:
        raise ValueError(f"max_degree must be >= 0, got {max_degree}")
    found: list[MultiIndex] = []
    variables = sorted(
        (i, k) for k in range(max(0, max_degree)) for i in range(d + 1)
    )

    def extend(pos: int, picked: list[Entry], deg: int, arity: int) -> None:
        if pos == len(variables):
            if deg >= 1 and deg - arity == 1:
                found.append(MultiIndex(list(picked), d + 1))
            return
        i, k = variables[pos]
        extend(pos + 1, picked, deg, arity)  # frequency 0
        for m in range(1, max_degree - deg + 1):
            new_arity = arity + k * m
            if new_arity > max_degree - 1:
                break  # a populated monomial of degree n has total arity n−1
            picked.append(((i, k), m))
            extend(pos + 1, picked, deg + m, new_arity)
            picked.pop()

    extend(0, [], 0, 0)
    found.sort(key=lambda mi: mi.entries)
    return found


@lru_cache(maxsize=None)
def _populated_tuple(d: int, max_degree: int) -> tuple[MultiIndex, ...]:
    return tuple(enumerate_populated(d, max_degree))


@lru_cache(maxsize=None)
def forest_basis(d: int, max_degree: int) -> tuple[Forest, ...]:
    """All forests of populated multi-indices of total degree ≤ max_degree,
    the empty forest first, then sorted by (degree, canonical order)."""
    mis = _populated_tuple(d, max_degree)
    forests: list[Forest] = [EMPTY_FOREST]
    # build multisets by walking the multi-index list in order, never
    # choosing an earlier index than the last one picked
    def extend(start: int, picked: list[MultiIndex], deg: int) -> None:
        for idx in range(start, len(mis)):
            mi = mis[idx]
            nd = deg + mi.degree()
            if nd > max_degree:
                continue
            picked.append(mi)
            forests.append(Forest(list(picked)))
            extend(idx, picked, nd)
            picked.pop()

    extend(0, [], 0)
    forests.sort(key=lambda f: (f.degree(), tuple(c.entries for c in f.components)))
    return tuple(forests)
