"""Log-ODE flow solver for scalar rough differential equations.

The driver enters only through its truncated-group increments.  Over each
mesh interval the state advances by integrating, over unit time, an
autonomous ODE whose right-hand side combines the log-coordinates of the
interval's increment with the elementary differentials of the coefficient
field:

    Ż = Σ_β Υ_f[z^β](Z) / S(z^β) · Λ(z^β),      Z(0) = y,

the sum running over populated monomials whose γ-size lies between 1 and the
truncation level, with the bare time variable always kept so that a drift
survives every truncation.  Mixed drift–diffusion monomials enter exactly
when the γ-filter admits them.

Everything here is deterministic: fixed classical RK4 with a configured
substep count, basis enumeration in a fixed sorted order, no randomness.
A Davie-type residual report fits the empirical local consistency order of a
computed solution against the theoretical target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .algebra import MultiIndex, enumerate_populated, single, symmetry_factor
from .fields import VectorField, upsilon
from .group import LieElement, RoughPathGrid, log_element

__all__ = [
    "DavieReport",
    "DivergedError",
    "FlowSolution",
    "SolveConfig",
    "davie_expansion",
    "davie_residual_report",
    "dyadic_pairs",
    "expansion_basis",
    "logode_step",
    "reference_ode_solve",
    "solve_flow",
]


class DivergedError(RuntimeError):
    """The integrator state left the finite range.

    Carries the one-based substep at which the guard tripped and the last
    computed (non-finite or oversized) state.
    """

    def __init__(self, message: str, substep: int, state: float):
        super().__init__(message)
        self.substep = substep
        self.state = state


# ---------------------------------------------------------------------------
# expansion basis and the Davie expansion
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def expansion_basis(d: int, gamma: Fraction, level: Fraction) -> tuple[MultiIndex, ...]:
    """Populated monomials with γ-size in [1, level], plus the bare time
    variable.

    The time variable is adjoined unconditionally — its γ-size 1/γ exceeds
    any level below 1/γ, yet the drift must survive every truncation.  All
    other monomials pass through the γ-filter, which automatically excludes
    mixed drift–diffusion terms until the level makes room for them.
    """
    gamma = Fraction(gamma)
    level = Fraction(level)
    if level < 1:
        raise ValueError(f"truncation level must be >= 1, got {level}")
    keep = {single(0, 0, d)}
    for beta in enumerate_populated(d, max(1, math.floor(level))):
        if 1 <= beta.gamma_degree(gamma) <= level:
            keep.add(beta)
    return tuple(sorted(keep))


def _resolve_level(grading, level: Fraction | int | None) -> Fraction:
    out = Fraction(grading.max_norm) if level is None else Fraction(level)
    if out > grading.max_norm:
        raise ValueError(
            f"truncation level {out} exceeds the stored degree {grading.max_norm}"
        )
    return out


def davie_expansion(
    path: RoughPathGrid,
    f: VectorField,
    s: float,
    t: float,
    y: float,
    level: Fraction | int | None = None,
) -> float:
    """One-step Taylor-type expansion of the solution started at ``y``:

        y + Σ_β Υ_f[z^β](y) / S(z^β) · X_{s,t}(z^β)

    over the expansion basis.  ``s`` and ``t`` must be grid points; the
    increment over a non-adjacent pair is produced by Chen composition.
    """
    i, j = path.index_of(s), path.index_of(t)
    if i > j:
        raise ValueError(f"expansion needs s <= t, got s={s}, t={t}")
    bound = _resolve_level(path.grading, level)
    increment = path.increment_by_index(i, j)
    total = float(y)
    for beta in expansion_basis(path.d, path.grading.gamma, bound):
        x = increment.value(beta)
        if x != 0.0:
            total += upsilon(beta, f, y) / symmetry_factor(beta) * x
    return total


# ---------------------------------------------------------------------------
# the log-ODE step
# ---------------------------------------------------------------------------


def logode_step(
    lam: LieElement,
    f: VectorField,
    y: float,
    substeps: int = 8,
    level: Fraction | int | None = None,
    guard: float = 1e12,
) -> float:
    """Classical RK4 over unit time for the autonomous log-ODE right-hand
    side built from the primitive element ``lam``.

    Raises :class:`DivergedError` as soon as the state stops being finite or
    exceeds ``guard`` in absolute value.
    """
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    bound = _resolve_level(lam.grading, level)
    terms = []
    for beta in expansion_basis(lam.d, lam.grading.gamma, bound):
        x = lam.value(beta)
        if x != 0.0:
            terms.append((beta, x / symmetry_factor(beta)))

    def rhs(z: float) -> float:
        total = 0.0
        for beta, c in terms:
            total += c * upsilon(beta, f, z)
        return total

    h = 1.0 / substeps
    z = float(y)
    for n in range(1, substeps + 1):
        k1 = rhs(z)
        k2 = rhs(z + 0.5 * h * k1)
        k3 = rhs(z + 0.5 * h * k2)
        k4 = rhs(z + h * k3)
        z = z + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if not math.isfinite(z) or abs(z) > guard:
            raise DivergedError(
                f"state {z} left the finite range at substep {n}/{substeps}",
                substep=n,
                state=z,
            )
    return z


# ---------------------------------------------------------------------------
# flow composition over a mesh
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolveConfig:
    """Mesh selection and integrator settings for :func:`solve_flow`.

    The mesh is either the full grid (default), every dyadic point at
    ``mesh_level`` (2^level intervals spanning the grid), or an explicit
    tuple of times; every mesh point must be a grid point, since increments
    are never interpolated.  ``level`` caps the γ-size of the expansion
    monomials (default: the stored degree bound).  ``target_tolerance`` is
    carried into reports that compare against a reference solution.
    """

    rk4_substeps: int = 8
    mesh_level: int | None = None
    mesh: tuple[float, ...] | None = None
    level: Fraction | int | None = None
    divergence_guard: float = 1e12
    target_tolerance: float | None = None

    def __post_init__(self):
        if self.rk4_substeps < 1:
            raise ValueError(f"rk4_substeps must be >= 1, got {self.rk4_substeps}")
        if self.mesh is not None and self.mesh_level is not None:
            raise ValueError("give an explicit mesh or a dyadic level, not both")
        if self.mesh_level is not None and self.mesh_level < 0:
            raise ValueError(f"mesh_level must be >= 0, got {self.mesh_level}")
        if self.divergence_guard <= 0:
            raise ValueError("divergence_guard must be positive")


@dataclass(frozen=True)
class FlowSolution:
    """A flow computed over a mesh; the first value is exactly the initial
    condition.  A diverged run is truncated at the last finite state and
    flagged, never raised (local-solution semantics)."""

    times: tuple[float, ...]
    values: tuple[float, ...]
    config: SolveConfig
    provenance: tuple[tuple[str, str], ...] = ()
    diverged: bool = False
    message: str = ""

    def value_at(self, t: float) -> float:
        for tj, yj in zip(self.times, self.values):
            if tj == t or math.isclose(tj, t, rel_tol=1e-12, abs_tol=1e-14):
                return yj
        raise ValueError(f"time {t} is not a mesh point of this solution")


def _mesh_indices(path: RoughPathGrid, cfg: SolveConfig) -> list[int]:
    if cfg.mesh is not None:
        idx = [path.index_of(t) for t in cfg.mesh]
        if not idx or idx[0] != 0:
            raise ValueError("an explicit mesh must start at the first grid time")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("mesh times must be strictly increasing")
        return idx
    if cfg.mesh_level is not None:
        pieces = 1 << cfg.mesh_level
        t0, t1 = path.times[0], path.times[-1]
        return [path.index_of(t0 + (t1 - t0) * k / pieces) for k in range(pieces + 1)]
    return list(range(len(path.times)))


def solve_flow(
    path: RoughPathGrid,
    f: VectorField,
    y0: float,
    cfg: SolveConfig = SolveConfig(),
    provenance: tuple[tuple[str, str], ...] = (),
) -> FlowSolution:
    """Compose log-ODE steps along the mesh: each interval's increment is
    Chen-composed from the stored grid, sent through its log-coordinates, and
    integrated by :func:`logode_step` starting from the previous state."""
    indices = _mesh_indices(path, cfg)
    bound = _resolve_level(path.grading, cfg.level)
    times = [path.times[indices[0]]]
    values = [float(y0)]
    for a, b in zip(indices, indices[1:]):
        lam = log_element(path.increment_by_index(a, b))
        try:
            y = logode_step(
                lam,
                f,
                values[-1],
                substeps=cfg.rk4_substeps,
                level=bound,
                guard=cfg.divergence_guard,
            )
        except DivergedError as err:
            return FlowSolution(
                times=tuple(times),
                values=tuple(values),
                config=cfg,
                provenance=provenance,
                diverged=True,
                message=str(err),
            )
        times.append(path.times[b])
        values.append(y)
    return FlowSolution(
        times=tuple(times),
        values=tuple(values),
        config=cfg,
        provenance=provenance,
    )


# ---------------------------------------------------------------------------
# Davie residual report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DavieReport:
    """Per-pair residuals |Y_t − expansion(s, t, Y_s)| with a least-squares
    fit of log-residual against log-interval, next to the theoretical
    consistency target (level + 1)·γ."""

    rows: tuple[tuple[float, float, float], ...]
    slope: float
    target_slope: float
    level: float
    gamma: float


def dyadic_pairs(
    times: Sequence[float], min_block: int = 1, max_block: int | None = None
) -> list[tuple[float, float]]:
    """Non-overlapping index pairs at block sizes 1, 2, 4, … — the dyadic
    scales a residual slope is fitted over."""
    n = len(times) - 1
    if max_block is None:
        max_block = n
    out: list[tuple[float, float]] = []
    block = max(1, min_block)
    while block <= max_block:
        for i in range(0, n - block + 1, block):
            out.append((times[i], times[i + block]))
        block *= 2
    return out


def davie_residual_report(
    path: RoughPathGrid,
    f: VectorField,
    sol: FlowSolution,
    pairs: Sequence[tuple[float, float]],
    level: Fraction | int | None = None,
) -> DavieReport:
    bound = _resolve_level(path.grading, level)
    rows = []
    for s, t in pairs:
        ys = sol.value_at(s)
        yt = sol.value_at(t)
        residual = abs(yt - davie_expansion(path, f, s, t, ys, level=bound))
        rows.append((s, t, residual))
    xs = []
    ys_log = []
    for s, t, residual in rows:
        if t > s and residual > 0.0:
            xs.append(math.log(t - s))
            ys_log.append(math.log(residual))
    if len(xs) >= 2 and max(xs) > min(xs):
        slope = float(np.polyfit(np.array(xs), np.array(ys_log), 1)[0])
    else:
        slope = math.nan
    gamma = path.grading.gamma
    return DavieReport(
        rows=tuple(rows),
        slope=slope,
        target_slope=float((bound + 1) * gamma),
        level=float(bound),
        gamma=float(gamma),
    )


# ---------------------------------------------------------------------------
# reference solver for smooth drivers
# ---------------------------------------------------------------------------


def reference_ode_solve(
    f: VectorField,
    driver_derivatives: Sequence[Callable[[float], float]],
    y0: float,
    times: Sequence[float],
) -> np.ndarray:
    """Classical RK4 for dY = f₀(Y)dt + Σ_i f_i(Y)·Ẋ^i(t)dt on the given
    mesh; the driver enters through its time derivatives, one callable per
    space letter."""
    if len(driver_derivatives) != f.d:
        raise ValueError(
            f"need {f.d} driver derivatives (one per space letter), "
            f"got {len(driver_derivatives)}"
        )

    def rhs(t: float, z: float) -> float:
        total = f.derivative(0, 0, z)
        for i, dx in enumerate(driver_derivatives, start=1):
            total += f.derivative(i, 0, z) * dx(t)
        return total

    out = np.empty(len(times), dtype=float)
    out[0] = float(y0)
    y = float(y0)
    for j in range(len(times) - 1):
        t = times[j]
        dt = times[j + 1] - times[j]
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if not math.isfinite(y):
            raise DivergedError(
                f"reference solve left the finite range after t={t}",
                substep=j + 1,
                state=y,
            )
        out[j + 1] = y
    return out
