"""Quasi-free magnon theory: occupations, dispersion, self-consistent magnetization.

The magnetization m = <sigma3> lives in [-1, 0].  Mode occupations follow a
Bose factor whose argument couples m back to itself through the grid average
of the occupations, so m is found as a root of the defect function
``G(m) = mean_q n(q; m) - (1 + m)/2``.  G(0) = -1/2 and G(-1) >= 0 always
hold in the validated regime, so a bisection bracket exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import CouplingSet, MomentumGrid, exchange_gap, exchange_gap_grid

#: Occupations below this are flushed to exactly zero (large-beta runs).
OCCUPATION_FLOOR = 1e-300

DEFAULT_SOLVE_TOL = 1e-12
DEFAULT_SCAN_POINTS = 4096
_MAX_BISECT = 200


class RegimeError(ValueError):
    """Raised when parameters leave the validated ferromagnetic regime."""


@dataclass(frozen=True)
class ThermalParams:
    """Inverse temperature and magnetic field of one equilibrium problem."""

    beta: float
    h: float

    def __post_init__(self):
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")


def _check_m(m: float) -> float:
    if not (-1.0 <= m <= 0.0):
        raise ValueError(f"magnetization must lie in [-1, 0], got {m}")
    return float(m)


def _occupations_from_gaps(m: float, beta: float, h: float, gaps: np.ndarray) -> np.ndarray:
    """Bose occupations -m / (exp(2*beta*(h - m*gap)) - 1), stably evaluated."""
    args = 2.0 * beta * (h - m * gaps)
    bad = np.min(args)
    if bad <= 0.0:
        raise RegimeError(
            f"outside ferromagnetic regime: exponent argument {bad:.6g} <= 0 "
            f"(m={m}, beta={beta}, h={h})"
        )
    with np.errstate(over="ignore"):
        occ = (-m) / np.expm1(args)
    occ[occ < OCCUPATION_FLOOR] = 0.0
    return occ


def occupation(q, m: float, params: ThermalParams, couplings: CouplingSet) -> float:
    """Thermal occupation of the magnon mode at momentum q.

    Vanishes identically at m = 0 and decreases monotonically in beta.
    """
    m = _check_m(m)
    gap = np.array([exchange_gap(couplings, q)])
    return float(_occupations_from_gaps(m, params.beta, params.h, gap)[0])


def occupation_grid(m: float, params: ThermalParams, couplings: CouplingSet, grid: MomentumGrid) -> np.ndarray:
    """Occupations on the whole momentum grid, in grid order."""
    m = _check_m(m)
    return _occupations_from_gaps(m, params.beta, params.h, exchange_gap_grid(couplings, grid))


def dispersion(q, m: float, params: ThermalParams, couplings: CouplingSet) -> float:
    """Magnon energy 2*(J3(0) - J(q) + h/(-m)); positive for h > 0, m < 0."""
    m = _check_m(m)
    if m == 0.0:
        raise RegimeError("spectrum undefined at vanishing magnetization")
    return 2.0 * (exchange_gap(couplings, q) + params.h / (-m))


def dispersion_grid(m: float, params: ThermalParams, couplings: CouplingSet, grid: MomentumGrid) -> np.ndarray:
    """Magnon energies on the whole momentum grid, in grid order."""
    m = _check_m(m)
    if m == 0.0:
        raise RegimeError("spectrum undefined at vanishing magnetization")
    return 2.0 * (exchange_gap_grid(couplings, grid) + params.h / (-m))


def selfconsistency_defect(m: float, params: ThermalParams, couplings: CouplingSet, grid: MomentumGrid) -> float:
    """Defect G(m) = mean_q n(q; m) - (1 + m)/2 whose roots are equilibria."""
    m = _check_m(m)
    occ = _occupations_from_gaps(m, params.beta, params.h, exchange_gap_grid(couplings, grid))
    return float(np.mean(occ) - 0.5 * (1.0 + m))


def _defect_batch(ms: np.ndarray, beta: float, h: float, gaps: np.ndarray) -> np.ndarray:
    """Vectorized defect over many trial magnetizations (scan helper)."""
    args = 2.0 * beta * (h - np.outer(ms, gaps))
    if np.min(args) <= 0.0:
        raise RegimeError("outside ferromagnetic regime during magnetization scan")
    with np.errstate(over="ignore"):
        occ = (-ms)[:, None] / np.expm1(args)
    occ[occ < OCCUPATION_FLOOR] = 0.0
    return occ.mean(axis=1) - 0.5 * (1.0 + ms)


@dataclass
class MagnetizationBounds:
    """Field-based and coupling-based upper bounds on the magnetization."""

    from_field: float
    from_coupling: float | None
    tightest: float


def _bose_bound(argument: float) -> float:
    """-1 + 2/(exp(argument) - 1), saturating at -1 for huge arguments."""
    try:
        return -1.0 + 2.0 / math.expm1(argument)
    except OverflowError:
        return -1.0


def magnetization_bound(params: ThermalParams, couplings: CouplingSet) -> float:
    """Upper bound -1 + 2/(exp(2*beta*h) - 1) on the magnetization."""
    if params.beta * params.h <= 0.0:
        raise ValueError("bound requires beta*h > 0")
    return _bose_bound(2.0 * params.beta * params.h)


def magnetization_bounds(params: ThermalParams, couplings: CouplingSet) -> MagnetizationBounds:
    """Both bound variants; the coupling-gap variant applies only for gap(0) > 0."""
    from_field = magnetization_bound(params, couplings)
    gap0 = exchange_gap(couplings, np.zeros(couplings.dimension or 1))
    from_coupling = None
    if gap0 > 0.0:
        from_coupling = _bose_bound(2.0 * params.beta * gap0)
    candidates = [from_field] + ([from_coupling] if from_coupling is not None else [])
    return MagnetizationBounds(from_field, from_coupling, min(candidates))


@dataclass
class SpinWaveSolution:
    """Self-consistent magnetization together with per-mode diagnostics."""

    m_star: float
    occupations: np.ndarray
    dispersion: np.ndarray
    gap_values: np.ndarray
    residual: float
    all_roots: list[float]
    bound: float
    params: ThermalParams
    couplings: CouplingSet
    grid: MomentumGrid
    diagnostics: dict = field(default_factory=dict)


def _bisect(f, lo: float, hi: float, f_lo: float) -> float:
    """Bisection on a sign-changing bracket, run to interval collapse.

    Collapsing (about 52 steps) rather than stopping at a residual threshold
    makes the located root independent of how the bracket was found, so
    refining the scan cannot move it.
    """
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            return mid
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_magnetization(
    params: ThermalParams,
    couplings: CouplingSet,
    grid: MomentumGrid,
    tol: float = DEFAULT_SOLVE_TOL,
    scan_points: int = DEFAULT_SCAN_POINTS,
) -> SpinWaveSolution:
    """Locate the self-consistent magnetization by scan plus bisection.

    A uniform scan over [-1, 0] finds every sign change of the defect; each
    bracket is bisected to interval collapse and the residual must come out
    below tol.  All roots are reported and the one closest to -1 (the
    low-temperature branch) is selected.  Bisection is derivative-free and
    unconditionally convergent, which is all this cheap, smooth defect needs.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if scan_points < 2:
        raise ValueError(f"scan_points must be >= 2, got {scan_points}")

    gaps = exchange_gap_grid(couplings, grid)
    beta, h = params.beta, params.h

    def defect(m: float) -> float:
        return float(_defect_batch(np.array([m]), beta, h, gaps)[0])

    ms = np.linspace(-1.0, 0.0, scan_points)
    values = _defect_batch(ms, beta, h, gaps)
    if not (values[0] >= 0.0 and values[-1] < 0.0):
        raise RegimeError(
            "no self-consistent magnetization: defect endpoints "
            f"G(-1)={values[0]:.6g}, G(0)={values[-1]:.6g} do not bracket a root"
        )

    roots: list[float] = []
    for i in range(scan_points - 1):
        a, b = float(ms[i]), float(ms[i + 1])
        fa, fb = float(values[i]), float(values[i + 1])
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0.0:
            roots.append(_bisect(defect, a, b, fa))
    if not roots:
        raise RegimeError("no self-consistent magnetization: no sign change located")

    roots.sort()
    m_star = roots[0]
    residual = abs(defect(m_star))
    if residual > tol:
        raise RegimeError(
            f"bisection residual {residual:.3e} exceeds tolerance {tol:.3e}"
        )
    occupations = _occupations_from_gaps(m_star, beta, h, gaps)
    eps = 2.0 * (gaps + h / (-m_star))
    bounds = magnetization_bounds(params, couplings)
    return SpinWaveSolution(
        m_star=m_star,
        occupations=occupations,
        dispersion=eps,
        gap_values=gaps,
        residual=residual,
        all_roots=roots,
        bound=bounds.from_field,
        params=params,
        couplings=couplings,
        grid=grid,
        diagnostics={
            "root_count": len(roots),
            "multiple_roots": len(roots) > 1,
            "scan_points": scan_points,
            "bound_from_field": bounds.from_field,
            "bound_from_coupling": bounds.from_coupling,
            "bound_tightest": bounds.tightest,
        },
    )
