"""Torus lattices, exchange couplings, momentum grids and regime validation.

The geometry is a periodic hypercubic torus with ``L**nu`` sites addressed
by integer vectors mod L.  Exchange couplings are keyed by displacement
vector and must be even, ``J(z) == J(-z)``, which is what makes every
lattice Fourier transform used downstream real.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

Displacement = tuple[int, ...]

#: Floating-point noise floor for the Fourier sums of even coupling maps.
DEFAULT_GAP_TOL = 1e-12

_IMAG_TOL = 1e-12


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic hypercubic lattice with ``size**dimension`` sites."""

    dimension: int
    size: int

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"lattice dimension must be >= 1, got {self.dimension}")
        if self.size < 1:
            raise ValueError(f"lattice size must be >= 1, got {self.size}")

    @property
    def n_sites(self) -> int:
        return self.size**self.dimension

    def site_vectors(self) -> np.ndarray:
        """All sites as integer vectors, lexicographic order, shape (n_sites, dimension)."""
        axes = [range(self.size)] * self.dimension
        return np.array(list(itertools.product(*axes)), dtype=np.int64).reshape(
            self.n_sites, self.dimension
        )

    def site_index(self, vec) -> int:
        """Mixed-radix index of a site vector (mod-L reduced first)."""
        idx = 0
        for component in np.asarray(vec, dtype=np.int64) % self.size:
            idx = idx * self.size + int(component)
        return idx


class CouplingSet:
    """Finite-range exchange couplings plus a magnetic field.

    Parameters
    ----------
    exchange : mapping displacement -> float
        Transverse coupling J.  Must be even and vanish at zero displacement.
    exchange_z : mapping displacement -> float
        Longitudinal coupling J3, same requirements.
    h : float
        Magnetic field, >= 0.

    Evenness is rejected, not repaired, here; use :func:`load_couplings_csv`
    or :meth:`symmetrized` when only one representative per pair is known.
    """

    def __init__(self, exchange, exchange_z, h):
        self.exchange = self._normalize("exchange", exchange)
        self.exchange_z = self._normalize("exchange_z", exchange_z)
        dims = {len(z) for z in self.exchange} | {len(z) for z in self.exchange_z}
        if len(dims) > 1:
            raise ValueError(f"mixed displacement dimensions: {sorted(dims)}")
        self._dimension = dims.pop() if dims else None
        if h < 0:
            raise ValueError(f"field h must be >= 0, got {h}")
        self.h = float(h)

    @staticmethod
    def _normalize(name, mapping) -> dict[Displacement, float]:
        out: dict[Displacement, float] = {}
        for raw, value in mapping.items():
            z = tuple(int(c) for c in (raw if isinstance(raw, tuple) else (raw,)))
            v = float(value)
            if v == 0.0:
                continue
            if all(c == 0 for c in z):
                raise ValueError(f"{name}: on-site coupling must vanish, got {v} at {z}")
            out[z] = v
        for z, v in out.items():
            mirror = tuple(-c for c in z)
            if out.get(mirror) != v:
                raise ValueError(
                    f"{name}: evenness violated at {z}: {v} vs {out.get(mirror)} at {mirror}"
                )
        return out

    @classmethod
    def symmetrized(cls, exchange, exchange_z, h) -> "CouplingSet":
        """Build a coupling set, inserting missing mirror displacements."""

        def fill(mapping):
            out = {}
            for raw, value in mapping.items():
                z = tuple(int(c) for c in (raw if isinstance(raw, tuple) else (raw,)))
                out[z] = float(value)
            for z, v in list(out.items()):
                mirror = tuple(-c for c in z)
                if mirror not in out:
                    out[mirror] = v
            return out

        return cls(fill(exchange), fill(exchange_z), h)

    @classmethod
    def nearest_neighbor(cls, dimension, j=1.0, j3=1.0, h=0.0) -> "CouplingSet":
        """Isotropic-strength nearest-neighbor couplings on a nu-dimensional torus."""
        exchange = {}
        exchange_z = {}
        for axis in range(dimension):
            for sign in (+1, -1):
                z = tuple(sign if a == axis else 0 for a in range(dimension))
                if j:
                    exchange[z] = float(j)
                if j3:
                    exchange_z[z] = float(j3)
        return cls(exchange, exchange_z, h)

    @property
    def dimension(self) -> int | None:
        """Displacement dimension, or None for an empty coupling set."""
        return self._dimension

    @property
    def coupling_range(self) -> int:
        """Max sup-norm of a displacement carrying a nonzero coupling."""
        norms = [max(abs(c) for c in z) for z in (*self.exchange, *self.exchange_z)]
        return max(norms, default=0)

    def renamed_displacements(self) -> "CouplingSet":
        """Copy with displacement storage order shuffled (used by invariance tests)."""
        ex = dict(sorted(self.exchange.items(), reverse=True))
        ez = dict(sorted(self.exchange_z.items(), reverse=True))
        return CouplingSet(ex, ez, self.h)


@dataclass(frozen=True)
class MomentumGrid:
    """Dual-lattice momenta 2*pi*n/L, lexicographic in n, k=0 first."""

    points: np.ndarray
    lattice: LatticeSpec

    @classmethod
    def from_lattice(cls, lattice: LatticeSpec) -> "MomentumGrid":
        points = 2.0 * np.pi * lattice.site_vectors() / lattice.size
        points.setflags(write=False)
        return cls(points, lattice)

    def __len__(self) -> int:
        return self.points.shape[0]

    def index_of(self, k) -> int:
        """Grid index of a momentum (must lie on the grid up to 1e-9)."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        deltas = np.abs(self.points - k[None, :])
        deltas = np.minimum(deltas, 2.0 * np.pi - deltas)
        hits = np.nonzero(np.all(deltas < 1e-9, axis=1))[0]
        if hits.size != 1:
            raise ValueError(f"momentum {k} not on the grid")
        return int(hits[0])


def _as_momentum(k, dimension) -> np.ndarray:
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.shape != (dimension,):
        raise ValueError(f"momentum must have {dimension} components, got shape {k.shape}")
    return k


def _coupling_items(couplings: CouplingSet, which: str):
    if which == "J":
        return couplings.exchange
    if which == "J3":
        return couplings.exchange_z
    raise ValueError(f"unknown coupling kind {which!r}, expected 'J' or 'J3'")


def fourier_coupling(couplings: CouplingSet, which: str, k) -> float:
    """Lattice Fourier transform sum_z J(z) exp(-i k.z) of one coupling map.

    Evenness of the map guarantees a real value; any imaginary residue is
    checked against 1e-12 and discarded.
    """
    mapping = _coupling_items(couplings, which)
    if not mapping:
        return 0.0
    dim = couplings.dimension
    k = _as_momentum(k, dim)
    total = 0.0 + 0.0j
    for z, v in mapping.items():
        total += v * np.exp(-1j * float(np.dot(k, z)))
    if abs(total.imag) > _IMAG_TOL:
        raise AssertionError(f"imaginary residue {total.imag:.3e} exceeds {_IMAG_TOL}")
    return float(total.real)


def fourier_coupling_grid(couplings: CouplingSet, which: str, grid: MomentumGrid) -> np.ndarray:
    """Vectorized :func:`fourier_coupling` over every grid momentum."""
    mapping = _coupling_items(couplings, which)
    n = len(grid)
    if not mapping:
        return np.zeros(n)
    zs = np.array(list(mapping.keys()), dtype=float)
    vs = np.array(list(mapping.values()))
    phases = np.exp(-1j * grid.points @ zs.T)
    values = phases @ vs
    if np.max(np.abs(values.imag)) > _IMAG_TOL:
        raise AssertionError("imaginary residue exceeds 1e-12 on the momentum grid")
    return values.real


def exchange_gap(couplings: CouplingSet, k) -> float:
    """Exchange part of the magnon gap, J3(0) - J(k)."""
    j3_zero = sum(couplings.exchange_z.values())
    if couplings.dimension is None:
        return float(j3_zero)
    return float(j3_zero) - fourier_coupling(couplings, "J", k)


def exchange_gap_grid(couplings: CouplingSet, grid: MomentumGrid) -> np.ndarray:
    """Exchange gap evaluated on the whole momentum grid."""
    j3_zero = sum(couplings.exchange_z.values())
    return j3_zero - fourier_coupling_grid(couplings, "J", grid)


def coupling_matrix(couplings: CouplingSet, which: str, lattice: LatticeSpec) -> np.ndarray:
    """Periodized site-to-site coupling matrix on the torus.

    Every stored displacement contributes to the pair it connects mod L, so
    displacements longer than the torus fold onto it additively.  This keeps
    the matrix exactly consistent with the grid Fourier transforms.
    """
    mapping = _coupling_items(couplings, which)
    n = lattice.n_sites
    mat = np.zeros((n, n))
    if not mapping:
        return mat
    if couplings.dimension != lattice.dimension:
        raise ValueError(
            f"coupling dimension {couplings.dimension} != lattice dimension {lattice.dimension}"
        )
    sites = lattice.site_vectors()
    for z, v in mapping.items():
        targets = (sites - np.asarray(z, dtype=np.int64)) % lattice.size
        for x in range(n):
            mat[x, lattice.site_index(targets[x])] += v
    return mat


@dataclass
class ValidationReport:
    """Outcome of the ferromagnetic-regime check on one coupling set."""

    gap_values: np.ndarray
    gap_at_zero: float
    minimum_gap: float
    minimizing_momentum: np.ndarray
    gap_ok: bool
    field_ok_strict: bool
    field_ok_relaxed: bool
    messages: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """Relaxed verdict used by downstream solvers."""
        return self.gap_ok and self.field_ok_relaxed


def validate_ferromagnetic(
    couplings: CouplingSet, grid: MomentumGrid, tol: float = DEFAULT_GAP_TOL
) -> ValidationReport:
    """Check that the couplings put the model in the ferromagnetic regime.

    Positivity of the translation-invariant stability matrix is equivalent
    to its Fourier symbol J3(0) - J(q) being nonnegative on the grid, so no
    dense eigendecomposition is needed.  Two field verdicts are reported:
    the strict one, h > gap(0) > 0, and the relaxed one, h > max(gap(0), 0),
    which is all the solvers require (the isotropic case has gap(0) = 0).
    """
    if tol < 0:
        raise ValueError(f"tolerance must be >= 0, got {tol}")
    gaps = exchange_gap_grid(couplings, grid)
    gap0 = float(gaps[0])
    i_min = int(np.argmin(gaps))
    gap_min = float(gaps[i_min])
    q_min = grid.points[i_min].copy()
    h = couplings.h

    gap_ok = gap_min >= -tol
    strict = (h > gap0) and (gap0 > 0.0)
    relaxed = h > max(gap0, 0.0)

    messages = [f"minimum gap {gap_min:.17g} at q={np.array2string(q_min, precision=6)}"]
    if not gap_ok:
        messages.append("gap negative: couplings are not ferromagnetic")
    if relaxed and not strict:
        messages.append("strict field condition h > gap(0) > 0 not met; relaxed condition holds")
    if not relaxed:
        messages.append(f"field h={h:.17g} does not exceed max(gap(0), 0)={max(gap0, 0.0):.17g}")
    if 2 * couplings.coupling_range >= grid.lattice.size:
        messages.append(
            f"coupling range {couplings.coupling_range} >= L/2: periodic images overlap "
            "and are summed"
        )
    return ValidationReport(
        gap_values=gaps,
        gap_at_zero=gap0,
        minimum_gap=gap_min,
        minimizing_momentum=q_min,
        gap_ok=gap_ok,
        field_ok_strict=strict,
        field_ok_relaxed=relaxed,
        messages=messages,
    )


def load_couplings_csv(path, dimension: int, h: float) -> CouplingSet:
    """Read couplings from CSV with header dz1,...,dznu,J,J3.

    One row per displacement.  Missing mirror rows are inserted; rows that
    disagree with an earlier entry for the same displacement are rejected.
    """
    expected = [f"dz{i + 1}" for i in range(dimension)] + ["J", "J3"]
    exchange: dict[Displacement, float] = {}
    exchange_z: dict[Displacement, float] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != expected:
            raise ValueError(f"coupling CSV header must be {','.join(expected)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != dimension + 2:
                raise ValueError(f"{path}:{lineno}: expected {dimension + 2} fields, got {len(row)}")
            z = tuple(int(c) for c in row[:dimension])
            j, j3 = float(row[dimension]), float(row[dimension + 1])
            for mapping, value in ((exchange, j), (exchange_z, j3)):
                if z in mapping and mapping[z] != value:
                    raise ValueError(f"{path}:{lineno}: inconsistent duplicate for {z}")
                mapping[z] = value
    for mapping in (exchange, exchange_z):
        for z, v in list(mapping.items()):
            mirror = tuple(-c for c in z)
            if mirror not in mapping:
                mapping[mirror] = v
            elif mapping[mirror] != v:
                raise ValueError(f"{path}: displacement {z} conflicts with its mirror {mirror}")
    return CouplingSet(exchange, exchange_z, h)


def write_couplings_csv(path, couplings: CouplingSet, dimension: int) -> None:
    """Inverse of :func:`load_couplings_csv` (one row per displacement)."""
    keys = sorted(set(couplings.exchange) | set(couplings.exchange_z))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"dz{i + 1}" for i in range(dimension)] + ["J", "J3"])
        for z in keys:
            writer.writerow(
                list(z) + [repr(couplings.exchange.get(z, 0.0)), repr(couplings.exchange_z.get(z, 0.0))]
            )
