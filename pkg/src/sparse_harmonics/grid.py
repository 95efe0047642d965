"""Uniform grids, sampled functions and dyadic cube geometry.

The computational domain is a bounded interval split into N = 2**L equal
cells; functions are piecewise constant on cells (samples are cell
averages), so every cube average is an exact finite sum.  Cubes come from
the base dyadic lattice plus three shifted lattices whose cubes have side
3 * 2**-k; together they serve as the finite proxy for "all cubes".
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "Domain",
    "GridFunction",
    "Interval",
    "DyadicCube",
    "DyadicLattice",
    "CubeFamily",
    "children",
    "dilate",
    "shifted_lattices",
    "triple_of_base_cube",
    "ResolutionError",
]


class ResolutionError(ValueError):
    """Requested cubes finer than the grid floor."""


@dataclass(frozen=True)
class Interval:
    left: float
    right: float

    @property
    def length(self) -> float:
        return self.right - self.left

    @property
    def center(self) -> float:
        return 0.5 * (self.left + self.right)


@dataclass(frozen=True)
class Domain:
    """Bounded interval carrying a uniform grid of N = 2**L cells."""

    left: float = 0.0
    length: float = 1.0
    resolution_log2: int = 10
    boundary_mode: str = "zero-extend"  # or "clip"

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("domain length must be positive")
        if self.resolution_log2 < 1:
            raise ValueError("need at least 2 cells (L >= 1)")
        if self.boundary_mode not in ("zero-extend", "clip"):
            raise ValueError(f"unknown boundary mode {self.boundary_mode!r}")

    @property
    def n_cells(self) -> int:
        return 1 << self.resolution_log2

    @property
    def h(self) -> float:
        return self.length / self.n_cells

    @property
    def right(self) -> float:
        return self.left + self.length

    def cell_centers(self) -> np.ndarray:
        return self.left + (np.arange(self.n_cells) + 0.5) * self.h

    def cell_edges(self) -> np.ndarray:
        return self.left + np.arange(self.n_cells + 1) * self.h

    def cell_range(self, iv: Interval) -> tuple[int, int]:
        """Cells whose centers lie in [iv.left, iv.right), clipped to the grid."""
        lo = int(math.ceil((iv.left - self.left) / self.h - 0.5 - 1e-9))
        hi = int(math.ceil((iv.right - self.left) / self.h - 0.5 - 1e-9))
        return max(lo, 0), min(hi, self.n_cells)


class GridFunction:
    """Real or complex function represented by its cell averages."""

    __slots__ = ("domain", "samples")

    def __init__(self, domain: Domain, samples):
        samples = np.asarray(samples)
        if samples.shape != (domain.n_cells,):
            raise ValueError(
                f"expected {domain.n_cells} samples, got shape {samples.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        self.domain = domain
        self.samples = samples

    @classmethod
    def from_callable(cls, domain: Domain, fn: Callable) -> "GridFunction":
        return cls(domain, np.asarray(fn(domain.cell_centers()), dtype=float))

    @classmethod
    def indicator(cls, domain: Domain, iv: Interval) -> "GridFunction":
        lo, hi = domain.cell_range(iv)
        s = np.zeros(domain.n_cells)
        s[lo:hi] = 1.0
        return cls(domain, s)

    @classmethod
    def constant(cls, domain: Domain, c: float) -> "GridFunction":
        return cls(domain, np.full(domain.n_cells, float(c)))

    def integral(self) -> float:
        return self.domain.h * self.samples.sum()

    def __abs__(self) -> "GridFunction":
        return GridFunction(self.domain, np.abs(self.samples))

    def _lift(self, other):
        if isinstance(other, GridFunction):
            if other.domain != self.domain:
                raise ValueError("domain mismatch")
            return other.samples
        return other

    def __add__(self, other):
        return GridFunction(self.domain, self.samples + self._lift(other))

    def __sub__(self, other):
        return GridFunction(self.domain, self.samples - self._lift(other))

    def __mul__(self, other):
        return GridFunction(self.domain, self.samples * self._lift(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.domain, self.samples / self._lift(other))

    def to_csv(self, path) -> None:
        if np.iscomplexobj(self.samples):
            raise ValueError("CSV serialization is for real-valued functions")
        xs = self.domain.cell_centers()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "value"])
            for x, v in zip(xs, self.samples):
                w.writerow([repr(float(x)), repr(float(v))])

    @classmethod
    def from_csv(cls, domain: Domain, path) -> "GridFunction":
        vals = []
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if header[:2] != ["x", "value"]:
                raise ValueError("expected 'x,value' header")
            for row in r:
                vals.append(float(row[1]))
        return cls(domain, np.asarray(vals))


# ---------------------------------------------------------------------------
# dyadic cubes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DyadicCube:
    """Cube of a (possibly shifted) dyadic lattice.

    lattice_id 0 is the base lattice: side 2**-level (units of the base
    length), index is the position.  lattice_id 1..3**n are the shifted
    lattices; their cubes have side 3 * 2**-level.  For n = 1 the index is a
    1-tuple; cube combinatorics are n-generic, sampled functions are n = 1.
    """

    lattice_id: int
    level: int
    index: tuple[int, ...]
    n: int = 1

    def __post_init__(self):
        if not (0 <= self.lattice_id <= 3 ** self.n):
            raise ValueError("lattice_id out of range")
        if self.level < 0:
            raise ValueError("negative level")

    @property
    def side(self) -> float:
        base = 1.0 if self.lattice_id == 0 else 3.0
        return base * 2.0 ** (-self.level)

    def lattice_shifts(self) -> tuple[int, ...]:
        """Per-axis shift class j in {0,1,2} identifying a shifted lattice."""
        if self.lattice_id == 0:
            raise ValueError("base lattice has no shift classes")
        out = []
        lid = self.lattice_id - 1
        for _ in range(self.n):
            out.append(lid % 3)
            lid //= 3
        return tuple(out)

    def residues(self) -> tuple[int, ...]:
        """Per-axis residue of the left corner at this level, in {0,1,2}."""
        return tuple((j << self.level) % 3 for j in self.lattice_shifts())

    def corner(self) -> tuple[float, ...]:
        """Left corner in units of the base length."""
        s = 2.0 ** (-self.level)
        if self.lattice_id == 0:
            return tuple(m * s for m in self.index)
        res = self.residues()
        return tuple((3 * t + r) * s for t, r in zip(self.index, res))

    def contains(self, other: "DyadicCube") -> bool:
        """Geometric containment (per-axis interval inclusion)."""
        a, b = self.corner(), other.corner()
        tol = 1e-12
        return all(
            a[i] - tol <= b[i] and b[i] + other.side <= a[i] + self.side + tol
            for i in range(self.n)
        )

    def interval(self, domain: Domain) -> Interval:
        if self.n != 1:
            raise ValueError("interval geometry is 1-D only")
        (c,) = self.corner()
        left = domain.left + c * domain.length
        return Interval(left, left + self.side * domain.length)

    def cell_bounds(self, domain: Domain) -> tuple[int, int, int]:
        """(start, end, full) in cell units; start/end unclipped, full = width."""
        if self.n != 1:
            raise ValueError("cells are 1-D only")
        L = domain.resolution_log2
        if self.level > L:
            raise ResolutionError("cube finer than the grid")
        c = 1 << (L - self.level)
        if self.lattice_id == 0:
            start = self.index[0] * c
            return start, start + c, c
        r = self.residues()[0]
        start = (3 * self.index[0] + r) * c
        return start, start + 3 * c, 3 * c


@dataclass(frozen=True)
class DyadicLattice:
    """Identifier of a lattice: 0 is the base, 1..3**n are the shifted ones."""

    id: int
    n: int = 1

    @property
    def shifts(self) -> tuple[int, ...]:
        if self.id == 0:
            return (0,) * self.n
        out, lid = [], self.id - 1
        for _ in range(self.n):
            out.append(lid % 3)
            lid //= 3
        return tuple(out)


def children(q: DyadicCube, domain: Domain | None = None) -> list[DyadicCube]:
    """The 2**n cubes of the next level partitioning q."""
    if domain is not None and q.level + 1 > domain.resolution_log2:
        raise ResolutionError(
            f"children at level {q.level + 1} exceed grid resolution "
            f"{domain.resolution_log2}"
        )
    if q.lattice_id == 0:
        per_axis = [(2 * m, 2 * m + 1) for m in q.index]
    else:
        per_axis = []
        res = q.residues()
        for t, r in zip(q.index, res):
            rp = (2 * r) % 3
            base = 2 * t + (2 * r - rp) // 3
            per_axis.append((base, base + 1))
    out = []
    for combo in _product(per_axis):
        out.append(DyadicCube(q.lattice_id, q.level + 1, combo, q.n))
    return out


def _product(axes: Sequence[tuple[int, int]]) -> Iterator[tuple[int, ...]]:
    if not axes:
        yield ()
        return
    for head in axes[0]:
        for rest in _product(axes[1:]):
            yield (head,) + rest


def dilate(q: DyadicCube, r: float, domain: Domain) -> Interval:
    """The interval rQ: same center, side r * l(Q).  Not generally dyadic."""
    if r <= 0:
        raise ValueError("dilation factor must be positive")
    iv = q.interval(domain)
    half = 0.5 * r * iv.length
    return Interval(iv.center - half, iv.center + half)


def shifted_lattices(n: int = 1) -> list[DyadicLattice]:
    """The 3**n shifted lattices (ids 1..3**n)."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return [DyadicLattice(i, n) for i in range(1, 3 ** n + 1)]


def triple_of_base_cube(level: int, index: tuple[int, ...], n: int = 1) -> DyadicCube:
    """The cube 3Q of a base-lattice Q, located in its unique shifted lattice."""
    shifts, pos = [], []
    inv = (1 << level) % 3  # (2**level) is self-inverse mod 3
    for m in index:
        r = (m - 1) % 3
        shifts.append((r * inv) % 3)
        pos.append((m - 1 - r) // 3)
    lid = 0
    for j in reversed(shifts):
        lid = 3 * lid + j
    return DyadicCube(lid + 1, level, tuple(pos), n)


# ---------------------------------------------------------------------------
# cube family: every cube of every lattice, levels 0..L, indexed for
# vectorised per-level reductions
# ---------------------------------------------------------------------------

@dataclass
class LevelEntry:
    lattice_id: int
    level: int
    t0: int                 # first enumerated cube index
    starts: np.ndarray      # unclipped cell starts, ascending
    width: int              # cells per (unclipped) cube
    lo: np.ndarray          # clipped starts
    hi: np.ndarray          # clipped ends
    cell_to_cube: np.ndarray

    @property
    def n_cubes(self) -> int:
        return len(self.starts)

    def clipped_sizes(self) -> np.ndarray:
        return self.hi - self.lo

    def cubes(self) -> list[DyadicCube]:
        return [
            DyadicCube(self.lattice_id, self.level, (self.t0 + i,))
            for i in range(self.n_cubes)
        ]


class CubeFamily:
    """All cubes of the base + shifted lattices, levels 0..L, on one domain."""

    def __init__(self, domain: Domain, include_shifted: bool = True):
        self.domain = domain
        self.include_shifted = include_shifted
        self.entries: list[LevelEntry] = []
        L = domain.resolution_log2
        N = domain.n_cells
        cells = np.arange(N)
        for level in range(L + 1):
            c = 1 << (L - level)
            starts = np.arange(0, N, c)
            self.entries.append(
                LevelEntry(0, level, 0, starts, c, starts.copy(),
                           starts + c, cells // c)
            )
        if include_shifted:
            for lid in (1, 2, 3):
                j = lid - 1  # per-axis shift class of the lattice
                for level in range(L + 1):
                    c = 1 << (L - level)
                    r = (j << level) % 3
                    w = 3 * c
                    t_min = -1 if r > 0 else 0
                    t_max = ((1 << level) - 1 - r) // 3
                    ts = np.arange(t_min, t_max + 1)
                    starts = (3 * ts + r) * c
                    lo = np.clip(starts, 0, N)
                    hi = np.clip(starts + w, 0, N)
                    keep = hi > lo
                    ts, starts, lo, hi = ts[keep], starts[keep], lo[keep], hi[keep]
                    c2c = (cells - r * c) // w - ts[0]
                    self.entries.append(
                        LevelEntry(lid, level, int(ts[0]), starts, w, lo, hi, c2c)
                    )

    # -- reductions ---------------------------------------------------------

    @staticmethod
    def prefix(samples: np.ndarray) -> np.ndarray:
        out = np.empty(len(samples) + 1, dtype=samples.dtype if samples.dtype.kind == "c" else float)
        out[0] = 0.0
        np.cumsum(samples, out=out[1:])
        return out

    def segment_sums(self, entry: LevelEntry, csum: np.ndarray) -> np.ndarray:
        return csum[entry.hi] - csum[entry.lo]

    def segment_min(self, entry: LevelEntry, values: np.ndarray) -> np.ndarray:
        return np.minimum.reduceat(values, entry.lo)

    def segment_max(self, entry: LevelEntry, values: np.ndarray) -> np.ndarray:
        return np.maximum.reduceat(values, entry.lo)

    def cube_measure(self, entry: LevelEntry, mode: str | None = None) -> np.ndarray:
        """Denominator cell counts per cube under the boundary mode."""
        mode = mode or self.domain.boundary_mode
        if mode == "zero-extend":
            return np.full(entry.n_cubes, entry.width, dtype=float)
        return entry.clipped_sizes().astype(float)

    def all_cubes(self) -> Iterator[DyadicCube]:
        for e in self.entries:
            yield from e.cubes()

    def scatter_max(self, per_entry_values: Iterable[np.ndarray]) -> np.ndarray:
        """Pointwise max over all cubes containing each cell."""
        out = np.full(self.domain.n_cells, -np.inf)
        for entry, vals in zip(self.entries, per_entry_values):
            np.maximum(out, vals[entry.cell_to_cube], out=out)
        return out


def average(f: GridFunction, q, r: float = 1.0) -> float:
    """<|f|^r>_Q ** (1/r), exact cell-weighted mean over Q.

    Q may be a DyadicCube or an Interval.  Under zero-extension the mean is
    taken over the full |Q| even when Q sticks out of the domain.
    """
    if r <= 0:
        raise ValueError("power must be positive")
    dom = f.domain
    if isinstance(q, DyadicCube):
        start, end, full = q.cell_bounds(dom)
        lo, hi = max(start, 0), min(end, dom.n_cells)
    else:
        lo, hi = dom.cell_range(q)
        full = max(int(round(q.length / dom.h)), hi - lo)
    if hi <= lo:
        raise ValueError("cube does not meet the domain")
    denom = full if dom.boundary_mode == "zero-extend" else hi - lo
    m = np.sum(np.abs(f.samples[lo:hi]) ** r) / denom
    return float(m ** (1.0 / r))
