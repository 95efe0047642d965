"""Maximal operators: Hardy-Littlewood, power, iterated, Orlicz-norm,
weighted dyadic, and the multilinear variants.

The sup over "all cubes containing x" is realized over the base dyadic
lattice plus the three shifted lattices; that family reaches every point
at every scale with bounded distortion, and all downstream comparisons
are ratio-based so the proxy constant is tracked, not hidden.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .grid import CubeFamily, Domain, GridFunction, LevelEntry
from .orlicz import YoungFunction, llog

__all__ = ["MaximalVariant", "maximal", "multilinear_maximal", "family_for"]

_FAMILIES: dict[Domain, CubeFamily] = {}


def family_for(domain: Domain) -> CubeFamily:
    fam = _FAMILIES.get(domain)
    if fam is None:
        fam = _FAMILIES[domain] = CubeFamily(domain)
    return fam


@dataclass(frozen=True)
class MaximalVariant:
    kind: str = "hl"  # hl | power | iterated | orlicz | weighted_dyadic
    r: float = 1.0
    k: int = 1
    phi: Optional[YoungFunction] = None
    weight: Optional[GridFunction] = None
    cube_scope: str = "dyadic+shifted"

    def __post_init__(self):
        if self.kind not in ("hl", "power", "iterated", "orlicz", "weighted_dyadic"):
            raise ValueError(f"unknown maximal kind {self.kind!r}")
        if self.kind == "power" and self.r < 1:
            raise ValueError("power must satisfy r >= 1")
        if self.kind == "iterated" and self.k < 1:
            raise ValueError("iteration count must be >= 1")
        if self.kind == "orlicz" and self.phi is None:
            raise ValueError("orlicz variant needs a growth function")
        if self.kind == "weighted_dyadic" and self.weight is None:
            raise ValueError("weighted variant needs a weight")
        if self.cube_scope not in ("dyadic", "dyadic+shifted"):
            raise ValueError(f"unknown cube scope {self.cube_scope!r}")


def _entries(fam: CubeFamily, scope: str) -> list[LevelEntry]:
    if scope == "dyadic":
        return [e for e in fam.entries if e.lattice_id == 0]
    return fam.entries


def _avg_per_cube(fam: CubeFamily, entry: LevelEntry, csum: np.ndarray) -> np.ndarray:
    return fam.segment_sums(entry, csum) / fam.cube_measure(entry)


def luxemburg_per_cube(
    fam: CubeFamily,
    entry: LevelEntry,
    absf: np.ndarray,
    phi: YoungFunction,
    inv1: float,
    n_iter: int = 48,
) -> np.ndarray:
    """Luxemburg norms of f over every cube of one level, bisected in bulk."""
    denom = fam.cube_measure(entry)
    vmax = fam.segment_max(entry, absf)
    vmean = fam.segment_sums(entry, fam.prefix(absf)) / denom
    lam_hi = vmax / inv1
    lam_lo = vmean / inv1
    live = vmax > 0
    cell_cube = entry.cell_to_cube
    for _ in range(n_iter):
        mid = 0.5 * (lam_lo + lam_hi)
        safe = np.where(mid > 0, mid, 1.0)
        vals = phi(absf / safe[cell_cube])
        modular = fam.segment_sums(entry, fam.prefix(vals)) / denom
        ok = modular <= 1.0
        lam_hi = np.where(live & ok, mid, lam_hi)
        lam_lo = np.where(live & ~ok, mid, lam_lo)
    return np.where(live, lam_hi, 0.0)


def maximal(f: GridFunction, v: MaximalVariant = MaximalVariant()) -> GridFunction:
    dom = f.domain
    if v.kind == "iterated":
        out = f
        base = MaximalVariant("hl", cube_scope=v.cube_scope)
        for _ in range(v.k):
            out = maximal(out, base)
        return out
    fam = family_for(dom)
    absf = np.abs(f.samples).astype(float)
    per_entry = []
    if v.kind == "weighted_dyadic":
        w = v.weight.samples.astype(float)
        cs_fw = fam.prefix(absf * w)
        cs_w = fam.prefix(w)
        entries = [e for e in fam.entries if e.lattice_id == 0]
        for e in entries:
            per_entry.append(fam.segment_sums(e, cs_fw) / fam.segment_sums(e, cs_w))
        out = np.full(dom.n_cells, -np.inf)
        for e, vals in zip(entries, per_entry):
            np.maximum(out, vals[e.cell_to_cube], out=out)
        return GridFunction(dom, out)
    entries = _entries(fam, v.cube_scope)
    if v.kind == "hl":
        cs = fam.prefix(absf)
        per_entry = [_avg_per_cube(fam, e, cs) for e in entries]
    elif v.kind == "power":
        cs = fam.prefix(absf ** v.r)
        per_entry = [_avg_per_cube(fam, e, cs) ** (1.0 / v.r) for e in entries]
    else:  # orlicz
        inv1 = float(np.atleast_1d(v.phi.inverse(np.array([1.0])))[0])
        per_entry = [
            luxemburg_per_cube(fam, e, absf, v.phi, inv1) for e in entries
        ]
    out = np.full(dom.n_cells, -np.inf)
    for e, vals in zip(entries, per_entry):
        np.maximum(out, vals[e.cell_to_cube], out=out)
    return GridFunction(dom, out)


def multilinear_maximal(
    fs: Sequence[GridFunction],
    flavor: str = "plain",
    r: float = 1.0,
    l: Optional[int] = None,
    cube_scope: str = "dyadic+shifted",
) -> GridFunction:
    """sup over cubes of a product functional of the m inputs.

    flavor "plain": product of averages; "power": product of L^r averages;
    "llogl": product of L log L norms; "mixed": L log L norms for the first
    l slots, plain averages for the rest.
    """
    if not fs:
        raise ValueError("need at least one function")
    if flavor not in ("plain", "power", "llogl", "mixed"):
        raise ValueError(f"unknown flavor {flavor!r}")
    if flavor == "mixed":
        if l is None or not (1 <= l <= len(fs)):
            raise ValueError("mixed flavor needs 1 <= l <= m")
    dom = fs[0].domain
    fam = family_for(dom)
    entries = _entries(fam, cube_scope)
    phi = llog(1.0)
    inv1 = float(np.atleast_1d(phi.inverse(np.array([1.0])))[0])
    out = np.full(dom.n_cells, -np.inf)
    absfs = [np.abs(f.samples).astype(float) for f in fs]
    for e in entries:
        prod = np.ones(e.n_cubes)
        for i, af in enumerate(absfs):
            use_llogl = flavor == "llogl" or (flavor == "mixed" and i < l)
            if use_llogl:
                prod *= luxemburg_per_cube(fam, e, af, phi, inv1)
            elif flavor == "power":
                prod *= (
                    fam.segment_sums(e, fam.prefix(af ** r)) / fam.cube_measure(e)
                ) ** (1.0 / r)
            else:
                prod *= fam.segment_sums(e, fam.prefix(af)) / fam.cube_measure(e)
        np.maximum(out, prod[e.cell_to_cube], out=out)
    return GridFunction(dom, out)
