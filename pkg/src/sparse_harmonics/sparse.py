"""Sparse families, Carleson packing, sparse/commutator operators, the
oscillation stopping-time family, and counting-function decay.

Families live inside a single lattice, so containment is laminar and all
measures are exact cell counts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .grid import (
    Domain,
    DyadicCube,
    GridFunction,
    ResolutionError,
    average,
    children,
    dilate,
)

__all__ = [
    "SparseFamily",
    "verify_sparse",
    "optimal_eta",
    "sparse_operator",
    "commutator_sparse_form",
    "oscillation_sparse",
    "counting_decay",
    "write_decay_csv",
]


@dataclass(frozen=True)
class SparseFamily:
    cubes: tuple
    eta: float
    domain: Domain

    def __post_init__(self):
        if not self.cubes:
            raise ValueError("family is empty")
        if not (0.0 < self.eta < 1.0):
            raise ValueError("sparseness must lie in (0,1)")
        lids = {q.lattice_id for q in self.cubes}
        if len(lids) > 1:
            raise ValueError("a sparse family lives in one lattice")

    @classmethod
    def make(cls, cubes, eta: float, domain: Domain) -> "SparseFamily":
        uniq = sorted(set(cubes), key=lambda q: (q.level, q.index))
        return cls(tuple(uniq), eta, domain)

    def cell_sets(self) -> list[tuple[int, int]]:
        """Clipped (lo, hi) cell ranges, in family order."""
        N = self.domain.n_cells
        out = []
        for q in self.cubes:
            s, e, _ = q.cell_bounds(self.domain)
            out.append((max(s, 0), min(e, N)))
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lattice_id", "level", "index"])
            for q in self.cubes:
                w.writerow([q.lattice_id, q.level, q.index[0]])

    @classmethod
    def from_csv(cls, path, eta: float, domain: Domain) -> "SparseFamily":
        cubes = []
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if header != ["lattice_id", "level", "index"]:
                raise ValueError("expected 'lattice_id,level,index' header")
            for row in r:
                cubes.append(DyadicCube(int(row[0]), int(row[1]), (int(row[2]),)))
        return cls.make(cubes, eta, domain)


def verify_sparse(fam: SparseFamily) -> tuple[bool, float, float]:
    """(is_sparse, best_eta, carleson_constant), all by exact cell counts.

    best_eta uses the canonical exclusion sets E(Q) = Q minus the union of
    the family's strict subcubes of Q; the Carleson constant is
    sup_Q (1/|Q|) sum_{P in S, P subset Q} |P|.
    """
    cells = fam.cell_sets()
    N = fam.domain.n_cells
    best_eta = 1.0
    carleson = 0.0
    sizes = [hi - lo for lo, hi in cells]
    for i, (lo, hi) in enumerate(cells):
        if hi <= lo:
            raise ValueError("cube with empty domain intersection")
        covered = np.zeros(hi - lo, dtype=bool)
        packing = hi - lo
        qi = fam.cubes[i]
        for j, (lo2, hi2) in enumerate(cells):
            if j == i or not (lo <= lo2 and hi2 <= hi):
                continue
            # equal clipped extents can only mean a deeper boundary cube
            if (lo2, hi2) == (lo, hi) and fam.cubes[j].level <= qi.level:
                continue
            covered[lo2 - lo : hi2 - lo] = True
            packing += hi2 - lo2
        best_eta = min(best_eta, float((~covered).sum()) / sizes[i])
        carleson = max(carleson, packing / sizes[i])
    return best_eta >= fam.eta - 1e-12, best_eta, carleson


def optimal_eta(fam: SparseFamily) -> float:
    """Best achievable sparseness over all disjoint choices E(Q) subset Q.

    Solved as a linear program on fractional cell masses: maximize eta
    subject to sum_c x[Q,c] >= eta |Q|, sum_Q x[Q,c] <= 1, support in Q.
    Independent of verify_sparse; used to cross-check the packing bound.
    """
    from scipy.optimize import linprog

    cells = fam.cell_sets()
    lo_all = min(lo for lo, _ in cells)
    hi_all = max(hi for _, hi in cells)
    width = hi_all - lo_all
    k = len(cells)
    nvar = k * width + 1  # x[Q, c] row-major, then eta
    c_obj = np.zeros(nvar)
    c_obj[-1] = -1.0
    a_ub = []
    b_ub = []
    for i, (lo, hi) in enumerate(cells):  # eta |Q| - sum_c x <= 0
        row = np.zeros(nvar)
        row[i * width + (lo - lo_all) : i * width + (hi - lo_all)] = -1.0
        row[-1] = float(hi - lo)
        a_ub.append(row)
        b_ub.append(0.0)
    for c in range(width):  # sum_Q x[Q,c] <= 1
        row = np.zeros(nvar)
        for i in range(k):
            row[i * width + c] = 1.0
        a_ub.append(row)
        b_ub.append(1.0)
    bounds = []
    for i, (lo, hi) in enumerate(cells):
        for c in range(width):
            inside = lo - lo_all <= c < hi - lo_all
            bounds.append((0.0, 1.0 if inside else 0.0))
    bounds.append((0.0, 1.0))
    res = linprog(c_obj, A_ub=np.array(a_ub), b_ub=np.array(b_ub), bounds=bounds)
    if not res.success:
        raise RuntimeError(f"packing LP failed: {res.message}")
    return float(res.x[-1])


def sparse_operator(
    fam: SparseFamily, r: float, f: GridFunction, dilation: float = 1.0
) -> GridFunction:
    """sum_Q <|f|^r>_{dQ}^{1/r} chi_Q, with d the dilation (1 or 3)."""
    if r < 1:
        raise ValueError("need r >= 1")
    if dilation not in (1.0, 3.0):
        raise ValueError("dilation must be 1 or 3")
    dom = fam.domain
    out = np.zeros(dom.n_cells)
    for q, (lo, hi) in zip(fam.cubes, fam.cell_sets()):
        target = q if dilation == 1.0 else dilate(q, 3.0, dom)
        out[lo:hi] += average(f, target, r)
    return GridFunction(dom, out)


def commutator_sparse_form(
    fam: SparseFamily,
    bs: Sequence[GridFunction],
    fs: Sequence[GridFunction],
    gammas: Sequence[int],
    variant: str = "global",
) -> GridFunction:
    """The commutator sparse sum for one choice of branch vector.

    variant "global" uses plain Q averages everywhere; "local3Q" takes all
    averages (including the b recentering) over 3Q.  The first len(bs)
    slots carry the oscillation factors, the rest enter through <|f_s|>.
    """
    l, m = len(bs), len(fs)
    if l > m:
        raise ValueError("more symbols than entries")
    if len(gammas) != l or any(g not in (1, 2) for g in gammas):
        raise ValueError("branch vector must be in {1,2}^l")
    if variant not in ("global", "local3Q"):
        raise ValueError(f"unknown variant {variant!r}")
    dom = fam.domain
    out = np.zeros(dom.n_cells)
    for q, (lo, hi) in zip(fam.cubes, fam.cell_sets()):
        avg_target = q if variant == "global" else dilate(q, 3.0, dom)
        chunk = np.ones(hi - lo)
        scalar = 1.0
        for s in range(l):
            b, g = bs[s], gammas[s]
            b_avg = _signed_average(b, avg_target, dom)
            if g == 1:
                chunk = chunk * np.abs(b.samples[lo:hi] - b_avg)
                scalar *= average(fs[s], avg_target, 1.0)
            else:
                osc = GridFunction(dom, np.abs(b.samples - b_avg) * np.abs(fs[s].samples))
                scalar *= average(osc, avg_target, 1.0)
        for s in range(l, m):
            scalar *= average(fs[s], avg_target, 1.0)
        out[lo:hi] += scalar * chunk
    return GridFunction(dom, out)


def _signed_average(f: GridFunction, q, dom: Domain) -> float:
    """<f>_Q with sign, over Q intersected with the domain.

    Used for recentering symbols b: a symbol is defined everywhere, so a
    cube leaking past the boundary averages what is actually known, rather
    than zero-padding (which would make constants non-constant).
    """
    if isinstance(q, DyadicCube):
        s, e, _ = q.cell_bounds(dom)
        lo, hi = max(s, 0), min(e, dom.n_cells)
    else:
        lo, hi = dom.cell_range(q)
    return float(f.samples[lo:hi].sum() / (hi - lo))


def oscillation_sparse(
    b: GridFunction, fam: SparseFamily, certify: bool = True
) -> tuple[SparseFamily, dict]:
    """Augment the family so cube oscillations of b are controlled on it.

    From each cube Q the stopping children are the maximal subcubes R with
    <|b - <b>_Q|>_R > 2^{n+1} <|b - <b>_Q|>_Q, selected greedily top-down;
    recursion adds them to the family.  The returned certificate checks,
    cell by cell, that on each family cube Q

        |b - <b>_Q| <= 2^{n+2} sum_{R in S~, R subset Q} <|b - <b>_R|>_R chi_R.
    """
    dom = fam.domain
    n = 1
    collected = set(fam.cubes)
    queue = list(fam.cubes)
    while queue:
        q = queue.pop()
        base = _osc_avg(b, q, dom)
        if base == 0.0:
            continue
        thresh = 2.0 ** (n + 1) * base
        stack = [q]
        while stack:
            cur = stack.pop()
            if cur.level >= dom.resolution_log2:
                if cur is not q and _osc_avg_about(b, cur, q, dom) > thresh:
                    raise ResolutionError(
                        "stopping recursion hit the grid floor at "
                        f"level {cur.level} under cube {q}"
                    )
                continue
            for ch in children(cur, dom):
                s, e, _ = ch.cell_bounds(dom)
                if min(e, dom.n_cells) <= max(s, 0):
                    continue
                if _osc_avg_about(b, ch, q, dom) > thresh:
                    if ch not in collected:
                        collected.add(ch)
                        queue.append(ch)
                else:
                    stack.append(ch)
    eta_out = fam.eta / (2.0 * (1.0 + fam.eta))
    out = SparseFamily.make(collected, eta_out, dom)
    cert: dict = {"checked": False}
    if certify:
        cert = _certify_oscillation(b, out)
    return out, cert


def _osc_avg(b: GridFunction, q, dom) -> float:
    m = _signed_average(b, q, dom)
    dev = GridFunction(dom, np.abs(b.samples - m))
    return average(dev, q, 1.0)


def _osc_avg_about(b: GridFunction, r, q, dom) -> float:
    """<|b - <b>_Q|>_R: oscillation of b over R, recentered at Q's mean."""
    m = _signed_average(b, q, dom)
    dev = GridFunction(dom, np.abs(b.samples - m))
    return average(dev, r, 1.0)


def _certify_oscillation(b: GridFunction, fam: SparseFamily) -> dict:
    dom = fam.domain
    n = 1
    cells = fam.cell_sets()
    osc = [
        average(GridFunction(dom, np.abs(b.samples - _signed_average(b, q, dom))), q, 1.0)
        for q in fam.cubes
    ]
    worst = -np.inf
    for i, (q, (lo, hi)) in enumerate(zip(fam.cubes, cells)):
        lhs = np.abs(b.samples[lo:hi] - _signed_average(b, q, dom))
        rhs = np.zeros(hi - lo)
        for j, (lo2, hi2) in enumerate(cells):
            if lo <= lo2 and hi2 <= hi:
                rhs[lo2 - lo : hi2 - lo] += osc[j]
        rhs = 2.0 ** (n + 2) * rhs
        with np.errstate(divide="ignore", invalid="ignore"):
            gap = lhs - rhs
        worst = max(worst, float(gap.max()))
    return {"checked": True, "ok": worst <= 1e-10, "worst_gap": worst}


def counting_decay(
    fam: SparseFamily, q0: DyadicCube, t_grid: Optional[np.ndarray] = None
) -> dict:
    """Super-level measures of the counting function on Q0 and their decay.

    Measures |{x in Q0 : sum_{Q' in S, Q' subset Q0} chi_{Q'} > t}| exactly,
    then fits log measure = log c - alpha t on the strictly positive range.
    """
    dom = fam.domain
    s0, e0, _ = q0.cell_bounds(dom)
    lo0, hi0 = max(s0, 0), min(e0, dom.n_cells)
    count = np.zeros(hi0 - lo0)
    inside = 0
    for lo, hi in fam.cell_sets():
        if lo0 <= lo and hi <= hi0:
            count[lo - lo0 : hi - lo0] += 1.0
            inside += 1
    if inside == 0:
        raise ValueError("family has no cubes inside the root cube")
    if t_grid is None:
        t_grid = np.arange(0.0, count.max() + 1.0)
    t_grid = np.asarray(t_grid, dtype=float)
    h = dom.h
    measures = np.array([(count > t).sum() * h for t in t_grid])
    pos = measures > 0
    t_fit = t_grid[pos]
    logm = np.log(measures[pos])
    result = {
        "t": t_grid,
        "measure": measures,
        "degenerate": len(t_fit) < 2 or np.ptp(logm) < 1e-12,
    }
    if result["degenerate"]:
        result["fit"] = None
        result["model"] = np.full_like(t_grid, np.nan)
        return result
    slope, intercept = np.polyfit(t_fit, logm, 1)
    pred = slope * t_fit + intercept
    ss_res = float(((logm - pred) ** 2).sum())
    ss_tot = float(((logm - logm.mean()) ** 2).sum())
    result["fit"] = {
        "c": float(np.exp(intercept)),
        "alpha": float(-slope),
        "r2": 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0,
    }
    result["model"] = np.where(
        measures > 0, np.exp(intercept + slope * t_grid), np.nan
    )
    return result


def write_decay_csv(path, result: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "measure", "model"])
        for t, m, mo in zip(result["t"], result["measure"], result["model"]):
            w.writerow([repr(float(t)), repr(float(m)), repr(float(mo))])
