"""Concrete singular operators at n = 1 and the BMO toolkit.

Principal values are discretized by a symmetric cell skip around the
diagonal, which preserves odd-kernel cancellation exactly on the uniform
grid.  The multilinear kernels are evaluated by cell quadrature; inner
interval integrals collapse to prefix-sum differences, so the only
discretization error is the quadrature of the singular factor itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.signal import fftconvolve

from .grid import CubeFamily, Domain, GridFunction
from .maximal import family_for
from .orlicz import Measure, exp_power, luxemburg_norm

__all__ = [
    "KernelOperator",
    "BmoFunction",
    "CostError",
    "hilbert_transform",
    "calderon_kernel",
    "calderon_apply",
    "stein_square_function",
    "iterated_commutator",
    "first_order_commutator_kernel",
    "bmo_norm",
    "weighted_bmo_norm",
    "log_dini_norm",
]


class CostError(RuntimeError):
    """Quadrature refused: cost grows past the desk-scale budget."""


@dataclass(frozen=True)
class KernelOperator:
    kind: str = "hilbert"  # hilbert | calderon | direct_kernel
    m: int = 1
    kernel: Optional[Callable] = None
    pv_cutoff: int = 1

    def __post_init__(self):
        if self.kind not in ("hilbert", "calderon", "direct_kernel"):
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.pv_cutoff < 1:
            raise ValueError("pv_cutoff must be >= 1")
        if self.kind == "direct_kernel" and self.kernel is None:
            raise ValueError("direct_kernel needs a kernel callable")

    def apply(self, fs: Sequence[GridFunction]) -> GridFunction:
        if self.kind == "hilbert":
            (f,) = fs
            return hilbert_transform(f, self.pv_cutoff)
        if self.kind == "calderon":
            return calderon_apply(fs, self.pv_cutoff)
        return _direct_kernel_apply(self.kernel, fs, self.pv_cutoff)


def hilbert_transform(f: GridFunction, pv_cutoff: int = 1) -> GridFunction:
    """Discrete principal value (1/pi) sum_{|i-j| >= cutoff} f_j h/(x_i-x_j).

    The cell width cancels, leaving a Toeplitz convolution with 1/k.
    """
    if pv_cutoff < 1:
        raise ValueError("pv_cutoff must be >= 1")
    N = f.domain.n_cells
    k = np.arange(-(N - 1), N)
    with np.errstate(divide="ignore"):
        ker = np.where(np.abs(k) >= pv_cutoff, 1.0 / np.where(k == 0, 1, k), 0.0)
    out = fftconvolve(f.samples.astype(float), ker)[N - 1 : 2 * N - 1]
    return GridFunction(f.domain, out / math.pi)


def calderon_kernel(x: float, ys: Sequence[float]) -> float:
    """K(x, y_1..y_{m+1}): signed power of the last gap times indicators
    confining every other y inside the open interval between x and y_{m+1}."""
    ys = list(ys)
    if len(ys) < 2:
        raise ValueError("kernel takes at least two y arguments")
    m = len(ys) - 1
    ylast = ys[-1]
    if ylast == x:
        raise ValueError("kernel is singular at y_{m+1} = x")
    lo, hi = min(x, ylast), max(x, ylast)
    for y in ys[:-1]:
        if not (lo < y < hi):
            return 0.0
    sign = (-1.0) ** (m * (1 if ylast - x > 0 else 0))
    return sign / (x - ylast) ** (m + 1)


_CALDERON_CHUNK = 256


def calderon_apply(fs: Sequence[GridFunction], pv_cutoff: int = 1) -> GridFunction:
    """(m+1)-linear kernel quadrature of the commutator-type kernel.

    The y_1..y_m integrals over the open interval between x and y_{m+1}
    separate into prefix-sum differences; the remaining y_{m+1} sum runs
    with the PV cutoff.
    """
    if len(fs) < 2:
        raise ValueError("need m+1 >= 2 inputs")
    dom = fs[0].domain
    m = len(fs) - 1
    if m + 1 > 3 and dom.resolution_log2 > 10:
        raise CostError(
            f"{m + 1}-linear quadrature at L={dom.resolution_log2} refused"
        )
    N = dom.n_cells
    h = dom.h
    csums = [np.concatenate([[0.0], np.cumsum(f.samples)]) * h for f in fs[:-1]]
    flast = fs[-1].samples.astype(float)
    idx = np.arange(N)
    out = np.zeros(N)
    for start in range(0, N, _CALDERON_CHUNK):
        rows = idx[start : start + _CALDERON_CHUNK]
        i = rows[:, None]
        j = idx[None, :]
        gap = (i - j).astype(float) * h  # x_i - y_j
        keep = np.abs(i - j) >= pv_cutoff
        lo = np.minimum(i, j)
        hi = np.maximum(i, j)
        inner = np.ones(gap.shape)
        for cs in csums:
            inner *= cs[hi] - cs[lo + 1]  # cells strictly between centers
        sign = np.where((j > i) & (m % 2 == 1), -1.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = sign * inner / gap ** (m + 1)
        vals = np.where(keep, vals, 0.0)
        out[rows] = vals @ flast * h
    return GridFunction(dom, out)


def _direct_kernel_apply(
    kernel: Callable, fs: Sequence[GridFunction], pv_cutoff: int
) -> GridFunction:
    """Literal nested quadrature; only viable for tiny grids and m <= 2."""
    dom = fs[0].domain
    N = dom.n_cells
    if len(fs) > 3 or (len(fs) > 2 and dom.resolution_log2 > 10):
        raise CostError("direct quadrature refused at this size")
    xs = dom.cell_centers()
    h = dom.h
    out = np.zeros(N)
    samples = [f.samples for f in fs]
    for i, x in enumerate(xs):
        acc = 0.0
        for jlast in range(N):
            if abs(i - jlast) < pv_cutoff:
                continue
            w_last = samples[-1][jlast]
            if w_last == 0.0:
                continue
            if len(fs) == 1:
                acc += kernel(x, [xs[jlast]]) * w_last * h
                continue
            for j1 in range(N):
                v = samples[0][j1]
                if v == 0.0:
                    continue
                if len(fs) == 2:
                    acc += kernel(x, [xs[j1], xs[jlast]]) * v * w_last * h ** 2
                else:
                    for j2 in range(N):
                        v2 = samples[1][j2]
                        if v2 != 0.0:
                            acc += (
                                kernel(x, [xs[j1], xs[j2], xs[jlast]])
                                * v * v2 * w_last * h ** 3
                            )
        out[i] = acc
    return GridFunction(dom, out)


def stein_square_function(
    f: GridFunction, alpha: float, n_scales: int = 128
) -> GridFunction:
    """Square function over log-spaced scales of the band-edge multiplier
    (|xi|^2/t^2)(1 - |xi|^2/t^2)_+^{alpha-1} on the periodized grid."""
    if alpha <= 0.5:
        raise ValueError("need alpha > 1/2")
    N = f.domain.n_cells
    xi = np.abs(np.fft.fftfreq(N) * N)  # integer wave numbers
    ts = np.logspace(0.0, math.log10(N / 2.0), n_scales)
    dlog = math.log(ts[-1] / ts[0]) / (n_scales - 1)
    fhat = np.fft.fft(f.samples)
    acc = np.zeros(N)
    for t in ts:
        s2 = (xi / t) ** 2
        with np.errstate(invalid="ignore"):
            mult = np.where(s2 < 1.0, s2 * np.maximum(1.0 - s2, 0.0) ** (alpha - 1.0), 0.0)
        conv = np.fft.ifft(fhat * mult)
        acc += np.abs(conv) ** 2 * dlog
    return GridFunction(f.domain, np.sqrt(acc))


@dataclass
class BmoFunction:
    """Symbol with cached oscillation norm."""

    b: GridFunction
    _norm: Optional[float] = None

    @property
    def bmo_norm(self) -> float:
        if self._norm is None:
            self._norm = bmo_norm(self.b)
        return self._norm

    def weighted_norm(self, w: GridFunction, p: float) -> float:
        return weighted_bmo_norm(self.b, w, p)


def _cube_means(fam: CubeFamily, entry, samples: np.ndarray) -> np.ndarray:
    cs = fam.prefix(samples.astype(float))
    return fam.segment_sums(entry, cs) / entry.clipped_sizes()


def bmo_norm(b: GridFunction) -> float:
    """sup_Q <|b - <b>_Q|>_Q over the full cube family."""
    fam = family_for(b.domain)
    best = 0.0
    for e in fam.entries:
        means = _cube_means(fam, e, b.samples)
        dev = np.abs(b.samples - means[e.cell_to_cube])
        osc = fam.segment_sums(e, fam.prefix(dev)) / e.clipped_sizes()
        best = max(best, float(osc.max()))
    return best


def weighted_bmo_norm(b: GridFunction, w: GridFunction, p: float) -> float:
    """sup_Q ((1/w(Q)) int_Q |b - <b>_Q|^p w)^{1/p}; the recentering mean
    is unweighted, as in the defining display."""
    if p <= 0:
        raise ValueError("need p > 0")
    fam = family_for(b.domain)
    cs_w = fam.prefix(w.samples.astype(float))
    best = 0.0
    for e in fam.entries:
        means = _cube_means(fam, e, b.samples)
        dev = np.abs(b.samples - means[e.cell_to_cube]) ** p * w.samples
        num = fam.segment_sums(e, fam.prefix(dev))
        den = fam.segment_sums(e, cs_w)
        best = max(best, float((num / den).max()))
    return best ** (1.0 / p)


def iterated_commutator(
    T: KernelOperator,
    bs: Sequence[GridFunction],
    slots: Sequence[int],
    fs: Sequence[GridFunction],
    orders: Optional[Sequence[int]] = None,
) -> GridFunction:
    """Commutator with factors (b_s(x) - b_s(y_{slot_s}))^{k_s} inside T.

    Expanding each factor binomially turns the kernel integral into an
    exact combination of plain T applications with b-powers multiplied
    into the corresponding slots; on cell quadrature the identity is exact,
    so this is the kernel form evaluated slot by slot.
    """
    if len(bs) != len(slots):
        raise ValueError("need one slot per symbol")
    if any(not (0 <= s < len(fs)) for s in slots):
        raise ValueError("slot out of range")
    orders = list(orders) if orders is not None else [1] * len(bs)
    if len(orders) != len(bs) or any(k < 1 for k in orders):
        raise ValueError("orders must be positive, one per symbol")
    dom = fs[0].domain
    out = np.zeros(dom.n_cells, dtype=complex)
    ranges = [range(k + 1) for k in orders]

    def rec(depth, coeff, prefactor, mults):
        nonlocal out
        if depth == len(bs):
            args = []
            for i, f in enumerate(fs):
                args.append(GridFunction(dom, f.samples * mults[i]))
            out = out + coeff * prefactor * T.apply(args).samples
            return
        b = bs[depth].samples
        k = orders[depth]
        for j in ranges[depth]:
            c = coeff * math.comb(k, j) * (-1.0) ** j
            pf = prefactor * b ** (k - j)
            m2 = list(mults)
            m2[slots[depth]] = m2[slots[depth]] * b ** j
            rec(depth + 1, c, pf, m2)

    rec(0, 1.0, np.ones(dom.n_cells), [np.ones(dom.n_cells)] * len(fs))
    if not any(np.iscomplexobj(f.samples) for f in fs):
        out = out.real
    return GridFunction(dom, out)


def first_order_commutator_kernel(
    b: GridFunction, f: GridFunction, pv_cutoff: int = 1
) -> GridFunction:
    """Direct O(N^2) evaluation of (1/pi) sum (b_i - b_j) f_j / (i - j):
    the independent oracle for the expansion path."""
    N = f.domain.n_cells
    i = np.arange(N)[:, None]
    j = np.arange(N)[None, :]
    with np.errstate(divide="ignore"):
        ker = np.where(np.abs(i - j) >= pv_cutoff, 1.0 / np.where(i == j, 1, i - j), 0.0)
    diff = b.samples[:, None] - b.samples[None, :]
    return GridFunction(f.domain, (ker * diff) @ f.samples / math.pi)


def log_dini_norm(omega: Callable[[float], float], a: float, m: int) -> float:
    """int_0^1 omega(t)^a / t * (1 + log(1/t))^m dt via the substitution
    t = e^{-u}; reports inf when the integrand fails to decay."""
    if a <= 0 or m < 0:
        raise ValueError("need a > 0 and m >= 0")

    def g(u):
        return omega(math.exp(-u)) ** a * (1.0 + u) ** m

    tail_probe = max(g(80.0), g(120.0))
    if not math.isfinite(tail_probe) or tail_probe > 1e-8:
        return math.inf
    total = 0.0
    for lo, hi in ((0.0, 1.0), (1.0, 10.0), (10.0, 120.0)):
        val, _ = quad(g, lo, hi, epsabs=1e-9, limit=200)
        total += val
    return total
