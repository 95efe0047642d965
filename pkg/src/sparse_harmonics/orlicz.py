"""Young functions, Luxemburg norms and the growth-index toolkit.

Built-in growth functions carry closed-form inverses and complementary
functions where they exist; everything else falls back on monotone
bisection or a refined discrete sup, so the numeric paths are only a
backstop for the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .grid import Domain, DyadicCube, GridFunction, average

__all__ = [
    "average",
    "YoungFunction",
    "Measure",
    "power",
    "power_over_p",
    "llog",
    "exp_power",
    "phi_power",
    "luxemburg_norm",
    "generalized_holder",
    "young_pair_checks",
    "dilation_indices",
    "delta2_constant",
]


@dataclass
class YoungFunction:
    """A growth function in the class Phi: phi(0)=0, nondecreasing, -> inf."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    inverse_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    complementary_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    i_lower: Optional[float] = None
    I_upper: Optional[float] = None
    delta2_C1: Optional[float] = None
    submultiplicative: bool = False
    is_nfunction: bool = True

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore"):
            return self.fn(t)

    def inverse(self, t):
        if self.inverse_fn is not None:
            return self.inverse_fn(np.asarray(t, dtype=float))
        return _numeric_inverse(self, np.asarray(t, dtype=float))

    def conjugate_eval(self, t):
        if self.complementary_fn is not None:
            return self.complementary_fn(np.asarray(t, dtype=float))
        return _conjugate_eval(self, np.asarray(t, dtype=float))

    def complementary(self) -> "YoungFunction":
        if self.complementary_fn is not None:
            return YoungFunction(f"conj({self.name})", self.complementary_fn)
        return YoungFunction(f"conj({self.name})", lambda t: _conjugate_eval(self, t))


def _numeric_inverse(phi: YoungFunction, t: np.ndarray) -> np.ndarray:
    """Vectorized bisection for the (generalized) inverse of a monotone phi."""
    t = np.atleast_1d(t).astype(float)
    hi = np.ones_like(t)
    for _ in range(200):
        bad = phi(hi) < t
        if not bad.any():
            break
        hi[bad] *= 2.0
    lo = np.zeros_like(t)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        small = phi(mid) < t
        lo = np.where(small, mid, lo)
        hi = np.where(small, hi, mid)
    out = 0.5 * (lo + hi)
    return out if out.shape else float(out)


_CONJ_S = np.logspace(-9.0, 9.0, 4096)


def _conjugate_eval(phi: YoungFunction, t: np.ndarray) -> np.ndarray:
    """phibar(t) = sup_s (st - phi(s)): coarse grid argmax + golden refine."""
    t = np.atleast_1d(t).astype(float)
    s = _CONJ_S
    vals = s[None, :] * t[:, None] - phi(s)[None, :]
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    k = np.argmax(vals, axis=1)
    a = s[np.maximum(k - 1, 0)]
    b = s[np.minimum(k + 1, len(s) - 1)]
    # ternary search: s -> st - phi(s) is concave for convex phi
    for _ in range(120):
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        f1 = m1 * t - phi(m1)
        f2 = m2 * t - phi(m2)
        left = f1 < f2
        a = np.where(left, m1, a)
        b = np.where(left, b, m2)
    mid = 0.5 * (a + b)
    best = np.maximum(vals[np.arange(len(t)), k], mid * t - phi(mid))
    out = np.maximum(best, 0.0)
    return out if t.shape else float(out)


# ---------------------------------------------------------------------------
# built-ins
# ---------------------------------------------------------------------------

def power(p: float) -> YoungFunction:
    """phi(t) = t**p."""
    if p <= 0:
        raise ValueError("power must be positive")
    if p > 1:
        pp = p / (p - 1.0)
        conj = lambda t: (p - 1.0) * p ** (-pp) * t ** pp
    else:
        conj = None
    return YoungFunction(
        f"t^{p:g}",
        lambda t: t ** p,
        inverse_fn=lambda t: t ** (1.0 / p),
        complementary_fn=conj,
        i_lower=p,
        I_upper=p,
        delta2_C1=p,
        submultiplicative=True,
        is_nfunction=p > 1,
    )


def power_over_p(p: float) -> YoungFunction:
    """phi(t) = t**p / p, the classical conjugate pair with t**p' / p'."""
    if p <= 1:
        raise ValueError("need p > 1")
    pp = p / (p - 1.0)
    return YoungFunction(
        f"t^{p:g}/{p:g}",
        lambda t: t ** p / p,
        inverse_fn=lambda t: (p * t) ** (1.0 / p),
        complementary_fn=lambda t: t ** pp / pp,
        i_lower=p,
        I_upper=p,
        delta2_C1=p,
        submultiplicative=False,
        is_nfunction=True,
    )


def llog(alpha: float, p: float = 1.0) -> YoungFunction:
    """phi(t) = t**p * log(e + t)**alpha, the L^p(log L)^alpha scale."""
    if alpha < 0 or p < 1:
        raise ValueError("need alpha >= 0 and p >= 1")
    return YoungFunction(
        f"t^{p:g} log(e+t)^{alpha:g}" if p != 1 else f"t log(e+t)^{alpha:g}",
        lambda t: t ** p * np.log(np.e + t) ** alpha,
        i_lower=p,
        I_upper=p,
        # log(e + lam t) <= lam log(e + t) for lam >= 1, so C1 = p + alpha
        delta2_C1=p + alpha,
        submultiplicative=(p == 1.0),
        is_nfunction=False,
    )


def exp_power(s: float) -> YoungFunction:
    """phi(t) = exp(t**s) - 1, whose Luxemburg norm is the exp L^s norm."""
    if s < 1:
        raise ValueError("need s >= 1 for convexity")
    return YoungFunction(
        f"exp(t^{s:g})-1",
        lambda t: np.expm1(t ** s),
        inverse_fn=lambda t: np.log1p(t) ** (1.0 / s),
        submultiplicative=False,
        is_nfunction=s > 1,  # s = 1 has phi(t)/t -> 1 at 0
    )


def phi_power(phi: YoungFunction, m: int) -> YoungFunction:
    """phi^m(t) = phi(t)**m; h_{phi^m} = h_phi**m, so indices scale by m."""
    if m < 1:
        raise ValueError("need m >= 1")
    if m == 1:
        return phi
    return YoungFunction(
        f"({phi.name})^{m}",
        lambda t: phi(t) ** m,
        inverse_fn=(lambda t: phi.inverse_fn(t ** (1.0 / m)))
        if phi.inverse_fn is not None
        else None,
        i_lower=None if phi.i_lower is None else m * phi.i_lower,
        I_upper=None if phi.I_upper is None else m * phi.I_upper,
        is_nfunction=True,
    )


@dataclass(frozen=True)
class Measure:
    """Lebesgue measure or w dx for a positive density w."""

    weight: Optional[GridFunction] = None

    def __post_init__(self):
        if self.weight is not None and np.any(self.weight.samples <= 0):
            raise ValueError("weighted measure needs w > 0")

    @property
    def is_lebesgue(self) -> bool:
        return self.weight is None


LEBESGUE = Measure()


def _cube_cells(domain: Domain, q) -> tuple[int, int, int]:
    if isinstance(q, DyadicCube):
        s, e, full = q.cell_bounds(domain)
        return max(s, 0), min(e, domain.n_cells), full
    lo, hi = domain.cell_range(q)
    full = max(int(round(q.length / domain.h)), hi - lo)
    return lo, hi, full


def luxemburg_norm(
    f: GridFunction,
    phi: YoungFunction,
    q,
    mu: Measure = LEBESGUE,
    rel_tol: float = 1e-10,
) -> float:
    """inf lambda with (1/mu(Q)) int_Q phi(|f|/lambda) dmu <= 1.

    Bracketed by the Jensen lower bound <|f|>/phi^-1(1) and the sup bound
    max|f|/phi^-1(1), then bisected; both brackets are exact for constants.
    """
    dom = f.domain
    lo_c, hi_c, full = _cube_cells(dom, q)
    if hi_c <= lo_c:
        raise ValueError("cube does not meet the domain")
    v = np.abs(f.samples[lo_c:hi_c]).astype(float)
    if mu.is_lebesgue:
        wts = np.ones_like(v)
        denom = float(full if dom.boundary_mode == "zero-extend" else hi_c - lo_c)
    else:
        wts = mu.weight.samples[lo_c:hi_c].astype(float)
        denom = wts.sum()
    vmax = v.max(initial=0.0)
    if vmax == 0.0:
        return 0.0
    inv1 = float(np.atleast_1d(phi.inverse(np.array([1.0])))[0])
    vmean = float((v * wts).sum() / denom)
    lam_lo = vmean / inv1
    lam_hi = vmax / inv1
    if lam_hi - lam_lo <= rel_tol * lam_hi:
        return lam_hi

    def modular(lam: float) -> float:
        return float((phi(v / lam) * wts).sum() / denom)

    for _ in range(200):
        if lam_hi - lam_lo <= rel_tol * lam_hi:
            break
        mid = 0.5 * (lam_lo + lam_hi)
        if modular(mid) <= 1.0:
            lam_hi = mid
        else:
            lam_lo = mid
    return lam_hi


def generalized_holder(
    fs: Sequence[GridFunction],
    g: GridFunction,
    q,
    w: GridFunction,
    s_vec: Sequence[float],
) -> tuple[float, float, float]:
    """Multilinear product bound against exp L^{s_i} and L(log L)^{1/s} norms.

    Returns (lhs, rhs, lhs/rhs) with
    lhs = (1/w(Q)) int_Q |f_1 ... f_m g| w and
    rhs = 2^{1/s}(1+1/s)^{1/s} prod ||f_i||_{expL^{s_i}(w),Q} ||g||_{LlogL^{1/s}(w),Q},
    1/s = sum 1/s_i.
    """
    if len(fs) != len(s_vec) or not fs:
        raise ValueError("need one exponent per factor")
    if any(si < 1 for si in s_vec):
        raise ValueError("exponents must be >= 1")
    dom = g.domain
    mu = Measure(w)
    lo, hi, _ = _cube_cells(dom, q)
    wq = w.samples[lo:hi].sum()
    prod = np.abs(g.samples[lo:hi]).astype(float)
    for f in fs:
        prod = prod * np.abs(f.samples[lo:hi])
    lhs = float((prod * w.samples[lo:hi]).sum() / wq)
    inv_s = sum(1.0 / si for si in s_vec)
    const = 2.0 ** inv_s * (1.0 + inv_s) ** inv_s
    rhs = const
    for f, si in zip(fs, s_vec):
        rhs *= luxemburg_norm(f, exp_power(si), q, mu)
    rhs *= luxemburg_norm(g, llog(inv_s), q, mu)
    if rhs == 0.0:
        return lhs, rhs, 0.0 if lhs == 0.0 else np.inf
    return lhs, rhs, lhs / rhs


def young_pair_checks(phi: YoungFunction, t_grid: np.ndarray) -> dict:
    """Check the conjugate-pair identities on a grid of points.

    (a) t <= phi^-1(t) phibar^-1(t) <= 2t,
    (b) phibar(phi(t)/t) <= phi(t),
    (c) s t <= phi(s) + phibar(t) on the product grid.
    Returns {"ok": bool, "failures": [(name, point, slack), ...]}.
    """
    t = np.asarray(t_grid, dtype=float)
    bar = phi.complementary()
    tol = 1e-9
    failures = []

    prod = np.atleast_1d(phi.inverse(t)) * np.atleast_1d(bar.inverse(t))
    lo_bad = prod < t * (1.0 - tol) - tol
    hi_bad = prod > 2.0 * t * (1.0 + tol) + tol
    for i in np.nonzero(lo_bad | hi_bad)[0]:
        failures.append(("inverse-product", float(t[i]), float(prod[i])))

    pt = np.atleast_1d(phi(t))
    lhs = np.atleast_1d(bar(pt / t))
    bad = lhs > pt * (1.0 + tol) + tol
    for i in np.nonzero(bad)[0]:
        failures.append(("conjugate-of-slope", float(t[i]), float(lhs[i] - pt[i])))

    ps = np.atleast_1d(phi(t))
    bt = np.atleast_1d(bar(t))
    st = t[:, None] * t[None, :]
    rhs = ps[:, None] + bt[None, :]
    bad = st > rhs * (1.0 + tol) + tol
    for i, j in zip(*np.nonzero(bad)):
        failures.append(("young", (float(t[i]), float(t[j])), float(st[i, j] - rhs[i, j])))

    return {"ok": not failures, "failures": failures}


_DILATION_S = np.logspace(-8.0, 8.0, 2048)


def _h_phi(phi: YoungFunction, t: float) -> float:
    s = _DILATION_S
    with np.errstate(over="ignore", invalid="ignore"):
        r = phi(s * t) / phi(s)
    r = r[np.isfinite(r)]
    return float(r.max()) if len(r) else np.inf


def dilation_indices(phi: YoungFunction, numeric: bool = False) -> tuple[float, float]:
    """(i_phi, I_phi): slopes of log h_phi at small and large dilations.

    Closed forms are returned for built-ins unless numeric=True; the probes
    sit at t0 = 1e-6 and 1e6, bounding the true indices from the monotone
    side.
    """
    if not numeric and phi.i_lower is not None and phi.I_upper is not None:
        return phi.i_lower, phi.I_upper
    t_small, t_big = 1e-6, 1e6
    i_est = math.log(_h_phi(phi, t_small)) / math.log(t_small)
    h_big = _h_phi(phi, t_big)
    I_est = np.inf if not math.isfinite(h_big) else math.log(h_big) / math.log(t_big)
    return i_est, I_est


def delta2_constant(phi: YoungFunction, numeric: bool = False) -> float:
    """Smallest observed C1 with phi(lam t) <= (2 lam)^C1 phi(t), lam >= 2."""
    if not numeric and phi.delta2_C1 is not None:
        return phi.delta2_C1
    ts = np.logspace(-6.0, 6.0, 400)
    best = 0.0
    for lam in (2.0, 3.0, 5.0, 8.0, 16.0, 64.0):
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            num = phi(lam * ts)
            den = phi(ts)
            pos = den > 0
            if np.any(np.isinf(num) & pos & np.isfinite(den)):
                return np.inf  # doubling breaks the float range: not doubling
            ratio = num[pos] / den[pos]
        c = np.log(ratio).max() / math.log(2.0 * lam)
        best = max(best, float(c))
    return best
