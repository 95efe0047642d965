"""Experiment drivers: evaluate both sides of the main inequalities on
concrete operators, fit decay exponents, and emit verification reports.

Every experiment is deterministic given (seed, grid resolution, dimensional
constants).  The ~ in each inequality is absorbed into a recorded slack
factor, default 10: the artifact checks structure and parameter scaling,
not unknowable absolute constants.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from .grid import (
    Domain,
    DyadicCube,
    GridFunction,
    ResolutionError,
    average,
    children,
    dilate,
)
from .maximal import MaximalVariant, maximal, multilinear_maximal
from .operators import KernelOperator, bmo_norm, iterated_commutator
from .orlicz import Measure, YoungFunction, dilation_indices, phi_power
from .sparse import SparseFamily, sparse_operator
from .weights import DimensionalConstants, Weight, ainfty_constants, ap_constant, k0_p0

DEFAULT_SLACK = 10.0


# -- reports -----------------------------------------------------------------

@dataclass
class VerificationReport:
    id: str
    params: dict
    lhs: float
    rhs: float
    constants: dict
    ratio: float
    fit: Optional[dict]
    verdict: str
    env: dict

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "params": self.params,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "constants": self.constants,
            "ratio": self.ratio,
            "fit": self.fit,
            "verdict": self.verdict,
            "env": self.env,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


@dataclass
class DecayCurve:
    t_grid: np.ndarray
    measures: np.ndarray  # normalized, in [0, 1], nonincreasing
    model: np.ndarray
    fit: dict

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,measure,model\n")
            for t, m, mo in zip(self.t_grid, self.measures, self.model):
                fh.write(f"{t!r},{m!r},{mo!r}\n")


def verdict_from(ratio: float, slack: float) -> str:
    if not math.isfinite(ratio):
        return "degenerate"
    if ratio <= 1.0:
        return "holds"
    if ratio <= slack:
        return "holds-with-margin"
    return "violated"


def environment(domain: Domain, dc: DimensionalConstants, seed: int, pv_cutoff: int = 1) -> dict:
    return {
        "L": domain.resolution_log2,
        "pv_cutoff": pv_cutoff,
        "n": dc.n,
        "tau_n": dc.tau,
        "C_n": dc.C_n,
        "c_n": dc.c_n,
        "seed": seed,
    }


# -- operator bundles --------------------------------------------------------

@dataclass(frozen=True)
class OperatorBundle:
    """A kernel operator together with symbols acting in selected slots."""

    operator: KernelOperator
    m: int
    bs: tuple = ()
    slots: tuple = ()
    orders: Optional[tuple] = None

    def __post_init__(self):
        if len(self.bs) != len(self.slots):
            raise ValueError("need one slot per symbol")

    @property
    def l(self) -> int:
        return len(self.bs)

    def symbol_norm_product(self) -> float:
        out = 1.0
        for b in self.bs:
            out *= bmo_norm(b)
        return out

    def apply(self, fs: Sequence[GridFunction]) -> GridFunction:
        if len(fs) != self.m:
            raise ValueError(f"expected {self.m} inputs")
        if not self.bs:
            return self.operator.apply(fs)
        return iterated_commutator(self.operator, self.bs, self.slots, fs, self.orders)


def hilbert_bundle(bs: Sequence[GridFunction] = (), pv_cutoff: int = 1) -> OperatorBundle:
    op = KernelOperator("hilbert", pv_cutoff=pv_cutoff)
    return OperatorBundle(op, 1, tuple(bs), tuple(0 for _ in bs))


def calderon_bundle(
    m: int = 1, bs: Sequence[GridFunction] = (), slots: Sequence[int] = (), pv_cutoff: int = 1
) -> OperatorBundle:
    op = KernelOperator("calderon", m=m, pv_cutoff=pv_cutoff)
    return OperatorBundle(op, m + 1, tuple(bs), tuple(slots))


# -- lorentz quasinorms ------------------------------------------------------

def _mu_masses(f: GridFunction, mu: Measure) -> tuple[np.ndarray, np.ndarray]:
    a = np.abs(f.samples).astype(float)
    h = f.domain.h
    if mu.is_lebesgue:
        cell = np.full(a.shape, h)
    else:
        cell = mu.weight.samples * h
    return a, cell


def lorentz_quasinorm(f: GridFunction, p: float, mu: Measure = Measure(None)) -> float:
    """||f||_{L^{p,inf}(mu)} = sup_t t mu({|f| > t})^{1/p}, exact over the
    finite set of sample values as thresholds."""
    if p <= 0:
        raise ValueError("need p > 0")
    a, cell = _mu_masses(f, mu)
    order = np.argsort(a)
    a = a[order]
    cell = cell[order]
    # mass strictly above a[i] = suffix sum over larger values
    suffix = np.concatenate([np.cumsum(cell[::-1])[::-1], [0.0]])
    vals, first = np.unique(a, return_index=True)
    # sup is attained approaching each sample value from below, where the
    # superlevel mass is that of {|f| >= value}
    below_mass = suffix[first]
    cands = vals * below_mass ** (1.0 / p)
    return float(cands.max(initial=0.0))


def lorentz_l1_norm(f: GridFunction, p: float, mu: Measure = Measure(None)) -> float:
    """||f||_{L^{p,1}(mu)} = int_0^inf mu({|f| > t})^{1/p} dt, exact for
    grid functions (piecewise-constant distribution function)."""
    if p <= 0:
        raise ValueError("need p > 0")
    a, cell = _mu_masses(f, mu)
    order = np.argsort(a)
    a = a[order]
    cell = cell[order]
    suffix = np.concatenate([np.cumsum(cell[::-1])[::-1], [0.0]])
    vals, first = np.unique(a, return_index=True)
    masses = suffix[first]  # mu({|f| >= v}) = mu({|f| > v - })
    levels = np.concatenate([[0.0], vals])
    total = 0.0
    for i in range(len(vals)):
        total += (levels[i + 1] - levels[i]) * masses[i] ** (1.0 / p)
    return float(total)


# -- decay fitting -----------------------------------------------------------

def fit_exponent(t: np.ndarray, phi: np.ndarray) -> dict:
    """Least squares of ln phi = ln c - alpha t^p on the usable range
    phi in [1e-4, 0.5]; deterministic initialization."""
    t = np.asarray(t, dtype=float)
    phi = np.asarray(phi, dtype=float)
    keep = (phi >= 1e-4) & (phi <= 0.5)
    tu, pu = t[keep], phi[keep]
    if len(tu) < 5:
        return {"c": math.nan, "alpha": math.nan, "p": math.nan, "r2": math.nan,
                "degenerate": True}
    y = np.log(pu)
    alpha0 = max((y[0] - y[-1]) / max(tu[-1] - tu[0], 1e-12), 1e-6)

    def resid(x):
        lnc, lna, lnp = x
        return lnc - math.exp(lna) * tu ** math.exp(lnp) - y

    x0 = np.array([y[0] + alpha0 * tu[0], math.log(alpha0), 0.0])
    sol = least_squares(resid, x0, method="lm", max_nfev=5000)
    lnc, lna, lnp = sol.x
    model = lnc - math.exp(lna) * tu ** math.exp(lnp)
    ss_res = float(np.sum((y - model) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res < 1e-18 else 0.0)
    return {"c": math.exp(lnc), "alpha": math.exp(lna), "p": math.exp(lnp),
            "r2": r2, "degenerate": False}


def model_values(fit: dict, t: np.ndarray) -> np.ndarray:
    if fit.get("degenerate"):
        return np.full(len(t), math.nan)
    return fit["c"] * np.exp(-fit["alpha"] * np.asarray(t, dtype=float) ** fit["p"])


# -- principal cubes ---------------------------------------------------------

def principal_cubes(g: GridFunction, q0: DyadicCube, factor: float = 2.0) -> SparseFamily:
    """Stopping family on |g| starting from q0: children of the family are
    the maximal descendants whose average exceeds factor times the parent's.
    Chebyshev gives eta >= 1 - 1/factor, so 1/2-sparse at factor 2."""
    dom = g.domain
    absg = GridFunction(dom, np.abs(g.samples))
    out = []
    queue = [q0]
    while queue:
        q = queue.pop()
        out.append(q)
        base = average(absg, q, 1.0)
        if base <= 0:
            continue
        try:
            stack = children(q, dom)
        except ResolutionError:
            continue
        while stack:
            r = stack.pop()
            if average(absg, r, 1.0) > factor * base:
                queue.append(r)
            else:
                try:
                    stack.extend(children(r, dom))
                except ResolutionError:
                    pass
    eta = 1.0 - 1.0 / factor
    return SparseFamily.make(out, eta, dom)


# -- experiments -------------------------------------------------------------

def _root_cube(dom: Domain) -> DyadicCube:
    return DyadicCube(0, 0, (0,))


def default_t_grid(bnorm_product: float, n_points: int = 24) -> np.ndarray:
    scale = bnorm_product if bnorm_product > 0 else 1.0
    return np.logspace(math.log10(0.5), math.log10(50.0), n_points) * scale


def _comparator_llogl(bundle: OperatorBundle, fs: Sequence[GridFunction]) -> GridFunction:
    """Per-slot iterated maximal: one extra application of M for each symbol
    attached to the slot; reduces to M^2 f for one symbol on one input."""
    dom = fs[0].domain
    out = np.ones(dom.n_cells)
    for i, f in enumerate(fs):
        k = 1 + sum(1 for s in bundle.slots if s == i)
        out *= maximal(f, MaximalVariant("iterated", k=k)).samples
    return GridFunction(dom, out)


def local_decay_experiment(
    bundle: OperatorBundle,
    fs: Sequence[GridFunction],
    q0: DyadicCube,
    t_grid: Optional[np.ndarray] = None,
    comparator: str = "mixed-min",
    w: Optional[Weight] = None,
    slack: float = DEFAULT_SLACK,
    seed: int = 0,
    dc: DimensionalConstants = DimensionalConstants(),
    experiment_id: str = "local-decay",
) -> tuple[DecayCurve, VerificationReport]:
    """Measures |{x in Q0 : |T_b f| > t comparator}| / |Q0| on a t grid and
    fits c exp(-alpha t^p).  Weighted runs use w(.) / w(2 Q0)."""
    if comparator not in ("mixed-min", "llogl"):
        raise ValueError(f"unknown comparator {comparator!r}")
    dom = fs[0].domain
    g = np.abs(bundle.apply(fs).samples)
    bprod = bundle.symbol_norm_product()
    if t_grid is None:
        t_grid = default_t_grid(bprod)
    t_grid = np.asarray(t_grid, dtype=float)

    comp = _comparator_llogl(bundle, fs)
    constants: dict = {"symbol_norm_product": bprod, "comparator": comparator}
    if comparator == "mixed-min":
        sf = principal_cubes(bundle.apply(fs), q0)
        fs0 = []
        for i, f in enumerate(fs):
            if i in bundle.slots:
                fs0.append(sparse_operator(sf, 1.0, f, dilation=3.0))
            else:
                fs0.append(f)
        alt = multilinear_maximal(fs0, "plain")
        both = np.minimum(comp.samples, alt.samples)
        constants["sparse_family_size"] = len(sf.cubes)
        constants["min_branch_alt_fraction"] = float(
            np.mean(alt.samples < comp.samples)
        )
        # domination audit: the sparse form must cover the operator output
        dom_form = np.zeros(dom.n_cells)
        for q, (lo, hi) in zip(sf.cubes, sf.cell_sets()):
            prod = 1.0
            for f in fs:
                prod *= average(f, q, 1.0)
            dom_form[lo:hi] += prod
        s0, e0, _ = q0.cell_bounds(dom)
        covered = dom_form[s0:e0] > 0
        sig = np.abs(g[s0:e0]) > 1e-12 * max(np.abs(g).max(), 1e-300)
        if np.any(sig & ~covered):
            constants["domination"] = "failed"
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                c_dom = np.where(sig, np.abs(g[s0:e0]) / np.where(covered, dom_form[s0:e0], np.inf), 0.0)
            constants["domination_constant"] = float(np.nanmax(c_dom))
        comp = GridFunction(dom, both)

    s0, e0, _ = q0.cell_bounds(dom)
    cvals = comp.samples[s0:e0]
    gvals = g[s0:e0]
    if np.mean(cvals <= 0) > 0:
        fit = {"c": math.nan, "alpha": math.nan, "p": math.nan, "r2": math.nan,
               "degenerate": True}
        curve = DecayCurve(t_grid, np.full(len(t_grid), math.nan),
                           np.full(len(t_grid), math.nan), fit)
        rep = VerificationReport(
            experiment_id, {"comparator": comparator}, math.nan, math.nan,
            constants, math.nan, fit, "degenerate",
            environment(dom, dc, seed, bundle.operator.pv_cutoff),
        )
        return curve, rep

    if w is None:
        cellmass = np.full(e0 - s0, dom.h)
        total = (e0 - s0) * dom.h
    else:
        cellmass = w.samples[s0:e0] * dom.h
        iv = dilate(q0, 2.0, dom)
        lo = max(0, dom.cell_range(iv)[0])
        hi = min(dom.n_cells, dom.cell_range(iv)[1])
        total = float(np.sum(w.samples[lo:hi]) * dom.h)
    measures = np.array([
        float(np.sum(cellmass[gvals > t * cvals])) / total for t in t_grid
    ])
    fit = fit_exponent(t_grid, measures)
    curve = DecayCurve(t_grid, measures, model_values(fit, t_grid), fit)
    if fit["degenerate"]:
        verdict = "degenerate"
    elif fit["r2"] >= 0.9 and fit["alpha"] > 0:
        verdict = "holds"
    elif fit["r2"] >= 0.7 and fit["alpha"] > 0:
        verdict = "holds-with-margin"
    else:
        verdict = "violated"
    target = 1.0 / (bundle.l + 1)
    ratio = fit["p"] / target if not fit["degenerate"] else math.nan
    rep = VerificationReport(
        experiment_id,
        {"comparator": comparator, "m": bundle.m, "l": bundle.l,
         "weighted": w is not None},
        float(measures[0]), float(measures[-1]), constants, ratio, fit, verdict,
        environment(dom, dc, seed, bundle.operator.pv_cutoff),
    )
    return curve, rep


def sharpness_experiment(
    L: int = 14,
    bounded_symbol: bool = False,
    slack: float = DEFAULT_SLACK,
    seed: int = 0,
    n_points: int = 24,
) -> tuple[DecayCurve, VerificationReport]:
    """Fixed scenario: Hilbert commutator with a log singularity against the
    flat comparator M^2 chi = 1; the measured decay exponent should sit
    near 1/2, and a bounded symbol restores at least exponential decay."""
    dom = Domain(0.0, 1.0, L)
    if bounded_symbol:
        b = GridFunction.from_callable(dom, lambda x: np.sin(2 * math.pi * x))
        # bounded symbols die fast: sample the narrow band around the sup
        lo, hi, n_points = 0.4, 1.6, max(n_points, 40)
    else:
        b = GridFunction.from_callable(dom, lambda x: np.log(x))
        # fit past the low-t transient, where the square-root regime holds
        lo, hi = 3.0, 18.0
    f = GridFunction.constant(dom, 1.0)
    bundle = hilbert_bundle([b])
    t_grid = np.logspace(math.log10(lo), math.log10(hi), n_points) * bmo_norm(b)
    curve, rep = local_decay_experiment(
        bundle, [f], _root_cube(dom), t_grid, comparator="llogl",
        slack=slack, seed=seed,
        experiment_id="sharpness-contrast" if bounded_symbol else "sharpness",
    )
    return curve, rep


def coifman_fefferman_experiment(
    bundle: OperatorBundle,
    fs: Sequence[GridFunction],
    p: float,
    w: Weight,
    slack: float = DEFAULT_SLACK,
    seed: int = 0,
    dc: DimensionalConstants = DimensionalConstants(),
    experiment_id: str = "coifman-fefferman",
) -> VerificationReport:
    """int |T_b f|^p w against the L log L maximal side with the tracked
    A_inf powers.  The symbol norms carry the exponent p so the ratio is
    invariant under rescaling each b_s."""
    if p <= 0:
        raise ValueError("need p > 0")
    dom = fs[0].domain
    h = dom.h
    tf = np.abs(bundle.apply(fs).samples)
    lhs = float(np.sum(tf ** p * w.samples) * h)
    mf = multilinear_maximal(fs, "llogl").samples
    base = float(np.sum(mf ** p * w.samples) * h)
    fw, _ = w.ainfty()
    bprod = bundle.symbol_norm_product()
    const = bprod ** p * fw ** (p * bundle.l) * fw ** max(2.0, p)
    rhs = const * base
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return VerificationReport(
        experiment_id,
        {"p": p, "m": bundle.m, "l": bundle.l, "weight": w.name},
        lhs, rhs,
        {"ainfty_fw": fw, "symbol_norm_product": bprod, "constant": const,
         "slack": slack},
        ratio, None, verdict_from(ratio, slack),
        environment(dom, dc, seed, bundle.operator.pv_cutoff),
    )


def mixed_weak_experiment(
    bundle: OperatorBundle,
    fs: Sequence[GridFunction],
    ws: Sequence[Weight],
    v: Weight,
    t: float = 2.0,
    slack: float = DEFAULT_SLACK,
    seed: int = 0,
    dc: DimensionalConstants = DimensionalConstants(),
    experiment_id: str = "mixed-weak",
) -> VerificationReport:
    """Weak (1/m, inf) bound for T_b f / v against u v^{1/m}, with the
    explicit K0, p0 constants; the constant side is handled in log space
    because the tracked powers overflow floats routinely."""
    m = bundle.m
    if len(ws) != m:
        raise ValueError("need one weight per slot")
    dom = fs[0].domain
    u_samp = np.ones(dom.n_cells)
    for wi in ws:
        u_samp = u_samp * wi.samples ** (1.0 / m)
    u = Weight(GridFunction(dom, u_samp), "u")
    v_m = Weight(GridFunction(dom, v.samples ** (1.0 / m)), "v^{1/m}")
    uv = GridFunction(dom, u_samp * v_m.samples)
    mu = Measure(uv)

    tf = bundle.apply(fs)
    over_v = GridFunction(dom, np.abs(tf.samples) / v.samples)
    lhs = lorentz_quasinorm(over_v, 1.0 / m, mu)
    mf = multilinear_maximal(fs, "llogl")
    rhs_norm = lorentz_quasinorm(
        GridFunction(dom, mf.samples / v.samples), 1.0 / m, mu
    )
    a1_u = ap_constant(u, 1.0)
    at_v = ap_constant(v_m, t)
    p0, k0 = k0_p0(t, a1_u, at_v, m, dc)
    l = bundle.l
    bprod = bundle.symbol_norm_product()
    log_const = (2 * l + 6 * m) * math.log(k0) + (2 * l + 4 * m) * math.log(at_v)
    if bprod > 0:
        log_const += math.log(bprod)
    log_ratio = (math.log(lhs) if lhs > 0 else -math.inf) - log_const - (
        math.log(rhs_norm) if rhs_norm > 0 else -math.inf
    )
    ratio = math.exp(log_ratio) if log_ratio < 700 else math.inf
    if lhs == 0:
        ratio = 0.0

    # endpoint specialization v = 1 with its doubly exponential constant
    lhs1 = lorentz_quasinorm(GridFunction(dom, np.abs(tf.samples)), 1.0 / m, Measure(u.f))
    rhs1 = lorentz_quasinorm(mf, 1.0 / m, Measure(u.f))
    log_c1 = 2.0 ** (dc.n + 7) * m * a1_u * math.log(2.0 * a1_u)
    if bprod > 0:
        log_c1 += math.log(bprod)
    log_ratio1 = (math.log(lhs1) if lhs1 > 0 else -math.inf) - log_c1 - (
        math.log(rhs1) if rhs1 > 0 else -math.inf
    )
    ratio1 = 0.0 if lhs1 == 0 else (math.exp(log_ratio1) if log_ratio1 < 700 else math.inf)

    worst = max(ratio, ratio1)
    return VerificationReport(
        experiment_id,
        {"m": m, "l": l, "t": t, "weights": [w.name for w in ws], "v": v.name},
        lhs, rhs_norm,
        {"p0": p0, "K0": k0, "a1_u": a1_u, "at_v": at_v,
         "log10_constant": log_const / math.log(10.0),
         "log10_endpoint_constant": log_c1 / math.log(10.0),
         "endpoint_ratio": ratio1, "slack": slack},
        worst, None, verdict_from(worst, 1.0 + slack),
        environment(dom, dc, seed, bundle.operator.pv_cutoff),
    )


def fefferman_stein_experiment(
    bundle: OperatorBundle,
    fs: Sequence[GridFunction],
    ps: Sequence[float],
    ws: Sequence[Weight],
    slack: float = DEFAULT_SLACK,
    seed: int = 0,
    dc: DimensionalConstants = DimensionalConstants(),
    experiment_id: str = "fefferman-stein",
) -> VerificationReport:
    """||T_b f||_{L^p(nu)} against prod ||f_s||_{L^{p_s}(M w_s)} for
    arbitrary positive weights, 1/p = sum 1/p_s <= 1."""
    m = bundle.m
    if len(ps) != m or len(ws) != m:
        raise ValueError("need one exponent and one weight per slot")
    p = 1.0 / sum(1.0 / pi for pi in ps)
    if p > 1.0 + 1e-12:
        raise ValueError("need 0 < p <= 1")
    dom = fs[0].domain
    h = dom.h
    nu = np.ones(dom.n_cells)
    for pi, wi in zip(ps, ws):
        nu = nu * wi.samples ** (p / pi)
    tf = np.abs(bundle.apply(fs).samples)
    lhs = float(np.sum(tf ** p * nu) * h) ** (1.0 / p)
    rhs = bundle.symbol_norm_product() if bundle.bs else 1.0
    weak_consts = []
    for f, pi, wi in zip(fs, ps, ws):
        mw = maximal(wi.f).samples
        rhs *= float(np.sum(np.abs(f.samples) ** pi * mw) * h) ** (1.0 / pi)
        _, weak = wi.ainfty()
        weak_consts.append(weak)
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return VerificationReport(
        experiment_id,
        {"p": p, "ps": list(ps), "m": m, "l": bundle.l,
         "weights": [w.name for w in ws]},
        lhs, rhs,
        {"weak_ainfty": weak_consts,
         "symbol_norm_product": bundle.symbol_norm_product(), "slack": slack},
        ratio, None, verdict_from(ratio, slack),
        environment(dom, dc, seed, bundle.operator.pv_cutoff),
    )


def quasiconvex_alpha(phi: YoungFunction, n_alpha: int = 20) -> float:
    """Largest sampled alpha in (0, 1] for which the alpha-th power of the
    complementary function passes a midpoint convexity test."""
    ts = np.logspace(-2.0, 2.0, 40)
    bar = phi.conjugate_eval(ts)
    mid = phi.conjugate_eval((ts[:-1] + ts[1:]) / 2.0)
    for k in range(n_alpha, 0, -1):
        a = k / n_alpha
        with np.errstate(invalid="ignore"):
            lhsv = mid ** a
            rhsv = (bar[:-1] ** a + bar[1:] ** a) / 2.0
        ok = np.all(lhsv <= rhsv * (1.0 + 1e-9))
        if ok:
            return a
    return 1.0 / n_alpha


def modular_experiment(
    bundle: OperatorBundle,
    fs: Sequence[GridFunction],
    phi: YoungFunction,
    q: float,
    r: float,
    w: Weight,
    slack: float = DEFAULT_SLACK,
    seed: int = 0,
    dc: DimensionalConstants = DimensionalConstants(),
    experiment_id: str = "modular",
) -> VerificationReport:
    """int phi(|T_b f|) w against the product of modulars of the inputs,
    with branch gating on the lower dilation index of phi."""
    if not phi.submultiplicative:
        raise ValueError("growth function must be sub-multiplicative")
    i_phi, _ = dilation_indices(phi, numeric=phi.i_lower is None)
    if r < i_phi and 1.0 < q < i_phi / r:
        branch = 1
    elif 1.0 < i_phi <= r and 1.0 < q < i_phi:
        branch = 2
    else:
        raise ValueError(
            f"parameters outside both branches: i_phi = {i_phi}, q = {q}, r = {r}"
        )
    m = bundle.m
    l = bundle.l
    dom = fs[0].domain
    h = dom.h
    tf = np.abs(bundle.apply(fs).samples)
    lhs = float(np.sum(np.asarray(phi(tf), dtype=float) * w.samples) * h)
    alpha = quasiconvex_alpha(phi.complementary() if phi.complementary_fn else phi)
    c1 = phi.delta2_C1
    if c1 is None or not math.isfinite(c1):
        raise ValueError("growth function must satisfy the doubling condition")
    exponent = (l + 1) * (alpha * c1 + 1.0)
    if branch == 2:
        exponent += 1.0 + m * c1
    fw, _ = w.ainfty()
    aq = w.ap(q)
    phim = phi_power(phi, m)
    scale = aq ** (1.0 / (q * r))
    prod = 1.0
    for f in fs:
        prod *= float(
            np.sum(np.asarray(phim(scale * np.abs(f.samples)), dtype=float) * w.samples) * h
        )
    rhs = fw ** exponent * prod ** (1.0 / m)
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return VerificationReport(
        experiment_id,
        {"q": q, "r": r, "m": m, "l": l, "weight": w.name, "branch": branch},
        lhs, rhs,
        {"i_phi": i_phi, "alpha": alpha, "C1": c1, "exponent": exponent,
         "ainfty_fw": fw, "aq": aq, "slack": slack},
        ratio, None, verdict_from(ratio, slack),
        environment(dom, dc, seed, bundle.operator.pv_cutoff),
    )
