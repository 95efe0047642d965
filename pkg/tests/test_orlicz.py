import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_harmonics.grid import Domain, DyadicCube, GridFunction, Interval, average
from sparse_harmonics.orlicz import (
    LEBESGUE,
    Measure,
    delta2_constant,
    dilation_indices,
    exp_power,
    generalized_holder,
    llog,
    luxemburg_norm,
    phi_power,
    power,
    power_over_p,
    young_pair_checks,
)

DOM = Domain(0.0, 1.0, 8)
ROOT = DyadicCube(0, 0, (0,))


def rand_f(seed, lo=0.1, hi=4.0, dom=DOM):
    rng = np.random.default_rng(seed)
    return GridFunction(dom, rng.uniform(lo, hi, size=dom.n_cells))


# -- luxemburg ---------------------------------------------------------------

def test_luxemburg_linear_phi_is_the_average():
    f = rand_f(1)
    got = luxemburg_norm(f, power(1.0), ROOT)
    assert got == pytest.approx(average(f, ROOT, 1.0), rel=1e-9)


def test_luxemburg_power_phi_is_lr_average():
    f = rand_f(2)
    for r in (1.5, 2.0, 3.0):
        got = luxemburg_norm(f, power(r), ROOT)
        assert got == pytest.approx(average(f, ROOT, r), rel=1e-9)


def test_luxemburg_constant_llog():
    phi = llog(1.0)
    c = 2.7
    f = GridFunction.constant(DOM, c)
    lam = luxemburg_norm(f, phi, ROOT)
    inv1 = phi.inverse(np.array([1.0]))[0]
    assert lam == pytest.approx(c / inv1, rel=1e-9)
    assert phi(np.array([c / lam]))[0] == pytest.approx(1.0, abs=1e-9)


def test_luxemburg_zero_and_errors():
    f = GridFunction.constant(DOM, 0.0)
    assert luxemburg_norm(f, llog(1.0), ROOT) == 0.0


def test_luxemburg_scaling():
    f = rand_f(3)
    phi = llog(1.0)
    base = luxemburg_norm(f, phi, ROOT)
    for c in (0.25, 7.0):
        assert luxemburg_norm(c * f, phi, ROOT) == pytest.approx(c * base, rel=1e-8)


def test_luxemburg_monotone_in_f():
    f = rand_f(4)
    g = f + 0.5
    phi = exp_power(1.0)
    assert luxemburg_norm(f, phi, ROOT) <= luxemburg_norm(g, phi, ROOT) + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([1.2, 2.0, 2.7]))
def test_luxemburg_matches_lr_on_random_inputs(seed, r):
    f = rand_f(seed)
    q = DyadicCube(0, 2, (seed % 4,))
    assert luxemburg_norm(f, power(r), q) == pytest.approx(
        average(f, q, r), rel=1e-9
    )


def test_luxemburg_weighted_measure():
    f = rand_f(5)
    w = rand_f(6, 0.5, 2.0)
    got = luxemburg_norm(f, power(2.0), ROOT, Measure(w))
    want = math.sqrt(
        float((f.samples ** 2 * w.samples).sum() / w.samples.sum())
    )
    assert got == pytest.approx(want, rel=1e-9)


# -- generalized Hölder ------------------------------------------------------

def test_holder_constant_functions():
    one = GridFunction.constant(DOM, 1.0)
    lhs, rhs, ratio = generalized_holder([one], one, ROOT, one, [1.0])
    assert lhs == pytest.approx(1.0)
    ephi, lphi = exp_power(1.0), llog(1.0)
    want = (
        2.0 * 2.0
        * (1.0 / ephi.inverse(np.array([1.0]))[0])
        * (1.0 / lphi.inverse(np.array([1.0]))[0])
    )
    assert rhs == pytest.approx(want, rel=1e-8)
    assert rhs >= 1.0 and ratio <= 1.0


def test_holder_zero_g():
    one = GridFunction.constant(DOM, 1.0)
    zero = GridFunction.constant(DOM, 0.0)
    lhs, rhs, _ = generalized_holder([one], zero, ROOT, one, [1.0])
    assert lhs == 0.0 and lhs <= rhs


def test_holder_random_bilinear():
    # m = 2, s1 = s2 = 1 so s = 1/2; inequality should hold every time
    dom = Domain(0.0, 1.0, 6)
    root = DyadicCube(0, 0, (0,))
    rng = np.random.default_rng(42)
    for trial in range(200):
        edges = np.sort(rng.integers(1, dom.n_cells, size=3))
        f1 = np.repeat(
            rng.uniform(0.0, 3.0, size=4), np.diff([0, *edges, dom.n_cells])
        )
        f2 = rng.uniform(0.0, 2.0, size=dom.n_cells)
        g = rng.uniform(0.0, 2.0, size=dom.n_cells)
        w = rng.uniform(0.2, 2.0, size=dom.n_cells)
        _, _, ratio = generalized_holder(
            [GridFunction(dom, f1), GridFunction(dom, f2)],
            GridFunction(dom, g),
            root,
            GridFunction(dom, w),
            [1.0, 1.0],
        )
        assert ratio <= 1.0 + 1e-9


# -- young pair identities ---------------------------------------------------

def test_young_pair_quadratic():
    rep = young_pair_checks(power_over_p(2.0), np.logspace(-3, 3, 60))
    assert rep["ok"], rep["failures"]


def test_young_pair_cubic_closed_form():
    p = 3.0
    rep = young_pair_checks(power_over_p(p), np.logspace(-3, 3, 60))
    assert rep["ok"], rep["failures"]
    phi = power_over_p(p)
    t = np.logspace(-3, 3, 60)
    prod = phi.inverse(t) * phi.complementary().inverse(t)
    pp = p / (p - 1.0)
    want = p ** (1.0 / p) * pp ** (1.0 / pp) * t
    np.testing.assert_allclose(prod, want, rtol=1e-9)


def test_young_pair_llog_numeric_conjugate():
    rep = young_pair_checks(llog(1.0), np.logspace(-2, 2, 40))
    assert rep["ok"], rep["failures"]


# -- dilation indices and delta2 ---------------------------------------------

def test_dilation_power_exact():
    i, I = dilation_indices(power(2.5))
    assert (i, I) == (2.5, 2.5)
    i_num, I_num = dilation_indices(power(2.5), numeric=True)
    assert i_num == pytest.approx(2.5, abs=1e-6)
    assert I_num == pytest.approx(2.5, abs=1e-6)


def test_dilation_llog_numeric_lower():
    for p, alpha in ((1.0, 1.0), (2.0, 0.5), (1.5, 2.0)):
        i_num, _ = dilation_indices(llog(alpha, p), numeric=True)
        assert abs(i_num - p) < 0.05


def test_dilation_phi_power_scales():
    p, m = 1.5, 3
    phim = phi_power(power(p), m)
    assert dilation_indices(phim) == (p * m, p * m)
    _, I_num = dilation_indices(phim, numeric=True)
    assert abs(I_num - m * p) < 0.05


def test_delta2_power():
    assert delta2_constant(power(3.0)) == 3.0
    c = delta2_constant(power(3.0), numeric=True)
    assert c <= 3.0 + 1e-9


def test_delta2_llog_numeric_holds():
    phi = llog(1.0)
    c1 = delta2_constant(phi, numeric=True) + 1e-9
    ts = np.logspace(-4, 4, 100)
    for lam in (2.0, 4.0, 10.0):
        assert np.all(phi(lam * ts) <= 2 ** c1 * lam ** c1 * phi(ts) * (1 + 1e-9))


def test_delta2_exp_is_infinite():
    assert delta2_constant(exp_power(1.0), numeric=True) == np.inf


# -- structural invariants ---------------------------------------------------

def test_phi_class_basics():
    for phi in (power(2.0), llog(1.0), exp_power(1.0), power_over_p(3.0)):
        assert phi(np.array([0.0]))[0] == pytest.approx(0.0, abs=1e-12)
        t = np.logspace(-3, 2, 50)
        v = phi(t)
        assert np.all(np.diff(v) >= -1e-12)
        mid = phi((t[:-1] + t[1:]) / 2.0)
        assert np.all(mid <= (v[:-1] + v[1:]) / 2.0 + 1e-9)


def test_nfunction_limits():
    for phi in (power(2.0), power_over_p(3.0), exp_power(2.0)):
        assert phi.is_nfunction
        small = phi(np.array([1e-8]))[0] / 1e-8
        big = phi(np.array([1e6]))[0] / 1e6
        assert small < 1e-4 and big > 1e4


def test_submultiplicative_flags():
    grid = np.logspace(-2, 2, 50)
    for phi in (power(2.0), llog(1.0), llog(2.0)):
        if not phi.submultiplicative:
            continue
        v = phi(grid)
        st_ = phi(grid[:, None] * grid[None, :])
        assert np.all(st_ <= v[:, None] * v[None, :] * (1 + 1e-9))


def test_complementary_involution():
    t = np.logspace(-2, 2, 60)
    for phi in (power_over_p(2.0), power_over_p(3.0), power(2.0)):
        bar = phi.complementary()
        back = bar.complementary()(t)
        np.testing.assert_allclose(back, phi(t), rtol=1e-6, atol=1e-9)
