import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from lagfree.action import action_quadratic_form, closed_form_action, effective_action_quadrature
from lagfree.dynamics import damped_free_trajectory
from lagfree.errors import InvalidInputError

# frozen value of S for kappa = 1, (0, 0) -> (1, 1), computed symbolically below
S_KAPPA1 = 0.04098835343466323


def _sympy_action(kappa, q0, t0, q1, t1):
    """Exact integral of p^2/2 - kappa p q along the classical path, by sympy."""
    t = sp.symbols("t", real=True)
    k, a, b, ta, tb = (sp.nsimplify(x) for x in (kappa, q0, q1, t0, t1))
    q = a + (b - a) * (1 - sp.exp(-k * (t - ta))) / (1 - sp.exp(-k * (tb - ta)))
    p = sp.diff(q, t)
    return float(sp.integrate(p**2 / 2 - k * p * q, (t, ta, tb)).evalf(30))


def test_frozen_value_against_symbolic_oracle():
    assert _sympy_action(1.0, 0.0, 0.0, 1.0, 1.0) == pytest.approx(S_KAPPA1, abs=1e-15)
    assert closed_form_action(1.0, 0.0, 0.0, 1.0, 1.0) == pytest.approx(S_KAPPA1, abs=1e-15)


@pytest.mark.parametrize("args", [(0.3, -2.0, 0.5, 1.5, 4.0), (2.0, 3.0, -1.0, -3.0, -0.9), (1.3, 0.7, 0.0, 0.7, 2.5),
                                  (0.05, 1.0, 2.0, -1.0, 7.0)])
def test_closed_form_against_symbolic_oracle(args):
    assert closed_form_action(*args) == pytest.approx(_sympy_action(*args), rel=1e-12, abs=1e-14)


def test_frictionless_limit():
    assert closed_form_action(0.0, 0.0, 0.0, 1.0, 1.0) == 0.5
    assert closed_form_action(1e-12, 0.0, 0.0, 1.0, 1.0) == pytest.approx(0.5, abs=1e-11)
    # both branches agree across the series threshold
    assert closed_form_action(2e-8, 0.3, 0.0, 1.2, 1.0) == pytest.approx(
        closed_form_action(0.5e-8, 0.3, 0.0, 1.2, 1.0) - 1.5e-8 * 0.5 * (1.2**2 - 0.3**2), abs=1e-14)


def test_equal_endpoints_give_zero():
    for kappa in (0.0, 0.5, 2.0):
        assert closed_form_action(kappa, 0.8, 0.0, 0.8, 3.0) == 0.0


def test_quadrature_converges_at_fourth_order():
    kappa = 1.0
    errs = []
    for n in (11, 21, 41, 81):
        traj = damped_free_trajectory(kappa, 0.0, 0.0, 1.0, 1.0, n)
        errs.append(abs(effective_action_quadrature(traj, kappa) - S_KAPPA1))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(np.abs(ratios - 16) < 1.0)


def test_quadrature_needs_three_samples():
    with pytest.raises(InvalidInputError):
        effective_action_quadrature(damped_free_trajectory(1.0, 0, 0, 1, 1, 2), 1.0)
    with pytest.raises(InvalidInputError):
        closed_form_action(1.0, 0, 1.0, 1, 1.0)
    with pytest.raises(InvalidInputError):
        closed_form_action(-0.1, 0, 0, 1, 1)


def test_quadratic_form_coefficients():
    form = action_quadratic_form(1.0, 0.0, 1.0)
    assert abs(form.beta) == pytest.approx(0.5 / math.tanh(0.5), abs=1e-15)
    assert abs(form.beta) == pytest.approx(1.081977, abs=1e-6)
    free = action_quadratic_form(0.0, 0.0, 2.0)
    assert (free.alpha, free.beta, free.gamma) == pytest.approx((0.25, -0.5, 0.25), abs=1e-15)


def test_mixed_coefficient_by_finite_difference():
    kappa, t0, t1, h = 0.7, 0.2, 1.9, 1e-3
    s = lambda a, b: closed_form_action(kappa, a, t0, b, t1)
    mixed = (s(h, h) - s(h, -h) - s(-h, h) + s(-h, -h)) / (4 * h * h)
    assert mixed == pytest.approx(action_quadratic_form(kappa, t0, t1).beta, abs=1e-7)


def test_quadratic_form_reconstructs_action():
    rng = np.random.default_rng(11)
    for _ in range(100):
        kappa, dt = rng.uniform(0, 2), rng.uniform(0.1, 5)
        q0, q1 = rng.uniform(-3, 3, 2)
        form = action_quadratic_form(kappa, 1.0, 1.0 + dt)
        assert float(form(q0, q1)) == pytest.approx(closed_form_action(kappa, q0, 1.0, q1, 1.0 + dt), abs=1e-10)


def test_stationarity_of_classical_path():
    # S[q_cl + eps eta] - S[q_cl] has no linear term; p_cl is held fixed in the source term
    kappa, n = 1.0, 4001
    traj = damped_free_trajectory(kappa, 0.0, 0.0, 1.0, 1.0, n)
    t, q, p = traj.t_samples, traj.q_samples, traj.p_samples
    eta = np.sin(np.pi * t)
    etad = np.pi * np.cos(np.pi * t)
    from scipy.integrate import simpson

    def s(eps):
        return simpson(0.5 * (p + eps * etad) ** 2 - kappa * p * (q + eps * eta), x=t)

    base = s(0.0)
    for eps in (1e-2, 1e-3):
        linear = (s(eps) - s(-eps)) / (2 * eps)
        assert abs(linear) < 1e-9
        quad = (s(eps) + s(-eps) - 2 * base) / (2 * eps**2)
        assert quad == pytest.approx(0.25 * np.pi**2, rel=1e-6)


def test_time_translation_invariance():
    a = closed_form_action(0.9, 0.3, 0.0, -1.2, 2.0)
    b = closed_form_action(0.9, 0.3, 7.5, -1.2, 9.5)
    assert a == pytest.approx(b, abs=1e-12)


def test_endpoint_exchange():
    assert closed_form_action(0.0, 0.2, 0.0, 1.0, 1.0) == pytest.approx(closed_form_action(0.0, 1.0, 0.0, 0.2, 1.0))
    assert abs(closed_form_action(1.0, 0.2, 0.0, 1.0, 1.0) - closed_form_action(1.0, 1.0, 0.0, 0.2, 1.0)) > 1e-2


@settings(max_examples=60, deadline=None)
@given(kappa=st.floats(0.0, 2.0), q0=st.floats(-3, 3), q1=st.floats(-3, 3), t0=st.floats(-5, 5),
       dt=st.floats(0.1, 5.0))
def test_quadrature_identity_property(kappa, q0, q1, t0, dt):
    exact = closed_form_action(kappa, q0, t0, q1, t0 + dt)
    quad = effective_action_quadrature(damped_free_trajectory(kappa, q0, t0, q1, t0 + dt, 2001), kappa)
    scale = max(1.0, (abs(q0) + abs(q1)) ** 2 / dt)
    assert abs(exact - quad) < 1e-9 * scale
