import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import simpson

from lagfree.action import ActionForm, action_quadratic_form, closed_form_action
from lagfree.errors import DegenerateKernelError, InvalidInputError, NonConvergenceError
from lagfree.propagator import (
    GaussianKernel,
    PropagatorSpec,
    analytic_modulus,
    analytic_propagator,
    chapman_kolmogorov_residual,
    composed_kernel,
    delta_limit_ladder,
    delta_limit_residual,
    free_propagator,
    prefactor_from_normalization,
    propagator_kernel,
    smeared_delta,
)

# CK residual for kappa = 1 split 0 / 0.5 / 1 on the default grid
CK_REGRESSION = 1.032451800493354


def test_modulus_values():
    assert analytic_modulus(PropagatorSpec(1.0, 1.0, 0.0, 1.0)) == pytest.approx(0.4149722173935792, abs=1e-15)
    assert analytic_modulus(PropagatorSpec(1.0, 1.0, 0.0, 1.0)) == pytest.approx(0.414972, abs=1e-6)
    assert analytic_modulus(PropagatorSpec(0.0, 1.0, 0.0, 1.0)) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-15)
    assert analytic_modulus(PropagatorSpec(0.0, 1.0, 0.0, 1.0)) == pytest.approx(0.398942, abs=1e-6)


def test_normalization_prefactor_matches_closed_modulus():
    for kappa in (0.0, 0.1, 1.0, 3.0):
        for dt in (0.1, 1.0, 4.0):
            spec = PropagatorSpec(kappa, 0.7, 0.0, dt)
            form = action_quadratic_form(kappa, 0.0, dt)
            assert prefactor_from_normalization(form, 0.7) == pytest.approx(analytic_modulus(spec), rel=1e-13)


def test_hbar_scaling():
    a = prefactor_from_normalization(action_quadratic_form(1.0, 0.0, 1.0), 1.0)
    b = prefactor_from_normalization(action_quadratic_form(1.0, 0.0, 1.0), 4.0)
    assert b == pytest.approx(0.5 * a, rel=1e-15)


def test_degenerate_form_rejected():
    with pytest.raises(DegenerateKernelError):
        prefactor_from_normalization(ActionForm(1.0, 1.0, 0.3, 0.0, 0.2), 1.0)
    flat = GaussianKernel(1.0, 0.0, 1.0, 0.0, 1.0)
    with pytest.raises(DegenerateKernelError):
        flat.compose(flat)


@pytest.mark.parametrize("kappa,dt", [(0.0, 1.0), (1.0, 1.0), (2.0, 0.3), (0.5, 4.0)])
def test_modulus_conserves_probability(kappa, dt):
    # psi1 = int A(q1|q0) g(q0) dq0 must keep int |g|^2 = 1 / (2 sqrt(pi) w)
    w = 0.5
    q1 = np.linspace(-60, 60, 120_001)
    psi1 = smeared_delta(PropagatorSpec(kappa, 1.0, 0.0, dt), w, 0.4, q1)
    assert simpson(np.abs(psi1) ** 2, x=q1) == pytest.approx(1 / (2 * math.sqrt(math.pi) * w), rel=1e-9)


def test_free_phase_and_limit():
    at_origin = analytic_propagator(PropagatorSpec(0.0, 1.0, 0.0, 1.0), 0.0, 0.0)
    assert at_origin.phase == pytest.approx(-math.pi / 4, abs=1e-15)
    q0 = np.linspace(-2, 2, 9)
    for q1 in (-1.0, 0.0, 1.7):
        free = free_propagator(1.0, 1.0, q0, q1)
        damped = np.array([analytic_propagator(PropagatorSpec(1e-6, 1.0, 0.0, 1.0), a, q1).value for a in q0])
        assert np.max(np.abs(damped - free)) < 1e-5


def test_free_limit_is_first_order_in_kappa():
    q0, q1 = 0.5, -1.0
    errs = [abs(analytic_propagator(PropagatorSpec(k, 1.0, 0.0, 1.0), q0, q1).value - complex(free_propagator(1.0, 1.0, q0, q1)))
            for k in (1e-2, 1e-3, 1e-4)]
    assert errs[0] / errs[1] == pytest.approx(10, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(10, rel=0.05)


def test_kernel_agrees_with_scalar_amplitude():
    spec = PropagatorSpec(0.8, 0.5, 1.0, 2.3)
    kern = propagator_kernel(spec)
    for q0, q1 in [(0.0, 1.0), (-1.2, 2.5), (3.0, 3.0)]:
        assert complex(kern(q0, q1)) == pytest.approx(analytic_propagator(spec, q0, q1).value, abs=1e-12)
    m = kern.matrix([0.0, 1.0], [2.0, 3.0, 4.0])
    assert m.shape == (3, 2)
    assert m[2, 1] == pytest.approx(complex(kern(1.0, 4.0)))


def test_spec_validation():
    with pytest.raises(InvalidInputError):
        PropagatorSpec(1.0, 1.0, 1.0, 1.0)
    with pytest.raises(InvalidInputError):
        PropagatorSpec(-1.0)
    with pytest.raises(InvalidInputError):
        PropagatorSpec(1.0, 0.0)
    with pytest.raises(InvalidInputError):
        PropagatorSpec(float("nan"))


# --- delta limit -----------------------------------------------------------


def _free_smeared_oracle(hbar, dt, width, center, q1):
    # free evolution of a normalized Gaussian, exact
    z = width**2 + 1j * hbar * dt
    return np.exp(-((q1 - center) ** 2) / (2 * z)) / np.sqrt(2 * np.pi * z)


def test_smeared_delta_free_oracle():
    q1 = np.linspace(-3, 3, 41)
    for dt in (1e-3, 0.1, 1.0):
        got = smeared_delta(PropagatorSpec(0.0, 1.0, 0.0, dt), 0.5, 0.3, q1)
        np.testing.assert_allclose(got, _free_smeared_oracle(1.0, dt, 0.5, 0.3, q1), atol=1e-12)


def test_delta_limit_small_step():
    assert delta_limit_residual(PropagatorSpec(0.0, 1.0, 0.0, 1e-4), 0.5, 0.0) < 1e-3


def test_delta_limit_ladder_decreases():
    dts = 0.1 * 2.0 ** -np.arange(5)
    for kappa in (0.0, 1.0):
        ladder = delta_limit_ladder(kappa, 1.0, dts)
        assert np.all(np.diff(ladder) < 0)
        assert ladder[-1] / ladder[-2] == pytest.approx(0.5, rel=0.05)


def test_delta_limit_far_center():
    assert delta_limit_residual(PropagatorSpec(1.0, 1.0, 0.0, 1e-4), 0.5, 10.0) < 1e-8


def test_simpson_route_agrees_with_analytic():
    spec = PropagatorSpec(1.0, 1.0, 0.0, 0.1)
    q1 = np.linspace(-2, 2, 9)
    a = smeared_delta(spec, 0.5, 0.2, q1, method="analytic")
    b = smeared_delta(spec, 0.5, 0.2, q1, method="simpson")
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_simpson_route_refuses_unresolvable_step():
    with pytest.raises(NonConvergenceError) as info:
        smeared_delta(PropagatorSpec(1.0, 1.0, 0.0, 1e-7), 0.5, 0.0, [0.0, 1.0], method="simpson", max_points=100_000)
    assert info.value.context["delta_t"] == pytest.approx(1e-7)
    with pytest.raises(InvalidInputError):
        smeared_delta(PropagatorSpec(), 0.5, 0.0, [0.0], method="trapezoid")


# --- composition -----------------------------------------------------------


def _regularized_composition(first, second, q0, q1):
    """int dq second(q1|q) first(q|q0) exp(-d q^2), extrapolated to d -> 0."""
    vals = []
    for d in (4e-3, 2e-3, 1e-3):
        half = math.sqrt(40 / d)
        q = np.linspace(-half, half, int(2 * half / 2e-4) | 1)
        vals.append(simpson(second(q, q1) * first(q0, q) * np.exp(-d * q * q), x=q))
    r1, r2 = 2 * vals[1] - vals[0], 2 * vals[2] - vals[1]
    return (4 * r2 - r1) / 3


@pytest.mark.parametrize("kappa", [0.0, 1.0])
def test_composed_kernel_against_numerical_integral(kappa):
    spec = PropagatorSpec(kappa, 1.0, 0.0, 1.0)
    first = propagator_kernel(spec.between(0.0, 0.4))
    second = propagator_kernel(spec.between(0.4, 1.0))
    comp = composed_kernel(spec, 0.4)
    for q0, q1 in [(0.3, -0.7), (1.5, 2.0)]:
        oracle = _regularized_composition(first, second, q0, q1)
        assert abs(complex(comp(q0, q1)) - oracle) < 1e-6 * abs(oracle)


def test_ck_frictionless_holds():
    assert chapman_kolmogorov_residual(PropagatorSpec(0.0, 1.0, 0.0, 1.0), 0.5) < 1e-12
    assert chapman_kolmogorov_residual(PropagatorSpec(0.0, 0.3, -1.0, 2.0), 0.1) < 1e-12


def test_ck_fails_with_friction():
    res = chapman_kolmogorov_residual(PropagatorSpec(1.0, 1.0, 0.0, 1.0), 0.5)
    assert res > 1e-3
    assert res == pytest.approx(CK_REGRESSION, rel=1e-9)


@pytest.mark.parametrize("kappa", [0.1, 0.5, 2.0])
def test_ck_nonzero_for_all_positive_kappa(kappa):
    assert chapman_kolmogorov_residual(PropagatorSpec(kappa, 1.0, 0.0, 1.0), 0.5) > 1e-3


def test_ck_residual_shift_invariant():
    a = chapman_kolmogorov_residual(PropagatorSpec(1.0, 1.0, 0.0, 1.0), 0.5)
    b = chapman_kolmogorov_residual(PropagatorSpec(1.0, 1.0, 0.0, 1.0).shifted(3.7), 4.2)
    assert a == pytest.approx(b, rel=1e-12)


def test_composition_requires_interior_midpoint():
    with pytest.raises(InvalidInputError):
        composed_kernel(PropagatorSpec(), 1.0)


# --- properties -----------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(kappa=st.floats(0.0, 3.0), dt=st.floats(0.05, 5.0), hbar=st.floats(0.1, 3.0),
       q0=st.floats(-3, 3), q1=st.floats(-3, 3))
def test_amplitude_modulus_independent_of_endpoints(kappa, dt, hbar, q0, q1):
    spec = PropagatorSpec(kappa, hbar, 0.0, dt)
    amp = analytic_propagator(spec, q0, q1)
    form = action_quadratic_form(kappa, 0.0, dt)
    assert abs(amp) == pytest.approx(math.sqrt(abs(form.beta) / (2 * math.pi * hbar)), rel=1e-12)
    expected_phase = cmath.exp(1j * (closed_form_action(kappa, q0, 0.0, q1, dt) / hbar - math.pi / 4))
    assert amp.value / abs(amp) == pytest.approx(expected_phase, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(kappa=st.floats(0.0, 2.0), shift=st.floats(-10, 10), q0=st.floats(-3, 3), q1=st.floats(-3, 3))
def test_time_translation_property(kappa, shift, q0, q1):
    spec = PropagatorSpec(kappa, 1.0, 0.0, 1.3)
    a = analytic_propagator(spec, q0, q1).value
    b = analytic_propagator(spec.shifted(shift), q0, q1).value
    assert abs(a - b) < 1e-12


@settings(max_examples=40, deadline=None)
@given(kappa=st.floats(0.0, 2.0), a=st.floats(-2, 2), q0=st.floats(-2, 2), q1=st.floats(-2, 2))
def test_translation_gauge_covariance(kappa, a, q0, q1):
    # A(q1 + a | q0 + a) = exp(i a kappa (q0 - q1) / hbar) A(q1 | q0)
    kern = propagator_kernel(PropagatorSpec(kappa, 1.0, 0.0, 1.0))
    lhs = complex(kern(q0 + a, q1 + a))
    rhs = cmath.exp(1j * a * kappa * (q0 - q1)) * complex(kern(q0, q1))
    assert abs(lhs - rhs) < 1e-11
