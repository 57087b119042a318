"""Tests for closed-form wavefunctions and the exact propagator."""

import cmath
import math

import numpy as np
import pytest
from scipy.integrate import simpson

from nhosc.core.analytic import (
    PropagatorKernel,
    dual_mode,
    hermite,
    hermite_functions,
    kernel_apply,
    maslov_sign,
    mehler_partial_sum,
    oscillator_mode,
    propagator,
    psi_n,
    psi_n_time_derivative,
    sigma_n,
    transform,
)
from nhosc.core.auxiliary import solve_auxiliary
from nhosc.core.numeric import WavefunctionGrid, apply_hamiltonian, build_grid, sample_state
from nhosc.core.observables import state_distance
from nhosc.shared.exceptions import CausticError, IndexTooLarge, UnsupportedCase
from nhosc.shared.models import AuxInit
from tests.fixtures.params import make_params


def textbook_kernel(x, x0, T):
    """m = ω = ħ = 1 oscillator propagator for 0 < T < π."""
    return cmath.sqrt(1.0 / (2j * math.pi * math.sin(T))) * cmath.exp(
        (1j / (2.0 * math.sin(T))) * ((x * x + x0 * x0) * math.cos(T) - 2.0 * x * x0)
    )


# Hermite polynomials and modes

def test_hermite_low_orders():
    z = np.array([-1.3, 0.0, 0.7])
    np.testing.assert_allclose(hermite(0, z), 1.0)
    np.testing.assert_allclose(hermite(1, z), 2.0 * z)
    np.testing.assert_allclose(hermite(3, z), 8.0 * z ** 3 - 12.0 * z)
    assert hermite(2, 1j) == pytest.approx(-6.0)


def test_hermite_functions_are_orthonormal():
    z = np.linspace(-12.0, 12.0, 4001)
    table = hermite_functions(6, z)
    weight = np.exp(-z * z)
    gram = np.array([[simpson(table[i] * table[j] * weight, x=z).real for j in range(7)] for i in range(7)])
    np.testing.assert_allclose(gram, np.eye(7), atol=1e-10)


def test_hermite_index_guard():
    with pytest.raises(IndexTooLarge):
        hermite_functions(201, 0.0)
    with pytest.raises(IndexTooLarge):
        hermite(-1, 0.0)


def test_oscillator_mode_matches_textbook_ground_state():
    x = np.linspace(-3.0, 3.0, 7)
    expected = math.pi ** -0.25 * np.exp(-x * x / 2.0)
    np.testing.assert_allclose(oscillator_mode(0, x, 1.0, 1.0), expected, atol=1e-15)
    assert sigma_n(1, 0.0, 2.0, 1.0, 1.0) == pytest.approx(0.0)


def test_transform_round_trip(linear_aux):
    point = transform(0.4, 1.5, linear_aux)
    assert point.x() == pytest.approx(0.4)
    assert point.y.imag == pytest.approx(-point.eta)


# Wavefunctions

def test_psi_n_reduces_to_stationary_state(free_params, free_aux):
    x = np.linspace(-4.0, 4.0, 41)
    for n in (0, 1, 3):
        np.testing.assert_allclose(
            psi_n(n, x, 1.3, free_aux, free_params),
            sigma_n(n, x, 1.3, 1.0, 1.0),
            atol=1e-13,
        )


def test_psi_n_requires_imaginary_drive(linear_aux):
    with pytest.raises(UnsupportedCase):
        psi_n(0, 0.0, 0.0, linear_aux, make_params(0.1, drive="real"))


def test_psi_n_solves_schrodinger_equation(linear_params, linear_aux):
    grid = build_grid(0.0, 8.0, 2049)
    for n in (0, 1, 2):
        t = 1.1
        psi = WavefunctionGrid(grid, psi_n(n, grid.x, t, linear_aux, linear_params), t)
        h_psi = apply_hamiltonian(psi, linear_params, t).values
        dpsi = psi_n_time_derivative(n, grid.x, t, linear_aux, linear_params)
        scale = np.max(np.abs(psi.values))
        assert np.max(np.abs(1j * dpsi - h_psi)[2:-2]) / scale < 1e-6


def test_time_derivative_matches_finite_difference(linear_params, linear_aux):
    x = np.linspace(-3.0, 3.0, 13)
    t, h = 0.8, 1e-4
    fd = (psi_n(1, x, t + h, linear_aux, linear_params) - psi_n(1, x, t - h, linear_aux, linear_params)) / (2 * h)
    exact = psi_n_time_derivative(1, x, t, linear_aux, linear_params)
    np.testing.assert_allclose(exact, fd, atol=1e-6)


def test_time_derivative_needs_unit_scale(free_params):
    aux = solve_auxiliary(free_params, AuxInit(s0=1.5), (0.0, 1.0), mesh_size=201)
    with pytest.raises(UnsupportedCase):
        psi_n_time_derivative(0, 0.0, 0.5, aux, free_params)


def test_dual_modes_are_biorthogonal(linear_params, linear_aux):
    x = np.linspace(-10.0, 10.0, 4001)
    t = 1.0
    gram = np.array([
        [simpson(psi_n(m, x, t, linear_aux, linear_params) * dual_mode(n, x, t, linear_aux, linear_params), x=x)
         for n in range(3)]
        for m in range(3)
    ])
    np.testing.assert_allclose(gram, np.eye(3), atol=1e-10)


def test_psi_n_with_general_scale_solves_schrodinger(linear_params):
    aux = solve_auxiliary(linear_params, AuxInit(s0=1.3, s_dot0=0.1), (0.0, 1.5), mesh_size=1501)
    grid = build_grid(0.0, 9.0, 2049)
    t, h = 0.9, 1e-4
    psi = WavefunctionGrid(grid, psi_n(1, grid.x, t, aux, linear_params), t)
    fd = (psi_n(1, grid.x, t + h, aux, linear_params) - psi_n(1, grid.x, t - h, aux, linear_params)) / (2 * h)
    h_psi = apply_hamiltonian(psi, linear_params, t).values
    scale = np.max(np.abs(psi.values))
    assert np.max(np.abs(1j * fd - h_psi)[2:-2]) / scale < 1e-5


# Propagator

def test_kernel_matches_textbook_propagator(free_params, free_aux):
    kernel = PropagatorKernel(free_aux, free_params)
    value = propagator(kernel, 0.3, 0.7, -0.2, 0.0)
    assert value == pytest.approx(textbook_kernel(0.3, -0.2, 0.7), rel=1e-9)


def test_mehler_sum_converges_with_damping(free_params, free_aux):
    kernel = PropagatorKernel(free_aux, free_params, damping=0.5)
    exact = propagator(kernel, 0.3, 0.7, -0.2, 0.0)
    series = mehler_partial_sum(kernel, 80, 0.3, 0.7, -0.2, 0.0)
    assert abs(series - exact) / abs(exact) < 1e-8


def test_mehler_sum_for_driven_case(linear_params, linear_aux):
    kernel = PropagatorKernel(linear_aux, linear_params, damping=0.5)
    x, x0 = np.array([-0.4, 0.3]), np.array([0.1, -0.2])
    exact = propagator(kernel, x, 1.2, x0, 0.5)
    series = mehler_partial_sum(kernel, 80, x, 1.2, x0, 0.5)
    np.testing.assert_allclose(series, exact, rtol=1e-8)


def test_kernel_composition(linear_params, linear_aux):
    full = PropagatorKernel(linear_aux, linear_params, damping=0.5)
    half = PropagatorKernel(linear_aux, linear_params, damping=0.25)
    x1 = np.linspace(-8.0, 8.0, 4097)
    for x, x0 in ((-0.5, 0.1), (0.8, -0.4)):
        inner = propagator(half, x, 0.7, x1, 0.35) * propagator(half, x1, 0.35, x0, 0.0)
        composed = simpson(inner, x=x1)
        direct = propagator(full, x, 0.7, x0, 0.0)
        assert abs(composed - direct) / abs(direct) < 1e-5


def test_kernel_propagates_eigenmode(linear_params, linear_aux):
    kernel = PropagatorKernel(linear_aux, linear_params)
    grid = build_grid(0.0, 8.0, 2049)
    psi0 = sample_state(lambda x: psi_n(1, x, 0.2, linear_aux, linear_params), grid, 0.2)
    evolved = kernel_apply(kernel, psi0, 0.7)
    expected = WavefunctionGrid(grid, psi_n(1, grid.x, 0.7, linear_aux, linear_params), 0.7)
    assert state_distance(evolved, expected).l2_rel < 1e-8


def test_kernel_delta_limit(linear_params, linear_aux):
    kernel = PropagatorKernel(linear_aux, linear_params)
    fine = build_grid(0.0, 8.0, 640001)
    out = build_grid(0.0, 2.0, 21)
    psi0 = sample_state(lambda x: psi_n(0, x, 0.5, linear_aux, linear_params), fine, 0.5)
    applied = kernel_apply(kernel, psi0, 0.5 + 1e-4, out_grid=out)
    target = WavefunctionGrid(out, psi_n(0, out.x, 0.5, linear_aux, linear_params), 0.5 + 1e-4)
    assert state_distance(applied, target).l2_rel < 1e-4


def test_caustic_raises_without_damping(free_params, free_aux):
    kernel = PropagatorKernel(free_aux, free_params)
    with pytest.raises(CausticError):
        propagator(kernel, 0.1, math.pi, 0.2, 0.0)
    damped = PropagatorKernel(free_aux, free_params, damping=0.1)
    assert np.isfinite(propagator(damped, 0.1, math.pi, 0.2, 0.0))


def test_kernel_rejects_bad_options(linear_params, linear_aux):
    with pytest.raises(ValueError):
        PropagatorKernel(linear_aux, linear_params, damping=-1.0)
    with pytest.raises(ValueError):
        PropagatorKernel(linear_aux, linear_params, initial_phase="other")
    with pytest.raises(UnsupportedCase):
        PropagatorKernel(linear_aux, make_params(0.1, drive="mixed"))


def test_maslov_sign():
    assert maslov_sign(0.5) == 1
    assert maslov_sign(3.5) == -1
    assert maslov_sign(7.0) == -1
    assert maslov_sign(10.0) == 1


def test_hermite_derivative_identity():
    rng = np.random.default_rng(7)
    z = rng.uniform(-2.0, 2.0, 20) + 1j * rng.uniform(0.2, 1.0, 20)
    h = 1e-4
    for n in range(1, 21):
        fd = (hermite(n, z + h) - hermite(n, z - h)) / (2.0 * h)
        exact = 2.0 * n * hermite(n - 1, z)
        np.testing.assert_allclose(fd, exact, rtol=1e-6)


@pytest.mark.parametrize("case", ["free", "linear"])
def test_kernel_forward_then_backward_restores_state(case, request):
    params = request.getfixturevalue(f"{case}_params")
    aux = request.getfixturevalue(f"{case}_aux")
    kernel = PropagatorKernel(aux, params)
    grid = build_grid(0.0, 8.0, 2049)
    psi0 = sample_state(lambda x: psi_n(1, x, 0.2, aux, params), grid, 0.2)
    forward = kernel_apply(kernel, psi0, 1.2)
    restored = kernel_apply(kernel, forward, 0.2)
    assert restored.t == 0.2
    assert state_distance(restored, psi0).l2_rel < 1e-6
