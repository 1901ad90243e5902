import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockfilter.errors import TruncationError
from fockfilter.fock import FieldState, FockSpace
from fockfilter.gaussian import thermal_distribution
from fockfilter.sensing import (
    SensingTask,
    cfi_photon_counting,
    phase_cfi_binary,
    phase_probability,
    phase_randomized_output,
    qfi_pure_phase,
)

from oracles import poisson, random_density


def theta_state(theta, dim=6):
    v = np.zeros(dim)
    v[0], v[2] = math.cos(theta), math.sin(theta)
    return FieldState.from_ket(v)


def binary_p1(Theta, theta, phi):
    return (math.cos(phi) ** 2 * math.cos(theta) ** 2 + math.sin(phi) ** 2 * math.sin(theta) ** 2
            + 0.5 * math.sin(2 * phi) * math.sin(2 * theta) * math.cos(2 * Theta))


def test_task_validation():
    with pytest.raises(ValueError):
        SensingTask("rotation", 1.0)
    with pytest.raises(ValueError):
        SensingTask("displacement", -0.1)
    assert abs(SensingTask("phase", 7.0).magnitude - (7.0 - 2 * math.pi)) < 1e-15


def test_zero_kick_identity():
    p = thermal_distribution(1, 30)
    st_ = FieldState.from_diagonal(p / p.sum())
    assert np.allclose(phase_randomized_output(st_, SensingTask("displacement", 0.0)), st_.diagonal, atol=1e-15)


@pytest.mark.parametrize("Nd", [1e-3, 0.1, 2.0])
def test_vacuum_displacement_is_poisson(Nd):
    out = phase_randomized_output(FieldState.vacuum(40), SensingTask("displacement", Nd))
    assert np.allclose(out, [poisson(n, Nd) for n in range(40)], atol=1e-8)
    assert abs(out.sum() - 1) < 1e-8


@pytest.mark.parametrize("kind", ["displacement", "squeezing"])
def test_quadrature_matches_diagonal_shortcut(kind):
    st_ = FieldState.from_diagonal(np.r_[0.2, 0.3, 0, 0.5, np.zeros(36)])
    task = SensingTask(kind, 0.3)
    a = phase_randomized_output(st_, task, method="diagonal")
    b = phase_randomized_output(st_, task, method="quadrature")
    assert np.max(np.abs(a - b)) < 1e-7


def test_coherent_inputs_use_quadrature():
    rng = np.random.default_rng(0)
    rho = np.pad(random_density(4, rng), ((0, 28), (0, 28)))
    out = phase_randomized_output(FieldState(rho, FockSpace(32)), SensingTask("displacement", 0.2))
    assert abs(out.sum() - 1) < 1e-8 and out.min() > -1e-12


def test_truncation_guard():
    with pytest.raises(TruncationError):
        phase_randomized_output(FieldState.fock(10, 14), SensingTask("displacement", 1.0))


@pytest.mark.parametrize("m", [0, 5, 10])
@pytest.mark.parametrize("N", [1e-3, 1e-2, 1e-1])
def test_fock_cfi_closed_forms(m, N):
    st_ = FieldState.fock(m, 64)
    fd = cfi_photon_counting(st_, SensingTask("displacement", N))
    fs = cfi_photon_counting(st_, SensingTask("squeezing", N))
    assert abs(fd / ((2 * m + 1) / N) - 1) < 0.01
    assert abs(fs / ((m * m + m + 1) / (2 * N)) - 1) < 0.01


def test_fisher_examples():
    assert abs(cfi_photon_counting(FieldState.fock(10, 64), SensingTask("displacement", 0.01)) - 2100) < 21
    assert abs(cfi_photon_counting(FieldState.fock(10, 64), SensingTask("squeezing", 0.01)) - 5550) < 55.5
    assert abs(cfi_photon_counting(FieldState.vacuum(64), SensingTask("displacement", 0.1)) - 10) < 0.1


def test_fisher_needs_positive_magnitude():
    with pytest.raises(ValueError):
        cfi_photon_counting(FieldState.vacuum(16), SensingTask("displacement", 0.0))


@pytest.mark.parametrize("Theta", [0.1, 0.5, 1.0, 2.0, -0.7])
def test_balanced_binary_phase_fisher(Theta):
    assert abs(phase_cfi_binary(theta_state(math.pi / 4), math.pi / 4, Theta) - 4) < 1e-6


def test_vacuum_has_no_phase_information():
    assert phase_cfi_binary(theta_state(0.0), math.pi / 5, 0.4) == 0


def test_degenerate_outcome_warns():
    with pytest.warns(UserWarning):
        assert phase_cfi_binary(theta_state(0.0), 0.0, 0.4) == 0


def test_binary_fisher_closed_form():
    th = ph = math.pi / 6
    T = math.pi / 8
    p = binary_p1(T, th, ph)
    ref = math.sin(2 * th) ** 2 * math.sin(2 * ph) ** 2 * math.sin(2 * T) ** 2 / (p * (1 - p))
    assert abs(phase_cfi_binary(theta_state(th), ph, T) - ref) < 1e-12
    assert abs(phase_probability(theta_state(th), ph, T) - p) < 1e-14


def test_probability_symmetric_in_state_and_projector():
    for th in np.linspace(0, math.pi, 9):
        for ph in np.linspace(0, math.pi, 9):
            for T in (0.0, 0.3, 1.7):
                a = phase_probability(theta_state(th), ph, T)
                b = phase_probability(theta_state(ph), th, T)
                assert abs(a - b) < 1e-14
                assert abs(a - binary_p1(T, th, ph)) < 1e-14


@settings(max_examples=60, deadline=None)
@given(st.floats(0, math.pi), st.floats(0, math.pi), st.floats(-3, 3))
def test_cfi_bounded_by_qfi(th, ph, T):
    st_ = theta_state(th)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert phase_cfi_binary(st_, ph, T) <= qfi_pure_phase(st_) + 1e-6


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 1.4), st.floats(0.1, 1.4), st.floats(0.1, 1.4), st.floats(0.5, 1.0))
def test_finite_difference_agrees_with_analytic(th, ph, T, eff):
    st_ = theta_state(th)
    p = phase_probability(st_, ph, T, eff)
    if min(p, 1 - p) < 1e-3:
        return
    a = phase_cfi_binary(st_, ph, T, eff, method="analytic")
    f = phase_cfi_binary(st_, ph, T, eff, method="fd")
    assert abs(f - a) <= 1e-4 * max(a, 1e-6) + 1e-12


def test_noisy_projector_reduces_information():
    st_ = theta_state(math.pi / 4)
    assert phase_cfi_binary(st_, math.pi / 4, 0.6, efficiency=0.97) < 4


def test_qfi_examples():
    assert abs(qfi_pure_phase(theta_state(math.pi / 4)) - 4) < 1e-14
    assert qfi_pure_phase(FieldState.fock(3, 6)) == 0
    assert qfi_pure_phase(FieldState.from_ket(np.array([1, 1]) / np.sqrt(2))) == 1


@pytest.mark.parametrize("N", [1, 2, 3, 5])
def test_qfi_noon_like_states(N):
    v = np.zeros(N + 1)
    v[0] = v[N] = 1 / math.sqrt(2)
    assert abs(qfi_pure_phase(FieldState.from_ket(v)) - N * N) < 1e-12


def test_qfi_rejects_mixed_state():
    with pytest.raises(ValueError):
        qfi_pure_phase(FieldState.from_diagonal([0.5, 0.5]))
