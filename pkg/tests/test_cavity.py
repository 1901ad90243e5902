import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from fockfilter.cavity import (
    CavityParams,
    branch_channel_factors,
    controlled_reflection,
    detuning_for_phase,
    phase_for_detuning,
    reflection_coefficients,
)
from fockfilter.fock import FieldState, FockSpace, JointState, dephasing_channel
from fockfilter.gaussian import thermal_distribution

from oracles import random_density

PLUS = np.array([1, 1]) / np.sqrt(2)


def ideal_unitary(phi, dim):
    n = np.arange(dim)
    return np.block([[np.eye(dim), np.zeros((dim, dim))],
                     [np.zeros((dim, dim)), np.diag(np.exp(1j * phi * n))]])


@pytest.mark.parametrize("kw", [dict(cooperativity=0, beta=1), dict(cooperativity=1, beta=0),
                                dict(cooperativity=1, beta=1.1), dict(cooperativity=1, beta=1, tau=0)])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        CavityParams(**kw)


@pytest.mark.parametrize("x", [-3.0, -0.4, 0.0, 0.2, 5.0])
def test_lossless_uncoupled_reflection(x):
    pair = reflection_coefficients(CavityParams(100, 1.0, x))
    expected = (-1 - 2j * x) / (1 - 2j * x)
    assert abs(pair.r_uncoupled - expected) < 1e-14
    assert abs(abs(pair.r_uncoupled) - 1) < 1e-12
    assert abs(math.remainder(np.angle(pair.r_uncoupled) - phase_for_detuning(x), 2 * math.pi)) < 1e-12


def test_strong_coupling_limit():
    assert abs(reflection_coefficients(CavityParams(1e9, 1.0, 0.3)).r_coupled - 1) < 1e-8


def test_resonant_lossy_values():
    pair = reflection_coefficients(CavityParams(250, 0.99))
    assert abs(pair.r_coupled - (1 - 1.98 / 1001)) < 1e-14
    assert abs(pair.r_uncoupled + 0.98) < 1e-14


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-3, 1e4), st.floats(0.01, 1), st.floats(-50, 50))
def test_reflection_moduli_bounded(C, beta, x):
    pair = reflection_coefficients(CavityParams(C, beta, x))
    assert abs(pair.r_coupled) <= 1 + 1e-12 and abs(pair.r_uncoupled) <= 1 + 1e-12


def test_phase_limits():
    assert phase_for_detuning(0.0) == math.pi
    assert abs(phase_for_detuning(1e9)) < 1e-6
    assert detuning_for_phase(0.0) == math.inf


def test_phase_inverse_by_root_finding():
    target = math.pi / 10
    x = brentq(lambda x: phase_for_detuning(x) - target, -1e6, 0.0, xtol=1e-15)
    assert abs(phase_for_detuning(x) - target) < 1e-9
    assert abs(detuning_for_phase(target) - x) < 1e-9


@settings(max_examples=100, deadline=None)
@given(st.floats(-math.pi + 1e-6, math.pi).filter(lambda p: abs(p) > 1e-6))
def test_phase_round_trip(phi):
    assert abs(phase_for_detuning(detuning_for_phase(phi)) - phi) < 1e-9


def test_vacuum_branch_unaffected():
    dim = 6
    joint = JointState.product(PLUS, FieldState.vacuum(dim))
    out = controlled_reflection(joint, CavityParams(30, 1.0, 0.7))
    assert np.allclose(out.field_state().rho, FieldState.vacuum(dim).rho, atol=1e-12)
    assert abs(out.atom_state()[0, 0] - 0.5) < 1e-12
    assert abs(abs(out.atom_state()[0, 1]) - 0.5) < 1e-12


def test_ideal_single_photon_entangles():
    dim = 4
    out = controlled_reflection(JointState.product(PLUS, FieldState.fock(1, dim)), CavityParams.ideal(0.0))
    psi = np.zeros(2 * dim, complex)
    psi[1], psi[dim + 1] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    assert np.allclose(out.rho, np.outer(psi, psi.conj()), atol=1e-10)


def test_lossy_photon_survival():
    dim = 4
    s_atom = np.array([0, 1])
    out = controlled_reflection(JointState.product(s_atom, FieldState.fock(1, dim)), CavityParams(250, 0.99))
    assert abs(out.field_state().diagonal[1] - 0.9604) < 1e-12


@pytest.mark.parametrize("x", [0.0, 0.25, -1.3])
def test_ideal_limit_matches_unitary(x):
    dim = 8
    U = ideal_unitary(phase_for_detuning(x), dim)
    rng = np.random.default_rng(5)
    for params in (CavityParams.ideal(x), CavityParams(1e12, 1.0, x)):
        for _ in range(5):
            rho = random_density(2 * dim, rng)
            out = controlled_reflection(JointState(rho, FockSpace(dim)), params)
            assert np.max(np.abs(out.rho - U @ rho @ U.conj().T)) < 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.5, 1e3), st.floats(0.5, 1), st.floats(-5, 5))
def test_channel_trace_preserving_and_positive(seed, C, beta, x):
    dim = 7
    rho = random_density(2 * dim, np.random.default_rng(seed))
    out = controlled_reflection(JointState(rho, FockSpace(dim)), CavityParams(C, beta, x))
    assert abs(np.trace(out.rho).real - 1) < 1e-9
    assert np.linalg.eigvalsh(out.rho)[0] > -1e-10


@pytest.mark.parametrize("strength", [0.1, 1.0, 10.0])
def test_gate_commutes_with_dephasing_on_diagonal_inputs(strength):
    field = FieldState.from_diagonal(thermal_distribution(2, 30))
    params = CavityParams(250, 0.99, 0.3)
    a = controlled_reflection(JointState.product(PLUS, field), params)
    b = controlled_reflection(JointState.product(PLUS, dephasing_channel(field, strength)), params)
    assert np.max(np.abs(a.rho - b.rho)) < 1e-10


def test_branch_factors_ideal():
    (Tg, thg), (Ts, ths) = branch_channel_factors(CavityParams.ideal(0.0))
    assert (Tg, thg, Ts) == (1.0, 0.0, 1.0)
    assert abs(abs(ths) - math.pi) < 1e-15
