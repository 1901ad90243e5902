import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockfilter.bunching import (
    TwoModeState,
    beamsplitter,
    beamsplitter_unitary,
    bunch_and_project,
    bunch_chain,
)
from fockfilter.cavity import CavityParams
from fockfilter.errors import TruncationError
from fockfilter.filtration import optimize_schedule, run_protocol
from fockfilter.fock import FieldState, FockSpace
from fockfilter.gaussian import coherent_state

from oracles import bunching_probability, random_density


def two_mode_ket(m, k, d):
    v = np.zeros(d * d)
    v[m * d + k] = 1
    return v


def test_single_photon_splits_evenly():
    d = 4
    out = beamsplitter(TwoModeState.product(FieldState.fock(1, d), FieldState.vacuum(d)), 0.5)
    assert np.allclose(out.reduced(0).diagonal[:2], [0.5, 0.5], atol=1e-12)
    assert np.allclose(out.reduced(1).diagonal[:2], [0.5, 0.5], atol=1e-12)


def test_hong_ou_mandel_dip():
    d = 5
    U = beamsplitter_unitary(0.5, d)
    psi = U @ two_mode_ket(1, 1, d)
    assert abs(psi[1 * d + 1]) < 1e-12
    assert abs(abs(psi[2 * d]) ** 2 - 0.5) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_total_number_conserved(seed, t):
    d = 6
    rng = np.random.default_rng(seed)
    s1 = FieldState.from_diagonal(np.r_[rng.dirichlet(np.ones(3)), np.zeros(d - 3)])
    s2 = FieldState(np.pad(random_density(3, rng), ((0, d - 3), (0, d - 3))), FockSpace(d))
    state = TwoModeState.product(s1, s2)
    out = beamsplitter(state, t)
    assert np.max(np.abs(out.total_number_distribution() - state.total_number_distribution())) < 1e-10


def test_beamsplitter_truncation_guard():
    d = 4
    with pytest.raises(TruncationError):
        beamsplitter(TwoModeState.product(FieldState.fock(2, d), FieldState.fock(2, d)), 0.5)


def test_vacuum_pair():
    out, p = bunch_and_project(FieldState.vacuum(4), FieldState.vacuum(4))
    assert abs(p - 1) < 1e-15 and abs(out.diagonal[0] - 1) < 1e-15


def test_single_photon_pair():
    out, p = bunch_and_project(FieldState.fock(1, 3), FieldState.fock(1, 3))
    assert abs(p - 0.5) < 1e-12 and abs(out.diagonal[2] - 1) < 1e-12


def test_five_five_to_ten():
    out, p = bunch_and_project(FieldState.fock(5, 8), FieldState.fock(5, 8))
    assert abs(p - 252 / 1024) < 1e-9
    assert abs(out.diagonal[10] - 1) < 1e-10


@pytest.mark.parametrize("m,k", [(m, k) for m in range(9) for k in range(9) if m + k <= 16])
def test_number_state_pairs(m, k):
    d = 9
    out, p = bunch_and_project(FieldState.fock(m, d), FieldState.fock(k, d))
    assert abs(out.diagonal[m + k] - 1) < 1e-10
    assert abs(p - bunching_probability(m, k)) < 1e-12


def test_kernel_matches_explicit_unitary():
    # heralded output from the full two-mode unitary, dim large enough to hold all photons
    d = 7
    rng = np.random.default_rng(2)
    r1 = np.pad(random_density(3, rng), ((0, d - 3), (0, d - 3)))
    r2 = np.pad(random_density(3, rng), ((0, d - 3), (0, d - 3)))
    s1, s2 = FieldState(r1, FockSpace(d)), FieldState(r2, FockSpace(d))
    out = beamsplitter(TwoModeState.product(s1, s2), 0.5)
    t = out.rho.reshape(d, d, d, d)[:, 0, :, 0]
    ref_p = np.trace(t).real
    got, p = bunch_and_project(s1, s2)
    assert abs(p - ref_p) < 1e-12
    assert np.allclose(got.rho[:d, :d], t / ref_p, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_symmetric_in_arguments(seed):
    rng = np.random.default_rng(seed)
    a = FieldState(random_density(5, rng), FockSpace(5))
    b = FieldState(random_density(5, rng, rank=2), FockSpace(5))
    oa, pa = bunch_and_project(a, b)
    ob, pb = bunch_and_project(b, a)
    assert abs(pa - pb) < 1e-10
    assert np.max(np.abs(oa.rho - ob.rho)) < 1e-10


def test_chain_base_case():
    a, b = coherent_state(0.7, 10), FieldState.fock(2, 10)
    o1, p1 = bunch_chain([a, b])
    o2, p2 = bunch_and_project(a, b)
    assert p1 == p2 and np.array_equal(o1.rho, o2.rho)


def test_chain_four_single_photons():
    out, p = bunch_chain([FieldState.fock(1, 3)] * 4)
    assert abs(out.diagonal[4] - 1) < 1e-9
    assert abs(p - bunching_probability(1, 1) * bunching_probability(2, 1) * bunching_probability(3, 1)) < 1e-12


def test_chain_needs_two_states():
    with pytest.raises(ValueError):
        bunch_chain([FieldState.vacuum(3)])


def test_filtered_copies_bunch_above_threshold(t10):
    params = CavityParams(250, 0.99)
    src = coherent_state(math.sqrt(5), 40)
    sched = optimize_schedule(src, 5, 4, params)
    assert len(sched) >= 3
    copy = run_protocol(src, sched, params, target_n=5).final_state
    copy = copy.resized(24)
    out, _ = bunch_chain([copy, copy])
    assert out.diagonal[10] > t10
