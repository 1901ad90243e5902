"""Conditional bunching of photon-number states on a beamsplitter.

Two single-mode states interfere; keeping only the events with the second
output port in vacuum concentrates all photons into the first port. For number
states |m>|k> this gives |m+k> with probability C(m+k, m) t^m (1-t)^k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .errors import HeraldingError, TruncationError
from .fock import FieldState, FockSpace, _as_space, _check_density, _frozen, _hermitize

MIN_HERALD_PROBABILITY = 1e-12


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Density matrix on mode1 (x) mode2, both truncated to ``space``."""

    rho: np.ndarray
    space: FockSpace

    def __post_init__(self):
        d = self.space.dim
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (d * d, d * d):
            raise ValueError(f"expected shape {(d * d, d * d)}, got {rho.shape}")
        rho = _hermitize(rho)
        _check_density(rho, "two-mode state")
        object.__setattr__(self, "rho", _frozen(rho))

    @classmethod
    def product(cls, s1: FieldState, s2: FieldState) -> "TwoModeState":
        if s1.dim != s2.dim:
            raise ValueError("both modes must share the same truncation")
        return cls(np.kron(s1.rho, s2.rho), s1.space)

    @property
    def dim(self) -> int:
        return self.space.dim

    def _tensor(self) -> np.ndarray:
        d = self.dim
        return self.rho.reshape(d, d, d, d)

    def reduced(self, mode: int) -> FieldState:
        t = self._tensor()
        r = np.einsum("ijkj->ik", t) if mode == 0 else np.einsum("ijil->jl", t)
        return FieldState(r, self.space)

    def total_number_distribution(self) -> np.ndarray:
        d = self.dim
        p = self.rho.diagonal().real.reshape(d, d)
        out = np.zeros(2 * d - 1)
        for m in range(d):
            out[m:m + d] += p[m]
        return out

    def amplitude_matrix(self) -> np.ndarray:
        """Populations <m, k| rho |m, k> as a (dim, dim) array."""
        return self.rho.diagonal().real.reshape(self.dim, self.dim)


def _mixing_angle(transmissivity: float) -> float:
    if not 0 <= transmissivity <= 1:
        raise ValueError(f"transmissivity must lie in [0, 1], got {transmissivity!r}")
    return float(np.arccos(np.sqrt(transmissivity)))


def beamsplitter_unitary(transmissivity: float, space: FockSpace | int) -> np.ndarray:
    """exp[theta (a^dag b - a b^dag)] with cos^2 theta = transmissivity."""
    space = _as_space(space)
    a = space.a
    I = space.identity()
    A, B = np.kron(a, I), np.kron(I, a)
    G = A.conj().T @ B - A @ B.conj().T
    return expm(_mixing_angle(transmissivity) * G)


def beamsplitter(state: TwoModeState, transmissivity: float) -> TwoModeState:
    """Unitary two-mode mixing; refuses states whose photons could leave the truncation."""
    d = state.dim
    pops = state.amplitude_matrix()
    m, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    if pops[m + k > d - 1].sum() > 1e-12:
        raise TruncationError(f"total photon number reaches the per-mode cutoff {d - 1}")
    U = beamsplitter_unitary(transmissivity, state.space)
    return TwoModeState(U @ state.rho @ U.conj().T, state.space)


def bunching_kernel(d1: int, d2: int, transmissivity: float = 0.5) -> np.ndarray:
    """Map |m, k> -> <m+k, 0| U |m, k> |m+k> as a (d1+d2-1, d1*d2) matrix.

    The amplitude is sqrt(C(m+k, m)) t^m s^k with t = cos theta, s = sin theta.
    """
    theta = _mixing_angle(transmissivity)
    c, s = np.cos(theta), np.sin(theta)
    K = np.zeros((d1 + d2 - 1, d1 * d2))
    for m in range(d1):
        for k in range(d2):
            N = m + k
            logb = 0.5 * (gammaln(N + 1) - gammaln(m + 1) - gammaln(k + 1))
            K[N, m * d2 + k] = np.exp(logb) * c ** m * s ** k
    return K


def bunch_and_project(state1: FieldState, state2: FieldState, transmissivity: float = 0.5):
    """Interfere two states and herald vacuum in the second output port.

    Returns (output state on dim1 + dim2 - 1 levels, heralding probability).
    """
    K = bunching_kernel(state1.dim, state2.dim, transmissivity)
    sub = K @ np.kron(state1.rho, state2.rho) @ K.T
    prob = float(np.trace(sub).real)
    if prob < MIN_HERALD_PROBABILITY:
        raise HeraldingError(f"vacuum herald probability {prob:.3e}")
    return FieldState(sub / prob, FockSpace(sub.shape[0])), prob


def bunch_chain(states, transmissivity: float = 0.5):
    """Sequential pairwise bunching of several copies; probabilities multiply."""
    states = list(states)
    if len(states) < 2:
        raise ValueError("need at least two states to bunch")
    out, total = states[0], 1.0
    for nxt in states[1:]:
        out, p = bunch_and_project(out, nxt, transmissivity)
        total *= p
    return out, total
