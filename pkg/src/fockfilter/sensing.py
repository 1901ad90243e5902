"""Fisher information of photon counting after random-phase Gaussian kicks,
and phase estimation with binary projections onto cos(phi)|0> + sin(phi)|2>."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import TruncationError
from .fock import FieldState, displacement_operator, squeezing_operator

KINDS = ("displacement", "squeezing", "phase")
P_FLOOR = 1e-14


@dataclass(frozen=True)
class SensingTask:
    kind: str
    magnitude: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "phase":
            object.__setattr__(self, "magnitude", math.remainder(self.magnitude, 2 * math.pi))
        elif self.magnitude < 0:
            raise ValueError(f"magnitude must be >= 0, got {self.magnitude!r}")

    def with_magnitude(self, value: float) -> "SensingTask":
        return SensingTask(self.kind, value)


def _kick(task: SensingTask, dim: int, phase: float = 0.0) -> np.ndarray:
    amp = math.sqrt(task.magnitude) * np.exp(1j * phase)
    if task.kind == "displacement":
        return displacement_operator(amp, dim)
    if task.kind == "squeezing":
        return squeezing_operator(amp, dim)
    raise ValueError("photon-counting output is defined for displacement and squeezing only")


def _is_diagonal(rho: np.ndarray) -> bool:
    return np.max(np.abs(rho - np.diag(rho.diagonal()))) < 1e-14


def _check_fit(G: np.ndarray, p_in: np.ndarray) -> None:
    # weight pushed into the top two levels by the kick
    leak = (np.abs(G[-2:, :]) ** 2 @ p_in).sum()
    if leak > 1e-8:
        raise TruncationError(f"kick pushes {leak:.2e} of the population to the truncation edge")


def phase_randomized_output(state: FieldState, task: SensingTask, n_quad: int = 64,
                            method: str = "auto") -> np.ndarray:
    """Photon statistics after a displacement or squeezing with uniformly random phase.

    ``method`` is 'diagonal' (exact shortcut, uses only the input populations),
    'quadrature' (n_quad-point trapezoid over the phase) or 'auto'.
    """
    if method == "auto":
        method = "diagonal" if _is_diagonal(state.rho) else "quadrature"
    p_in = state.diagonal
    if task.magnitude == 0:
        return p_in.copy()
    if method == "diagonal":
        G = _kick(task, state.dim)
        _check_fit(G, p_in)
        out = (np.abs(G) ** 2) @ p_in
    elif method == "quadrature":
        out = np.zeros(state.dim)
        for ph in 2 * np.pi * np.arange(n_quad) / n_quad:
            G = _kick(task, state.dim, ph)
            _check_fit(G, p_in)
            out += np.einsum("ij,jk,ik->i", G, state.rho, G.conj()).real
        out /= n_quad
    else:
        raise ValueError(f"unknown method {method!r}")
    out = np.clip(out, 0.0, None)
    return out / out.sum()


def _fisher(p: np.ndarray, dp: np.ndarray) -> float:
    keep = p > P_FLOOR
    return float(np.sum(dp[keep] ** 2 / p[keep]))


def cfi_photon_counting(state: FieldState, task: SensingTask, rel_step: float = 1e-4) -> float:
    """Classical Fisher information of photon counting with respect to the kick magnitude.

    The derivative is a central difference with one Richardson step.
    """
    x = task.magnitude
    if x <= 0:
        raise ValueError("Fisher information is evaluated at a positive magnitude")
    h = rel_step * x

    def p(val):
        return phase_randomized_output(state, task.with_magnitude(val))

    def central(step):
        return (p(x + step) - p(x - step)) / (2 * step)

    d_h, d_half = central(h), central(0.5 * h)
    dp = (4 * d_half - d_h) / 3
    p0 = p(x)
    noise = np.max(np.abs(d_half - d_h))
    if noise > 1e-3 * max(np.max(np.abs(dp)), 1e-300):
        warnings.warn(f"finite-difference derivative unstable (step mismatch {noise:.2e})")
    return _fisher(p0, dp)


# ---------------------------------------------------------- phase sensing

def binary_projector(phi: float, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[0], v[2] = math.cos(phi), math.sin(phi)
    return np.outer(v, v.conj())


def _phase_shifted(state: FieldState, theta_op: float) -> np.ndarray:
    ph = np.exp(1j * theta_op * np.arange(state.dim))
    return ph[:, None] * state.rho * ph.conj()[None, :]


def _noisy_projector(phi: float, dim: int, efficiency: float) -> np.ndarray:
    if not 0 <= efficiency <= 1:
        raise ValueError(f"efficiency must lie in [0, 1], got {efficiency!r}")
    return efficiency * binary_projector(phi, dim) + 0.5 * (1 - efficiency) * np.eye(dim)


def phase_probability(state: FieldState, phi: float, theta_op: float, efficiency: float = 1.0) -> float:
    """Probability of the projector outcome after the phase shift e^{i Theta n}."""
    Pi = _noisy_projector(phi, state.dim, efficiency)
    return float(np.trace(Pi @ _phase_shifted(state, theta_op)).real)


def phase_cfi_binary(state: FieldState, phi: float, theta_op: float, efficiency: float = 1.0,
                     method: str = "analytic", rel_step: float = 1e-4) -> float:
    """Fisher information of the binary measurement for the phase Theta.

    ``efficiency`` < 1 mixes the projector with the identity. The analytic
    derivative uses dp/dTheta = Tr[Pi i[n, rho_Theta]]; ``method='fd'`` uses a
    Richardson-extrapolated central difference instead.
    """
    p = phase_probability(state, phi, theta_op, efficiency)
    if method == "analytic":
        Pi = _noisy_projector(phi, state.dim, efficiency)
        rho = _phase_shifted(state, theta_op)
        n = np.arange(state.dim)
        comm = 1j * (n[:, None] - n[None, :]) * rho  # i[n, rho]
        dp = float(np.trace(Pi @ comm).real)
    elif method == "fd":
        h = rel_step * max(abs(theta_op), 1.0)
        f = lambda t: phase_probability(state, phi, t, efficiency)
        d1 = (f(theta_op + h) - f(theta_op - h)) / (2 * h)
        d2 = (f(theta_op + h / 2) - f(theta_op - h / 2)) / h
        dp = (4 * d2 - d1) / 3
    else:
        raise ValueError(f"unknown method {method!r}")
    if p <= P_FLOOR or p >= 1 - P_FLOOR:
        warnings.warn(f"binary outcome is deterministic (p = {p:.3g}); Fisher information set to 0")
        return 0.0
    return dp ** 2 / (p * (1 - p))


def qfi_pure_phase(state: FieldState) -> float:
    """Quantum Fisher information 4 Var(n) for phase shifts of a pure state."""
    if 1 - state.purity > 1e-6:
        raise ValueError(f"state is not pure (1 - Tr rho^2 = {1 - state.purity:.2e})")
    n = np.arange(state.dim)
    p = state.diagonal
    mean = p @ n
    return float(4 * (p @ n ** 2 - mean ** 2))
