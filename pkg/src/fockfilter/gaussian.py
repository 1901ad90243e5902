"""Displaced squeezed thermal inputs and their closed-form photon statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import eval_hermite

from .errors import TruncationError
from .fock import (
    TAIL_FLAG,
    FieldState,
    FockSpace,
    _as_space,
    displacement_operator,
    squeezing_operator,
)


@dataclass(frozen=True)
class GaussianSpec:
    """Input state rho(alpha, r, nbar) = D(alpha) S(r) rho_th(nbar) S^dag D^dag."""

    alpha: complex = 0.0
    r: complex = 0.0
    nbar: float = 0.0

    def __post_init__(self):
        if self.nbar < 0:
            raise ValueError(f"thermal occupation must be >= 0, got {self.nbar!r}")

    @property
    def mean_photon(self) -> float:
        s = abs(self.r)
        return abs(self.alpha) ** 2 + np.sinh(s) ** 2 + self.nbar * np.cosh(2 * s)

    @classmethod
    def parse(cls, text: str) -> "GaussianSpec":
        """Parse ``"alpha,r,nbar"``; ``sqrt(x)`` is accepted for alpha."""
        parts = [p.strip() for p in text.strip("()[] ").split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected 'alpha,r,nbar', got {text!r}")
        vals = []
        for p in parts:
            if p.startswith("sqrt(") and p.endswith(")"):
                vals.append(float(np.sqrt(float(p[5:-1]))))
            else:
                vals.append(complex(p) if "j" in p else float(p))
        return cls(*vals)


def thermal_distribution(nbar: float, dim: int) -> np.ndarray:
    """Bose-Einstein statistics nbar^n / (1+nbar)^(n+1), truncated to ``dim``."""
    n = np.arange(dim)
    if nbar == 0:
        return (n == 0).astype(float)
    return np.exp(n * np.log(nbar / (1 + nbar)) - np.log1p(nbar))


def displaced_squeezed_thermal(spec: GaussianSpec, space: FockSpace | int) -> FieldState:
    space = _as_space(space)
    th = np.diag(thermal_distribution(spec.nbar, space.dim)).astype(complex)
    U = displacement_operator(spec.alpha, space) @ squeezing_operator(spec.r, space)
    rho = U @ th @ U.conj().T
    p = rho.diagonal().real
    tail = p[space.dim - 2:].sum()
    if tail > TAIL_FLAG or abs(np.trace(rho).real - 1) > TAIL_FLAG:
        raise TruncationError(
            f"{spec} does not fit into dim {space.dim} (tail mass {tail:.2e})"
        )
    return FieldState(rho / np.trace(rho).real, space)


def coherent_state(alpha: complex, space: FockSpace | int) -> FieldState:
    return displaced_squeezed_thermal(GaussianSpec(alpha, 0.0, 0.0), space)


def dsv_amplitudes(nmax: int, alpha: complex, xi: complex) -> np.ndarray:
    """<n| D(alpha) S(xi) |0> for n < nmax.

    Uses the three-term Hermite recurrence on the scaled amplitudes
    a_n = (e^{i theta} tanh(r) / 2)^{n/2} H_n(z) / sqrt(n!), which stays finite
    as r -> 0 (it reduces to the coherent-state amplitudes there).
    """
    alpha = complex(alpha)
    r = abs(xi)
    e = complex(xi) / r if r > 0 else 1.0 + 0j  # e^{i theta}
    ch, th = np.cosh(r), np.tanh(r)
    gamma = alpha * ch + np.conj(alpha) * e * np.sinh(r)
    a = np.zeros(nmax, dtype=complex)
    a[0] = 1.0
    if nmax > 1:
        a[1] = gamma / ch
    for k in range(1, nmax - 1):
        a[k + 1] = (gamma / ch * a[k] - e * th * np.sqrt(k) * a[k - 1]) / np.sqrt(k + 1)
    pref = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * np.conj(alpha) ** 2 * e * th) / np.sqrt(ch)
    return pref * a


def dsv_photon_probability(n: int, alpha: float, r: float) -> float:
    """p_n of the displaced squeezed vacuum with real alpha and real r.

    Positive r squeezes along the displacement (the aligned case); negative r
    is the orthogonal squeezing direction.
    """
    if n < 0 or int(n) != n:
        raise ValueError(f"photon number must be a non-negative integer, got {n!r}")
    if alpha < 0:
        raise ValueError("alpha must be >= 0 (phase is absorbed into the convention)")
    return float(abs(dsv_amplitudes(n + 1, alpha, r)[n]) ** 2)


def dsv_distribution(nmax: int, alpha: float, r: float) -> np.ndarray:
    return np.abs(dsv_amplitudes(nmax, alpha, r)) ** 2


def superposition_theta(alpha: float, r: float) -> float:
    """Angle theta of the cos(theta)|0> + sin(theta)|2> state left after an even-parity filter.

    tan(theta) = tanh(r) / (2 sqrt 2) * H_2(alpha e^r / sqrt(sinh 2r)).
    """
    if r <= 0:
        raise ValueError(f"squeezing must be positive, got {r!r}")
    x = alpha * np.exp(r) / np.sqrt(np.sinh(2 * r))
    return float(np.arctan(np.tanh(r) / (2 * np.sqrt(2)) * eval_hermite(2, x)))
