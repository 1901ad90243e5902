"""Truncated single-mode Fock space: states, standard operators and channels.

Every matrix lives on the span of |0>, ..., |dim-1>. Operator exponentials are
taken of the truncated generators, so the truncation error is visible as a
unitarity defect of the top rows rather than being bounded analytically.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.special import gammaln

from .errors import TruncationError

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-9
TAIL_FLAG = 1e-6


@dataclass(frozen=True)
class FockSpace:
    """Fock levels 0..dim-1 of a single bosonic mode."""

    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"Fock dimension must be an integer >= 2, got {self.dim!r}")

    @property
    def a(self) -> np.ndarray:
        return _annihilation(self.dim)

    @property
    def adag(self) -> np.ndarray:
        return _annihilation(self.dim).conj().T

    @property
    def n(self) -> np.ndarray:
        """Number operator."""
        return np.diag(np.arange(self.dim, dtype=float)).astype(complex)

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.dim)

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def basis(self, n: int) -> np.ndarray:
        if not 0 <= n < self.dim:
            raise ValueError(f"level {n} outside Fock space of dim {self.dim}")
        v = np.zeros(self.dim, dtype=complex)
        v[n] = 1.0
        return v


@lru_cache(maxsize=32)
def _annihilation(dim: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)
    a.setflags(write=False)
    return a


def _as_space(space: FockSpace | int) -> FockSpace:
    return space if isinstance(space, FockSpace) else FockSpace(int(space))


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=complex, copy=True)
    m.setflags(write=False)
    return m


def _check_density(rho: np.ndarray, what: str, normalized: bool = True) -> None:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"{what}: density matrix must be square, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValueError(f"{what}: density matrix contains non-finite entries")
    herm = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
    if herm > HERMITIAN_TOL * max(1.0, np.max(np.abs(rho))):
        raise ValueError(f"{what}: not Hermitian (defect {herm:.2e})")
    tr = np.trace(rho).real
    if normalized and abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"{what}: trace {tr!r} differs from 1")
    lam = np.linalg.eigvalsh(rho)[0]
    if lam < -PSD_TOL:
        raise ValueError(f"{what}: not positive semidefinite (min eigenvalue {lam:.3e})")


def _hermitize(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return 0.5 * (rho + rho.conj().T)


@dataclass(frozen=True, eq=False)
class FieldState:
    """Normalized density matrix of one optical mode in the truncated Fock basis.

    The matrix is made exactly Hermitian on construction (roundoff from long
    operator chains would otherwise accumulate) and then checked for unit
    trace and positivity.
    """

    rho: np.ndarray
    space: FockSpace

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"rho has shape {rho.shape}, expected dim {self.space.dim}")
        _check_density(rho, "FieldState")
        rho = _hermitize(rho)
        object.__setattr__(self, "rho", _frozen(rho))

    @classmethod
    def from_matrix(cls, rho, normalize: bool = False) -> "FieldState":
        rho = np.asarray(rho, dtype=complex)
        if normalize:
            rho = rho / np.trace(rho).real
        return cls(rho, FockSpace(rho.shape[0]))

    @classmethod
    def from_ket(cls, psi, space: FockSpace | int | None = None) -> "FieldState":
        psi = np.asarray(psi, dtype=complex)
        dim = psi.size if space is None else _as_space(space).dim
        if psi.size < dim:
            psi = np.concatenate([psi, np.zeros(dim - psi.size, dtype=complex)])
        elif psi.size > dim:
            raise TruncationError(f"ket of length {psi.size} does not fit dim {dim}")
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), FockSpace(dim))

    @classmethod
    def from_diagonal(cls, p, space: FockSpace | int | None = None) -> "FieldState":
        p = np.asarray(p, dtype=float)
        dim = p.size if space is None else _as_space(space).dim
        if p.size < dim:
            p = np.concatenate([p, np.zeros(dim - p.size)])
        if np.any(p < -PSD_TOL):
            raise ValueError("photon distribution has negative entries")
        return cls(np.diag(p / p.sum()).astype(complex), FockSpace(dim))

    @classmethod
    def fock(cls, n: int, space: FockSpace | int) -> "FieldState":
        space = _as_space(space)
        return cls.from_ket(space.basis(n), space)

    @classmethod
    def vacuum(cls, space: FockSpace | int) -> "FieldState":
        return cls.fock(0, space)

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def diagonal(self) -> np.ndarray:
        """Photon-number distribution p_n = <n|rho|n>."""
        return np.clip(self.rho.diagonal().real, 0.0, None)

    @property
    def tail_mass(self) -> float:
        return float(self.diagonal[self.dim - 2:].sum())

    @property
    def truncated(self) -> bool:
        """True when the top two levels carry more than the flag threshold."""
        return self.tail_mass > TAIL_FLAG

    @property
    def purity(self) -> float:
        return float(np.real(np.vdot(self.rho, self.rho)))

    @property
    def mean_photon(self) -> float:
        return float(self.diagonal @ np.arange(self.dim))

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(op @ self.rho))

    def fidelity_to_ket(self, psi) -> float:
        psi = np.asarray(psi, dtype=complex)
        psi = np.concatenate([psi, np.zeros(self.dim - psi.size, dtype=complex)])
        psi = psi / np.linalg.norm(psi)
        return float(np.real(psi.conj() @ self.rho @ psi))

    def resized(self, dim: int) -> "FieldState":
        """Embed into (or cut down to) another truncation; cutting renormalizes."""
        rho = np.zeros((dim, dim), dtype=complex)
        k = min(dim, self.dim)
        rho[:k, :k] = self.rho[:k, :k]
        if dim < self.dim:
            lost = self.diagonal[dim:].sum()
            if lost > TAIL_FLAG:
                raise TruncationError(f"cutting to dim {dim} discards mass {lost:.2e}")
            rho /= np.trace(rho).real
        return FieldState(rho, FockSpace(dim))


@dataclass(frozen=True, eq=False)
class JointState:
    """Atom (x) field density matrix, atom basis ordered (|g>, |s>)."""

    rho: np.ndarray
    space: FockSpace

    def __post_init__(self):
        rho = _hermitize(self.rho)
        d = self.space.dim
        if rho.shape != (2 * d, 2 * d):
            raise ValueError(f"joint rho has shape {rho.shape}, expected {(2 * d, 2 * d)}")
        _check_density(rho, "JointState")
        object.__setattr__(self, "rho", _frozen(rho))

    @classmethod
    def product(cls, atom_rho, field: FieldState) -> "JointState":
        atom_rho = np.asarray(atom_rho, dtype=complex)
        if atom_rho.ndim == 1:
            atom_rho = np.outer(atom_rho, atom_rho.conj())
        return cls(np.kron(atom_rho, field.rho), field.space)

    def block(self, a: int, b: int) -> np.ndarray:
        """Field operator <a|rho|b> for atom levels a, b in {0: g, 1: s}."""
        d = self.space.dim
        return self.rho[a * d:(a + 1) * d, b * d:(b + 1) * d]

    @classmethod
    def from_blocks(cls, blocks, space: FockSpace) -> "JointState":
        return cls(np.block([[blocks[0][0], blocks[0][1]], [blocks[1][0], blocks[1][1]]]), space)

    def atom_state(self) -> np.ndarray:
        return np.array([[np.trace(self.block(a, b)) for b in range(2)] for a in range(2)])

    def field_state(self) -> FieldState:
        return FieldState(self.block(0, 0) + self.block(1, 1), self.space)


# ---------------------------------------------------------------- operators


def number_basis_projector(n: int, space: FockSpace | int) -> np.ndarray:
    space = _as_space(space)
    if not 0 <= n < space.dim:
        raise ValueError(f"projector level {n} outside 0..{space.dim - 1}")
    P = np.zeros((space.dim, space.dim), dtype=complex)
    P[n, n] = 1.0
    return P


def displacement_operator(alpha: complex, space: FockSpace | int) -> np.ndarray:
    """Truncated exp(alpha a^dag - alpha^* a)."""
    space = _as_space(space)
    a = space.a
    if alpha == 0:
        return space.identity()
    return scipy.linalg.expm(alpha * a.conj().T - np.conj(alpha) * a)


def squeezing_operator(xi: complex, space: FockSpace | int) -> np.ndarray:
    """Truncated exp[(xi^* a^2 - xi a^dag^2) / 2]."""
    space = _as_space(space)
    if xi == 0:
        return space.identity()
    a = space.a
    a2 = a @ a
    return scipy.linalg.expm(0.5 * (np.conj(xi) * a2 - xi * a2.conj().T))


def rotation_operator(phase: float, space: FockSpace | int) -> np.ndarray:
    """exp(i phase n)."""
    space = _as_space(space)
    return np.diag(np.exp(1j * phase * np.arange(space.dim)))


def unitarity_defect(U: np.ndarray, fraction: float = 2 / 3) -> float:
    """max |U^dag U - I| restricted to the lowest ``fraction`` of levels."""
    k = max(1, int(U.shape[0] * fraction))
    G = U.conj().T @ U
    return float(np.max(np.abs(G[:k, :k] - np.eye(k))))


# ---------------------------------------------------------------- channels


@lru_cache(maxsize=16)
def _log_binom(dim: int) -> np.ndarray:
    m = np.arange(dim)
    M, K = np.meshgrid(m, m, indexing="ij")
    with np.errstate(invalid="ignore"):
        out = gammaln(M + 1) - gammaln(K + 1) - gammaln(np.maximum(M - K, 0) + 1)
    out[K > M] = -np.inf
    out.setflags(write=False)
    return out


def _loss_amplitudes(T: float, dim: int) -> np.ndarray:
    """amp[k, m] = sqrt(C(m, k) T^(m-k) (1-T)^k): Kraus A_k maps |m> -> |m-k>."""
    lb = _log_binom(dim)  # lb[m, k]
    m = np.arange(dim)[None, :]
    k = np.arange(dim)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        lt = np.where(m - k > 0, (m - k) * np.log(T), 0.0) if T > 0 else np.where(m - k > 0, -np.inf, 0.0)
        lr = np.where(k > 0, k * np.log1p(-T), 0.0) if T < 1 else np.where(k > 0, -np.inf, 0.0)
        amp = np.exp(0.5 * (lb.T + lt + lr))
    amp[k > m] = 0.0
    return amp


def loss_kraus(T: float, space: FockSpace | int) -> list[np.ndarray]:
    """Kraus operators A_k of the pure-loss channel with transmittance T."""
    space = _as_space(space)
    _check_transmittance(T)
    d = space.dim
    amp = _loss_amplitudes(T, d)
    ops = []
    for k in range(d):
        A = np.zeros((d, d), dtype=complex)
        A[np.arange(d - k), np.arange(k, d)] = amp[k, k:]
        ops.append(A)
    return ops


def cross_loss(X: np.ndarray, T_left: float, T_right: float) -> np.ndarray:
    """sum_k A_k(T_left) X A_k(T_right)^dag for any square field operator X.

    With T_left == T_right this is the pure-loss channel; unequal values give
    the coherence terms between two branches that leak into a shared
    environment mode.
    """
    d = X.shape[0]
    aL = _loss_amplitudes(T_left, d)
    aR = aL if T_right == T_left else _loss_amplitudes(T_right, d)
    out = np.zeros_like(X, dtype=complex)
    for k in range(d):
        u = aL[k, k:]
        v = aR[k, k:]
        if not (u.any() and v.any()):
            continue
        out[: d - k, : d - k] += np.outer(u, v) * X[k:, k:]
    return out


def _check_transmittance(T: float) -> None:
    if not 0.0 <= T <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {T!r}")


def loss_channel(state: FieldState, T: float) -> FieldState:
    """Bosonic pure-loss channel (beamsplitter to vacuum) with transmittance T."""
    _check_transmittance(T)
    if T == 1.0:
        return state
    return FieldState(cross_loss(state.rho, T, T), state.space)


def loss_distribution(p, T: float) -> np.ndarray:
    """Photon statistics after loss: p'_n = sum_m C(m, n) T^n (1-T)^(m-n) p_m."""
    _check_transmittance(T)
    p = np.asarray(p, dtype=float)
    amp = _loss_amplitudes(T, p.size)  # amp[k, m]^2 = P(m -> m-k)
    out = np.zeros_like(p)
    for k in range(p.size):
        out[: p.size - k] += amp[k, k:] ** 2 * p[k:]
    return out


def dephasing_channel(state: FieldState, strength: float) -> FieldState:
    """Integrated number-dephasing: rho_mn -> rho_mn exp(-strength (m-n)^2 / 2)."""
    if strength < 0:
        raise ValueError(f"dephasing strength must be >= 0, got {strength!r}")
    if strength == 0:
        return state
    m = np.arange(state.dim)
    damp = np.exp(-0.5 * strength * (m[:, None] - m[None, :]) ** 2)
    return FieldState(state.rho * damp, state.space)


# ---------------------------------------------------------------- phase space


def wigner_grid(state: FieldState, xs, ps) -> np.ndarray:
    """Wigner function W(x, p) on a grid, x = (a + a^dag)/sqrt(2).

    Normalized so that the vacuum gives exp(-x^2 - p^2)/pi. Rows follow ``ps``
    and columns follow ``xs``. Uses the Laguerre recursion over the matrix
    elements, which stays stable for a few hundred levels.
    """
    xs = np.asarray(xs, dtype=float)
    ps = np.asarray(ps, dtype=float)
    X, P = np.meshgrid(xs, ps)
    A = (X + 1j * P) / np.sqrt(2)
    rho = state.rho
    M = state.dim
    wl = [None] * M
    wl[0] = np.exp(-2.0 * np.abs(A) ** 2) / np.pi
    W = rho[0, 0].real * wl[0].real
    for n in range(1, M):
        wl[n] = 2.0 * A * wl[n - 1] / np.sqrt(n)
        W = W + 2.0 * np.real(rho[0, n] * wl[n])
    for m in range(1, M):
        prev = wl[m].copy()
        wl[m] = (2.0 * np.conj(A) * prev - np.sqrt(m) * wl[m - 1]) / np.sqrt(m)
        W = W + np.real(rho[m, m] * wl[m])
        for n in range(m + 1, M):
            nxt = (2.0 * A * wl[n - 1] - np.sqrt(m) * prev) / np.sqrt(n)
            prev = wl[n].copy()
            wl[n] = nxt
            W = W + 2.0 * np.real(rho[m, n] * wl[n])
    return np.real(W)
