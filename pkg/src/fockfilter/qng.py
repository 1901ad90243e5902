"""Quantum non-Gaussianity certification of Fock-like states.

The absolute threshold T_n is the largest n-photon probability reachable by
D(alpha) S(xi) acting on any superposition of the first n Fock states. For a
fixed Gaussian operation the best core superposition is the one maximizing the
weight of row n of D S on the first n columns, so only three real parameters
are searched: alpha >= 0 (a global phase rotation fixes it real), |xi| and the
relative squeezing phase.

The relative threshold T_n(eps) bounds p_n among mixtures of such states sent
through pure loss, given multiphoton error p_{>n} <= eps. It is computed from
the dual: T_n(eps) = min_mu [F(mu) + mu eps] with F(mu) = max(p_n - mu p_{>n}),
which yields the concave envelope of the achievable (p_{>n}, p_n) region.
"""

from __future__ import annotations

import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, TruncationError
from .fock import (
    FieldState,
    _loss_amplitudes,
    displacement_operator,
    loss_channel,
    loss_distribution,
    squeezing_operator,
)

log = logging.getLogger(__name__)

COHERENCE_THRESHOLD_02 = 0.86
DEPTH_TOL = 1e-4
CONVERGENCE_TOL = 1e-5
RQNG_ASSUMPTION = "relative threshold assumes lossy Gaussian-core states and their mixtures"


@dataclass(frozen=True)
class CoreState:
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex).ravel()
        if c.size == 0:
            raise ValueError("core state needs at least one coefficient")
        if abs(np.vdot(c, c).real - 1) > 1e-10:
            raise ValueError(f"core coefficients not normalized (norm^2 = {np.vdot(c, c).real:.12f})")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def n(self) -> int:
        return self.coefficients.size


def default_dim(n: int) -> int:
    return max(64, 4 * n + 24)


def core_overlap(n: int, alpha: complex, xi: complex, core: CoreState, dim: int | None = None) -> float:
    """|<n| D(alpha) S(xi) psi_core|^2 by matrix application in a truncated space."""
    dim = default_dim(n) if dim is None else dim
    if dim < 4 * n or core.n > dim:
        raise TruncationError(f"dim {dim} too small for n={n}")
    psi = np.zeros(dim, dtype=complex)
    psi[: core.n] = core.coefficients
    out = displacement_operator(alpha, dim) @ (squeezing_operator(xi, dim) @ psi)
    if np.sum(np.abs(out[-2:]) ** 2) > 1e-8:
        raise TruncationError(f"Gaussian image of the core leaks out of dim {dim}")
    return float(abs(out[n]) ** 2)


class _GaussianGenerators:
    """Spectral form of the displacement and squeezing generators in a fixed dim.

    With real alpha and s, D(alpha) = V e^{-i alpha l} V^dag and
    S(s) = W e^{-i s m} W^dag; a squeezing phase theta multiplies S[j, k] by
    e^{i theta (j - k)/2}. This avoids a matrix exponential per evaluation.
    """

    def __init__(self, dim: int):
        a = np.diag(np.sqrt(np.arange(1, dim)), 1)
        ad = a.T
        self.dim = dim
        self.lam, self.V = np.linalg.eigh(1j * (ad - a))
        self.mu, self.W = np.linalg.eigh(0.5j * (a @ a - ad @ ad))
        j = np.arange(dim)
        self.half_diff = 0.5 * (j[:, None] - j[None, :])

    def columns(self, n: int, alpha: float, s: float, theta: float) -> np.ndarray:
        S = (self.W * np.exp(-1j * s * self.mu)) @ self.W[:n].conj().T
        S = S * np.exp(1j * theta * self.half_diff[:, :n])
        D = (self.V * np.exp(-1j * alpha * self.lam)) @ self.V.conj().T
        return D @ S


@lru_cache(maxsize=8)
def _generators(dim: int) -> _GaussianGenerators:
    return _GaussianGenerators(dim)


def _gaussian_columns(n: int, x: np.ndarray, dim: int) -> np.ndarray:
    """First n columns of D(alpha) S(s e^{i theta}) for x = (alpha, s, theta)."""
    return _generators(dim).columns(n, x[0], x[1], x[2])


def _core_objective(x, n, dim):
    row = _gaussian_columns(n, x, dim)[n]
    return -float(np.sum(np.abs(row) ** 2))


def _bounds(n: int, with_loss: bool):
    b = [(0.0, math.sqrt(n) + 2.0), (0.0, 1.2), (-math.pi, math.pi)]
    if with_loss:
        b.append((0.0, 1.0))
    return b


def _random_start(rng, n, with_loss):
    x = [rng.uniform(0, math.sqrt(n) + 1.0), rng.uniform(0, 0.8), rng.uniform(-math.pi, math.pi)]
    if with_loss:
        x.append(rng.uniform(0.5, 1.0))
    return np.array(x)


def _prescan_starts(fun, args, rng, n, with_loss, count, factor=16):
    """Best ``count`` of ``factor * count`` random points (one evaluation each)."""
    pool = [_random_start(rng, n, with_loss) for _ in range(factor * count)]
    vals = np.array([fun(x, *args) for x in pool])
    return [pool[i] for i in np.argsort(vals, kind="stable")[:count]]


def _local_max(fun, x0, bounds, args):
    res = minimize(
        fun, x0, args=args, method="Nelder-Mead", bounds=bounds,
        options={"xatol": 1e-7, "fatol": 1e-11, "maxiter": 1500},
    )
    return -float(res.fun), np.asarray(res.x)


def _core_start(args):
    x0, n, dim = args
    return _local_max(_core_objective, x0, _bounds(n, False), (n, dim))


@dataclass
class ThresholdResult:
    n: int
    dim: int
    value: float
    spread: float
    seed: int
    starts: int
    n_converged: int = 0
    params: list = field(default_factory=list)  # alpha, |xi|, squeeze phase

    def __float__(self):
        return self.value


# ------------------------------------------------------------- disk cache

def default_cache_path() -> Path:
    env = os.environ.get("FOCKFILTER_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "fockfilter" / "thresholds.json"


class ThresholdCache:
    """JSON file of threshold results keyed by kind, n, dim and seed."""

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = Path(path) if path is not None else default_cache_path()

    def _load(self) -> dict:
        try:
            return json.loads(self.path.read_text())
        except FileNotFoundError:
            return {}
        except (OSError, json.JSONDecodeError) as exc:
            warnings.warn(f"ignoring unreadable threshold cache {self.path}: {exc}")
            return {}

    @staticmethod
    def key(kind: str, n: int, dim: int, seed: int) -> str:
        return f"{kind}:n={n}:dim={dim}:seed={seed}"

    def get(self, kind, n, dim, seed):
        return self._load().get(self.key(kind, n, dim, seed))

    def put(self, kind, n, dim, seed, entry: dict) -> None:
        data = self._load()
        data[self.key(kind, n, dim, seed)] = entry
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(data, indent=1))
        os.replace(tmp, self.path)


def _resolve_cache(cache):
    if cache is False:
        return None
    if cache is None or cache is True:
        return ThresholdCache()
    if isinstance(cache, ThresholdCache):
        return cache
    return ThresholdCache(cache)


# ------------------------------------------------------ absolute threshold

def optimize_qng_threshold(
    n: int, starts: int = 64, seed: int = 0, dim: int | None = None, workers: int = 1,
) -> ThresholdResult:
    """Multistart Nelder-Mead for T_n.

    Start points are the best of a random prescan (16 points per start).
    Raises ConvergenceError unless at least two starts reach the best value
    within CONVERGENCE_TOL.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    dim = default_dim(n) if dim is None else dim
    rng = np.random.default_rng(seed)
    x0s = _prescan_starts(_core_objective, (n, dim), rng, n, False, starts)
    jobs = [(x0, n, dim) for x0 in x0s]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_core_start, jobs))
    else:
        results = [_core_start(j) for j in jobs]
    values = np.array([v for v, _ in results])
    best = int(np.argmax(values))
    n_conv = int(np.sum(values >= values[best] - CONVERGENCE_TOL))
    out = ThresholdResult(
        n=n, dim=dim, value=float(values[best]), spread=float(values[best] - np.median(values)),
        seed=seed, starts=starts, n_converged=n_conv, params=[float(v) for v in results[best][1]],
    )
    if n_conv < 2:
        raise ConvergenceError(f"T_{n}: best value {out.value:.6f} reached by a single start")
    return out


@lru_cache(maxsize=None)
def _memo_threshold(n, starts, seed, dim, cache_path, recompute):
    cache = ThresholdCache(cache_path) if cache_path is not None else None
    if cache is not None and not recompute:
        hit = cache.get("qng", n, dim, seed)
        if hit is not None and hit.get("starts", 0) >= starts:
            return ThresholdResult(**hit)
    res = optimize_qng_threshold(n, starts=starts, seed=seed, dim=dim)
    if cache is not None:
        cache.put("qng", n, dim, seed, asdict(res))
    return res


def qng_threshold_result(n, starts=64, seed=0, dim=None, cache=None, recompute=False) -> ThresholdResult:
    dim = default_dim(n) if dim is None else dim
    c = _resolve_cache(cache)
    path = str(c.path) if c is not None else None
    if recompute:
        _memo_threshold.cache_clear()
    return _memo_threshold(n, starts, seed, dim, path, recompute)


def qng_threshold(n: int, starts: int = 64, seed: int = 0, dim: int | None = None,
                  cache=None, recompute: bool = False) -> float:
    """Absolute threshold T_n, cached on disk (see :class:`ThresholdCache`).

    ``cache`` may be a path, a ThresholdCache, None (default location) or
    False (no disk access).
    """
    return qng_threshold_result(n, starts, seed, dim, cache, recompute).value


# ------------------------------------------------------ relative threshold

def _lossy_weights(n: int, mu: float, T: float, dim: int) -> np.ndarray:
    """Diagonal of L_T^dag(|n><n| - mu Pi_{>n})."""
    o = np.zeros(dim)
    o[n] = 1.0
    o[n + 1:] = -mu
    amp2 = _loss_amplitudes(min(max(T, 0.0), 1.0), dim) ** 2  # [k, m]: P(m -> m-k)
    m = np.arange(dim)
    k = np.arange(dim)[:, None]
    target = m[None, :] - k
    return np.sum(np.where(target >= 0, amp2 * o[np.clip(target, 0, None)], 0.0), axis=0)


def _dual_objective(x, n, mu, dim):
    V = _gaussian_columns(n, x, dim)
    w = _lossy_weights(n, mu, x[3], dim)
    M = V.conj().T @ (w[:, None] * V)
    return -float(np.linalg.eigvalsh(M)[-1])


@dataclass
class RqngCurve:
    """F(mu) = max [p_n - mu p_{>n}] on a grid; T_n(eps) = min_mu F(mu) + mu eps."""

    n: int
    dim: int
    seed: int
    mus: list
    values: list
    params: list = field(default_factory=list)
    assumption: str = RQNG_ASSUMPTION

    def threshold(self, eps) -> float | np.ndarray:
        eps_arr = np.asarray(eps, dtype=float)
        if np.any((eps_arr < 0) | (eps_arr > 1)):
            raise ValueError("eps must lie in [0, 1]")
        mus, vals = np.asarray(self.mus), np.asarray(self.values)
        out = np.min(vals[:, None] + mus[:, None] * eps_arr.ravel()[None, :], axis=0)
        out = np.minimum(out, 1.0)
        return float(out[0]) if eps_arr.ndim == 0 else out.reshape(eps_arr.shape)


def default_mu_grid(points: int = 28) -> np.ndarray:
    return np.concatenate([[0.0], np.logspace(-2, 4, points)])


def compute_rqng_curve(n: int, seed: int = 0, dim: int | None = None, mus=None,
                       random_starts: int = 6, pool_starts: int = 3) -> RqngCurve:
    """Dual function on an increasing mu grid.

    Every local optimum found so far is kept in a pool; each mu is started
    from the best pool members plus a few prescanned random points. The pool
    is seeded with the lossless optimum of the absolute threshold.
    """
    dim = default_dim(n) if dim is None else dim
    mus = default_mu_grid() if mus is None else np.asarray(mus, dtype=float)
    rng = np.random.default_rng(seed)
    bounds = _bounds(n, True)
    absolute = optimize_qng_threshold(n, seed=seed, dim=dim)
    pool = [np.array(absolute.params + [1.0])]
    values, params = [], []
    for mu in mus:
        args = (n, mu, dim)
        ranked = sorted(pool, key=lambda x: _dual_objective(x, *args))[:pool_starts]
        starts = ranked + _prescan_starts(_dual_objective, args, rng, n, True, random_starts)
        found = [_local_max(_dual_objective, x0, bounds, args) for x0 in starts]
        pool.extend(x for _, x in found)
        val, x = max(found, key=lambda t: t[0])
        # alpha = s = 0 keeps the core below n photons: F >= 0
        values.append(max(val, 0.0))
        params.append([float(v) for v in x])
    return RqngCurve(n, dim, seed, [float(m) for m in mus], values, params)


@lru_cache(maxsize=None)
def _memo_curve(n, seed, dim, cache_path, recompute):
    cache = ThresholdCache(cache_path) if cache_path is not None else None
    if cache is not None and not recompute:
        hit = cache.get("rqng", n, dim, seed)
        if hit is not None:
            return RqngCurve(**hit)
    curve = compute_rqng_curve(n, seed=seed, dim=dim)
    if cache is not None:
        cache.put("rqng", n, dim, seed, asdict(curve))
    return curve


def rqng_curve(n: int, seed: int = 0, dim: int | None = None, cache=None, recompute=False) -> RqngCurve:
    dim = default_dim(n) if dim is None else dim
    c = _resolve_cache(cache)
    if recompute:
        _memo_curve.cache_clear()
    return _memo_curve(n, seed, dim, str(c.path) if c is not None else None, recompute)


def rqng_threshold(n: int, eps: float, curve: RqngCurve | None = None, **kw) -> float:
    """Relative threshold T_n(eps) for multiphoton error p_{>n} <= eps."""
    curve = rqng_curve(n, **kw) if curve is None else curve
    return curve.threshold(eps)


# ------------------------------------------------------------------ depths

def _scan_bisect(ok, step: float = 0.005, tol: float = DEPTH_TOL) -> float:
    """Smallest T with ok(T') for all T' >= T, assuming ok(1) holds."""
    k = 1
    hi, lo = 1.0, 1.0 - step
    while lo > 0 and ok(lo):
        k += 1
        hi, lo = lo, 1.0 - k * step  # no accumulated rounding
    lo = max(lo, 0.0)
    if lo == 0.0 and ok(0.0):
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def qng_depth(state: FieldState, n: int, relative: bool = False, threshold: float | None = None,
              curve: RqngCurve | None = None) -> float | None:
    """Loss depth: smallest transmittance keeping the attenuated state certified.

    Absolute mode compares p'_n with T_n; relative mode compares p'_n with
    T_n(p'_{>n}). Returns None when the state fails at T = 1.
    """
    p = state.diagonal
    if relative:
        curve = rqng_curve(n) if curve is None else curve

        def ok(T):
            q = loss_distribution(p, T)
            return q[n] > curve.threshold(min(1.0, float(q[n + 1:].sum())))
    else:
        thr = qng_threshold(n) if threshold is None else threshold

        def ok(T):
            return loss_distribution(p, T)[n] > thr

    if not ok(1.0):
        return None
    return _scan_bisect(ok)


def coherence_measure(state: FieldState, n1: int, n2: int) -> float:
    """C_{n1,n2} = 2 |<n1| rho |n2>|, the peak-to-peak half amplitude of the phase sweep."""
    _check_pair(state, n1, n2)
    return float(min(1.0, 2 * abs(state.rho[n1, n2])))


def _check_pair(state, n1, n2):
    if n1 == n2:
        raise ValueError("coherence needs two distinct levels")
    for k in (n1, n2):
        if not 0 <= k < state.dim:
            raise IndexError(f"level {k} outside dim {state.dim}")


def coherence_sweep(state: FieldState, n1: int, n2: int, n_phi: int = 360) -> float:
    """Same quantity from an explicit phase sweep of X cos(phi) + Y sin(phi).

    The grid extrema are polished with a bounded scalar search.
    """
    from scipy.optimize import minimize_scalar

    _check_pair(state, n1, n2)
    x = 2 * state.rho[n2, n1].real  # Tr[(|n1><n2| + |n2><n1|) rho]
    y = 2 * state.rho[n2, n1].imag  # Tr[i(|n2><n1| - |n1><n2|) rho] up to sign
    f = lambda phi: x * math.cos(phi) + y * math.sin(phi)
    grid = np.linspace(0, 2 * math.pi, n_phi, endpoint=False)
    vals = np.array([f(g) for g in grid])
    h = grid[1] - grid[0]
    i, j = int(np.argmax(vals)), int(np.argmin(vals))
    top = -minimize_scalar(lambda t: -f(t), bounds=(grid[i] - h, grid[i] + h), method="bounded",
                           options={"xatol": 1e-12}).fun
    bot = minimize_scalar(f, bounds=(grid[j] - h, grid[j] + h), method="bounded",
                          options={"xatol": 1e-12}).fun
    return 0.5 * (max(top, vals[i]) - min(bot, vals[j]))


def coherence_depth(state: FieldState, threshold: float = COHERENCE_THRESHOLD_02,
                    n1: int = 0, n2: int = 2) -> float | None:
    """Smallest transmittance (full loss channel) keeping C_{n1,n2} above ``threshold``."""

    def ok(T):
        return coherence_measure(loss_channel(state, T), n1, n2) > threshold

    if not ok(1.0):
        return None
    return _scan_bisect(ok)


# ----------------------------------------------------------------- reports

@dataclass
class QngReport:
    n: int
    p_n: float
    p_gt_n: float
    threshold: float
    absolute_pass: bool
    relative_pass: bool
    depth: float | None = None
    relative_depth: float | None = None
    relative_threshold: float | None = None
    coherence: float | None = None
    assumption: str = RQNG_ASSUMPTION

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def qng_report(state: FieldState, n: int, threshold: float | None = None,
               curve: RqngCurve | None = None, depths: bool = True,
               coherence_levels: tuple[int, int] | None = None) -> QngReport:
    p = state.diagonal
    thr = qng_threshold(n) if threshold is None else threshold
    curve = rqng_curve(n) if curve is None else curve
    p_n, p_gt = float(p[n]), float(min(1.0, p[n + 1:].sum()))
    rel_thr = curve.threshold(p_gt)
    rep = QngReport(
        n=n, p_n=p_n, p_gt_n=p_gt, threshold=thr,
        absolute_pass=p_n > thr, relative_pass=p_n > rel_thr, relative_threshold=rel_thr,
    )
    if depths:
        rep.depth = qng_depth(state, n, threshold=thr)
        rep.relative_depth = qng_depth(state, n, relative=True, curve=curve)
    if coherence_levels is not None:
        rep.coherence = coherence_measure(state, *coherence_levels)
    return rep
