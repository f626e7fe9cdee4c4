"""Polynomial scheduling function, instantaneous gap and its phase integral."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

POSITIVE_EPS = 1e-12
DEFAULT_TOTAL_TIME = 50.0


@dataclass(frozen=True)
class ScheduleParams:
    """Positive coefficients of ``s(tau) = sum_i theta_i tau**i / sum_i theta_i``.

    ``theta[0]`` multiplies ``tau``, ``theta[p-1]`` multiplies ``tau**p``.
    ``total_time`` is the physical duration ``T`` of the evolution.
    """

    theta: tuple[float, ...]
    total_time: float = DEFAULT_TOTAL_TIME

    def __post_init__(self):
        theta = tuple(float(t) for t in self.theta)
        object.__setattr__(self, "theta", theta)
        if len(theta) < 1:
            raise ValueError("schedule needs at least one coefficient")
        if not all(np.isfinite(t) and t > 0 for t in theta):
            raise ValueError("schedule coefficients must be finite and positive")
        if not (np.isfinite(self.total_time) and self.total_time > 0):
            raise ValueError("total_time must be positive")

    @property
    def p(self) -> int:
        return len(self.theta)

    @property
    def eta(self) -> float:
        return float(sum(self.theta))

    @classmethod
    def from_raw(cls, raw, total_time: float = DEFAULT_TOTAL_TIME) -> "ScheduleParams":
        return cls(tuple(project_positive(raw)), total_time)


def project_positive(raw) -> np.ndarray:
    """Map unconstrained reals to strictly positive coefficients."""
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1 or raw.size == 0:
        raise ValueError("raw coefficient vector must be a nonempty 1d sequence")
    return raw * raw + POSITIVE_EPS


def _check_tau(tau):
    tau = np.asarray(tau, dtype=float)
    if np.any(~np.isfinite(tau)) or np.any(tau < 0.0) or np.any(tau > 1.0):
        raise ValueError("tau must lie in [0, 1]")
    return tau


def schedule_values(theta: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Unchecked, vectorised ``s``; ``theta`` may be ``(p,)`` or ``(batch, p)``.

    Returns shape ``tau.shape`` or ``(batch,) + tau.shape``.
    """
    theta = np.asarray(theta, dtype=float)
    tau = np.asarray(tau, dtype=float)
    powers = tau[..., None] ** np.arange(1, theta.shape[-1] + 1)
    if theta.ndim == 1:
        return (powers @ theta) / theta.sum()
    num = np.einsum("...k,bk->b...", powers, theta)
    return num / theta.sum(axis=1).reshape((-1,) + (1,) * tau.ndim)


def schedule_derivative(theta: np.ndarray, tau: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    tau = np.asarray(tau, dtype=float)
    k = np.arange(1, theta.size + 1)
    return (tau[..., None] ** (k - 1) @ (k * theta)) / theta.sum()


def eval_s(params: ScheduleParams, tau):
    """Schedule value at ``tau`` (scalar or array) in [0, 1]."""
    tau = _check_tau(tau)
    s = schedule_values(np.array(params.theta), tau)
    # rounding can push the normalised sum a hair past 1
    s = np.clip(s, 0.0, 1.0)
    return float(s) if s.ndim == 0 else s


def lambda_of(s):
    """Half the spectral gap of ``(1-s) X - s Z``: ``sqrt(2 s**2 - 2 s + 1)``."""
    s = np.asarray(s, dtype=float)
    lam = np.sqrt(2.0 * s * s - 2.0 * s + 1.0)
    return float(lam) if lam.ndim == 0 else lam


@lru_cache(maxsize=None)
def _gauss_legendre(order: int):
    return np.polynomial.legendre.leggauss(order)


def composite_gauss_legendre(f, a: float, b: float, panels: int, order: int = 16) -> float:
    nodes, weights = _gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = mid[:, None] + half[:, None] * nodes[None, :]
    return float(np.sum(half[:, None] * weights[None, :] * f(x)))


def integrate(f, a: float, b: float, rtol_abs: float = 1e-12, max_panels: int = 4096) -> float:
    """Composite Gauss-Legendre with panel doubling until two estimates agree."""
    if b == a:
        return 0.0
    panels = 1
    prev = composite_gauss_legendre(f, a, b, panels)
    while panels < max_panels:
        panels *= 2
        cur = composite_gauss_legendre(f, a, b, panels)
        if abs(cur - prev) < rtol_abs:
            return cur
        prev = cur
    return prev


def phase_integral(params: ScheduleParams, tau: float) -> float:
    """``T * integral_0^tau lambda(s(u)) du``."""
    tau = float(_check_tau(tau))
    theta = np.array(params.theta)

    def integrand(u):
        return lambda_of(np.clip(schedule_values(theta, u), 0.0, 1.0))

    return params.total_time * integrate(integrand, 0.0, tau)
