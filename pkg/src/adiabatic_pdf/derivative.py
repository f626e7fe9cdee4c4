"""Density as the time derivative of the compiled circuit's ``<Z>``.

``d<Z>/dtau = sum_k dE/d(angle_k) * d(angle_k)/dtau``: the first factor is
taken with the parameter-shift rule on the gate angle, the second by finite
differences of the classically known angle functions.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .circuit import CircuitAngles, angles_at, execute_exact, execute_shots
from .schedule import ScheduleParams
from .training import AffineTransform

log = logging.getLogger(__name__)

ANGLES = ("phi", "theta", "psi")
FD_STEP = 1e-5
MIN_STEP = 1e-8
STEP_RTOL = 1e-9
SHIFT = 0.5 * np.pi
DEGENERATE_THETA = 1e-9
NEGATIVE_TOL = 1e-12  # round-off at the s = 1 endpoint, where the density is 0


@dataclass(frozen=True)
class Shots:
    """Shot-noise execution: ``repeats`` independent estimates of ``n_shots`` each."""

    n_shots: int
    repeats: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.n_shots < 1 or self.repeats < 1:
            raise ValueError("n_shots and repeats must be positive")

    def __str__(self):
        return f"shots({self.n_shots},{self.repeats})"


EXACT = "exact"


@dataclass(frozen=True)
class PdfEvaluation:
    t: float
    rho_tau: float
    rho_x: float
    mode: str
    uncertainty: float = 0.0
    x: float | None = None
    negative: bool = False


def _angle_index(angle) -> int:
    if isinstance(angle, str):
        return ANGLES.index(angle)
    if angle not in (0, 1, 2):
        raise ValueError(f"angle index must be 0, 1 or 2, got {angle}")
    return int(angle)


def _shifted(angles: CircuitAngles, k: int, delta: float) -> CircuitAngles:
    a = angles.as_array()
    a[k] += delta
    return angles.with_angles(a)


def psr_partial_angles(angles: CircuitAngles, angle, mode=EXACT, rng=None) -> float:
    """``[E(a + pi/2) - E(a - pi/2)] / 2`` with only one angle shifted."""
    k = _angle_index(angle)
    plus, minus = _shifted(angles, k, SHIFT), _shifted(angles, k, -SHIFT)
    if mode == EXACT:
        return 0.5 * (execute_exact(plus) - execute_exact(minus))
    if not isinstance(mode, Shots):
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(rng)
    ep, _ = execute_shots(plus, mode.n_shots, rng)
    em, _ = execute_shots(minus, mode.n_shots, rng)
    return 0.5 * (ep - em)


def psr_partial(params: ScheduleParams, tau: float, angle, mode=EXACT, rng=None) -> float:
    return psr_partial_angles(angles_at(params, tau), angle, mode, rng)


def _unwrap_to(ref: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Shift phi and psi by multiples of 2 pi to sit next to ``ref``."""
    out = a.copy()
    for k in (0, 2):
        out[k] = a[k] - 2.0 * np.pi * np.round((a[k] - ref[k]) / (2.0 * np.pi))
    return out


def _stencil(angle_fn, tau: float, h: float) -> np.ndarray:
    if tau - 2 * h < 0.0:
        pts, coef = (tau + h, tau + 2 * h, tau + 3 * h), (-2.5, 4.0, -1.5)
    elif tau + 2 * h > 1.0:
        pts, coef = (tau - 2 * h, tau - h, tau), (0.5, -2.0, 1.5)
    else:
        pts = (tau - 2 * h, tau - h, tau + h, tau + 2 * h)
        coef = (1 / 12, -8 / 12, 8 / 12, -1 / 12)
    vals = [np.asarray(angle_fn(t), dtype=float) for t in pts]
    # branch jumps of phi/psi are multiples of 2 pi: walk them back point by point
    for i in range(1, len(vals)):
        vals[i] = _unwrap_to(vals[i - 1], vals[i])
    return sum(c * v for c, v in zip(coef, vals)) / h


def angle_time_derivatives(params: ScheduleParams, tau: float, h: float = FD_STEP,
                           angle_fn=None) -> np.ndarray:
    """``(dphi/dtau, dtheta/dtau, dpsi/dtau)`` by finite differences.

    Five-point central differences in the interior: the phase-like angles
    turn at hundreds of radians per unit tau, and the three-point stencil
    leaves ~1e-3 truncation error at this step. Within ``2h`` of an
    endpoint a three-point one-sided formula is used; at the lower end its
    nodes are ``tau + h, tau + 2h, tau + 3h`` because the propagator is the
    identity at ``tau = 0``, where phi and psi are not separately defined.

    The estimate is repeated with ``h / 2`` and the step keeps halving until
    two successive results agree to ``STEP_RTOL``. This matters where
    ``|c00|`` nearly vanishes and ``phi + psi`` turns at ~1e4 rad per unit
    tau. ``angle_fn(tau)`` may replace the default angle path.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    if angle_fn is None:
        def angle_fn(t):
            return angles_at(params, t).as_array()

    coarse = _stencil(angle_fn, tau, h)
    while True:
        h *= 0.5
        fine = _stencil(angle_fn, tau, h)
        if np.all(np.abs(fine - coarse) <= STEP_RTOL * np.maximum(np.abs(fine), 1.0)):
            return fine
        if h < MIN_STEP:
            log.debug("angle derivatives at tau=%.6f did not settle above h=%.1e", tau, h)
            return fine
        coarse = fine


def _regular_angles(params: ScheduleParams, tau: float, h: float = FD_STEP) -> CircuitAngles:
    """Angles at ``tau`` with psi moved to its limit when theta vanishes.

    With ``theta = 0`` only ``phi + psi`` is fixed by the unitary. The chain
    rule needs the branch the path actually approaches, so psi is
    extrapolated from the right and phi absorbs the difference.
    """
    angles = angles_at(params, tau)
    if abs(angles.theta) > DEGENERATE_THETA or tau + 2 * h > 1.0:
        return angles
    a1 = angles_at(params, tau + h).as_array()
    a2 = _unwrap_to(a1, angles_at(params, tau + 2 * h).as_array())
    psi = 2.0 * a1[2] - a2[2]
    return angles.with_angles([angles.phi + angles.psi - psi, angles.theta, psi])


def _point_rng(seed: int, index: int, repeat: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index, repeat]))


def pdf_at(params: ScheduleParams, tau: float, mode=EXACT, index: int = 0,
           transform: AffineTransform | None = None) -> PdfEvaluation:
    """Density of the fitted model at normalised point ``tau``.

    In shots mode the full estimate is repeated ``mode.repeats`` times with
    independent streams derived from ``(mode.seed, index, repeat)`` and the
    mean and standard deviation are reported. Negative values are kept.
    """
    angles = _regular_angles(params, tau)
    dang = angle_time_derivatives(params, tau)
    if mode == EXACT:
        grads = np.array([psr_partial_angles(angles, k) for k in range(3)])
        rho, unc, label = float(grads @ dang), 0.0, EXACT
    else:
        if not isinstance(mode, Shots):
            raise ValueError(f"unknown mode {mode!r}")
        est = np.empty(mode.repeats)
        for r in range(mode.repeats):
            rng = _point_rng(mode.seed, index, r)
            grads = np.array([psr_partial_angles(angles, k, mode, rng) for k in range(3)])
            est[r] = grads @ dang
        rho = float(est.mean())
        unc = float(est.std(ddof=1)) if mode.repeats > 1 else 0.0
        label = str(mode)
    ev = PdfEvaluation(t=float(tau), rho_tau=rho, rho_x=rho, mode=label,
                       uncertainty=unc, negative=rho < -NEGATIVE_TOL)
    if ev.negative:
        log.warning("negative density %.3e at tau=%.6f (%s)", rho, tau, label)
    if transform is not None:
        ev = pdf_original_units(ev, transform)
    return ev


def pdf_original_units(ev: PdfEvaluation, tr: AffineTransform) -> PdfEvaluation:
    """Map a normalised-unit evaluation back to the sample's units."""
    return replace(
        ev,
        rho_x=ev.rho_tau / tr.width,
        x=float(tr.inverse(ev.t)),
        uncertainty=ev.uncertainty,
    )


def cdf_at(params: ScheduleParams, tau: float, mode=EXACT, index: int = 0) -> tuple[float, float]:
    """Model CDF at ``tau`` as ``(value, std)``; std is 0 in exact mode."""
    angles = angles_at(params, tau)
    if mode == EXACT:
        return execute_exact(angles), 0.0
    if not isinstance(mode, Shots):
        raise ValueError(f"unknown mode {mode!r}")
    est = np.array([
        execute_shots(angles, mode.n_shots, _point_rng(mode.seed, index, r))[0]
        for r in range(mode.repeats)
    ])
    return float(est.mean()), float(est.std(ddof=1)) if mode.repeats > 1 else 0.0


def evaluate_grid(params: ScheduleParams, grid, what: str = "cdf", mode=EXACT):
    """Values and standard deviations of the model CDF or PDF on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0.0) or np.any(grid > 1.0):
        raise ValueError("grid points must lie in [0, 1]")
    vals = np.empty(grid.size)
    stds = np.empty(grid.size)
    for i, t in enumerate(grid):
        if what == "cdf":
            vals[i], stds[i] = cdf_at(params, t, mode, index=i)
        elif what == "pdf":
            ev = pdf_at(params, t, mode, index=i)
            vals[i], stds[i] = ev.rho_tau, ev.uncertainty
        else:
            raise ValueError(f"what must be 'cdf' or 'pdf', got {what!r}")
    return vals, stds
