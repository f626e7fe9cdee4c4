"""Continuum propagator of the adiabatic evolution compiled to Rz Rx Rz.

The propagator up to normalised time ``tau`` is approximated by
``P(s(tau)) diag(e^{-iI}, e^{iI}) P(0)^T`` where ``P(s)`` holds the
eigenvectors of ``H(s)`` and ``I`` is the accumulated phase integral.
It is turned into Euler angles with
``Rz(a) = diag(e^{-ia/2}, e^{ia/2})`` and ``Rx(a) = exp(-i a X / 2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolution import initial_state
from .qops import SX, SZ, expectation, is_unitary, rx, rz
from .schedule import ScheduleParams, eval_s, lambda_of, phase_integral

ARG_FLOOR = 1e-12


@dataclass(frozen=True)
class CircuitAngles:
    phi: float
    theta: float
    psi: float
    t: float | None = None
    phase_integral: float | None = None

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.theta, self.psi])

    def with_angles(self, values) -> "CircuitAngles":
        phi, theta, psi = (float(v) for v in values)
        return CircuitAngles(phi, theta, psi, self.t, self.phase_integral)


def diagonalize(s: float):
    """Real orthogonal ``P`` and ``D = diag(lam, -lam)`` with ``H(s) = P D P^T``.

    The first column is the ``+lam`` eigenvector, the second the ground
    state, and ``P`` is a proper rotation. Since ``lam**2 - s**2 = (1-s)**2``
    the vectors ``(1-s, s+lam)`` and ``(-(s+lam), 1-s)`` are eigenvectors
    with no cancellation anywhere on [0, 1].
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    lam = lambda_of(s)
    a, b = 1.0 - s, s + lam
    r = np.hypot(a, b)
    up = np.array([a, b]) / r
    down = np.array([-b, a]) / r
    P = np.column_stack([up, down]).astype(complex)
    D = np.diag([lam, -lam]).astype(complex)
    return P, D


def propagator_from(s: float, integral: float) -> np.ndarray:
    P, _ = diagonalize(s)
    P0, _ = diagonalize(0.0)
    phases = np.array([np.exp(-1j * integral), np.exp(1j * integral)])
    return (P * phases) @ P0.T


def propagator(params: ScheduleParams, tau: float) -> np.ndarray:
    """Unitary taking the initial state to the evolved state at ``tau``."""
    return propagator_from(eval_s(params, tau), phase_integral(params, tau))


def closed_form_elements(params: ScheduleParams, tau: float):
    """First-row elements ``(c00, c01)`` from a closed-form expression.

    Kept for cross-checking only. It is written in the convention
    ``H = s Z + (1-s) X`` and its prefactor is not a normalisation:
    ``|c00|**2 + |c01|**2`` works out to ``4 / s**2``. See
    :func:`closed_form_report`.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("closed form is only defined for tau in (0, 1)")
    s = eval_s(params, tau)
    if s <= 0.0 or s >= 1.0:
        raise ValueError("closed form has removable singularities at s in {0, 1}")
    lam = lambda_of(s)
    integral = phase_integral(params, tau)
    pref = (1.0 - s) / (s * np.sqrt(lam * (lam - s)))
    r = (lam - s) / (1.0 - s)
    out = []
    for j in (0, 1):
        sign = (-1) ** j
        out.append(pref * (np.cos(integral) * (1 + sign * r) + 1j * np.sin(integral) * (1 - sign * r)))
    return out[0], out[1]


def flipped_convention_propagator(params: ScheduleParams, tau: float) -> np.ndarray:
    """Propagator for ``H' = s Z + (1-s) X``.

    ``H' = X H X`` and both share the initial state, so ``C' = X C X``.
    """
    return SX @ propagator(params, tau) @ SX


def closed_form_report(params: ScheduleParams, tau: float) -> dict:
    """Compare the closed-form row against the numeric propagator row.

    Returns the raw row norm, the phase-insensitive distance between the
    normalised closed-form row and row 0 of the numeric propagator in the
    same Hamiltonian convention, and the same distance to the complex
    conjugate of that row. The last one vanishes: the expression carries
    the opposite sign of ``i`` in its phases.
    """
    c00, c01 = closed_form_elements(params, tau)
    row = np.array([c00, c01])
    norm = float(np.vdot(row, row).real)
    ref = flipped_convention_propagator(params, tau)[0]
    unit = row / np.sqrt(norm)

    def dist(v):
        return float(np.sqrt(max(2.0 - 2.0 * abs(np.vdot(v, unit)), 0.0)))

    return {"row_norm": norm, "row_distance": dist(ref), "conj_row_distance": dist(ref.conj())}


def _su2(c: np.ndarray) -> np.ndarray:
    det = np.linalg.det(c)
    return c / np.sqrt(det)


def euler_angles(c: np.ndarray, t: float | None = None, integral: float | None = None) -> CircuitAngles:
    """Angles with ``Rz(phi) Rx(theta) Rz(psi) = c`` up to a global phase.

    The matrix is first scaled into SU(2); there
    ``c00 = e^{-i(phi+psi)/2} cos(theta/2)`` and
    ``c01 = -i e^{-i(phi-psi)/2} sin(theta/2)``, and choosing
    ``theta = -2 arccos|c00|`` gives the closed forms below. The arccos is
    evaluated as ``atan2(|c01|, |c00|)``, equal on unit rows but without the
    precision loss of arccos near 1.
    """
    c = np.asarray(c, dtype=complex)
    if c.shape != (2, 2) or not is_unitary(c):
        raise ValueError("euler_angles needs a 2x2 unitary")
    u = _su2(c)
    c00, c01 = u[0, 0], u[0, 1]
    theta = -2.0 * np.arctan2(abs(c01), abs(c00))
    a00 = np.angle(c00) if abs(c00) >= ARG_FLOOR else 0.0
    a01 = np.angle(c01) if abs(c01) >= ARG_FLOOR else 0.0
    phi = 0.5 * np.pi - a01 - a00
    psi = a01 - 0.5 * np.pi - a00
    return CircuitAngles(float(phi), float(theta), float(psi), t, integral)


def rebuild(angles: CircuitAngles) -> np.ndarray:
    return rz(angles.phi) @ rx(angles.theta) @ rz(angles.psi)


def angles_at(params: ScheduleParams, tau: float) -> CircuitAngles:
    s = eval_s(params, tau)
    integral = phase_integral(params, tau)
    return euler_angles(propagator_from(s, integral), t=tau, integral=integral)


def final_state(angles: CircuitAngles) -> np.ndarray:
    return rebuild(angles) @ initial_state()


def execute_exact(angles: CircuitAngles) -> float:
    """``<psi0| C^dag Z C |psi0>`` for the circuit built from ``angles``."""
    return expectation(SZ, final_state(angles))


def prob_zero(angles: CircuitAngles) -> float:
    return float(min(max(abs(final_state(angles)[0]) ** 2, 0.0), 1.0))


def execute_shots(angles: CircuitAngles, n_shots: int, rng) -> tuple[float, tuple[int, int]]:
    """Sample ``n_shots`` Z-basis measurements; return the ``<Z>`` estimate and counts.

    ``rng`` is a seed or a ``numpy.random.Generator``.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    rng = np.random.default_rng(rng)
    p0 = prob_zero(angles)
    k = int(rng.binomial(n_shots, p0))
    return 2.0 * k / n_shots - 1.0, (k, n_shots - k)
