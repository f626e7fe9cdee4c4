"""Discretised adiabatic evolution of one qubit under ``H(s) = (1-s) X - s Z``."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .qops import SX, SZ, expectation
from .schedule import ScheduleParams, schedule_values

STEPPERS = ("exact", "split")


@dataclass(frozen=True)
class EvolutionConfig:
    dtau: float = 0.002
    stepper: str = "exact"

    def __post_init__(self):
        if not (0.0 < self.dtau <= 0.1):
            raise ValueError("dtau must lie in (0, 0.1]")
        n = 1.0 / self.dtau
        if abs(n - round(n)) > 1e-9 * n:
            raise ValueError("1/dtau must be an integer so the grid hits tau=1")
        if self.stepper not in STEPPERS:
            raise ValueError(f"stepper must be one of {STEPPERS}, got {self.stepper!r}")

    @property
    def n_steps(self) -> int:
        return int(round(1.0 / self.dtau))

    @property
    def taus(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) / self.n_steps


@dataclass
class Trajectory:
    taus: np.ndarray
    states: np.ndarray  # (N+1, 2) complex
    expectations: np.ndarray  # <Z> per grid point
    meta: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tau", "re0", "im0", "re1", "im1", "sigma_z"])
            for t, v, z in zip(self.taus, self.states, self.expectations):
                w.writerow(
                    [repr(float(t)), repr(v[0].real), repr(v[0].imag),
                     repr(v[1].real), repr(v[1].imag), repr(float(z))]
                )


def hamiltonian_at(s: float) -> np.ndarray:
    """``(1-s) X - s Z``: ground state of X at s=0, of -Z (i.e. |0>) at s=1."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    return (1.0 - s) * SX - s * SZ


def initial_state() -> np.ndarray:
    """Ground state of X, ``(|0> - |1>)/sqrt(2)``."""
    return np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)


def step_unitaries(s: np.ndarray, dt: float, stepper: str):
    """Entries ``(u00, u01, u10, u11)`` of one step for every schedule value in ``s``.

    ``exact`` is ``exp(-i dt H(s))``; ``split`` is the symmetric product
    ``e^{-i dt/2 (1-s) X} e^{-i dt s (-Z)} e^{-i dt/2 (1-s) X}``.
    """
    a = 1.0 - s
    if stepper == "exact":
        lam = np.sqrt(a * a + s * s)
        c = np.cos(dt * lam)
        sn = np.sin(dt * lam) / lam  # lam >= 1/sqrt(2), no zero division
        # H = [[-s, a], [a, s]]
        u00 = c + 1j * sn * s
        u11 = c - 1j * sn * s
        u01 = -1j * sn * a
        return u00, u01, u01, u11
    if stepper == "split":
        cx = np.cos(0.5 * dt * a)
        sx = -1j * np.sin(0.5 * dt * a)
        ez = np.exp(1j * dt * s)  # diag(ez, conj(ez))
        ezc = np.conj(ez)
        # X-half @ Z @ X-half with X-half = [[cx, sx], [sx, cx]]
        u00 = cx * cx * ez + sx * sx * ezc
        u01 = cx * sx * ez + sx * cx * ezc
        u11 = sx * sx * ez + cx * cx * ezc
        return u00, u01, u01, u11
    raise ValueError(f"unknown stepper {stepper!r}")


def _propagate(theta: np.ndarray, total_time: float, cfg: EvolutionConfig, keep_states: bool):
    """Run the step loop for one or many coefficient vectors at once."""
    theta = np.atleast_2d(theta)
    n = cfg.n_steps
    taus = cfg.taus
    s = np.clip(schedule_values(theta, taus[1:]), 0.0, 1.0)  # (B, N)
    u00, u01, u10, u11 = step_unitaries(s, total_time * cfg.dtau, cfg.stepper)
    batch = theta.shape[0]
    v0 = np.full(batch, 1.0 / np.sqrt(2.0), dtype=complex)
    v1 = -v0
    z = np.zeros((batch, n + 1))
    states = np.empty((batch, n + 1, 2), dtype=complex) if keep_states else None
    if keep_states:
        states[:, 0, 0] = v0
        states[:, 0, 1] = v1
    for j in range(n):
        v0, v1 = u00[:, j] * v0 + u01[:, j] * v1, u10[:, j] * v0 + u11[:, j] * v1
        z[:, j + 1] = v0.real**2 + v0.imag**2 - v1.real**2 - v1.imag**2
        if keep_states:
            states[:, j + 1, 0] = v0
            states[:, j + 1, 1] = v1
    return z, states


def evolve(params: ScheduleParams, cfg: EvolutionConfig = EvolutionConfig()) -> Trajectory:
    """Step the initial state through the whole grid, recording every state."""
    z, states = _propagate(np.array(params.theta), params.total_time, cfg, keep_states=True)
    return Trajectory(
        taus=cfg.taus,
        states=states[0],
        expectations=z[0],
        meta={"dtau": cfg.dtau, "stepper": cfg.stepper, "total_time": params.total_time},
    )


def expectation_trajectories(thetas: np.ndarray, total_time: float, cfg: EvolutionConfig) -> np.ndarray:
    """``<Z>`` on the grid for a batch of positive coefficient vectors, shape ``(B, N+1)``."""
    z, _ = _propagate(np.asarray(thetas, dtype=float), total_time, cfg, keep_states=False)
    return z


def trajectory_expectation(traj: Trajectory, obs: np.ndarray = SZ) -> np.ndarray:
    return np.array([expectation(obs, v) for v in traj.states])
