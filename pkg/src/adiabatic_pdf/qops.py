"""Exact 2x2 complex linear algebra for a single qubit.

States are length-2 complex numpy arrays, operators are 2x2 complex arrays.
Everything here is a pure function.
"""
from __future__ import annotations

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)

HERMITIAN_ATOL = 1e-12
ZERO_NORM = 1e-14


def is_hermitian(m: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    return bool(np.allclose(m, m.conj().T, rtol=0.0, atol=atol))


def is_unitary(m: np.ndarray, atol: float = 1e-10) -> bool:
    return bool(np.allclose(m.conj().T @ m, I2, rtol=0.0, atol=atol))


def expm_hermitian(h: np.ndarray, dt: float) -> np.ndarray:
    """Return ``exp(-i dt H)`` for a Hermitian 2x2 ``H``.

    The trace part only contributes a phase, the traceless remainder
    ``H0`` has eigenvalues ``+-lam`` and ``H0 @ H0 = lam**2 I``, so the
    exponential is ``cos(dt lam) I - i sin(dt lam) H0 / lam``.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {h.shape}")
    if not np.isfinite(dt):
        raise ValueError("time step must be finite")
    if not is_hermitian(h):
        raise ValueError("matrix is not Hermitian")
    shift = 0.5 * np.trace(h).real
    h0 = h - shift * I2
    lam = np.sqrt(abs(h0[0, 0].real) ** 2 + abs(h0[0, 1]) ** 2)
    phase = np.exp(-1j * dt * shift)
    if lam < ZERO_NORM:
        return phase * I2.copy()
    return phase * (np.cos(dt * lam) * I2 - 1j * np.sin(dt * lam) * h0 / lam)


def apply(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.asarray(u, dtype=complex) @ np.asarray(v, dtype=complex)


def expectation(obs: np.ndarray, v: np.ndarray) -> float:
    """``<v|obs|v>``; a large imaginary part means ``obs`` is not Hermitian."""
    v = np.asarray(v, dtype=complex)
    val = np.vdot(v, obs @ v)
    if abs(val.imag) > 1e-9:
        raise ValueError(f"expectation has imaginary residue {val.imag:.3e}")
    return float(val.real)


def phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Frobenius distance between ``u`` and ``v`` minimised over a global phase.

    The optimal phase is ``arg tr(V^dag U)``; the norm is then taken directly
    rather than through ``sqrt(4 - 2|tr(U^dag V)|)``, which cannot resolve
    distances below ~1e-8.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    tr = np.trace(v.conj().T @ u)
    phase = tr / abs(tr) if abs(tr) > 0 else 1.0
    return float(np.linalg.norm(u - phase * v))


def rz(angle: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * angle), 0.0], [0.0, np.exp(0.5j * angle)]], dtype=complex
    )


def rx(angle: float) -> np.ndarray:
    c = np.cos(0.5 * angle)
    s = np.sin(0.5 * angle)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def haar_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-random 2x2 unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
