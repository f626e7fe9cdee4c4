import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adiabatic_pdf.qops import (
    I2, SX, SZ, apply, expectation, expm_hermitian, haar_unitary, is_unitary,
    phase_distance, rx, rz,
)

from conftest import random_hermitian


def taylor_expm(h, dt, terms=80):
    a = -1j * dt * np.asarray(h, dtype=complex)
    out = np.eye(2, dtype=complex)
    term = np.eye(2, dtype=complex)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    return out


class TestExpm:
    def test_diagonal_phase(self):
        u = expm_hermitian(SZ, math.pi)
        assert np.allclose(u, -I2, atol=1e-14)

    def test_zero_hamiltonian(self):
        assert np.array_equal(expm_hermitian(np.zeros((2, 2)), 3.7), I2)

    def test_sigma_x_quarter_turn_matches_series(self):
        u = expm_hermitian(SX, math.pi / 2)
        assert np.allclose(u, -1j * SX, atol=1e-15)
        assert np.allclose(u, taylor_expm(SX, math.pi / 2), atol=1e-14)

    def test_random_against_series(self, rng):
        for _ in range(50):
            h = random_hermitian(rng)
            dt = rng.uniform(-2, 2)
            assert np.allclose(expm_hermitian(h, dt), taylor_expm(h, dt), atol=1e-12)

    def test_unitary(self, rng):
        for _ in range(100):
            u = expm_hermitian(random_hermitian(rng, 3.0), rng.uniform(-5, 5))
            assert np.allclose(u.conj().T @ u, I2, atol=1e-12)

    def test_group_property(self, rng):
        for _ in range(100):
            h = random_hermitian(rng)
            a, b = rng.uniform(-3, 3, 2)
            lhs = expm_hermitian(h, a + b)
            rhs = expm_hermitian(h, a) @ expm_hermitian(h, b)
            assert np.allclose(lhs, rhs, atol=1e-10)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            expm_hermitian(np.array([[0, 1], [0, 0]], dtype=complex), 1.0)


class TestApplyExpectation:
    def test_identity_and_flip(self):
        e0 = np.array([1, 0], dtype=complex)
        assert np.array_equal(apply(I2, e0), e0)
        assert np.allclose(apply(SX, e0), [0, 1])

    def test_composition(self, rng):
        u, v = haar_unitary(rng), haar_unitary(rng)
        psi = haar_unitary(rng)[:, 0]
        assert np.allclose(apply(u, apply(v, psi)), apply(u @ v, psi), atol=1e-12)
        assert abs(np.linalg.norm(apply(u, psi)) - 1) < 1e-12

    def test_expectations(self):
        assert expectation(SZ, np.array([1, 0])) == 1.0
        minus = np.array([1, -1]) / np.sqrt(2)
        assert abs(expectation(SZ, minus)) < 1e-15

    def test_sigma_x_on_real_rotation(self, rng):
        for alpha in rng.uniform(-np.pi, np.pi, 10):
            v = np.array([np.cos(alpha), np.sin(alpha)])
            assert expectation(SX, v) == pytest.approx(np.sin(2 * alpha), abs=1e-12)

    def test_non_hermitian_observable_flagged(self):
        v = np.array([1, 1j]) / np.sqrt(2)
        with pytest.raises(ValueError):
            expectation(np.array([[0, 1], [0, 0]], dtype=complex), v)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-10, 10), st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
    def test_global_phase_invariance(self, gamma, a, b):
        v = np.array([np.cos(a), np.exp(1j * b) * np.sin(a)])
        assert expectation(SZ, v) == pytest.approx(expectation(SZ, np.exp(1j * gamma) * v), abs=1e-12)


class TestPhaseDistance:
    def test_zero_cases(self, rng):
        u = haar_unitary(rng)
        assert phase_distance(u, u) < 1e-15
        assert phase_distance(u, -u) < 1e-15
        assert phase_distance(u, 1j * u) < 1e-15

    def test_identity_vs_x_by_grid_minimisation(self):
        gammas = np.linspace(0, 2 * np.pi, 10_000, endpoint=False)
        brute = min(np.linalg.norm(I2 - np.exp(1j * g) * SX) for g in gammas)
        d = phase_distance(I2, SX)
        assert d > 0
        assert d == pytest.approx(brute, abs=1e-6)
        assert d == pytest.approx(2.0, abs=1e-12)

    def test_rotations(self):
        assert is_unitary(rz(0.3)) and is_unitary(rx(1.1))
        assert phase_distance(rz(2 * np.pi), I2) < 1e-15
