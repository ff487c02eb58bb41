import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from einselect import oracle
from einselect.errors import BathTooLarge
from einselect.spinbath import (
    SIGMA_X,
    SIGMA_Z,
    ModelSpec,
    QubitAmplitudes,
    branch_env_state,
    decoherence_factor,
    env_random,
    reduced_state,
)

from conftest import random_system

seeds = st.integers(0, 2**32 - 1)


def brute_force_joint(model, t):
    """Dense Hamiltonian, exponentiated by eigendecomposition (small N only)."""
    n = model.env.N
    dim = 2 ** (n + 1)
    h = np.zeros((dim, dim), dtype=complex)
    for k, g in enumerate(model.env.couplings):
        ops = [SIGMA_Z] + [np.eye(2)] * n
        ops[k + 1] = SIGMA_Z
        term = ops[0]
        for o in ops[1:]:
            term = np.kron(term, o)
        h += g * term
    w, v = np.linalg.eigh(h)
    # convention of the model: U = exp(+i t H_int)
    u = v @ np.diag(np.exp(1j * t * w)) @ v.conj().T
    return u @ oracle.product_state(model.system.vector, model.env.amplitudes)


class TestEvolution:
    @given(seeds, st.integers(1, 5), st.floats(0, 10))
    def test_diagonal_phase_equals_matrix_exponential(self, seed, n, t):
        rng = np.random.default_rng(seed)
        model = ModelSpec(random_system(rng), env_random(n, seed))
        assert np.allclose(oracle.evolve_full(model, t).amplitudes, brute_force_joint(model, t), atol=1e-11)

    def test_norm_preserved(self):
        model = ModelSpec(QubitAmplitudes(0.6, 0.8j), env_random(10, 3))
        for t in (0.0, 1.0, 123.4):
            assert oracle.evolve_full(model, t).norm() == pytest.approx(1.0, abs=1e-12)

    def test_branch_states_embed(self):
        model = ModelSpec(QubitAmplitudes(0.6, 0.8), env_random(6, 8))
        t = 2.5
        sec = oracle.evolve_full(model, t).sectors()
        assert np.allclose(sec[0] / 0.6, branch_env_state(model.env, "up", t).dense())
        assert np.allclose(sec[1] / 0.8, branch_env_state(model.env, "down", t).dense())

    def test_guard(self):
        model = ModelSpec(QubitAmplitudes(1, 0), env_random(30, 0))
        with pytest.raises(BathTooLarge, match="N <= 24"):
            oracle.evolve_full(model, 1.0)
        with pytest.raises(BathTooLarge):
            oracle.JointState(np.zeros(2), 25)

    def test_coupling_sums_exact_for_dyadic(self):
        g = np.array([0.5, 0.25, 1.0])
        sums = oracle.coupling_sums(g)
        signs = oracle.spin_signs(3)
        assert sums.tolist() == (signs @ g).tolist()

    def test_spin_signs_ordering(self):
        s = oracle.spin_signs(2)
        assert s.tolist() == [[1, 1], [1, -1], [-1, 1], [-1, -1]]


class TestPartialTrace:
    @given(seeds, st.integers(1, 10), st.floats(0, 30))
    def test_matches_closed_form(self, seed, n, t):
        rng = np.random.default_rng(seed)
        model = ModelSpec(random_system(rng), env_random(n, seed))
        dense = oracle.partial_trace_system(oracle.evolve_full(model, t))
        assert np.max(np.abs(dense.matrix - reduced_state(model, t).matrix)) < 1e-11

    def test_env_density_trace_and_coherence(self):
        model = ModelSpec(QubitAmplitudes(math.sqrt(0.7), math.sqrt(0.3)), env_random(5, 1))
        rho_e = oracle.env_density(oracle.evolve_full(model, 0.7))
        assert np.trace(rho_e).real == pytest.approx(1.0)
        assert np.allclose(rho_e, rho_e.conj().T)


class TestEnvExpectation:
    @given(seeds, st.integers(1, 8), st.floats(0, 10))
    def test_factorized_matches_dense(self, seed, n, t):
        rng = np.random.default_rng(seed)
        model = ModelSpec(random_system(rng), env_random(n, seed))
        ops = []
        for _ in range(n):
            a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            ops.append(a)
        fast = oracle.env_expectation(model, t, ops)
        slow = oracle.dense_env_expectation(model, t, ops)
        assert abs(fast - slow) < 1e-10 * max(1.0, abs(slow))

    @given(seeds, st.integers(1, 20), st.floats(0, 10), st.floats(-3, 3))
    def test_lag_ops_give_decoherence_factor(self, seed, n, t, eps):
        rng = np.random.default_rng(seed)
        model = ModelSpec(random_system(rng), env_random(n, seed))
        val = oracle.env_expectation(model, t, oracle.lag_phase_ops(model, eps))
        assert abs(val - decoherence_factor(model.env, eps).value) < 1e-12

    def test_identity_ops(self):
        model = ModelSpec(QubitAmplitudes(0.6, 0.8), env_random(40, 2))
        assert oracle.env_expectation(model, 3.0, [np.eye(2)] * 40) == pytest.approx(1.0)

    def test_shape_checked(self):
        model = ModelSpec(QubitAmplitudes(0.6, 0.8), env_random(3, 2))
        with pytest.raises(ValueError):
            oracle.env_expectation(model, 1.0, [SIGMA_X] * 2)


class TestDump:
    def test_roundtrip(self, tmp_path):
        model = ModelSpec(QubitAmplitudes(0.6, 0.8j), env_random(7, 5))
        joint = oracle.evolve_full(model, 1.234)
        path = tmp_path / "state.qjs"
        oracle.dump_joint_state(joint, path)
        raw = path.read_bytes()
        assert raw[:4] == b"QJS1" and len(raw) == 16 + 16 * 2**8
        back = oracle.load_joint_state(path)
        assert back.n_env == 7
        assert np.array_equal(back.amplitudes, joint.amplitudes)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x"
        path.write_bytes(b"XXXX" + bytes(12))
        with pytest.raises(ValueError):
            oracle.load_joint_state(path)
