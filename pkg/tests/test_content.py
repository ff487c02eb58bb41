import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from einselect import content, oracle
from einselect.analysis import gamma_theory
from einselect.content import MINUS, PLUS, MagnitudeClaim
from einselect.errors import DegenerateState
from einselect.spinbath import (
    X_AXIS,
    Z_AXIS,
    Direction,
    ModelSpec,
    QubitAmplitudes,
    ReducedState,
    decoherence_factor,
    env_random,
    reduced_state,
)

from conftest import random_system

seeds = st.integers(0, 2**32 - 1)
psis = st.floats(0.0, math.pi)
chis = st.floats(0.0, 2 * math.pi)


def decohered_time(model):
    return 10.0 / gamma_theory(model.env)


def dense_stability(model, n, t, window, lags):
    p = min(oracle.dense_agreement_probability(model, n, t, e) for e in content.lag_grid(window, lags))
    return min(1.0, max(0.0, 2 * p - 1))


class TestPointerBasis:
    def test_decohered_state_selects_z(self, decohered_model):
        rho = reduced_state(decohered_model, decohered_time(decohered_model))
        res = content.pointer_basis(rho)
        assert res.direction.psi == pytest.approx(0.0, abs=1e-6)
        assert res.eigenvalues[0] == pytest.approx(0.7, abs=1e-9)
        assert np.allclose(res.reconstruct(), rho.matrix, atol=1e-14)

    def test_degenerate(self):
        with pytest.raises(DegenerateState):
            content.pointer_basis(ReducedState(np.eye(2) / 2))


class TestRecordScore:
    @given(seeds, st.integers(1, 10), st.floats(0, 10), psis, chis)
    def test_closed_form_matches_dense(self, seed, n, t, psi, chi):
        rng = np.random.default_rng(seed)
        model = ModelSpec(random_system(rng), env_random(n, seed))
        d = Direction(psi, chi)
        fast = content.record_distinguishability(model, d, t)
        slow = oracle.dense_record_distinguishability(model, d, t)
        assert abs(fast - slow) < 1e-10

    def test_no_records_at_t0(self, decohered_model):
        for d in (Z_AXIS, X_AXIS, Direction(1.0, 2.0)):
            assert content.record_distinguishability(decohered_model, d, 0.0) == pytest.approx(0.0, abs=1e-12)

    @given(psis)
    def test_decohered_closed_form(self, psi):
        # with r = 0: R = 1 - sin^2 psi / sqrt(1 - sin^2 psi cos^2 psi)
        d = Direction(psi, 0.3)
        s2, c2 = math.sin(psi) ** 2, math.cos(psi) ** 2
        expected = 1 - s2 / math.sqrt(1 - s2 * c2)
        assert content._record_from_r(d, 0j) == pytest.approx(expected, abs=1e-12)


class TestStability:
    @given(seeds, st.integers(1, 8), st.floats(0, 5), psis, chis)
    def test_matches_dense(self, seed, n, t, psi, chi):
        rng = np.random.default_rng(seed)
        model = ModelSpec(random_system(rng), env_random(n, seed))
        d = Direction(psi, chi)
        fast = content.stability(model, d, t, 1.0, 8)
        assert abs(fast - dense_stability(model, d, t, 1.0, 8)) < 1e-10

    def test_x_axis_at_t0_reduces_to_min_re_r(self):
        model = ModelSpec(QubitAmplitudes(0.6, 0.8), env_random(6, 3))
        eps = content.lag_grid(0.7, 10)
        expected = min(decoherence_factor(model.env, e).value.real for e in eps)
        assert content.stability(model, X_AXIS, 0.0, 0.7, 10) == pytest.approx(min(1, max(0, expected)), abs=1e-12)

    def test_z_axis_always_stable(self, decohered_model):
        assert content.stability(decohered_model, Z_AXIS, 3.0, 5.0, 16) == 1.0

    def test_lag_grid(self):
        assert content.lag_grid(2.0, 4).tolist() == [0.5, 1.0, 1.5, 2.0]
        with pytest.raises(ValueError):
            content.lag_grid(0.0, 4)


class TestContent:
    def test_sweep_monotone_and_extremes(self, decohered_model):
        t = decohered_time(decohered_model)
        vals = [
            content.claim_content(decohered_model, MagnitudeClaim.spin(Direction(p)), t, t, 32).content
            for p in np.linspace(0, math.pi / 2, 19)
        ]
        assert vals[0] >= 0.99 and vals[-1] <= 0.01
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))

    @given(psis, chis)
    def test_chi_invariance(self, psi, chi):
        model = ModelSpec(QubitAmplitudes(math.sqrt(0.7), math.sqrt(0.3)), env_random(50, 4))
        t = 10.0 / gamma_theory(model.env)
        base = content.claim_content(model, MagnitudeClaim.spin(Direction(psi, 0.0)), t, t, 16).content
        rot = content.claim_content(model, MagnitudeClaim.spin(Direction(psi, chi)), t, t, 16).content
        assert abs(base - rot) <= 1e-10

    @given(psis)
    def test_antipodal_symmetry(self, psi):
        model = ModelSpec(QubitAmplitudes(math.sqrt(0.7), math.sqrt(0.3)), env_random(50, 4))
        t = 10.0 / gamma_theory(model.env)
        claim = MagnitudeClaim.spin(Direction(psi, 0.4), (PLUS,))
        a = content.claim_content(model, claim, t, t, 16).content
        b = content.claim_content(model, claim.relabeled(), t, t, 16).content
        assert abs(a - b) <= 1e-10

    def test_identity_is_vacuous(self, decohered_model):
        rep = content.claim_content(decohered_model, MagnitudeClaim.identity(), 1.0, 1.0, 4)
        assert rep.vacuous and rep.content == 0.0

    @given(seeds, st.floats(0, 5), psis)
    def test_scores_in_unit_interval(self, seed, t, psi):
        rng = np.random.default_rng(seed)
        model = ModelSpec(random_system(rng), env_random(12, seed))
        rep = content.claim_content(model, MagnitudeClaim.spin(Direction(psi)), t, 1.0, 8)
        for v in (rep.record_score, rep.stability_score, rep.content):
            assert 0.0 <= v <= 1.0


class TestGate:
    def test_catalogue_verdicts(self, decohered_model):
        t = decohered_time(decohered_model)
        got = {
            lab: content.gate_claim(decohered_model, content.named_claim(lab), t, 0.9, t, 32)
            for lab in ("A", "B", "C", "D", "E", "E'")
        }
        assert got["A"].verdict == "vacuous"
        assert got["B"].verdict == "refused" and got["C"].verdict == "refused"
        assert got["D"].licensed and abs(got["D"].probability - 1) <= 1e-12
        assert got["E"].licensed and abs(got["E"].probability - 0.7) <= 1e-12
        assert got["E'"].licensed and abs(got["E'"].probability - 0.3) <= 1e-12

    def test_f_refused_at_t0(self, decohered_model):
        claim = content.named_claim("F", decohered_model.system)
        assert content.gate_claim(decohered_model, claim, 0.0, 0.9, 1.0, 16).verdict == "refused"

    def test_f_needs_system(self):
        with pytest.raises(ValueError):
            content.named_claim("F")

    def test_threshold_range(self, decohered_model):
        with pytest.raises(ValueError):
            content.gate_claim(decohered_model, content.named_claim("D"), 1.0, 1.0)

    def test_born_probability_complement(self):
        rho = reduced_state(ModelSpec(QubitAmplitudes(0.6, 0.8j), env_random(4, 1)), 0.9)
        claim = MagnitudeClaim.spin(Direction(0.7, 1.1), (PLUS,))
        total = content.born_probability(rho, claim) + content.born_probability(rho, claim.complement())
        assert total == pytest.approx(1.0, abs=1e-14)


class TestClaimParsing:
    def test_from_dict(self):
        c = content.claim_from_dict({"kind": "spin", "psi": 0.5, "values": ["-"]})
        assert c.values == frozenset({MINUS})
        assert content.claim_from_dict({"label": "D"}) == content.named_claim("D")

    def test_unknown_label(self):
        with pytest.raises(ValueError, match="unknown claim label"):
            content.claim_from_dict({"label": "Z"})

    def test_roundtrip(self):
        c = MagnitudeClaim.spin(Direction(1.0, 2.0), (PLUS,), "L")
        assert content.claim_from_dict(c.to_dict()) == c

    def test_bad_values(self):
        with pytest.raises(ValueError):
            MagnitudeClaim.spin(Z_AXIS, (1.0,))
        with pytest.raises(ValueError):
            MagnitudeClaim("identity", Z_AXIS)
        with pytest.raises(ValueError):
            MagnitudeClaim.spin(Z_AXIS).complement()
