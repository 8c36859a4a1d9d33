import warnings

import numpy as np
import pytest
from scipy.linalg import expm

from fkqe import _accel
from fkqe.model import FkWeight, Observable, golden2, tilted_generator
from fkqe.montecarlo import (
    CEMETERY,
    DegenerateConditioning,
    LowESSWarning,
    doob_occupation,
    fk_estimate,
    sample_path,
    simulate_paths,
    tail_probability,
)
from fkqe.semigroup import conditional_mean
from fkqe.spectral import doob_transform, ground_state

from conftest import g2_weight_V, mc_cases, three_state, three_weight
from oracles import G2_ETA, bromwich_tail

ZERO2 = FkWeight.zero(2)
BACKENDS = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])


class TestPaths:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_record_invariants(self, backend):
        chain, weight = three_state(), three_weight()
        obs = Observable.jump_count(3)
        batch = simulate_paths(chain, weight, obs, 5.0, 1, 2000, seed=3, backend=backend)
        occ_total = batch.occupation.sum(axis=1)
        np.testing.assert_allclose(occ_total[batch.alive], 5.0, rtol=1e-12)
        assert (occ_total[~batch.alive] < 5.0).all()
        assert (batch.endpoint[~batch.alive] == CEMETERY).all()
        assert (batch.endpoint[batch.alive] >= 0).all()
        np.testing.assert_array_equal(batch.A_obs, batch.n_jumps)
        # A_weight = int V ds + sum F, reconstructible from the record except the jump part,
        # which is bounded by the number of jumps times max |F|
        cont = batch.occupation @ weight.V
        assert (np.abs(batch.A_weight - cont) <= batch.n_jumps * np.abs(weight.F).max() + 1e-12).all()

    def test_golden2_occupation(self, g2):
        for path in range(20):
            rec = sample_path(g2, ZERO2, Observable.jump_count(2), 5.0, 0, seed=1, path=path)
            if rec.alive_at_t:
                assert rec.occupation.sum() == pytest.approx(5.0, rel=1e-14)
            assert rec.A_obs == rec.n_jumps

    def test_sample_path_is_batch_member(self, g2):
        batch = simulate_paths(g2, ZERO2, Observable.jump_count(2), 3.0, 1, 10, seed=8)
        rec = sample_path(g2, ZERO2, Observable.jump_count(2), 3.0, 1, seed=8, path=6)
        assert rec.n_jumps == batch.n_jumps[6] and rec.endpoint == batch.endpoint[6]

    @pytest.mark.parametrize("x", [0, 1])
    def test_survival_matches_exact(self, g2, x):
        batch = simulate_paths(g2, ZERO2, Observable.clock(2), 1.0, x, 100_000, seed=17)
        p_hat = batch.alive.mean()
        se = np.sqrt(p_hat * (1 - p_hat) / batch.alive.size)
        exact = (expm(tilted_generator(g2, ZERO2).L) @ np.ones(2))[x]
        assert abs(p_hat - exact) < 3 * se

    def test_bad_inputs(self, g2):
        with pytest.raises(ValueError):
            simulate_paths(g2, ZERO2, Observable.clock(2), 0.0, 0, 10, 0)
        with pytest.raises(ValueError):
            simulate_paths(g2, ZERO2, Observable.clock(2), 1.0, 2, 10, 0)


class TestFkEstimate:
    def test_clock_is_exact(self, g2):
        est = fk_estimate(g2, g2_weight_V(), Observable.clock(2), 3.0, 0, 5000, seed=4)
        assert est.value == pytest.approx(1.0, rel=1e-14)
        assert est.stderr == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("case", mc_cases(), ids=lambda c: c[0])
    def test_against_exact(self, case):
        name, chain, weight, obs, t, x = case
        est = fk_estimate(chain, weight, obs, t, x, 100_000, seed=2024)
        exact = conditional_mean(chain, weight, obs, t).per_state_mean[x]
        assert est.stderr > 0 and est.ess <= est.n_paths
        assert abs(est.value - exact) < 3 * est.stderr

    def test_degenerate_long_horizon(self, g2):
        # survival to t=40 has probability ~1.7e-7: no path of 1e5 carries weight
        with pytest.raises(DegenerateConditioning) as info:
            fk_estimate(g2, ZERO2, Observable.jump_count(2), 40.0, 0, 100_000, seed=42)
        assert info.value.survival_estimate == 0.0

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_reproducible(self, backend):
        chain, weight = three_state(), three_weight()
        a = fk_estimate(chain, weight, Observable.jump_count(3), 4.0, 0, 3000, seed=5, backend=backend)
        b = fk_estimate(chain, weight, Observable.jump_count(3), 4.0, 0, 3000, seed=5, backend=backend)
        assert a == b

    @pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")
    def test_backend_independent(self):
        chain, weight = three_state(), three_weight()
        a = fk_estimate(chain, weight, Observable.jump_count(3), 4.0, 0, 3000, seed=5, backend="numpy")
        b = fk_estimate(chain, weight, Observable.jump_count(3), 4.0, 0, 3000, seed=5, backend="numba")
        assert a.value == pytest.approx(b.value, rel=1e-12)
        assert a.ess == pytest.approx(b.ess, rel=1e-12)


class TestDoobOccupation:
    def test_golden2_ergodic(self, g2):
        doob = doob_transform(g2, ZERO2, ground_state(g2, ZERO2))
        occ = doob_occupation(doob, 1e5, 0, seed=42)
        assert occ.sum() == pytest.approx(1.0, abs=1e-14)
        np.testing.assert_allclose(occ, G2_ETA, atol=0.01)
        other = doob_occupation(doob, 1e5, 0, seed=43)
        np.testing.assert_allclose(occ, other, atol=0.02)

    def test_bad_horizon(self, g2):
        doob = doob_transform(g2, ZERO2, ground_state(g2, ZERO2))
        with pytest.raises(ValueError):
            doob_occupation(doob, 0.0, 0, seed=1)


class TestTail:
    @pytest.mark.parametrize("theta_tilt", [-1.0, -0.5, 0.0])
    @pytest.mark.parametrize("x", [0, 1])
    def test_against_bromwich(self, g2, theta_tilt, x):
        t = 10.0
        exact = bromwich_tail(tilted_generator(g2, ZERO2).L, [1.0, 0.0], t, 0.5 * t, x)
        est = tail_probability(g2, g2_weight_V(), 0.5, t, x, theta_tilt, 100_000, seed=11)
        assert abs(est.value - exact) < 3 * est.stderr

    def test_long_horizon_matches_bromwich(self, g2):
        t = 30.0
        exact = bromwich_tail(tilted_generator(g2, ZERO2).L, [1.0, 0.0], t, 0.5 * t, 0)
        est = tail_probability(g2, g2_weight_V(), 0.5, t, 0, -1.0, 100_000, seed=42)
        assert abs(est.value - exact) < 3 * est.stderr
        # finite-t value sits below the asymptotic exponent -0.5 by a log(t)/t-type prefactor
        assert np.log(exact) / t == pytest.approx(-0.5669, abs=1e-3)

    def test_tilts_agree_and_tilt_helps(self, g2):
        a = tail_probability(g2, g2_weight_V(), 0.5, 30.0, 0, 0.0, 10_000, seed=42)
        b = tail_probability(g2, g2_weight_V(), 0.5, 30.0, 0, -1.0, 10_000, seed=42)
        assert abs(a.value - b.value) < 3 * np.hypot(a.stderr, b.stderr)
        assert b.ess > a.ess

    def test_below_mean_is_survival(self, g2):
        # gamma below the quasi-ergodic mean: the event is almost all of {t < zeta}
        t = 30.0
        est = tail_probability(g2, g2_weight_V(), 0.1, t, 0, 0.0, 20_000, seed=3)
        surv = (expm(t * tilted_generator(g2, ZERO2).L) @ np.ones(2))[0]
        assert est.value == pytest.approx(surv, rel=0.05)
        assert np.log(est.value) / t == pytest.approx(-ground_state(g2, ZERO2).lambda0, abs=0.02)

    def test_low_ess_warning(self, g2):
        with pytest.warns(LowESSWarning):
            est = tail_probability(g2, g2_weight_V(), 0.5, 30.0, 0, 0.0, 300, seed=1)
        assert est.warning is not None and "effective sample size" in est.warning

    def test_no_warning_when_healthy(self, g2):
        with warnings.catch_warnings():
            warnings.simplefilter("error", LowESSWarning)
            est = tail_probability(g2, g2_weight_V(), 0.5, 10.0, 0, -1.0, 5000, seed=1)
        assert est.warning is None

    def test_positive_tilt_rejected(self, g2):
        with pytest.raises(ValueError):
            tail_probability(g2, g2_weight_V(), 0.5, 1.0, 0, 0.5, 10, seed=1)
