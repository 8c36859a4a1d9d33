import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fkqe.model import FkWeight, SymmetricChain, golden2, tilted_generator
from fkqe.spectral import SpectralError, doob_transform, ground_state, qe_quantities

from conftest import chain_and_weight, corpus, g2_weight_V
from oracles import G2_ETA, G2_J12, G2_LAMBDA0, G2_LAMBDA1, G2_NU, G2_PHI0, PHI, SQRT5, bottom_eigenvalue


class TestGroundState:
    def test_golden2(self, g2):
        sd = ground_state(g2, FkWeight.zero(2), 1.0)
        assert sd.lambda0 == pytest.approx(0.3819660113, abs=1e-10)
        assert sd.lambda0 == pytest.approx(G2_LAMBDA0, abs=1e-14)
        np.testing.assert_allclose(sd.phi0, [0.5257311121, 0.8506508084], atol=1e-10)
        np.testing.assert_allclose(sd.phi0, G2_PHI0, atol=1e-14)
        assert sd.gap == pytest.approx(SQRT5, rel=1e-13)
        np.testing.assert_allclose(sd.spectrum, [G2_LAMBDA0, G2_LAMBDA1], rtol=1e-13)

    def test_golden2_potential_tilt(self, g2):
        sd = ground_state(g2, g2_weight_V(), -1.0)
        assert sd.lambda0 == pytest.approx(0.0, abs=1e-14)
        np.testing.assert_allclose(sd.phi0, np.ones(2) / math.sqrt(2), atol=1e-14)
        assert sd.gap == pytest.approx(2.0, rel=1e-13)

    @pytest.mark.parametrize("name, chain, weight", corpus())
    def test_invariants(self, name, chain, weight):
        for theta in (-2.0, -0.5, 0.0, 1.0):
            sd = ground_state(chain, weight, theta)
            L = tilted_generator(chain, weight, theta).L
            assert np.sum(sd.phi0**2 * chain.m) == pytest.approx(1.0, abs=1e-12)
            assert (sd.phi0 > 0).all()
            resid = -L @ sd.phi0 - sd.lambda0 * sd.phi0
            assert np.abs(resid).max() <= 1e-10 * max(1.0, abs(sd.lambda0)) * sd.phi0.max()
            assert sd.gap > 0
            assert np.all(np.diff(sd.spectrum) >= 0)
            assert sd.lambda0 == pytest.approx(bottom_eigenvalue(L), rel=1e-9, abs=1e-11)

    @settings(max_examples=50, deadline=None)
    @given(chain_and_weight(), st.floats(-2, 2))
    def test_perron_property(self, cw, theta):
        chain, weight = cw
        sd = ground_state(chain, weight, theta)
        assert (sd.phi0 > 0).all() and sd.gap > 0
        L = tilted_generator(chain, weight, theta).L
        assert sd.lambda0 == pytest.approx(bottom_eigenvalue(L), rel=1e-8, abs=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(chain_and_weight(), st.floats(0.1, 10.0))
    def test_scaling(self, cw, c):
        chain, weight = cw
        w0 = FkWeight(weight.V, np.zeros_like(weight.F))
        a = ground_state(chain, w0, 1.0)
        b = ground_state(chain.scaled(c), FkWeight(c * weight.V, w0.F), 1.0)
        assert b.lambda0 == pytest.approx(c * a.lambda0, rel=1e-10, abs=1e-10)
        np.testing.assert_allclose(b.phi0, a.phi0, atol=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(chain_and_weight(), st.floats(-3, 3))
    def test_unweighted_independent_of_theta(self, cw, theta):
        chain, _ = cw
        z = FkWeight.zero(chain.n)
        a, b = ground_state(chain, z, 1.0), ground_state(chain, z, theta)
        assert a.lambda0 == pytest.approx(b.lambda0, rel=1e-12, abs=1e-14)
        np.testing.assert_allclose(a.phi0, b.phi0, atol=1e-12)

    def test_degenerate_gap(self):
        # two states joined by nothing but symmetric killing: reducible, double eigenvalue
        chain = SymmetricChain([1.0, 1.0], np.zeros((2, 2)), [1.0, 1.0])
        with pytest.raises(SpectralError):
            ground_state(chain, FkWeight.zero(2))


class TestDoob:
    def test_golden2_rates(self, g2):
        w = FkWeight.zero(2)
        doob = doob_transform(g2, w, ground_state(g2, w))
        assert doob.rates[0, 1] == pytest.approx(1.6180340, abs=1e-7)
        assert doob.rates[0, 1] == pytest.approx(PHI, rel=1e-13)
        assert doob.rates[1, 0] == pytest.approx(2 / (1 + SQRT5), rel=1e-13)
        np.testing.assert_allclose(doob.stationary, [0.2763932023, 0.7236067977], atol=1e-10)
        flux = doob.stationary[0] * doob.rates[0, 1]
        assert flux == pytest.approx(0.4472135955, abs=1e-10)
        assert flux == pytest.approx(doob.stationary[1] * doob.rates[1, 0], rel=1e-13)

    @pytest.mark.parametrize("name, chain, weight", corpus())
    def test_invariants(self, name, chain, weight):
        for theta in (-1.0, 1.0):
            sd = ground_state(chain, weight, theta)
            doob = doob_transform(chain, weight, sd)
            Q = doob.generator
            eta = doob.stationary
            assert np.abs(Q.sum(axis=1)).max() <= 1e-12 * max(1.0, np.abs(Q).max())
            assert eta.sum() == pytest.approx(1.0, abs=1e-14)
            flux = eta[:, None] * doob.rates
            np.testing.assert_allclose(flux, flux.T, rtol=1e-10, atol=1e-14)
            assert np.abs(eta @ Q).max() <= 1e-12 * max(1.0, np.abs(Q).max())
            # phi^{-1} (L + lambda0) phi as an operator
            L = tilted_generator(chain, weight, theta).L
            phi = sd.phi0
            conj = (L + sd.lambda0 * np.eye(chain.n)) * phi[None, :] / phi[:, None]
            np.testing.assert_allclose(Q, conj, atol=1e-10 * max(1.0, np.abs(L).max()))

    def test_stale_data(self, g2):
        sd = ground_state(g2, FkWeight.zero(2))
        with pytest.raises(ValueError, match="stale"):
            doob_transform(g2, g2_weight_V(), sd)
        with pytest.raises(ValueError, match="stale"):
            qe_quantities(golden2(kappa=(2.0, 0.0)), FkWeight.zero(2), sd)


class TestQeQuantities:
    def test_golden2(self, g2):
        w = FkWeight.zero(2)
        qe = qe_quantities(g2, w, ground_state(g2, w))
        np.testing.assert_allclose(qe.nu, [0.3819660113, 0.6180339887], atol=1e-10)
        np.testing.assert_allclose(qe.nu, G2_NU, atol=1e-14)
        np.testing.assert_allclose(qe.eta, [0.2763932023, 0.7236067977], atol=1e-10)
        np.testing.assert_allclose(qe.eta, G2_ETA, atol=1e-14)
        assert qe.Jphi[0, 1] == pytest.approx(1 / SQRT5, abs=1e-12)
        assert qe.Jphi[1, 0] == qe.Jphi[0, 1]
        assert qe.Jphi[0, 1] == pytest.approx(G2_J12, rel=1e-13)

    @pytest.mark.parametrize("name, chain, weight", corpus())
    def test_invariants(self, name, chain, weight):
        sd = ground_state(chain, weight)
        qe = qe_quantities(chain, weight, sd)
        doob = doob_transform(chain, weight, sd)
        assert qe.nu.sum() == pytest.approx(1.0, abs=1e-14)
        assert qe.eta.sum() == pytest.approx(1.0, abs=1e-14)
        assert (qe.Jphi >= 0).all()
        np.testing.assert_array_equal(qe.Jphi, qe.Jphi.T)
        np.testing.assert_allclose(qe.Jphi, doob.stationary[:, None] * doob.rates, rtol=1e-10, atol=1e-15)
        assert qe.Jphi.sum() == pytest.approx(np.sum(doob.stationary * doob.rates.sum(axis=1)), rel=1e-12)
        # the quasi-stationary law is a left eigenvector of L
        L = tilted_generator(chain, weight).L
        np.testing.assert_allclose(qe.nu @ L, -sd.lambda0 * qe.nu, atol=1e-10)
