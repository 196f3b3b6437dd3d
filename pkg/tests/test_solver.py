import math

import numpy as np
import pytest

from hemihelix import bifurcation as bif
from hemihelix.rod_model import CardanPath, ChartError
from hemihelix.solver import SolveReport, minimize, newton_solve
from hemihelix.spectral import constrained_spectrum, generalized_eigs
from hemihelix.variational import h1_norm, hessian, mass_matrix

from .conftest import random_path


class TestNewton:
    def test_exact_root(self, toy):
        path, rep = newton_solve(CardanPath.zeros(64, toy.L), 2.0, toy)
        assert rep.iterations <= 1 and np.abs(path.values).max() == 0.0

    @pytest.mark.parametrize("consts_name", ["toy", "bistrip"])
    def test_recovers_branch_point(self, consts_name, request):
        consts = request.getfixturevalue(consts_name)
        n = 256
        pt = bif.continue_branch(consts, n, [0.02])[0]
        seed = bif.kernel_mode(consts, n).scaled(0.02)
        path, rep = newton_solve(seed, pt.f, consts)
        assert rep.converged
        assert h1_norm(path.interior - pt.path.interior, n, consts.L) < 1e-9

    def test_reflection_equivariance(self, toy):
        pt = bif.continue_branch(toy, 128, [0.1])[0]
        a, _ = newton_solve(pt.path, pt.f, toy)
        b, _ = newton_solve(pt.path.reflect(), pt.f, toy)
        np.testing.assert_allclose(b.values, a.reflect().values, atol=1e-10)

    def test_seed_outside_chart(self, toy):
        v = np.zeros((17, 3))
        v[8, 1] = math.pi / 2
        with pytest.raises(ChartError):
            newton_solve(CardanPath(v, toy.L), 2.0, toy)

    def test_report_json(self, toy):
        _, rep = newton_solve(CardanPath.zeros(32, toy.L), 3.3, toy)
        assert isinstance(rep, SolveReport)
        assert rep.classification == "strict-min"
        assert '"iterations"' in rep.to_json() and "energy_history" not in rep.to_json()


class TestMinimize:
    def test_identity_above_critical_force(self, toy, rng):
        seed = random_path(rng, 64, toy.L, amp=0.05)
        path, rep = minimize(seed, 1.1 * bif.critical_force(toy), toy)
        assert np.abs(path.values).max() < 1e-9
        assert rep.classification == "strict-min"

    def test_nontrivial_below_critical_force(self, toy):
        f = bif.critical_force(toy) - 0.05
        path, rep = minimize(bif.kernel_mode(toy, 128).scaled(0.02), f, toy)
        assert rep.classification == "strict-min"
        assert np.abs(path.values).max() > 1e-3
        assert bif.energy_gap(path, toy, f) < 0

    def test_energy_nonincreasing(self, toy, rng):
        seed = random_path(rng, 64, toy.L, amp=0.3)
        _, rep = minimize(seed, 2.0, toy)
        assert np.all(np.diff(rep.energy_history) <= 1e-12 * abs(rep.energy_history[0]))

    def test_escapes_saddle(self, bistrip):
        # the branch point is a saddle here; minimization must leave it downhill
        pt = bif.continue_branch(bistrip, 128, [0.01])[0]
        path, rep = minimize(pt.path, pt.f, bistrip)
        # above the critical force it lands on the straight rod
        assert np.abs(path.values).max() < 1e-6
        assert rep.mu_min > 0
        assert bif.energy_gap(path, bistrip, pt.f) < pt.energy_gap
        assert rep.energy_history[-1] < rep.energy_history[0]


class TestSpectrum:
    def test_residuals_and_normalization(self, toy, rng):
        p = random_path(rng, 64, toy.L)
        res = constrained_spectrum(p, 2.0, toy, n_eigs=4)
        assert np.all(np.diff(res.eigenvalues) >= 0)
        assert np.all(res.residuals <= 1e-8)
        M = mass_matrix(64, toy.L)
        np.testing.assert_allclose(res.modes.T @ (M @ res.modes), np.eye(4), atol=1e-10)

    def test_sparse_and_dense_agree(self, toy):
        H = hessian(CardanPath.zeros(400, toy.L), 2.0, toy)
        M = mass_matrix(400, toy.L)
        dense = generalized_eigs(H, M, 3).eigenvalues
        from hemihelix import spectral

        old = spectral.DENSE_LIMIT
        spectral.DENSE_LIMIT = 0
        try:
            sparse = generalized_eigs(H, M, 3).eigenvalues
        finally:
            spectral.DENSE_LIMIT = old
        np.testing.assert_allclose(sparse, dense, rtol=1e-9)

    def test_kernel_alignment(self, toy):
        n = 512
        lam0 = bif.critical_force(toy)
        res = constrained_spectrum(CardanPath.zeros(n, toy.L), lam0, toy, n_eigs=1)
        w = bif.kernel_mode(toy, n).interior
        M = mass_matrix(n, toy.L)
        v = res.modes[:, 0]
        cos = abs(v @ (M @ w)) / math.sqrt((v @ (M @ v)) * (w @ (M @ w)))
        assert math.acos(min(cos, 1.0)) < 1e-2
