import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

import mmgou as mg
from mmgou.errors import SpecError
from mmgou.levy import LevyComponentSpec, SwitchJump, mc_additive_endpoint, sample_first_epoch

from conftest import rng_for


def test_laplace_exponent_values():
    # Brownian with drift: psi(1) = -1 + 2/2 = 0
    comp = LevyComponentSpec(drift=-1.0, gaussian_var=2.0)
    assert comp.laplace_exponent(1.0) == pytest.approx(0.0, abs=1e-15)
    # compound Poisson, unit jumps: psi(w) = 2 (e^w - 1)
    cp = LevyComponentSpec(cp_rate=2.0, cp_jump=mg.point_mass(1.0))
    assert cp.laplace_exponent(math.log(2.0)) == pytest.approx(2.0, rel=1e-14)
    assert cp.laplace_exponent(0.0) == 0.0
    assert LevyComponentSpec().finite_variation_zero_drift


def test_laplace_exponent_convexity_grid():
    comp = LevyComponentSpec(0.3, 0.5, 1.2, mg.normal(0.0, 0.2))
    grid = np.linspace(-1.2, 1.2, 20)
    vals = np.array([comp.laplace_exponent(w) for w in grid])
    second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
    assert np.all(second >= -1e-9)


def test_pure_drift_increment_deterministic():
    comp = LevyComponentSpec(drift=3.0)
    assert mg.sample_levy_increment(comp, 0.5, rng_for("d")) == pytest.approx(1.5)


def test_increment_moments():
    comp = LevyComponentSpec(0.4, 0.3, 1.5, mg.normal(0.2, 0.09))
    dt = 0.7
    draws = mg.sample_levy_increment(comp, np.full(400_000, dt), rng_for("inc"))
    mean_th = comp.mean_rate() * dt
    var_th = comp.variance_rate() * dt
    se_m = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - mean_th) < 3 * se_m
    v = (draws - draws.mean()) ** 2
    se_v = v.std(ddof=1) / math.sqrt(v.size)
    assert abs(draws.var() - var_th) < 3 * se_v


def test_bivariate_covariance():
    z = LevyComponentSpec(0.0, 0.8)
    e = LevyComponentSpec(0.0, 0.5)
    cov = 0.4
    dt = 0.5
    dz, de = mg.sample_bivariate_increment(z, e, cov, np.full(400_000, dt), rng_for("biv"))
    prod = dz * de
    se = prod.std(ddof=1) / math.sqrt(prod.size)
    assert abs(prod.mean() - cov * dt) < 3 * se
    # independent when cov = 0
    dz0, de0 = mg.sample_bivariate_increment(z, e, 0.0, np.full(200_000, dt), rng_for("biv0"))
    corr = np.corrcoef(dz0, de0)[0, 1]
    assert abs(corr) < 3 / math.sqrt(dz0.size)
    # perfectly correlated Gaussian parts are proportional
    full = math.sqrt(0.8 * 0.5)
    dz1, de1 = mg.sample_bivariate_increment(z, e, full, np.full(1000, dt), rng_for("biv1"))
    np.testing.assert_allclose(de1, dz1 * math.sqrt(0.5 / 0.8), atol=1e-12)


def test_cauchy_schwarz_enforced():
    z = LevyComponentSpec(0.0, 0.8)
    e = LevyComponentSpec(0.0, 0.5)
    with pytest.raises(SpecError):
        mg.sample_bivariate_increment(z, e, 0.7, 0.5, rng_for("cs"))
    ss = mg.StateSpace(("s",))
    with pytest.raises(SpecError):
        mg.MapSpec(
            chain=mg.CtmcSpec(ss, [[0.0]]), zeta=(z,), eta=(e,), brownian_cov=(0.7,)
        )


def test_switch_jump_joint_atoms():
    jump = SwitchJump(joint_atoms=((0.1, -0.2, 0.25), (-0.3, 0.4, 0.75)))
    zs, es = jump.sample(rng_for("atoms"), 50_000)
    assert set(np.round(np.unique(zs), 10)) == {-0.3, 0.1}
    # exact dependence: each zeta atom pairs with its eta partner
    assert np.all(es[zs == 0.1] == -0.2)
    assert jump.zeta_mgf(0.0) == pytest.approx(1.0)
    assert jump.eta_abs_moment(2.0) == pytest.approx(0.25 * 0.04 + 0.75 * 0.16)


def test_dual_single_state_drift_negated(brownian1d_map):
    dual = mg.dual_map(brownian1d_map)
    assert dual.zeta[0].drift == -0.5
    assert dual.zeta[0].gaussian_var == 1.0
    assert dual.epoch_rates == (1.0,)


def test_dual_involution_for_symmetric_jumps():
    ss = mg.StateSpace(("a", "b"))
    spec = mg.MapSpec(
        chain=mg.CtmcSpec(ss, [[-1.0, 1.0], [1.0, -1.0]]),
        zeta=(LevyComponentSpec(0.2, 0.3), LevyComponentSpec(-0.1, 0.4)),
        eta=(LevyComponentSpec(0.0, 0.2), LevyComponentSpec(0.1, 0.1)),
        switch_jumps={
            (0, 1): SwitchJump(mg.point_mass(0.2), mg.point_mass(-0.1)),
            (1, 0): SwitchJump(mg.point_mass(-0.2), mg.point_mass(0.1)),
        },
    )
    twice = mg.dual_map(mg.dual_map(spec))
    np.testing.assert_allclose(twice.chain.Q, spec.chain.Q, atol=1e-12)
    assert twice.zeta == spec.zeta and twice.eta == spec.eta
    assert twice.switch_jumps == spec.switch_jumps


def test_dual_preserves_chain_stationary_law(two_state_map):
    law = mg.stationary_law(two_state_map.chain)
    dual_law = mg.stationary_law(mg.dual_map(two_state_map).chain)
    np.testing.assert_allclose(dual_law.probabilities, law.probabilities, atol=1e-12)


def test_dual_distribution_oracle(two_state_map):
    """Reversed-increment law: zeta^_t under the dual from a stationary start
    equals the law of -zeta_t (the reversed construction evaluated at s = t)."""
    law = mg.stationary_law(two_state_map.chain)
    t = 1.5
    n = 100_000
    _, z_fwd, _ = mc_additive_endpoint(two_state_map, law, t, n, rng_for("df"))
    dual = mg.dual_map(two_state_map)
    _, z_dual, _ = mc_additive_endpoint(dual, law, t, n, rng_for("dd"))
    assert ks_2samp(-z_fwd, z_dual).statistic < 0.02
    # and at an interior time s = t/2 via the endpoint of a shorter run
    _, z_fwd2, _ = mc_additive_endpoint(two_state_map, law, t / 2, n, rng_for("df2"))
    _, z_dual2, _ = mc_additive_endpoint(dual, law, t / 2, n, rng_for("dd2"))
    assert ks_2samp(-z_fwd2, z_dual2).statistic < 0.02


def test_first_epoch_sampler_marginals(two_state_map):
    n = 200_000
    T, nxt, dz, de = sample_first_epoch(two_state_map, 0, n, rng_for("fe"))
    se = T.std(ddof=1) / math.sqrt(n)
    assert abs(T.mean() - 0.5) < 3 * se  # rate 2
    assert set(np.unique(nxt)) == {1}  # two-state: always switches
    # E[dz] = drift * E[T] + jump mean
    th = 0.25 * 0.5 + 0.1
    se_dz = dz.std(ddof=1) / math.sqrt(n)
    assert abs(dz.mean() - th) < 3 * se_dz
