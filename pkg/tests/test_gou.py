import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

import mmgou as mg
from mmgou.errors import ContractViolationError, SpecError
from mmgou.gou import (
    coarsen_path,
    derived_mmlifs,
    euler_from_ul,
    segment_coefficient_batch,
    vinf_continuous_batch,
    vinf_discrete_batch,
)
from mmgou.levy import LevyComponentSpec, SwitchJump

from conftest import rng_for, z_gap


def _single_map(**kw):
    defaults = dict(
        chain=mg.CtmcSpec(mg.StateSpace(("s",)), [[0.0]]),
        zeta=(LevyComponentSpec(drift=1.0),),
        eta=(LevyComponentSpec(),),
        epoch_rates=(1.0,),
    )
    defaults.update(kw)
    return mg.MapSpec(**defaults)


# -- path simulation ---------------------------------------------------------------


def test_zero_components_only_switches(two_state_map):
    spec = mg.MapSpec(
        chain=two_state_map.chain,
        zeta=(LevyComponentSpec(), LevyComponentSpec()),
        eta=(LevyComponentSpec(), LevyComponentSpec()),
    )
    path = mg.simulate_map_path(spec, 0, 10.0, 0.05, rng_for("p0"))
    assert np.all(path.zeta == 0.0) and np.all(path.eta == 0.0)
    assert len(path.marks) > 5
    assert np.any(np.diff(path.states) != 0)


def test_pure_drift_path_linear():
    spec = _single_map(zeta=(LevyComponentSpec(drift=3.0),))
    path = mg.simulate_map_path(spec, 0, 2.0, 0.1, rng_for("p1"))
    np.testing.assert_allclose(path.zeta, 3.0 * path.times, atol=1e-12)


def test_path_jump_records_consistent(jumpy_map):
    path = mg.simulate_map_path(jumpy_map, 0, 10.0, 0.02, rng_for("p2"))
    # values at jump indices move by at least the recorded jump minus
    # the continuous part of one short step
    assert path.jump_idx.size > 0
    for k in range(path.jump_idx.size):
        idx = path.jump_idx[k]
        assert idx > 0
    # switch marks land on grid points whose state changes there
    for (idx, i, j, zz, ze) in path.marks:
        assert path.states[idx] == j
        assert path.states[idx - 1] == i


# -- explicit solution -----------------------------------------------------------------


def test_v_pure_discount():
    # eta = 0: V_t = e^{-zeta_t} V_0
    spec = _single_map(zeta=(LevyComponentSpec(drift=0.7, gaussian_var=0.3),))
    path = mg.simulate_map_path(spec, 0, 3.0, 0.01, rng_for("v1"))
    v = mg.mmgou_path(path, 2.5)
    np.testing.assert_allclose(v.V, 2.5 * np.exp(-path.zeta), rtol=1e-12)


def test_v_pure_accumulation():
    # zeta = 0: V_t = V_0 + eta_t
    spec = _single_map(
        zeta=(LevyComponentSpec(),), eta=(LevyComponentSpec(drift=0.4, gaussian_var=0.5),)
    )
    path = mg.simulate_map_path(spec, 0, 3.0, 0.01, rng_for("v2"))
    v = mg.mmgou_path(path, 1.0)
    np.testing.assert_allclose(v.V, 1.0 + path.eta, atol=1e-12)


def test_v_classical_transition_moments():
    # zeta_t = lam t, eta Brownian: V_t ~ Normal(V0 e^{-lam t}, s2 (1 - e^{-2 lam t}) / (2 lam))
    lam, s2, t_end, v0 = 1.0, 0.5, 1.0, 2.0
    spec = _single_map(
        zeta=(LevyComponentSpec(drift=lam),),
        eta=(LevyComponentSpec(gaussian_var=s2),),
    )
    rng = rng_for("v3")
    finals = np.array(
        [mg.mmgou_path(mg.simulate_map_path(spec, 0, t_end, 0.02, rng), v0).V[-1] for _ in range(4000)]
    )
    mean_th = v0 * math.exp(-lam * t_end)
    var_th = s2 * (1 - math.exp(-2 * lam * t_end)) / (2 * lam)
    se_m = finals.std(ddof=1) / math.sqrt(finals.size)
    assert z_gap(finals.mean(), se_m, mean_th) < 3
    centered = (finals - finals.mean()) ** 2
    se_v = centered.std(ddof=1) / math.sqrt(finals.size)
    assert z_gap(finals.var(), se_v, var_th) < 3


# -- (U, L) conversion -------------------------------------------------------------------


def test_ul_continuous_paths():
    spec = _single_map(
        zeta=(LevyComponentSpec(drift=0.2, gaussian_var=1.0),),
        eta=(LevyComponentSpec(drift=0.1, gaussian_var=0.5),),
        epoch_rates=(2.0,),
    )
    path = mg.simulate_map_path(spec, 0, 3.0, 0.01, rng_for("ul1"))
    ul = mg.ul_from_zeta_eta(path)
    np.testing.assert_allclose(ul.U, -path.zeta + 0.5 * 1.0 * path.times, atol=1e-12)
    np.testing.assert_allclose(ul.L, path.eta, atol=1e-12)


def test_ul_single_jump_formula():
    # one deterministic switch jump of log 2 in zeta: the U jump is
    # e^{-log 2} - 1 = -1/2 and U also picks up the continuous -zeta part
    ss = mg.StateSpace(("a", "b"))
    spec = mg.MapSpec(
        chain=mg.CtmcSpec(ss, [[-1.0, 1.0], [1.0, -1.0]]),
        zeta=(LevyComponentSpec(), LevyComponentSpec()),
        eta=(LevyComponentSpec(), LevyComponentSpec()),
        switch_jumps={
            (0, 1): SwitchJump(mg.point_mass(math.log(2.0)), mg.point_mass(0.0)),
            (1, 0): SwitchJump(mg.point_mass(-math.log(2.0)), mg.point_mass(0.0)),
        },
    )
    path = mg.simulate_map_path(spec, 0, 10.0, 0.1, rng_for("ul2"))
    ul = mg.ul_from_zeta_eta(path)
    first = path.marks[0]
    idx = first[0]
    jump_u = ul.U[idx] - ul.U[idx - 1]
    expected = math.exp(-first[3]) - 1.0
    assert jump_u == pytest.approx(expected, abs=1e-12)
    assert np.all(ul.jump_dU > -1.0)


def test_sde_consistency_refinement(jumpy_map):
    rng = rng_for("sde")
    fine = mg.simulate_map_path(jumpy_map, 0, 5.0, 0.04 / 16, rng, substep_multiple=16)
    errs = []
    for factor in (16, 4, 1):
        path = coarsen_path(fine, factor) if factor > 1 else fine
        v_exp = mg.mmgou_path(path, 1.0).V
        ul = mg.ul_from_zeta_eta(path)
        assert np.all(ul.jump_dU > -1.0)
        v_eul = euler_from_ul(ul, 1.0)
        errs.append(float(np.abs(v_exp - v_eul).max()))
    assert errs[0] > errs[1] > errs[2]


def test_coarsen_keeps_jumps_and_values(jumpy_map):
    fine = mg.simulate_map_path(jumpy_map, 0, 3.0, 0.01, rng_for("co"), substep_multiple=16)
    coarse = coarsen_path(fine, 4)
    assert coarse.times.size < fine.times.size
    assert coarse.jump_dzeta.size == fine.jump_dzeta.size
    # kept points carry identical values
    kept = np.searchsorted(fine.times, coarse.times)
    np.testing.assert_allclose(fine.zeta[kept], coarse.zeta, atol=0)
    np.testing.assert_allclose(fine.eta[kept], coarse.eta, atol=0)


# -- epoch coefficients --------------------------------------------------------------------


def test_epoch_coefficients_zero_eta():
    spec = _single_map(zeta=(LevyComponentSpec(drift=0.5, gaussian_var=0.2),))
    _, A, B = segment_coefficient_batch(spec, 0, 0.01, 500, rng_for("c0"))
    np.testing.assert_allclose(B, 0.0, atol=1e-15)
    assert np.all(A > 0)


def test_epoch_coefficient_transform_matches_upsilon():
    # pure drift: E[A^theta] = r / (r + mu theta)
    spec = _single_map(
        zeta=(LevyComponentSpec(drift=0.7),),
        eta=(LevyComponentSpec(drift=0.3),),
        epoch_rates=(2.0,),
    )
    _, A, B = segment_coefficient_batch(spec, 0, 0.01, 300_000, rng_for("c1"))
    theta = 1.3
    vals = A**theta
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert z_gap(vals.mean(), se, 2.0 / (2.0 + 0.7 * theta)) < 3
    # B = 0.3 (1 - e^{-0.7 T}) / 0.7 exactly for drift-only components
    T = -np.log(A) / 0.7
    np.testing.assert_allclose(B, 0.3 * (1 - np.exp(-0.7 * T)) / 0.7, atol=2e-3)


def test_epoch_coefficient_refinement_order(two_state_map):
    """Halving the step twice should shrink the B-discretization error by
    about 4x (strong order 1/2 against a much finer reference)."""
    rng = rng_for("c2")
    n = 4000
    rmse = {}
    for step in (0.08, 0.02, 0.005):
        r = rng_for("c2", str(step))
        _, A, B = segment_coefficient_batch(two_state_map, 0, step, n, r, force_next=1)
        rmse[step] = (A, B)
    # self-convergence: compare distributional moments across refinements
    m_coarse = rmse[0.08][1].std()
    m_fine = rmse[0.005][1].std()
    assert abs(m_coarse - m_fine) / m_fine < 0.2


def test_derived_spec_structure(two_state_map):
    derived = derived_mmlifs(two_state_map, 0.02)
    assert derived.is_derived
    assert derived.source_map is two_state_map
    np.testing.assert_allclose(derived.chain.P, [[0.0, 1.0], [1.0, 0.0]], atol=1e-14)
    from mmgou.errors import MomentExplosionError

    with pytest.raises(MomentExplosionError):
        derived.cramer_matrix(1.0)


def test_bridge_identity_mc(two_state_map):
    sol = mg.solve_kappa(two_state_map)
    derived = derived_mmlifs(two_state_map, 0.01)
    est = mg.cramer_transform(derived, sol.kappa, mc=150_000, rng=rng_for("br"))
    closed = mg.upsilon(two_state_map, sol.kappa)
    z = np.abs(est.estimate - closed) / np.where(est.stderr > 0, est.stderr, np.inf)
    assert float(z.max()) < 3.0


# -- exponential functional -------------------------------------------------------------------


def test_vinf_zero_eta_is_zero():
    spec = _single_map(zeta=(LevyComponentSpec(drift=0.5, gaussian_var=0.2),))
    s = mg.sample_exponential_functional(spec, 0, 1e-6, 0.01, rng_for("vi0"))
    assert s.value == 0.0


def test_vinf_requires_transience():
    spec = _single_map(zeta=(LevyComponentSpec(drift=-0.5),), eta=(LevyComponentSpec(gaussian_var=1.0),))
    with pytest.raises(ContractViolationError):
        mg.sample_exponential_functional(spec, 0, 1e-6, 0.01, rng_for("vi1"))


def test_vinf_shot_noise_exact_mean():
    # unit jumps in eta at epochs, zeta_t = t: V at epochs = 1 + sum e^{-Gamma(k)}
    spec = _single_map(
        zeta=(LevyComponentSpec(drift=1.0),),
        eta=(LevyComponentSpec(),),
        switch_jumps={(0, 0): SwitchJump(mg.point_mass(0.0), mg.point_mass(1.0))},
    )
    for route in ("discrete", "continuous"):
        vals = np.array(
            [
                mg.sample_exponential_functional(spec, 0, 1e-4, 0.05, rng_for("vi2", route, k), route).value
                for k in range(4000)
            ]
        )
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert z_gap(vals.mean(), se, 2.0) < 3.5, route


def test_vinf_routes_agree_two_state(two_state_map):
    n = 30_000
    vd, _, _, _ = vinf_discrete_batch(two_state_map, np.zeros(n, dtype=int), 1e-3, 0.02, rng_for("vr1"))
    vc, _, _, capped = vinf_continuous_batch(two_state_map, np.zeros(n, dtype=int), 1e-3, 0.02, rng_for("vr2"))
    assert not capped.any()
    assert ks_2samp(vd, vc).statistic < 0.02


def test_vinf_classical_moments():
    # classical single-state case: zeta_t = lam t, eta Brownian var s2:
    # stationary V ~ Normal(0, s2 / (2 lam)); second moments must match
    lam, s2 = 0.8, 0.6
    spec = _single_map(
        zeta=(LevyComponentSpec(drift=lam),),
        eta=(LevyComponentSpec(gaussian_var=s2),),
        epoch_rates=(1.5,),
    )
    vd, _, _, _ = vinf_discrete_batch(spec, np.zeros(60_000, dtype=int), 1e-4, 0.005, rng_for("vm"))
    target = s2 / (2 * lam)
    sq = vd**2
    se = sq.std(ddof=1) / math.sqrt(sq.size)
    assert z_gap(sq.mean(), se, target) < 3.5
    vc, _, _, _ = vinf_continuous_batch(spec, np.zeros(60_000, dtype=int), 1e-4, 0.005, rng_for("vm2"))
    sq2 = vc**2
    se2 = sq2.std(ddof=1) / math.sqrt(sq2.size)
    assert z_gap(sq2.mean(), se2, target) < 3.5


def test_vinf_forward_epoch_oracle(two_state_map):
    """V at late jump epochs of a long forward path matches the sampler."""
    rng = rng_for("vo")
    epoch_vals = []
    for _ in range(1500):
        p = mg.simulate_map_path(two_state_map, mg.stationary_law(two_state_map.chain), 25.0, 0.02, rng)
        V = mg.mmgou_path(p, 0.0).V
        for (idx, i, j, zz, ze) in p.marks:
            if p.times[idx] > 12.0 and j == 0:
                epoch_vals.append(V[idx])
    epoch_vals = np.array(epoch_vals)
    vd, _, _, _ = vinf_discrete_batch(two_state_map, np.zeros(30_000, dtype=int), 1e-3, 0.02, rng_for("vo2"))
    assert ks_2samp(epoch_vals, vd).statistic < 0.025


# -- degeneracy probe ---------------------------------------------------------------------


def test_degeneracy_zero_eta():
    spec = _single_map(zeta=(LevyComponentSpec(drift=0.5, gaussian_var=0.1),))
    probe = mg.degeneracy_probe(spec, 200, rng_for("dg0"))
    assert probe.degenerate_suspect
    np.testing.assert_allclose(probe.conditional_means, 0.0, atol=1e-12)


def test_degeneracy_constructed_model_recovers_constants():
    # point-mass construction: zero in-segment components, all movement in
    # switch jumps with Z_eta^{ij} = c_j e^{Z_zeta^{ij}} - c_i, which makes
    # V_t = c_{J_t} exactly (and the epoch coefficients exact point masses)
    ss = mg.StateSpace(("a", "b"))
    c = np.array([3.0, -1.0])
    z = math.log(2.0)  # every switch discounts by 1/2, so the walk is transient
    spec = mg.MapSpec(
        chain=mg.CtmcSpec(ss, [[-1.0, 1.0], [2.0, -2.0]]),
        zeta=(LevyComponentSpec(), LevyComponentSpec()),
        eta=(LevyComponentSpec(), LevyComponentSpec()),
        switch_jumps={
            (0, 1): SwitchJump(mg.point_mass(z), mg.point_mass(c[1] * math.exp(z) - c[0])),
            (1, 0): SwitchJump(mg.point_mass(z), mg.point_mass(c[0] * math.exp(z) - c[1])),
        },
    )
    probe = mg.degeneracy_probe(spec, 400, rng_for("dg1"), tol=1e-10, step=0.01)
    assert probe.degenerate_suspect
    np.testing.assert_allclose(probe.conditional_means, c, atol=1e-6)


def test_degeneracy_drift_construction_near_degenerate():
    # the drift-based degenerate construction (eta drift c_j b_j, jumps
    # c_j - c_i) is exactly degenerate in continuous time; through the
    # discretized sampler it shows O(step) residual variance but still
    # recovers the constants
    ss = mg.StateSpace(("a", "b"))
    b = np.array([1.0, 2.0])
    c = np.array([3.0, -1.0])
    spec = mg.MapSpec(
        chain=mg.CtmcSpec(ss, [[-1.0, 1.0], [2.0, -2.0]]),
        zeta=(LevyComponentSpec(drift=b[0]), LevyComponentSpec(drift=b[1])),
        eta=(LevyComponentSpec(drift=c[0] * b[0]), LevyComponentSpec(drift=c[1] * b[1])),
        switch_jumps={
            (0, 1): SwitchJump(mg.point_mass(0.0), mg.point_mass(c[1] - c[0])),
            (1, 0): SwitchJump(mg.point_mass(0.0), mg.point_mass(c[0] - c[1])),
        },
    )
    probe = mg.degeneracy_probe(spec, 400, rng_for("dg1b"), tol=1e-10, step=0.002)
    np.testing.assert_allclose(probe.conditional_means, c, atol=5e-3)
    assert probe.conditional_vars.max() < 1e-4


def test_degeneracy_generic_model_not_flagged(two_state_map):
    probe = mg.degeneracy_probe(two_state_map, 400, rng_for("dg2"))
    assert not probe.degenerate_suspect
