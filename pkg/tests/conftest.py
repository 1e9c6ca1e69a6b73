"""Shared test models and statistical helpers."""

import math

import numpy as np
import pytest

import mmgou as mg
from mmgou.levy import LevyComponentSpec, SwitchJump
from mmgou.rng import stream


def z_gap(a, se_a, b, se_b=0.0):
    """Gap between two estimates in combined standard errors."""
    return abs(a - b) / math.hypot(se_a, se_b)


@pytest.fixture(scope="session")
def kesten1d():
    """Single-state recursion, log|A| ~ N(-1/4, 1/4), B ~ N(0, 1); kappa = 2."""
    return mg.MmlifsSpec(
        chain=mg.DtmcSpec(mg.StateSpace(("s",)), [[1.0]]),
        kernel={
            (0, 0): mg.CoefficientLaw(
                log_abs=mg.normal(-0.25, 0.25), intercept=mg.normal(0.0, 1.0)
            )
        },
    )


@pytest.fixture(scope="session")
def mixed_sign1d():
    """As kesten1d but with P[A < 0] = 1/2."""
    return mg.MmlifsSpec(
        chain=mg.DtmcSpec(mg.StateSpace(("s",)), [[1.0]]),
        kernel={
            (0, 0): mg.CoefficientLaw(
                mg.normal(-0.25, 0.25), 0.5, mg.normal(0.0, 1.0)
            )
        },
    )


@pytest.fixture(scope="session")
def two_state():
    """Two-regime worked model: P = [[.7,.3],[.6,.4]], Gaussian log-multipliers.

    Diagonal transitions contract harder so that cycle products keep finite
    variance at twice the tail index (needed for 3-sigma Monte Carlo bands).
    """
    ss = mg.StateSpace(("calm", "storm"))
    return mg.MmlifsSpec(
        chain=mg.DtmcSpec(ss, [[0.7, 0.3], [0.6, 0.4]]),
        kernel={
            (0, 0): mg.CoefficientLaw(mg.normal(-0.45, 0.2), 0.0, mg.normal(0.0, 1.0)),
            (0, 1): mg.CoefficientLaw(mg.normal(-0.05, 0.2), 0.0, mg.normal(0.0, 1.0)),
            (1, 0): mg.CoefficientLaw(mg.normal(-0.10, 0.25), 0.0, mg.normal(0.0, 1.0)),
            (1, 1): mg.CoefficientLaw(mg.normal(-0.50, 0.2), 0.0, mg.normal(0.0, 1.0)),
        },
    )


@pytest.fixture(scope="session")
def brownian1d_map():
    """Single-state continuous model, drift 1/2, variance 1, epoch rate 1; kappa = 1."""
    return mg.MapSpec(
        chain=mg.CtmcSpec(mg.StateSpace(("s",)), [[0.0]]),
        zeta=(LevyComponentSpec(drift=0.5, gaussian_var=1.0),),
        eta=(LevyComponentSpec(gaussian_var=1.0),),
        epoch_rates=(1.0,),
    )


@pytest.fixture(scope="session")
def single_map_jumpy():
    """Single-state continuous model with a self-epoch switch jump.

    psi(-2 kappa) stays below the epoch rate, so kappa-tilted Monte Carlo has
    finite variance.
    """
    return mg.MapSpec(
        chain=mg.CtmcSpec(mg.StateSpace(("s",)), [[0.0]]),
        zeta=(LevyComponentSpec(drift=0.4, gaussian_var=0.4),),
        eta=(LevyComponentSpec(drift=0.1, gaussian_var=0.5),),
        switch_jumps={(0, 0): SwitchJump(mg.point_mass(0.05), mg.point_mass(0.1))},
        epoch_rates=(2.0,),
    )


def _two_state_map(epoch_rates=None):
    ss = mg.StateSpace(("calm", "storm"))
    return mg.MapSpec(
        chain=mg.CtmcSpec(ss, [[-2.0, 2.0], [3.0, -3.0]]),
        zeta=(LevyComponentSpec(0.25, 0.5), LevyComponentSpec(0.35, 0.45)),
        eta=(LevyComponentSpec(0.1, 0.5), LevyComponentSpec(-0.1, 0.3)),
        brownian_cov=(0.1, -0.05),
        switch_jumps={
            (0, 1): SwitchJump(mg.point_mass(0.1), mg.point_mass(0.1)),
            (1, 0): SwitchJump(mg.point_mass(-0.05), mg.point_mass(-0.05)),
        },
        epoch_rates=epoch_rates,
    )


@pytest.fixture(scope="session")
def two_state_map():
    """Two-regime continuous model; kappa ~ 1.45 with safe second moments."""
    return _two_state_map()


@pytest.fixture(scope="session")
def two_state_map_fast_epochs():
    """Same law as two_state_map but with extra zero-jump self epochs
    (rates 4 and 6), which shortens segments for discretization-heavy runs."""
    return _two_state_map(epoch_rates=(4.0, 6.0))


@pytest.fixture(scope="session")
def jumpy_map():
    """Two-regime model with compound-Poisson jumps in both components."""
    ss = mg.StateSpace(("calm", "storm"))
    return mg.MapSpec(
        chain=mg.CtmcSpec(ss, [[-1.0, 1.0], [2.0, -2.0]]),
        zeta=(
            LevyComponentSpec(0.4, 0.3, 0.5, mg.two_point(-0.3, 0.5, 0.4)),
            LevyComponentSpec(0.6, 0.2, 0.3, mg.normal(0.1, 0.04)),
        ),
        eta=(
            LevyComponentSpec(0.1, 0.4, 0.4, mg.normal(0.0, 0.25)),
            LevyComponentSpec(-0.2, 0.3),
        ),
        brownian_cov=(0.2, -0.1),
        switch_jumps={
            (0, 1): SwitchJump(mg.point_mass(0.3), mg.point_mass(-0.2)),
            (1, 0): SwitchJump(mg.normal(0.0, 0.01), mg.point_mass(0.1)),
        },
    )


def rng_for(*key):
    return stream(0xACCE17, *key)


def exact_martingale_se(spec, system, n_steps, start, n_paths):
    """Exact standard errors of mean(e^{kappa S_n} v_{xi_n}) per step.

    The second moment is (M(2 kappa)^n v^2)_start, computable whenever
    2 kappa lies in the moment domain; the sample estimator is far too
    skewed for its own variance estimate to be trusted.
    """
    kappa = system.theta
    M2 = mg.cramer_transform(spec, 2 * kappa)
    v2 = system.v**2
    out = []
    vec = v2.copy()
    for _ in range(n_steps):
        vec = M2 @ vec
        var = vec[start] - system.v[start] ** 2
        out.append(math.sqrt(max(var, 0.0) / n_paths))
    return out
