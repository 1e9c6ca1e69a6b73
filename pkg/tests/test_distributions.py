import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mmgou as mg
from mmgou.distributions import DistributionSpec
from mmgou.errors import MomentExplosionError, SpecError

from conftest import rng_for

ALL_SPECS = [
    mg.point_mass(1.5),
    mg.point_mass(0.0),
    mg.two_point(-0.4, 0.3, 1.2),
    mg.uniform(-1.0, 2.0),
    mg.normal(0.3, 0.7),
    mg.lognormal(-0.2, 0.5),
    mg.lognormal(-0.2, 0.5).negate(),
    mg.exponential(1.7),
    mg.negated_exponential(2.5),
]


def test_parameter_validation():
    with pytest.raises(SpecError):
        mg.uniform(2.0, 1.0)
    with pytest.raises(SpecError):
        mg.normal(0.0, 0.0)
    with pytest.raises(SpecError):
        mg.exponential(-1.0)
    with pytest.raises(SpecError):
        mg.two_point(0.0, 1.5, 1.0)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family)
def test_mgf_at_zero_is_one(spec):
    assert spec.mgf(0.0) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family)
def test_mgf_matches_monte_carlo(spec):
    dom = spec.transform_domain()
    w = min(max(dom.lo + 0.3, -0.5), 0.0) if dom.hi < 0.5 else min(dom.hi - 0.7, 0.5)
    if not spec.mgf_finite(w):
        w = 0.0
    draws = np.asarray(spec.sample(rng_for("mgf", spec.family, w), 400_000))
    vals = np.exp(w * draws)
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - spec.mgf(w)) < 4 * se + 1e-12


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family)
def test_mgf_prime_matches_finite_difference(spec):
    dom = spec.transform_domain()
    w = -0.4 if dom.hi <= 0.5 else 0.4
    if not (spec.mgf_finite(w - 1e-5) and spec.mgf_finite(w + 1e-5)):
        pytest.skip("w too close to the domain edge")
    fd = (spec.mgf(w + 1e-5) - spec.mgf(w - 1e-5)) / 2e-5
    assert spec.mgf_prime(w) == pytest.approx(fd, rel=1e-5, abs=1e-7)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family)
def test_moments_match_monte_carlo(spec):
    draws = np.asarray(spec.sample(rng_for("mom", spec.family), 400_000))
    for p in (0.5, 1.0, 2.3):
        vals = np.abs(draws) ** p
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(vals.mean() - spec.abs_moment(p)) < 4 * se + 1e-12
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - spec.mean()) < 4 * se + 1e-12
    vals2 = draws**2
    se2 = vals2.std(ddof=1) / math.sqrt(draws.size)
    assert abs(vals2.mean() - spec.second_moment()) < 4 * se2 + 1e-12


def test_domain_reporting_is_consistent():
    # inside the reported domain the transform never raises; at an open
    # boundary (and beyond) it raises deterministically
    e = mg.exponential(2.0)
    for w in (-5.0, 0.0, 1.9):
        e.mgf(w)
    for w in (2.0, 2.5):
        with pytest.raises(MomentExplosionError):
            e.mgf(w)
    ln = mg.lognormal(0.0, 1.0)
    ln.mgf(0.0)  # closed boundary: finite
    ln.mgf(-3.0)
    with pytest.raises(MomentExplosionError):
        ln.mgf(0.1)


def test_lognormal_mgf_against_independent_quadrature():
    # same transform through a different variable: integrate e^{wz} against
    # the density in z rather than against the Gaussian in log z
    from scipy import integrate
    from scipy.stats import lognorm

    ln = mg.lognormal(-1.0, 0.25)
    w = -0.3
    dist = lognorm(s=math.sqrt(0.25), scale=math.exp(-1.0))
    val, _ = integrate.quad(lambda z: math.exp(w * z) * dist.pdf(z), 0, np.inf)
    assert ln.mgf(w) == pytest.approx(val, rel=1e-9)
    val_p, _ = integrate.quad(lambda z: z * math.exp(w * z) * dist.pdf(z), 0, np.inf)
    assert ln.mgf_prime(w) == pytest.approx(val_p, rel=1e-8)


def test_negate_roundtrip_and_law():
    for spec in ALL_SPECS:
        neg = spec.negate()
        assert neg.negate() == spec
        assert neg.mean() == pytest.approx(-spec.mean(), abs=1e-12)
        assert neg.abs_moment(1.7) == pytest.approx(spec.abs_moment(1.7), rel=1e-12)
        w = -0.2
        if spec.mgf_finite(-w) and neg.mgf_finite(w):
            assert neg.mgf(w) == pytest.approx(spec.mgf(-w), rel=1e-10)


def test_tilt_exactness():
    n = mg.normal(-0.25, 0.25)
    t = n.tilt(2.0)
    assert t.params == (0.25, 0.25)  # mean shift by theta * var
    tp = mg.two_point(-1.0, 0.5, 1.0).tilt(1.0)
    w1, w2 = 0.5 * math.exp(-1.0), 0.5 * math.exp(1.0)
    assert tp.params[1] == pytest.approx(w1 / (w1 + w2), rel=1e-12)
    assert mg.exponential(2.0).tilt(0.5) == mg.exponential(1.5)
    assert mg.uniform(0.0, 1.0).tilt(1.0) is None
    with pytest.raises(MomentExplosionError):
        mg.exponential(2.0).tilt(2.0)


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(["normal", "uniform", "two_point", "exponential"]),
    st.floats(-0.8, 0.8),
    st.floats(-0.8, 0.8),
)
def test_mgf_log_convexity(family, w1, w2):
    spec = {
        "normal": mg.normal(0.1, 0.4),
        "uniform": mg.uniform(-0.5, 1.5),
        "two_point": mg.two_point(-0.3, 0.4, 0.9),
        "exponential": mg.exponential(1.2),
    }[family]
    mid = 0.5 * (w1 + w2)
    lhs = math.log(spec.mgf(mid))
    rhs = 0.5 * (math.log(spec.mgf(w1)) + math.log(spec.mgf(w2)))
    assert lhs <= rhs + 1e-12


def test_atoms_and_flags():
    assert mg.point_mass(0.0).is_zero()
    assert not mg.point_mass(0.1).is_zero()
    assert mg.two_point(0.0, 0.5, 1.0).atoms() == ((0.0, 0.5), (1.0, 0.5))
    assert mg.normal(0.0, 1.0).atoms() is None
    assert mg.normal(0.0, 1.0).is_continuous()
    assert not mg.point_mass(1.0).is_continuous()
