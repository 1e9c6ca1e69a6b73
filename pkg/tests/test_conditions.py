import math

import numpy as np
import pytest

import mmgou as mg
from mmgou.conditions import check_conditions_continuous, check_conditions_discrete
from mmgou.errors import SpecError
from mmgou.levy import LevyComponentSpec

from conftest import rng_for


def test_discrete_all_verified(kesten1d):
    sol = mg.solve_kappa(kesten1d)
    report = check_conditions_discrete(kesten1d, sol, rng_for("c1"))
    assert [c.name for c in report.conditions] == ["B1", "B2", "B3", "B4"]
    assert report.all_verified()
    assert report["B1"].evidence["kappa"] == pytest.approx(2.0, abs=1e-8)


def test_discrete_no_tail_index_violates_b1():
    spec = mg.MmlifsSpec(
        chain=mg.DtmcSpec(mg.StateSpace(("s",)), [[1.0]]),
        kernel={(0, 0): mg.CoefficientLaw(mg.point_mass(math.log(0.5)), 0.0, mg.normal(0, 1))},
    )
    sol = mg.solve_kappa(spec)
    report = check_conditions_discrete(spec, sol, rng_for("c2"))
    assert report["B1"].status == "violated"
    assert report["B2"].status == "undecidable-heuristic"


def test_discrete_lattice_flagged():
    spec = mg.MmlifsSpec(
        chain=mg.DtmcSpec(mg.StateSpace(("s",)), [[1.0]]),
        kernel={
            (0, 0): mg.CoefficientLaw(
                mg.two_point(math.log(0.25), 0.5, math.log(2.0)), 0.0, mg.normal(0, 1)
            )
        },
    )
    sol = mg.solve_kappa(spec)
    assert sol.found
    report = check_conditions_discrete(spec, sol, rng_for("c3"))
    assert report["B3"].status == "undecidable-heuristic"
    assert report["B3"].evidence["lattice_suspect"]


def test_discrete_b4_violated_for_zero_intercept():
    spec = mg.MmlifsSpec(
        chain=mg.DtmcSpec(mg.StateSpace(("s",)), [[1.0]]),
        kernel={(0, 0): mg.CoefficientLaw(mg.normal(-0.25, 0.25), 0.0, mg.point_mass(0.0))},
    )
    sol = mg.solve_kappa(spec)
    report = check_conditions_discrete(spec, sol, rng_for("c4"))
    assert report["B4"].status == "violated"
    assert report["B3"].status == "verified"  # continuous log-multiplier family


def test_discrete_b2_violated_at_domain_edge():
    # log|A| exponential(rate): domain edge at the rate; kappa can sit on it
    spec = mg.MmlifsSpec(
        chain=mg.DtmcSpec(mg.StateSpace(("s",)), [[1.0]]),
        kernel={
            (0, 0): mg.CoefficientLaw(
                # E e^{theta G} = r/(r - theta) with r = 1.2; mean -1/1.2 < 0,
                # and rho(theta) = r/(r-theta) reaches 1 only as theta -> 0+,
                # so no root exists strictly inside; root search caps at edge
                mg.exponential(1.2),
                0.0,
                mg.normal(0, 1),
            )
        },
    )
    sol = mg.solve_kappa(spec)
    # rho(theta) = 1.2/(1.2-theta) > 1 for theta > 0: drift at 0 positive
    assert sol.status == "non-contractive"


def test_continuous_all_verified():
    # single-state Brownian model with kappa = 1 (the root of psi(-kappa) = 0
    # does not depend on the epoch rate); epoch rate 2 leaves room for the
    # segment-sup moment bound psi(1 + eps) < rate
    spec = mg.MapSpec(
        chain=mg.CtmcSpec(mg.StateSpace(("s",)), [[0.0]]),
        zeta=(LevyComponentSpec(drift=0.5, gaussian_var=1.0),),
        eta=(LevyComponentSpec(gaussian_var=1.0),),
        epoch_rates=(2.0,),
    )
    sol = mg.solve_kappa(spec)
    assert abs(sol.kappa - 1.0) < 1e-8
    report = check_conditions_continuous(spec, sol, epsilon=0.05)
    assert [c.name for c in report.conditions] == ["A1", "A2", "A3", "A4"]
    tail = {c.name: c.status for c in report.conditions}
    assert tail == {
        "A1": "verified",
        "A2": "verified",
        "A3": "verified",
        "A4": "verified",
    }


def test_continuous_rate_one_brownian_fails_a4_surrogate(brownian1d_map):
    # at epoch rate 1 the surrogate is violated for every eps > 0:
    # psi(1 + eps) = 1 + 1.5 eps + eps^2 / 2 >= 1 = rate
    sol = mg.solve_kappa(brownian1d_map)
    report = check_conditions_continuous(brownian1d_map, sol, epsilon=0.05)
    assert report["A4"].status == "violated"


def test_continuous_a4_violated_when_variance_large():
    # psi_j((kappa v 1) + eps) exceeds the epoch rate for a hot state
    spec = mg.MapSpec(
        chain=mg.CtmcSpec(mg.StateSpace(("s",)), [[0.0]]),
        zeta=(LevyComponentSpec(drift=0.5, gaussian_var=1.0),),
        eta=(LevyComponentSpec(gaussian_var=1.0),),
        epoch_rates=(1.0,),
    )
    sol = mg.solve_kappa(spec)
    report = check_conditions_continuous(spec, sol, epsilon=1.0)
    # at order (1 v kappa) + 1 = 2 + ...: psi(2) = 1 + 2 = 3 >= 1
    assert report["A4"].status == "violated"
    assert "problems" in report["A4"].evidence


def test_continuous_a2_and_domain(two_state_map):
    sol = mg.solve_kappa(two_state_map)
    report = check_conditions_continuous(two_state_map, sol, epsilon=0.05)
    assert report["A2"].status == "verified"
    assert report["A2"].evidence["domain_margin"] > 0.1
    assert report["A4"].status == "verified"


def test_continuous_epsilon_guard(two_state_map):
    sol = mg.solve_kappa(two_state_map)
    with pytest.raises(SpecError):
        check_conditions_continuous(two_state_map, sol, epsilon=0.0)
