"""Tail analysis for Markov-modulated generalized Ornstein-Uhlenbeck processes
and Markov-modulated linear iterated function systems."""

from .chains import (
    CtmcPath,
    CtmcSpec,
    DtmcSpec,
    StateSpace,
    StationaryLaw,
    simulate_ctmc_path,
    stationary_law,
    time_reverse_ctmc,
    time_reverse_dtmc,
)
from .distributions import (
    DistributionSpec,
    exponential,
    lognormal,
    negated_exponential,
    normal,
    point_mass,
    two_point,
    uniform,
)
from .kernels import CoefficientLaw, MmlifsSpec
from .levy import (
    LevyComponentSpec,
    MapSpec,
    SwitchJump,
    dual_map,
    laplace_exponent,
    sample_bivariate_increment,
    sample_levy_increment,
)
from .spectral import (
    CramerSystem,
    TailIndexSolution,
    cramer_system,
    cramer_transform,
    drift,
    dual_cramer,
    geometric_sampling_transform,
    map_laplace_transform,
    matrix_exponent,
    mc_upsilon,
    perron,
    rho,
    solve_kappa,
    upsilon,
)
from .ifs import (
    IfsPath,
    StationarySample,
    forward_iterate,
    lattice_check,
    nondegeneracy_check,
    occupation_check,
    return_time_embed,
    sample_stationary,
    sign_chain_stats,
    tilted_forward,
)
from .gou import (
    ExpFunctionalSample,
    MapPath,
    MmgouPath,
    degeneracy_probe,
    derived_mmlifs,
    jump_epoch_coefficients,
    mmgou_path,
    sample_exponential_functional,
    simulate_map_path,
    ul_from_zeta_eta,
)
from .tails import GoldieConstants, HillEstimate, TailReport, empirical_plateau, goldie_constant, hill
from .conditions import ConditionReport, check_conditions_continuous, check_conditions_discrete

__version__ = "0.1.0"
