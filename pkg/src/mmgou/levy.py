"""Per-state Levy components, switch-jump kernels, and the full modulated model.

A model couples an irreducible continuous-time chain J with a pair of additive
components (zeta, eta).  While J sits in state j, (zeta, eta) accrues
independent increments with per-state drift, Brownian part (correlated across
the two components through ``brownian_cov``), and compound-Poisson jumps
(independent across the two components).  When J jumps from i to j, an extra
jump pair (Z_zeta, Z_eta) drawn from the switch kernel for (i, j) is added.

``epoch_rates`` optionally speeds up the epoch clock beyond the switching
rates: epochs then arrive at rate r_i >= q_i and stay in state i with the
leftover probability.  The law of (J, zeta, eta) is unchanged when the extra
epochs carry zero jumps; the epoch-level quantities (first-epoch transform,
induced affine coefficients) do see the extra epochs.  This is what gives
single-state models a nontrivial epoch structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .chains import CtmcSpec, StationaryLaw, stationary_law, time_reverse_ctmc
from .distributions import ZERO, DistributionSpec
from .errors import MomentExplosionError, NumericalError, SpecError


@dataclass(frozen=True)
class LevyComponentSpec:
    """One additive component: drift + Brownian variance + compound Poisson."""

    drift: float = 0.0
    gaussian_var: float = 0.0
    cp_rate: float = 0.0
    cp_jump: DistributionSpec = ZERO

    def __post_init__(self):
        if self.gaussian_var < 0:
            raise SpecError("gaussian_var must be nonnegative")
        if self.cp_rate < 0:
            raise SpecError("cp_rate must be nonnegative")

    @property
    def finite_variation_zero_drift(self) -> bool:
        return self.gaussian_var == 0.0 and self.drift == 0.0

    def laplace_exponent(self, w: float) -> float:
        """psi(w) = b w + var w^2 / 2 + rate (m_jump(w) - 1)."""
        val = self.drift * w + 0.5 * self.gaussian_var * w * w
        if self.cp_rate > 0:
            val += self.cp_rate * (self.cp_jump.mgf(w) - 1.0)
        return val

    def laplace_exponent_prime(self, w: float) -> float:
        val = self.drift + self.gaussian_var * w
        if self.cp_rate > 0:
            val += self.cp_rate * self.cp_jump.mgf_prime(w)
        return val

    def exponent_finite(self, w: float) -> bool:
        return self.cp_rate == 0 or self.cp_jump.mgf_finite(w)

    def mean_rate(self) -> float:
        return self.drift + self.cp_rate * self.cp_jump.mean()

    def variance_rate(self) -> float:
        return self.gaussian_var + self.cp_rate * self.cp_jump.second_moment()

    def negate(self) -> "LevyComponentSpec":
        return LevyComponentSpec(
            -self.drift, self.gaussian_var, self.cp_rate, self.cp_jump.negate()
        )


def compound_poisson_sums(
    jump: DistributionSpec, counts: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Sum of ``counts[k]`` i.i.d. jumps for each k (vectorized over k)."""
    counts = np.asarray(counts)
    total = int(counts.sum())
    out = np.zeros(counts.shape, dtype=float)
    if total == 0:
        return out
    draws = np.asarray(jump.sample(rng, total), dtype=float)
    idx = np.repeat(np.arange(counts.size), counts.ravel())
    out.ravel()[:] = np.bincount(idx, weights=draws, minlength=counts.size)
    return out


def sample_levy_increment(
    spec: LevyComponentSpec, dt, rng: np.random.Generator
) -> np.ndarray | float:
    """Exact-in-law increment over dt (scalar or array of time spans)."""
    dt_arr = np.asarray(dt, dtype=float)
    if np.any(dt_arr <= 0):
        raise SpecError("dt must be positive")
    out = spec.drift * dt_arr
    if spec.gaussian_var > 0:
        out = out + np.sqrt(spec.gaussian_var * dt_arr) * rng.standard_normal(dt_arr.shape)
    if spec.cp_rate > 0:
        counts = rng.poisson(spec.cp_rate * dt_arr)
        out = out + compound_poisson_sums(spec.cp_jump, np.atleast_1d(counts), rng).reshape(
            dt_arr.shape
        )
    return float(out) if np.isscalar(dt) else out


def sample_bivariate_increment(
    zeta_spec: LevyComponentSpec,
    eta_spec: LevyComponentSpec,
    cov: float,
    dt,
    rng: np.random.Generator,
):
    """Joint increment: correlated Brownian parts, independent jump parts."""
    dt_arr = np.asarray(dt, dtype=float)
    if np.any(dt_arr <= 0):
        raise SpecError("dt must be positive")
    _check_cov(zeta_spec.gaussian_var, eta_spec.gaussian_var, cov)
    vz, ve = zeta_spec.gaussian_var, eta_spec.gaussian_var
    dz = zeta_spec.drift * dt_arr
    de = eta_spec.drift * dt_arr
    if vz > 0:
        g1 = rng.standard_normal(dt_arr.shape)
        dz = dz + np.sqrt(vz * dt_arr) * g1
        if ve > 0:
            resid = ve - cov * cov / vz
            g2 = rng.standard_normal(dt_arr.shape)
            de = de + (cov / math.sqrt(vz)) * np.sqrt(dt_arr) * g1
            if resid > 0:
                de = de + np.sqrt(resid * dt_arr) * g2
    elif ve > 0:
        de = de + np.sqrt(ve * dt_arr) * rng.standard_normal(dt_arr.shape)
    if zeta_spec.cp_rate > 0:
        counts = rng.poisson(zeta_spec.cp_rate * dt_arr)
        dz = dz + compound_poisson_sums(zeta_spec.cp_jump, np.atleast_1d(counts), rng).reshape(
            dt_arr.shape
        )
    if eta_spec.cp_rate > 0:
        counts = rng.poisson(eta_spec.cp_rate * dt_arr)
        de = de + compound_poisson_sums(eta_spec.cp_jump, np.atleast_1d(counts), rng).reshape(
            dt_arr.shape
        )
    if np.isscalar(dt):
        return float(dz), float(de)
    return dz, de


def _check_cov(vz: float, ve: float, cov: float) -> None:
    bound = math.sqrt(vz * ve)
    if abs(cov) > bound + 1e-12:
        raise SpecError(f"|brownian_cov|={abs(cov)} violates Cauchy-Schwarz bound {bound}")


@dataclass(frozen=True)
class SwitchJump:
    """Joint law of the extra (zeta, eta) jump attached to one transition.

    Either independent marginals, or an explicit joint atom list
    ((z_zeta, z_eta, prob), ...) for exact-dependence tests.
    """

    zeta: DistributionSpec = ZERO
    eta: DistributionSpec = ZERO
    joint_atoms: Optional[tuple] = None

    def __post_init__(self):
        if self.joint_atoms is not None:
            atoms = tuple(
                (float(a), float(b), float(w)) for a, b, w in self.joint_atoms
            )
            if not atoms or any(w < 0 for _, _, w in atoms):
                raise SpecError("joint atoms need nonnegative weights")
            total = sum(w for _, _, w in atoms)
            if abs(total - 1.0) > 1e-12:
                raise SpecError("joint atom weights must sum to 1")
            object.__setattr__(self, "joint_atoms", atoms)

    def sample(self, rng: np.random.Generator, size=None):
        if self.joint_atoms is None:
            return self.zeta.sample(rng, size), self.eta.sample(rng, size)
        zs = np.array([a for a, _, _ in self.joint_atoms])
        es = np.array([b for _, b, _ in self.joint_atoms])
        ws = np.array([w for _, _, w in self.joint_atoms])
        idx = rng.choice(len(ws), size=size, p=ws)
        if size is None:
            return float(zs[idx]), float(es[idx])
        return zs[idx], es[idx]

    def zeta_mgf(self, w: float) -> float:
        if self.joint_atoms is None:
            return self.zeta.mgf(w)
        return float(sum(wt * math.exp(w * a) for a, _, wt in self.joint_atoms))

    def zeta_mgf_prime(self, w: float) -> float:
        if self.joint_atoms is None:
            return self.zeta.mgf_prime(w)
        return float(sum(wt * a * math.exp(w * a) for a, _, wt in self.joint_atoms))

    def zeta_mgf_finite(self, w: float) -> bool:
        if self.joint_atoms is None:
            return self.zeta.mgf_finite(w)
        return True

    def eta_abs_moment(self, p: float) -> float:
        if self.joint_atoms is None:
            return self.eta.abs_moment(p)
        return float(sum(wt * abs(b) ** p for _, b, wt in self.joint_atoms))

    def is_zero(self) -> bool:
        if self.joint_atoms is None:
            return self.zeta.is_zero() and self.eta.is_zero()
        return all(a == 0.0 and b == 0.0 for a, b, _ in self.joint_atoms)

    def negate(self) -> "SwitchJump":
        if self.joint_atoms is None:
            return SwitchJump(self.zeta.negate(), self.eta.negate())
        return SwitchJump(joint_atoms=tuple((-a, -b, w) for a, b, w in self.joint_atoms))


NO_JUMP = SwitchJump()


@dataclass(frozen=True, eq=False)
class MapSpec:
    """Full modulated model: chain, per-state components, covariances, switch jumps."""

    chain: CtmcSpec
    zeta: tuple
    eta: tuple
    brownian_cov: tuple = None
    switch_jumps: Mapping = field(default_factory=dict)
    epoch_rates: Optional[tuple] = None

    def __post_init__(self):
        n = self.chain.n_states
        zeta = tuple(self.zeta)
        eta = tuple(self.eta)
        if len(zeta) != n or len(eta) != n:
            raise SpecError("zeta and eta must provide one component per state")
        cov = self.brownian_cov
        cov = tuple(0.0 for _ in range(n)) if cov is None else tuple(float(c) for c in cov)
        if len(cov) != n:
            raise SpecError("brownian_cov must provide one value per state")
        for j in range(n):
            _check_cov(zeta[j].gaussian_var, eta[j].gaussian_var, cov[j])
        jumps = dict(self.switch_jumps)
        allowed = set(zip(*np.nonzero(self._epoch_kernel_support(n))))
        for pair in jumps:
            if tuple(pair) not in allowed:
                raise SpecError(f"switch jump declared for impossible transition {pair}")
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "brownian_cov", cov)
        object.__setattr__(self, "switch_jumps", jumps)
        if self.epoch_rates is not None:
            rates = tuple(float(r) for r in self.epoch_rates)
            if len(rates) != n:
                raise SpecError("epoch_rates must provide one rate per state")
            q = self.chain.exit_rates
            if any(r < q[j] - 1e-12 or r <= 0 for j, r in enumerate(rates)):
                raise SpecError("epoch_rates must be positive and >= the exit rates")
            object.__setattr__(self, "epoch_rates", rates)

    def _epoch_kernel_support(self, n: int) -> np.ndarray:
        support = np.array(self.chain.Q) > 0
        np.fill_diagonal(support, True)  # self epochs may carry jumps when enabled
        return support

    @property
    def n_states(self) -> int:
        return self.chain.n_states

    def epoch_rate(self, i: int) -> float:
        if self.epoch_rates is not None:
            return self.epoch_rates[i]
        return float(self.chain.exit_rates[i])

    def epoch_kernel(self) -> np.ndarray:
        """Row-stochastic next-state kernel at epochs (diagonal = self epochs)."""
        n = self.n_states
        K = np.array(self.chain.Q, dtype=float)
        np.fill_diagonal(K, 0.0)
        rates = np.array([self.epoch_rate(i) for i in range(n)])
        if np.any(rates <= 0):
            raise SpecError(
                "state with zero epoch rate: set epoch_rates to discretize this model"
            )
        K = K / rates[:, None]
        np.fill_diagonal(K, 1.0 - K.sum(axis=1))
        return K

    def switch_jump(self, i: int, j: int) -> SwitchJump:
        return self.switch_jumps.get((i, j), NO_JUMP)

    def stationary_chain_law(self) -> StationaryLaw:
        return stationary_law(self.chain)


def laplace_exponent(spec: LevyComponentSpec, w: float) -> float:
    """Module-level alias of LevyComponentSpec.laplace_exponent."""
    return spec.laplace_exponent(w)


def dual_map(spec: MapSpec) -> MapSpec:
    """Time-reversed model.

    The chain is reversed against its stationary law; each per-state component
    is negated (drift and jump laws flip sign, Gaussian parts are symmetric);
    the Brownian covariance is unchanged since both components flip; and the
    switch jump on a reversed transition i -> j is the negated jump of the
    original transition j -> i.  This realizes reversed increments in law;
    the sign convention is exercised by a distributional oracle test.
    """
    law = stationary_law(spec.chain)
    chain = time_reverse_ctmc(spec.chain, law)
    jumps = {}
    for (i, j), jump in spec.switch_jumps.items():
        jumps[(j, i)] = jump.negate()
    return MapSpec(
        chain=chain,
        zeta=tuple(c.negate() for c in spec.zeta),
        eta=tuple(c.negate() for c in spec.eta),
        brownian_cov=spec.brownian_cov,
        switch_jumps=jumps,
        epoch_rates=spec.epoch_rates,
    )


def mc_additive_endpoint(
    spec: MapSpec, initial, t: float, n: int, rng: np.random.Generator
):
    """n exact-in-law draws of (J_t, zeta_t, eta_t) from a fixed start.

    Evolves (state, zeta, eta) segment by segment with aggregated increments;
    no grid is involved, so the endpoint law is exact.
    """
    if t <= 0:
        raise SpecError("t must be positive")
    if isinstance(initial, StationaryLaw):
        state = rng.choice(spec.n_states, size=n, p=initial.probabilities).astype(int)
    else:
        idx = initial if isinstance(initial, (int, np.integer)) else spec.chain.states.index(initial)
        state = np.full(n, int(idx), dtype=int)
    z = np.zeros(n)
    e = np.zeros(n)
    t_rem = np.full(n, float(t))
    active = np.ones(n, dtype=bool)
    kernel = spec.epoch_kernel() if max(
        spec.epoch_rate(i) for i in range(spec.n_states)
    ) > 0 else None
    guard = 0
    while active.any():
        guard += 1
        if guard > 10_000_000:
            raise NumericalError("endpoint evolution did not terminate")
        for i in range(spec.n_states):
            rows = np.flatnonzero(active & (state == i))
            if rows.size == 0:
                continue
            r = spec.epoch_rate(i)
            if r <= 0:  # single absorbing-clock state: finish in one segment
                dz, de = sample_bivariate_increment(
                    spec.zeta[i], spec.eta[i], spec.brownian_cov[i], t_rem[rows], rng
                )
                z[rows] += dz
                e[rows] += de
                active[rows] = False
                continue
            hold = rng.exponential(1.0 / r, rows.size)
            seg = np.minimum(hold, t_rem[rows])
            dz, de = sample_bivariate_increment(
                spec.zeta[i], spec.eta[i], spec.brownian_cov[i], seg, rng
            )
            z[rows] += dz
            e[rows] += de
            switching = hold < t_rem[rows]
            done = rows[~switching]
            active[done] = False
            cont = rows[switching]
            t_rem[cont] -= hold[switching]
            if cont.size:
                nxt = rng.choice(spec.n_states, size=cont.size, p=kernel[i])
                for j in np.unique(nxt):
                    sel = cont[nxt == j]
                    jump = spec.switch_jump(i, int(j))
                    if not jump.is_zero():
                        zj, ej = jump.sample(rng, sel.size)
                        z[sel] += np.atleast_1d(zj)
                        e[sel] += np.atleast_1d(ej)
                    state[sel] = j
    return state, z, e


# -- vectorized first-epoch sampling ------------------------------------------


def sample_first_epoch(
    spec: MapSpec,
    i: int,
    n: int,
    rng: np.random.Generator,
    force_next: Optional[int] = None,
):
    """Draw (T_1, next_state, d_zeta, d_eta) for n independent first epochs
    from state i.  Exact in law: the holding time is exponential with the
    epoch rate, the next state is drawn from the epoch kernel independently,
    the segment increment aggregates drift + Gaussian + compound Poisson over
    the holding time, and the switch jump for the realized transition is added.
    """
    r = spec.epoch_rate(i)
    if r <= 0:
        raise SpecError("state has zero epoch rate; provide epoch_rates")
    T = rng.exponential(1.0 / r, n)
    dz, de = sample_bivariate_increment(
        spec.zeta[i], spec.eta[i], spec.brownian_cov[i], T, rng
    )
    if force_next is None:
        kernel = spec.epoch_kernel()[i]
        nxt = rng.choice(spec.n_states, size=n, p=kernel)
    else:
        nxt = np.full(n, int(force_next), dtype=int)
    for j in np.unique(nxt):
        jump = spec.switch_jump(i, int(j))
        if jump.is_zero():
            continue
        mask = nxt == j
        zj, ej = jump.sample(rng, int(mask.sum()))
        dz[mask] += zj
        de[mask] += ej
    return T, nxt, dz, de
