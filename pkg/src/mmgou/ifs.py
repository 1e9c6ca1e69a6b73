"""Simulation engine for the modulated affine recursion R_n = A_n R_{n-1} + B_n.

Forward iteration, stationary (perpetuity) sampling along the reversed chain,
exponentially tilted iteration, return-time embedding, occupation-measure
comparison, sign-switch statistics, and the heuristic degeneracy and lattice
checks.

Stationary sampling walks the reversed chain explicitly rather than relying
on forward burn-in: the perpetuity truncation error after k terms is bounded
in L^{theta*} by mu_{theta*}(B) rho(theta*)^k / (1 - rho(theta*)), which gives
an a priori depth for a requested tolerance.  Forward burn-in is retained as
an independent cross-check in the tests.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .chains import DtmcSpec, stationary_law, time_reverse_dtmc
from .errors import (
    ContractViolationError,
    InapplicableError,
    MomentExplosionError,
    SpecError,
)
from .kernels import CoefficientLaw, MmlifsSpec
from .mcstats import batch_means, batch_ratio, choice_rows
from .rng import stream
from .spectral import CramerSystem, cramer_system, drift, dual_cramer, rho, solve_kappa

MAX_TRUNCATION_DEPTH = 100_000


# -- paths -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IfsPath:
    """One trajectory: states, coefficients, values, products, log-walk."""

    states: np.ndarray  # (n+1,)
    A: np.ndarray  # (n,)
    B: np.ndarray  # (n,)
    R: np.ndarray  # (n+1,)
    Pi: np.ndarray  # (n+1,), Pi[0] = 1
    S: np.ndarray  # (n+1,), S[k] = log|Pi[k]|
    weights: Optional[np.ndarray] = None  # per-step importance weights

    def __post_init__(self):
        n = self.A.size
        if not (self.states.size == n + 1 and self.R.size == n + 1):
            raise SpecError("inconsistent path lengths")

    @property
    def n_steps(self) -> int:
        return self.A.size


def _draw_pair_coeffs(spec: MmlifsSpec, prev, cur, rng, laws=None):
    """Draw (A, B) for each sample from the kernel of its transition."""
    prev = np.asarray(prev)
    cur = np.asarray(cur)
    A = np.empty(prev.size)
    B = np.empty(prev.size)
    pairs = sorted(set(zip(prev.tolist(), cur.tolist())))
    for i, j in pairs:
        mask = (prev == i) & (cur == j)
        law = spec.law(i, j) if laws is None else laws[(i, j)]
        a, b = law.sample(rng, int(mask.sum()))
        A[mask] = a
        B[mask] = b
    return A, B


def forward_iterate(
    spec: MmlifsSpec, R0: float, i0, n: int, rng: np.random.Generator
) -> IfsPath:
    """Exact forward recursion with coefficients drawn per realized transition."""
    if n < 1:
        raise SpecError("n must be >= 1")
    i0 = _resolve_initial(spec, i0, rng)
    P_cum = np.cumsum(spec.chain.P, axis=1)
    states = np.empty(n + 1, dtype=int)
    states[0] = i0
    A = np.empty(n)
    B = np.empty(n)
    R = np.empty(n + 1)
    R[0] = R0
    for k in range(n):
        u = rng.random()
        j = int(np.searchsorted(P_cum[states[k]], u, side="right"))
        a, b = spec.law(states[k], j).sample(rng, 1)
        states[k + 1] = j
        A[k], B[k] = a[0], b[0]
        R[k + 1] = A[k] * R[k] + B[k]
    Pi = np.concatenate([[1.0], np.cumprod(A)])
    S = np.log(np.abs(Pi))
    return IfsPath(states, A, B, R, Pi, S)


def _resolve_initial(spec: MmlifsSpec, i0, rng) -> int:
    if hasattr(i0, "probabilities"):
        return int(rng.choice(spec.n_states, p=i0.probabilities))
    if isinstance(i0, (int, np.integer)) and 0 <= int(i0) < spec.n_states:
        return int(i0)
    return spec.chain.states.index(i0)


def forward_batch(
    spec: MmlifsSpec,
    R0,
    states0: np.ndarray,
    n: int,
    rng: np.random.Generator,
    record: bool = False,
):
    """Vectorized forward recursion over many paths.

    Returns (states, R) after n steps, plus per-step histories of states and
    of the log-walk S when ``record`` is set.
    """
    m = states0.size
    P_cum = np.cumsum(spec.chain.P, axis=1)
    states = states0.astype(int).copy()
    R = np.broadcast_to(np.asarray(R0, dtype=float), (m,)).copy()
    S = np.zeros(m)
    hist_states = [states.copy()] if record else None
    hist_S = [S.copy()] if record else None
    for _ in range(n):
        u = rng.random(m)
        nxt = choice_rows(P_cum, states, u)
        A, B = _draw_pair_coeffs(spec, states, nxt, rng)
        R = A * R + B
        S = S + np.log(np.abs(A))
        states = nxt
        if record:
            hist_states.append(states.copy())
            hist_S.append(S.copy())
    if record:
        return states, R, np.array(hist_states), np.array(hist_S)
    return states, R


# -- stationary sampling -----------------------------------------------------------


@dataclass(frozen=True)
class StationarySample:
    """One stationary draw with its truncation diagnostics."""

    state: int
    value: float
    truncation_depth: int
    residual_bound: float
    capped: bool = False


@dataclass(frozen=True)
class _StationaryContext:
    reversed_chain: DtmcSpec
    theta_star: float
    rho_star: float
    mu_b: float

    def depth_for(self, tol: float) -> tuple[int, float, bool]:
        """Smallest k with mu_b rho*^k / (1 - rho*) <= tol, capped."""
        scale = self.mu_b / (1.0 - self.rho_star)
        if scale <= tol:
            return 1, scale * self.rho_star, False
        k = math.ceil(math.log(tol / scale) / math.log(self.rho_star))
        k = max(int(k), 1)
        if k > MAX_TRUNCATION_DEPTH:
            bound = scale * self.rho_star ** MAX_TRUNCATION_DEPTH
            return MAX_TRUNCATION_DEPTH, bound, True
        return k, scale * self.rho_star ** k, False


@functools.lru_cache(maxsize=None)
def _kappa_cached(spec: MmlifsSpec):
    return solve_kappa(spec)


@functools.lru_cache(maxsize=None)
def _stationary_context(spec: MmlifsSpec) -> _StationaryContext:
    if drift(spec, 0.0) >= 0:
        raise ContractViolationError(
            "stationary sampling requires a contractive model (drift at 0 < 0)"
        )
    solution = _kappa_cached(spec)
    if solution.found:
        theta_star = min(solution.kappa, 1.0) / 2.0
    else:
        theta_star = 0.5
    while theta_star > 1e-6:
        try:
            r = rho(spec, theta_star)
        except MomentExplosionError:
            theta_star /= 2.0
            continue
        if r < 1.0:
            break
        theta_star /= 2.0
    else:
        raise ContractViolationError("no theta* with rho(theta*) < 1 found")
    r_star = rho(spec, theta_star)
    if spec.is_derived:
        pilot = stream(0xB0, "stationary-pilot")
        mu_b = max(
            float((np.abs(law.sample(pilot, 4096)[1]) ** theta_star).mean())
            for _, law in sorted(spec.kernel.items())
        )
    else:
        mu_b = max(
            law.intercept_abs_moment(theta_star) for law in spec.kernel.values()
        )
    reversed_chain = time_reverse_dtmc(spec.chain, stationary_law(spec.chain))
    return _StationaryContext(reversed_chain, theta_star, r_star, max(mu_b, 1e-300))


def sample_stationary_batch(
    spec: MmlifsSpec, states0: np.ndarray, tol: float, rng: np.random.Generator
):
    """Vectorized perpetuity draws along the reversed chain.

    Walks the reversed chain from each start state, drawing the coefficient
    pair of the original transition (previous -> current) at every backward
    step and accumulating sum_k Pi(k) B_{-k} to the context-implied depth.
    Returns (values, depth, residual_bound, capped).
    """
    ctx = _stationary_context(spec)
    depth, bound, capped = ctx.depth_for(tol)
    P_hat_cum = np.cumsum(ctx.reversed_chain.P, axis=1)
    cur = states0.astype(int).copy()
    m = cur.size
    Pi = np.ones(m)
    val = np.zeros(m)
    for _ in range(depth):
        u = rng.random(m)
        prev = choice_rows(P_hat_cum, cur, u)
        A, B = _draw_pair_coeffs(spec, prev, cur, rng)
        val += Pi * B
        Pi *= A
        cur = prev
    return val, depth, bound, capped


def sample_stationary(
    spec: MmlifsSpec, i, tol: float, rng: np.random.Generator
) -> StationarySample:
    """One draw from the stationary law conditioned on the current state ``i``."""
    i = _resolve_initial(spec, i, rng)
    vals, depth, bound, capped = sample_stationary_batch(
        spec, np.array([i]), tol, rng
    )
    return StationarySample(i, float(vals[0]), depth, bound, capped)


# -- tilted iteration -----------------------------------------------------------


def _tilted_laws(spec: MmlifsSpec, theta: float, mc_fallback: bool):
    laws = {}
    weights_needed = False
    for (i, j), law in sorted(spec.kernel.items()):
        tilted = None if getattr(law, "mc_only", False) else law.tilted(theta)
        if tilted is None:
            if not mc_fallback:
                raise SpecError(
                    f"no exact tilt for transition {(i, j)}; rerun with mc_fallback=True "
                    "to emit importance weights"
                )
            weights_needed = True
            laws[(i, j)] = None
        else:
            laws[(i, j)] = tilted
    return laws, weights_needed


def tilted_forward(
    spec: MmlifsSpec,
    theta: float,
    n: int,
    i,
    rng: np.random.Generator,
    system: Optional[CramerSystem] = None,
    mc_fallback: bool = False,
) -> IfsPath:
    """Forward path under the exponentially tilted law.

    The chain moves with the normalized tilted matrix; given a transition, the
    coefficient pair is reweighted by |A|^theta (exact within the family where
    possible: Gaussian log-multipliers shift their mean by theta * variance,
    atomic laws reweight their atoms).  Transitions without an exact tilt draw
    from the base law and emit the importance weight |A|^theta / E|A|^theta.
    """
    if system is None:
        system = cramer_system(spec, theta)
    laws, weights_needed = _tilted_laws(spec, theta, mc_fallback)
    P_cum = np.cumsum(system.P_norm, axis=1)
    state = _resolve_initial(spec, i, rng)
    states = np.empty(n + 1, dtype=int)
    states[0] = state
    A = np.empty(n)
    B = np.empty(n)
    R = np.empty(n + 1)
    R[0] = 0.0
    weights = np.ones(n) if weights_needed else None
    for k in range(n):
        u = rng.random()
        j = int(np.searchsorted(P_cum[states[k]], u, side="right"))
        law = laws[(states[k], j)]
        if law is None:
            base = spec.law(states[k], j)
            a, b = base.sample(rng, 1)
            weights[k] = abs(a[0]) ** theta / base.abs_mgf(theta)
        else:
            a, b = law.sample(rng, 1)
        A[k], B[k] = a[0], b[0]
        states[k + 1] = j
        R[k + 1] = A[k] * R[k] + B[k]
    Pi = np.concatenate([[1.0], np.cumprod(A)])
    S = np.log(np.abs(Pi))
    return IfsPath(states, A, B, R, Pi, S, weights)


def tilted_log_walk_batch(
    spec: MmlifsSpec,
    theta: float,
    n: int,
    states0: np.ndarray,
    rng: np.random.Generator,
    system: Optional[CramerSystem] = None,
):
    """Vectorized tilted walk returning final (states, S_n); exact tilts only."""
    if system is None:
        system = cramer_system(spec, theta)
    laws, weights_needed = _tilted_laws(spec, theta, mc_fallback=False)
    P_cum = np.cumsum(system.P_norm, axis=1)
    states = states0.astype(int).copy()
    m = states.size
    S = np.zeros(m)
    for _ in range(n):
        u = rng.random(m)
        nxt = choice_rows(P_cum, states, u)
        A, _ = _draw_pair_coeffs(spec, states, nxt, rng, laws=laws)
        S += np.log(np.abs(A))
        states = nxt
    return states, S


# -- return-time embedding ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CycleSample:
    """I.i.d. cycle coefficients (A, B) and return times tau for one anchor state."""

    state: int
    A: np.ndarray
    B: np.ndarray
    tau: np.ndarray


def return_time_embed(
    spec: MmlifsSpec, i, n_cycles: int, rng: np.random.Generator
) -> CycleSample:
    """Compose the affine maps over excursions from state i back to i.

    Over one cycle the recursion composes to R_tau = A_cyc R_0 + B_cyc with
    A_cyc the product of step multipliers and B_cyc the accumulated intercept.
    """
    i = _resolve_initial(spec, i, rng)
    P_cum = np.cumsum(spec.chain.P, axis=1)
    m = n_cycles
    states = np.full(m, i, dtype=int)
    A_cyc = np.ones(m)
    B_cyc = np.zeros(m)
    tau = np.zeros(m, dtype=int)
    active = np.ones(m, dtype=bool)
    guard = 0
    while active.any():
        guard += 1
        if guard > 10_000_000 // max(m, 1) + 100_000:
            raise SpecError("return-time embedding did not terminate")
        idx = np.flatnonzero(active)
        u = rng.random(idx.size)
        nxt = choice_rows(P_cum, states[idx], u)
        A, B = _draw_pair_coeffs(spec, states[idx], nxt, rng)
        A_cyc[idx] = A * A_cyc[idx]
        B_cyc[idx] = A * B_cyc[idx] + B
        tau[idx] += 1
        states[idx] = nxt
        done = nxt == i
        active[idx[done]] = False
    return CycleSample(i, A_cyc, B_cyc, tau)


# -- occupation measure -------------------------------------------------------------


@dataclass(frozen=True)
class OccupationComparison:
    cycle_estimate: float
    cycle_stderr: float
    direct_estimate: float
    direct_stderr: float

    def agree_within(self, k_sigma: float = 3.0) -> bool:
        gap = abs(self.cycle_estimate - self.direct_estimate)
        return gap <= k_sigma * math.hypot(self.cycle_stderr, self.direct_stderr)


def occupation_check(
    spec: MmlifsSpec,
    i,
    h: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n_cycles: int,
    rng: np.random.Generator,
    tol: float = 1e-8,
) -> OccupationComparison:
    """Compare the cycle form of the stationary mean of h with a direct estimate.

    Cycle estimate: start at i with a stationary value, accumulate h over the
    excursion up to (not including) the return to i, normalize by the mean
    return time.  Direct estimate: h under stationary draws with chain-law
    initial states.
    """
    i = _resolve_initial(spec, i, rng)
    m = n_cycles
    R, _, _, _ = sample_stationary_batch(spec, np.full(m, i), tol, rng)
    P_cum = np.cumsum(spec.chain.P, axis=1)
    states = np.full(m, i, dtype=int)
    acc = np.asarray(h(states, R), dtype=float).copy()
    tau = np.ones(m, dtype=int)
    active = np.ones(m, dtype=bool)
    while active.any():
        idx = np.flatnonzero(active)
        u = rng.random(idx.size)
        nxt = choice_rows(P_cum, states[idx], u)
        A, B = _draw_pair_coeffs(spec, states[idx], nxt, rng)
        R[idx] = A * R[idx] + B
        states[idx] = nxt
        returned = nxt == i
        cont = idx[~returned]
        acc[cont] += np.asarray(h(states[cont], R[cont]), dtype=float)
        tau[cont] += 1
        active[idx[returned]] = False
    cycle_est, cycle_se = batch_ratio(acc, tau.astype(float))

    law = stationary_law(spec.chain)
    states_d = rng.choice(spec.n_states, size=m, p=law.probabilities)
    R_d, _, _, _ = sample_stationary_batch(spec, states_d, tol, rng)
    vals = np.asarray(h(states_d, R_d), dtype=float)
    direct_est, direct_se = batch_means(vals)
    return OccupationComparison(cycle_est, cycle_se, direct_est, direct_se)


# -- sign-switch statistics ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SignChainStats:
    mean_sigma: float
    sigma_stderr: float
    n_sigma: int
    occupancy: np.ndarray  # (n_states, 2): columns (sign -1, sign +1)
    pi_theta: np.ndarray
    positivity_ok: bool


def _pair_sign_neg_probs(spec: MmlifsSpec):
    probs = {}
    for (i, j), law in spec.kernel.items():
        probs[(i, j)] = law.prob_negative()
    return probs


def sign_chain_stats(
    spec: MmlifsSpec, kappa: float, n: int, rng: np.random.Generator
) -> SignChainStats:
    """Statistics of the sign-switch time along the reversed tilted walk.

    sigma is the first step at which the running product of multipliers along
    the reversed tilted chain is nonnegative again.  Each replicate starts
    from the tilted stationary law with a positive sign and runs one full
    switch cycle, so the n sigma draws are i.i.d. and the concatenated cycle
    steps are stationary for the (state, sign) chain, giving the occupancy
    estimate for free.
    """
    if spec.prob_a_negative() <= 0.0:
        raise InapplicableError(
            "sign-switch statistics need P[A < 0] > 0; this model has none"
        )
    system = cramer_system(spec, kappa)
    dual = dual_cramer(system)
    # Tilting preserves the sign law given the transition (the weight |A|^kappa
    # is sign-blind), so only the dual transition probabilities are tilted.
    sign_neg = _pair_sign_neg_probs(spec)
    P_cum = np.cumsum(dual.P_norm, axis=1)
    states = rng.choice(spec.n_states, size=n, p=system.pi_theta).astype(int)
    signs = np.ones(n, dtype=int)
    sigma = np.zeros(n, dtype=int)
    occupancy = np.zeros((spec.n_states, 2))
    pos_seen = np.zeros((spec.n_states, spec.n_states, 2), dtype=bool)
    active = np.ones(n, dtype=bool)
    guard = 0
    while active.any():
        guard += 1
        if guard > 1_000_000:
            raise SpecError("sign-switch cycles did not terminate")
        idx = np.flatnonzero(active)
        u = rng.random(idx.size)
        nxt = choice_rows(P_cum, states[idx], u)
        flip = np.empty(idx.size, dtype=int)
        for i, j in sorted(set(zip(states[idx].tolist(), nxt.tolist()))):
            mask = (states[idx] == i) & (nxt == j)
            # dual transition i -> j carries the original (j -> i) coefficient law
            p_neg = sign_neg[(j, i)]
            draws = rng.random(int(mask.sum())) < p_neg
            flip[mask] = np.where(draws, -1, 1)
            pos_seen[i, j, 0] |= bool(draws.any())
            pos_seen[i, j, 1] |= bool((~draws).any())
        signs[idx] = signs[idx] * flip
        states[idx] = nxt
        sigma[idx] += 1
        occupancy[:, 0] += np.bincount(
            states[idx][signs[idx] < 0], minlength=spec.n_states
        )
        occupancy[:, 1] += np.bincount(
            states[idx][signs[idx] > 0], minlength=spec.n_states
        )
        active[idx[signs[idx] > 0]] = False
    occupancy /= occupancy.sum()
    mean_sigma, sigma_se = batch_means(sigma.astype(float))
    support = dual.P_norm > 0
    positivity_ok = bool(np.all(pos_seen[support]))
    return SignChainStats(
        mean_sigma, sigma_se, int(n), occupancy, system.pi_theta, positivity_ok
    )


# -- heuristic structure checks --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DegeneracyVerdict:
    degenerate: bool
    residual: float
    constants: Optional[np.ndarray]


def nondegeneracy_check(
    spec: MmlifsSpec, n: int, rng: np.random.Generator
) -> DegeneracyVerdict:
    """Least-squares test for constants c with A c_{xi_1} + B = c_{xi_0} a.s.

    Heuristic: verdict "degenerate" when the sampled residual sup-norm is
    below 1e-9.  Gates warnings, not failures.
    """
    if n < spec.n_states + 1:
        raise SpecError("need at least |S| + 1 samples")
    law = stationary_law(spec.chain)
    P_cum = np.cumsum(spec.chain.P, axis=1)
    s0 = rng.choice(spec.n_states, size=n, p=law.probabilities)
    s1 = choice_rows(P_cum, s0, rng.random(n))
    A, B = _draw_pair_coeffs(spec, s0, s1, rng)
    X = np.zeros((n, spec.n_states))
    np.add.at(X, (np.arange(n), s1), A)
    np.add.at(X, (np.arange(n), s0), -1.0)
    c, *_ = np.linalg.lstsq(X, -B, rcond=None)
    residual = float(np.abs(X @ c + B).max())
    degenerate = residual < 1e-9
    return DegeneracyVerdict(degenerate, residual, c if degenerate else None)


@dataclass(frozen=True)
class LatticeVerdict:
    lattice_suspect: bool
    span: Optional[float]
    detail: str


def _approx_gcd(values, tol: float) -> Optional[float]:
    g = 0.0
    for v in sorted(abs(float(x)) for x in values):
        if v <= tol:
            continue
        a, b = max(g, v), min(g, v)
        while b > tol:
            a, b = b, math.fmod(a, b)
            if a < b:
                a, b = b, a
        g = a
    if g <= 100 * tol:
        return None
    return g


def lattice_check(
    spec: MmlifsSpec, n: int, rng: np.random.Generator, tol: float = 1e-9
) -> LatticeVerdict:
    """Heuristic arithmetic-support test for the log-multiplier walk.

    Looks for a span d and per-state offsets a_i such that every sampled
    log|A| on transition (i, j) lies in a_j - a_i + d Z.  Sampled values are
    deduplicated per transition; a transition showing many distinct values is
    treated as continuous (verdict "nonlattice").
    """
    if any(
        getattr(law, "joint_atoms", None) is None
        and not getattr(law, "mc_only", False)
        and law.log_abs.is_continuous()
        for law in spec.kernel.values()
    ):
        return LatticeVerdict(False, None, "a log-multiplier family is continuous")
    per_pair = {}
    per_draw = max(n // max(len(spec.kernel), 1), 8)
    for (i, j), law in sorted(spec.kernel.items()):
        A, _ = law.sample(rng, per_draw)
        vals = np.unique(np.round(np.log(np.abs(A)), 12))
        if vals.size > 64:
            return LatticeVerdict(False, None, f"transition {(i, j)} looks continuous")
        per_pair[(i, j)] = vals
    # Assign tree potentials from representatives, then require every residual
    # value to sit on a common arithmetic progression.
    n_states = spec.n_states
    a = np.full(n_states, np.nan)
    a[0] = 0.0
    edges = sorted(per_pair)
    for _ in range(n_states):
        for (i, j) in edges:
            if not math.isnan(a[i]) and math.isnan(a[j]):
                a[j] = a[i] + per_pair[(i, j)][0]
            elif not math.isnan(a[j]) and math.isnan(a[i]):
                a[i] = a[j] - per_pair[(i, j)][0]
    if np.isnan(a).any():
        return LatticeVerdict(False, None, "support graph not connected in sample")
    residuals = []
    for (i, j), vals in per_pair.items():
        residuals.extend(vals - (a[j] - a[i]))
    residuals = np.array(residuals)
    if np.all(np.abs(residuals) <= tol):
        return LatticeVerdict(
            True, 0.0, "log-multipliers equal state-offset differences exactly"
        )
    span = _approx_gcd(residuals, tol)
    if span is None:
        return LatticeVerdict(False, None, "no common span found")
    ratios = residuals / span
    if np.all(np.abs(ratios - np.round(ratios)) <= 1e-6):
        return LatticeVerdict(True, float(span), "arithmetic support detected")
    return LatticeVerdict(False, None, "residuals do not fit a single span")
