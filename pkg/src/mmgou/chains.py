"""Finite-state Markov chains: specifications, stationary laws, time reversal,
and continuous-time path simulation.

Conventions: a discrete chain is given by a row-stochastic matrix P, a
continuous chain by an intensity matrix Q with zero row sums.  All chains are
required to be irreducible (checked on the positive-entry support graph);
periodicity is allowed.  Specs are immutable after validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError, NumericalError, SpecError, StructuralError

ROW_SUM_ATOL = 1e-12
FIXED_POINT_ATOL = 1e-10


def frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateSpace:
    """Ordered set of distinct state labels."""

    labels: tuple

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise SpecError("state space must be nonempty")
        if len(set(labels)) != len(labels):
            raise SpecError(f"duplicate state labels: {labels}")

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise SpecError(f"unknown state label {label!r}") from None


def _reachable(support: np.ndarray, start: int) -> set[int]:
    """Depth-first reachability on a boolean adjacency matrix."""
    seen = {start}
    stack = [start]
    while stack:
        node = stack.pop()
        for nxt in np.flatnonzero(support[node]):
            if nxt not in seen:
                seen.add(int(nxt))
                stack.append(int(nxt))
    return seen


def check_irreducible(support: np.ndarray, states: StateSpace) -> None:
    """Raise StructuralError naming the unreachable block if not strongly connected."""
    n = support.shape[0]
    fwd = _reachable(support, 0)
    if len(fwd) != n:
        missing = [states.labels[i] for i in range(n) if i not in fwd]
        raise StructuralError(f"states unreachable from {states.labels[0]!r}: {missing}")
    bwd = _reachable(support.T, 0)
    if len(bwd) != n:
        missing = [states.labels[i] for i in range(n) if i not in bwd]
        raise StructuralError(f"states that cannot reach {states.labels[0]!r}: {missing}")


@dataclass(frozen=True, eq=False)
class DtmcSpec:
    """Discrete-time chain over ``states`` with row-stochastic matrix P."""

    states: StateSpace
    P: np.ndarray
    row_sum_atol: float = field(default=ROW_SUM_ATOL, repr=False)

    def __post_init__(self):
        P = frozen_array(self.P)
        object.__setattr__(self, "P", P)
        n = len(self.states)
        if P.shape != (n, n):
            raise SpecError(f"P must be {n}x{n}, got {P.shape}")
        if np.any(P < 0):
            raise SpecError("P has negative entries")
        if np.max(np.abs(P.sum(axis=1) - 1.0)) > self.row_sum_atol:
            raise SpecError("rows of P must sum to 1")
        check_irreducible(P > 0, self.states)

    @property
    def n_states(self) -> int:
        return len(self.states)


@dataclass(frozen=True, eq=False)
class CtmcSpec:
    """Continuous-time chain with intensity matrix Q (zero row sums)."""

    states: StateSpace
    Q: np.ndarray
    row_sum_atol: float = field(default=ROW_SUM_ATOL, repr=False)

    def __post_init__(self):
        Q = frozen_array(self.Q)
        object.__setattr__(self, "Q", Q)
        n = len(self.states)
        if Q.shape != (n, n):
            raise SpecError(f"Q must be {n}x{n}, got {Q.shape}")
        off = Q.copy()
        np.fill_diagonal(off, 0.0)
        if np.any(off < 0):
            raise SpecError("off-diagonal intensities must be nonnegative")
        if np.max(np.abs(Q.sum(axis=1))) > self.row_sum_atol:
            raise SpecError("rows of Q must sum to 0")
        if n > 1:
            check_irreducible(off > 0, self.states)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def exit_rates(self) -> np.ndarray:
        return -np.diag(self.Q)

    def embedded_matrix(self) -> np.ndarray:
        """Jump-chain matrix q_ij / q_i (single-state chains have no jumps)."""
        q = self.exit_rates
        if np.any(q <= 0):
            raise StructuralError("embedded chain undefined: some state has exit rate 0")
        P = self.Q / q[:, None]
        np.fill_diagonal(P, 0.0)
        return P


@dataclass(frozen=True, eq=False)
class StationaryLaw:
    """Strictly positive probability vector, fixed point of its chain."""

    states: StateSpace
    probabilities: np.ndarray

    def __post_init__(self):
        p = frozen_array(self.probabilities)
        object.__setattr__(self, "probabilities", p)
        if p.shape != (len(self.states),):
            raise SpecError("probability vector has wrong length")
        if np.any(p <= 0):
            raise SpecError("stationary law of an irreducible chain must be positive")
        if abs(p.sum() - 1.0) > ROW_SUM_ATOL:
            raise SpecError("probabilities must sum to 1")

    def __getitem__(self, label) -> float:
        return float(self.probabilities[self.states.index(label)])


@dataclass(frozen=True, eq=False)
class CtmcPath:
    """Jump epochs T_0 = 0 < T_1 < ... and the states visited at them."""

    times: np.ndarray
    states: np.ndarray
    horizon: float

    def __post_init__(self):
        t = frozen_array(self.times)
        s = frozen_array(self.states, dtype=int)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)
        if t.shape != s.shape or t.ndim != 1 or t[0] != 0.0:
            raise SpecError("path must start at T_0 = 0 with one state per epoch")
        if np.any(np.diff(t) <= 0):
            raise SpecError("jump epochs must be strictly increasing")
        if np.any(s[1:] == s[:-1]):
            raise SpecError("consecutive visited states must differ")

    def state_at(self, t: float) -> int:
        idx = int(np.searchsorted(self.times, t, side="right") - 1)
        return int(self.states[idx])

    def occupancy(self) -> np.ndarray:
        """Fraction of [0, horizon] spent in each state."""
        n = int(self.states.max()) + 1
        bounds = np.append(self.times, self.horizon)
        durations = np.diff(bounds)
        occ = np.bincount(self.states, weights=durations, minlength=n)
        return occ / self.horizon


def _fixed_point_solve(A: np.ndarray) -> np.ndarray:
    """Solve x A = 0, sum(x) = 1 by a direct linear solve (normalization row
    replaces the last equation); falls back to power iteration when singular."""
    n = A.shape[0]
    M = A.T.copy()
    M[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        x = np.linalg.solve(M, b)
    except np.linalg.LinAlgError:
        x = None
    if x is None or not np.all(np.isfinite(x)):
        # Power-iteration fallback for ill-conditioned systems.
        x = np.ones(n) / n
        T = np.eye(n) + A / (np.abs(A).max() + 1.0)
        for _ in range(200_000):
            x_new = x @ T
            x_new /= x_new.sum()
            if np.abs(x_new - x).max() < 1e-15:
                x = x_new
                break
            x = x_new
    return x / x.sum()


def stationary_law(spec: DtmcSpec | CtmcSpec) -> StationaryLaw:
    """Unique stationary law of an irreducible chain (pi P = pi or pi Q = 0)."""
    if isinstance(spec, DtmcSpec):
        A = spec.P - np.eye(spec.n_states)
    elif isinstance(spec, CtmcSpec):
        A = spec.Q
    else:
        raise TypeError(f"unsupported chain spec {type(spec)!r}")
    pi = _fixed_point_solve(A)
    residual = np.abs(pi @ A).max()
    if residual > FIXED_POINT_ATOL:
        raise NumericalError(
            f"stationary solve residual {residual:.3e} exceeds {FIXED_POINT_ATOL}"
        )
    return StationaryLaw(spec.states, pi)


def _check_stationary_for(spec_matrix_residual: float, what: str) -> None:
    if spec_matrix_residual > FIXED_POINT_ATOL:
        raise ContractViolationError(
            f"law is not stationary for the given {what} (residual {spec_matrix_residual:.3e})"
        )


def time_reverse_dtmc(spec: DtmcSpec, law: StationaryLaw) -> DtmcSpec:
    """Reversed chain with entries pi_j p_ji / pi_i; involution up to 1e-12."""
    pi = law.probabilities
    _check_stationary_for(np.abs(pi @ spec.P - pi).max(), "transition matrix")
    R = (spec.P.T * pi[None, :]) / pi[:, None]
    R /= R.sum(axis=1, keepdims=True)
    return DtmcSpec(spec.states, R)


def time_reverse_ctmc(spec: CtmcSpec, law: StationaryLaw) -> CtmcSpec:
    """Reversed intensities q^_ij = pi_j q_ji / pi_i (diagonal unchanged)."""
    pi = law.probabilities
    _check_stationary_for(np.abs(pi @ spec.Q).max(), "intensity matrix")
    R = (spec.Q.T * pi[None, :]) / pi[:, None]
    # Zero row sums hold exactly up to the stationarity residual; re-center.
    np.fill_diagonal(R, 0.0)
    np.fill_diagonal(R, -R.sum(axis=1))
    return CtmcSpec(spec.states, R)


def _initial_state(spec, initial, rng: np.random.Generator) -> int:
    if isinstance(initial, StationaryLaw):
        return int(rng.choice(len(spec.states), p=initial.probabilities))
    if isinstance(initial, (int, np.integer)) and initial in range(len(spec.states)):
        return int(initial)
    return spec.states.index(initial)


def simulate_ctmc_path(
    spec: CtmcSpec, initial, horizon: float, rng: np.random.Generator
) -> CtmcPath:
    """Exponential holding times with rate q_i; next state drawn from q_ij / q_i."""
    if horizon <= 0:
        raise SpecError("horizon must be positive")
    rates = spec.exit_rates
    state = _initial_state(spec, initial, rng)
    times = [0.0]
    states = [state]
    t = 0.0
    while True:
        q = rates[state]
        if q <= 0.0:
            if spec.n_states == 1:
                break  # single state: no jumps, first epoch beyond the horizon
            raise StructuralError(
                f"absorbing state {spec.states.labels[state]!r} encountered"
            )
        t += rng.exponential(1.0 / q)
        if t >= horizon:
            break
        probs = spec.Q[state].copy()
        probs[state] = 0.0
        probs /= q
        state = int(rng.choice(spec.n_states, p=probs))
        times.append(t)
        states.append(state)
    return CtmcPath(np.array(times), np.array(states, dtype=int), float(horizon))
