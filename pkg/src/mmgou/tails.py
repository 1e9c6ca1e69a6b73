"""Tail-index and tail-constant estimation.

Three estimators cross-validate each other:

* ``hill``: the classical order-statistics estimator of the tail index.
* ``empirical_plateau``: t^kappa times the empirical survival function on a
  high-quantile grid; a genuine power tail shows a flat plateau whose level
  estimates the tail constant.
* ``goldie_constant``: the renewal-theoretic formula for the per-state
  constants,

      C_i^+ = (v^_i / (kappa rho'(kappa))) sum_j (pi_j(kappa) / v^_j)
                  E_j[(R_0^+)^kappa - ((A_0 R_{-1})^+)^kappa],

  estimated with the pair (R_0, A_0 R_{-1}) coupled on the same draw (the
  difference has finite mean; independent draws would not).  The 1/kappa
  comes from the tail-integration identity int (P[X>t] - P[Y>t]) t^{kappa-1}
  dt = E[(X^+)^kappa - (Y^+)^kappa] / kappa.  When the multipliers take both
  signs, the two one-sided constants coincide and equal half the
  absolute-power difference form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .chains import stationary_law, time_reverse_dtmc
from .errors import SpecError
from .kernels import MmlifsSpec
from .mcstats import N_BATCHES, batch_means, choice_rows
from .spectral import CramerSystem, TailIndexSolution
from .ifs import _draw_pair_coeffs, sample_stationary_batch

DEFAULT_QUANTILE_WINDOW = (0.99, 0.9999)
MIN_TAIL_EXCEEDANCES = 50


# -- plateau ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PlateauCurve:
    state: int
    side: str  # "+" or "-"
    grid: np.ndarray
    curve: np.ndarray
    estimate: float
    stderr: float
    slope: float
    n_tail: int
    widened: bool


def _weighted_survival(x_sorted, w_sorted_cumrev, total_weight, t):
    """P[X > t] from pre-sorted values and reverse-cumulative weights."""
    idx = np.searchsorted(x_sorted, t, side="right")
    if idx >= x_sorted.size:
        return 0.0
    return w_sorted_cumrev[idx] / total_weight


def _one_side_plateau(
    x: np.ndarray,
    w: np.ndarray,
    total_weight: float,
    kappa: float,
    window,
    n_grid: int,
    state: int,
    side: str,
) -> PlateauCurve:
    if x.size < MIN_TAIL_EXCEEDANCES:
        return PlateauCurve(
            state, side, np.empty(0), np.empty(0), float("nan"), float("inf"), float("nan"), int(x.size), True
        )
    order = np.argsort(x)
    xs = x[order]
    ws = w[order]
    cumrev = np.concatenate([np.cumsum(ws[::-1])[::-1][1:], [0.0]])
    lo_q, hi_q = window
    t_lo = float(np.quantile(xs, lo_q))
    t_hi = float(np.quantile(xs, hi_q))
    widened = False
    # keep at least MIN_TAIL_EXCEEDANCES points above the top grid point
    if np.count_nonzero(xs > t_hi) < MIN_TAIL_EXCEEDANCES:
        t_hi = float(xs[-MIN_TAIL_EXCEEDANCES])
        widened = True
    if not (0 < t_lo < t_hi):
        t_lo = max(t_hi / 10.0, float(xs[max(xs.size // 2, 0)]))
        widened = True
    grid = np.exp(np.linspace(math.log(t_lo), math.log(t_hi), n_grid))
    surv = np.array(
        [_weighted_survival(xs, cumrev, total_weight, t) for t in grid]
    )
    curve = grid**kappa * surv
    positive = curve > 0
    estimate = float(np.median(curve[positive])) if positive.any() else float("nan")
    if positive.sum() >= 2:
        slope = float(
            np.polyfit(np.log(grid[positive]), np.log(curve[positive]), 1)[0]
        )
    else:
        slope = float("nan")
    # batch-means standard error on the plateau level
    n = x.size
    est_batches = []
    if n >= N_BATCHES * MIN_TAIL_EXCEEDANCES // 4:
        usable = (n // N_BATCHES) * N_BATCHES
        xb = x[:usable].reshape(N_BATCHES, -1)
        wb = w[:usable].reshape(N_BATCHES, -1)
        per_batch_total = total_weight / N_BATCHES
        for b in range(N_BATCHES):
            order_b = np.argsort(xb[b])
            xsb = xb[b][order_b]
            wsb = wb[b][order_b]
            cr = np.concatenate([np.cumsum(wsb[::-1])[::-1][1:], [0.0]])
            sv = np.array(
                [_weighted_survival(xsb, cr, per_batch_total, t) for t in grid]
            )
            cb = grid**kappa * sv
            good = cb > 0
            if good.any():
                est_batches.append(np.median(cb[good]))
    if len(est_batches) >= 8:
        stderr = float(np.std(est_batches, ddof=1) / math.sqrt(len(est_batches)))
    else:
        stderr = float("inf")
    n_tail = int(np.count_nonzero(xs > grid[-1]))
    return PlateauCurve(state, side, grid, curve, estimate, stderr, slope, n_tail, widened)


def empirical_plateau(
    values: np.ndarray,
    states: np.ndarray,
    kappa: float,
    weights: Optional[np.ndarray] = None,
    window=DEFAULT_QUANTILE_WINDOW,
    n_grid: int = 30,
) -> dict:
    """Plateau curves t^kappa P_i[.] keyed by (state, side).

    The grid is log-spaced between the window quantiles of the side-restricted
    magnitudes; the window widens downward (with a flag) when fewer than 50
    exceedances remain at the top point.  The survival probability at t uses
    the full per-state weight as denominator, so both tails of one state share
    a normalization.
    """
    values = np.asarray(values, dtype=float)
    states = np.asarray(states, dtype=int)
    w = np.ones_like(values) if weights is None else np.asarray(weights, dtype=float)
    out = {}
    for i in np.unique(states):
        mask = states == i
        v = values[mask]
        wi = w[mask]
        total = float(wi.sum())
        pos = v > 0
        neg = v < 0
        out[(int(i), "+")] = _one_side_plateau(
            v[pos], wi[pos], total, kappa, window, n_grid, int(i), "+"
        )
        out[(int(i), "-")] = _one_side_plateau(
            -v[neg], wi[neg], total, kappa, window, n_grid, int(i), "-"
        )
    return out


# -- Hill estimator ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HillEstimate:
    estimate: float  # tail index (reciprocal of the mean log-excess)
    stderr: float
    k: int
    k_grid: np.ndarray
    k_curve: np.ndarray
    n_positive: int


def hill(values: np.ndarray, k: Optional[int] = None) -> HillEstimate:
    """Hill tail-index estimate on the positive part of the sample.

    Default k = ceil(sqrt(n)); the sensitivity curve spans k in
    [sqrt(n)/4, 4 sqrt(n)].  Drifting estimates across that range diagnose a
    tail that is not Pareto-like.
    """
    x = np.asarray(values, dtype=float)
    x = x[x > 0]
    n = x.size
    if n < 20:
        raise SpecError("hill needs at least 20 positive samples")
    if k is None:
        k = int(math.ceil(math.sqrt(n)))
    if k < 10 or k >= n:
        raise SpecError(f"k={k} out of range [10, {n - 1}]")
    xs = np.sort(x)[::-1]
    logs = np.log(xs)

    def estimate_at(kk: int) -> float:
        H = logs[:kk].mean() - logs[kk]
        return 1.0 / H

    est = estimate_at(k)
    root = math.sqrt(n)
    k_lo = max(10, int(root / 4))
    k_hi = min(n - 1, int(4 * root))
    k_grid = np.unique(
        np.round(np.exp(np.linspace(math.log(k_lo), math.log(k_hi), 25))).astype(int)
    )
    k_curve = np.array([estimate_at(int(kk)) for kk in k_grid])
    stderr = est / math.sqrt(k)
    return HillEstimate(float(est), float(stderr), int(k), k_grid, k_curve, n)


# -- renewal-formula constants ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GoldieConstants:
    c_plus: np.ndarray
    c_minus: np.ndarray
    stderr_plus: np.ndarray
    stderr_minus: np.ndarray
    aggregate_plus: float
    aggregate_minus: float
    mixed_signs: bool
    n_per_state: int


def goldie_constant(
    spec: MmlifsSpec,
    system: CramerSystem,
    drift_value: float,
    n: int,
    rng: np.random.Generator,
    tol: float = 1e-6,
) -> GoldieConstants:
    """Per-state tail constants from the coupled-difference formula.

    For each anchor state j the previous state is drawn from the reversed
    chain, R_{-1} from the stationary law at that state, and (A_0, B_0) from
    the kernel of the realized transition; the same draw feeds both power
    terms.  Requires the Perron data at kappa and the positive drift
    rho'(kappa).
    """
    if not (drift_value > 0) or not math.isfinite(drift_value):
        raise SpecError("tail constants need a finite positive drift at kappa")
    kappa = system.theta
    n_states = spec.n_states
    reversed_chain = time_reverse_dtmc(spec.chain, stationary_law(spec.chain))
    rev_cum = np.cumsum(reversed_chain.P, axis=1)
    mixed = spec.prob_a_negative() > 0.0
    v = system.v
    pi_k = system.pi_theta
    weights = pi_k * v  # pi_j(kappa) / v^_j with v^_j = 1 / v_j
    usable = (n // N_BATCHES) * N_BATCHES
    batch_plus = np.zeros((N_BATCHES, n_states))
    batch_minus = np.zeros((N_BATCHES, n_states))
    for j in range(n_states):
        cur = np.full(usable, j, dtype=int)
        prev = choice_rows(rev_cum, cur, rng.random(usable))
        r_prev, _, _, _ = sample_stationary_batch(spec, prev, tol, rng)
        A, B = _draw_pair_coeffs(spec, prev, cur, rng)
        ar = A * r_prev
        r0 = ar + B
        if mixed:
            d = np.abs(r0) ** kappa - np.abs(ar) ** kappa
            both = d.reshape(N_BATCHES, -1).mean(axis=1)
            batch_plus[:, j] = both
            batch_minus[:, j] = both
        else:
            dp = np.maximum(r0, 0.0) ** kappa - np.maximum(ar, 0.0) ** kappa
            dm = np.maximum(-r0, 0.0) ** kappa - np.maximum(-ar, 0.0) ** kappa
            batch_plus[:, j] = dp.reshape(N_BATCHES, -1).mean(axis=1)
            batch_minus[:, j] = dm.reshape(N_BATCHES, -1).mean(axis=1)
    scale = (0.5 if mixed else 1.0) / kappa
    k_plus = scale * (batch_plus @ weights) / drift_value
    k_minus = scale * (batch_minus @ weights) / drift_value
    kp_mean, kp_se = float(k_plus.mean()), float(k_plus.std(ddof=1) / math.sqrt(N_BATCHES))
    km_mean, km_se = float(k_minus.mean()), float(k_minus.std(ddof=1) / math.sqrt(N_BATCHES))
    v_hat = 1.0 / v
    c_plus = v_hat * kp_mean
    c_minus = v_hat * km_mean
    se_plus = v_hat * kp_se
    se_minus = v_hat * km_se
    pi = stationary_law(spec.chain).probabilities
    return GoldieConstants(
        c_plus,
        c_minus,
        se_plus,
        se_minus,
        float(pi @ c_plus),
        float(pi @ c_minus),
        mixed,
        usable,
    )


# -- assembled report ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TailReport:
    kappa: TailIndexSolution
    constants: Optional[GoldieConstants]
    plateaus: dict
    hill: Optional[HillEstimate]
    conditions: object  # ConditionReport
    n_samples: int
    seed: int
    state_labels: tuple = field(default_factory=tuple)
