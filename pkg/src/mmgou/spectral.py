"""Matrix-analytic layer: tilted transition matrices, their Perron data, the
tail-index root, drifts, duality, and the first-epoch transform of continuous
models.

For a discrete model the central object is the theta-indexed matrix of tilted
transition moments M(theta)_ij = E_i[|A_1|^theta 1{xi_1 = j}].  For a
continuous model the same role is played by the first-epoch transform
Y(theta)_ij = E_i[e^{-theta zeta_{T_1}} 1{J_{T_1} = j}], and the two coincide
for the affine coefficients induced at epochs.  The dominant eigenvalue
rho(theta) is log-convex with rho(0) = 1; the tail index kappa is the positive
root of rho(kappa) = 1, located by bracketing and bisection inside the moment
domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import integrate
from scipy.linalg import expm

from .chains import StateSpace, check_irreducible
from .errors import (
    ContractViolationError,
    MomentExplosionError,
    NumericalError,
    SpecError,
)
from .kernels import MmlifsSpec
from .levy import MapSpec, sample_first_epoch

PERRON_RTOL = 1e-12
PERRON_MAX_ITER = 100_000
KAPPA_RESIDUAL_TOL = 1e-10
EDGE_MARGIN = 1e-9


# -- Perron data ---------------------------------------------------------------


def _power_iteration(M: np.ndarray, tol: float, max_iter: int):
    """Dominant eigenpair by power iteration.

    Returns (eigenvalue, vector, converged); the last iterate is returned
    even when unconverged so callers can build an adaptive shift from it.
    """
    n = M.shape[0]
    x = np.full(n, 1.0 / n)
    lam = 1.0
    for _ in range(max_iter):
        y = M @ x
        lam_new = y.sum()
        if lam_new <= 0 or not np.isfinite(lam_new):
            raise NumericalError("power iteration produced a nonpositive iterate")
        y /= lam_new
        # Convergence on both eigenvalue relative change and vector sup change.
        if abs(lam_new - lam) <= tol * abs(lam_new) and np.abs(y - x).max() <= tol:
            return lam_new, y, True
        x, lam = y, lam_new
    return lam, x, False


def perron(M: np.ndarray, tol: float = PERRON_RTOL, max_iter: int = PERRON_MAX_ITER):
    """Dominant eigenvalue with positive left/right eigenvectors.

    Normalization: sum(u) = 1 and sum(u * v) = 1.  Periodic matrices (plain
    iteration cycles) fall back to the aperiodic shift (M + I) / 2, which has
    the same eigenvectors and eigenvalue (rho + 1) / 2.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n):
        raise SpecError("perron requires a square matrix")
    if np.any(M < 0):
        raise SpecError("perron requires a nonnegative matrix")
    if n > 1:
        check_irreducible(M > 0, StateSpace(tuple(range(n))))
    if n == 1:
        rho = float(M[0, 0])
        if rho <= 0:
            raise SpecError("1x1 matrix must have a positive entry")
        return rho, np.array([1.0]), np.array([1.0])

    def solve(mat):
        lam, vec, ok = _power_iteration(mat, tol, min(10_000, max_iter))
        if ok:
            return lam, vec
        # Periodic support: iterate the aperiodic shift (M + I)/2 instead.
        shifted = 0.5 * (mat + np.eye(n))
        lam, vec, ok = _power_iteration(shifted, tol, max_iter)
        if ok:
            return 2.0 * lam - 1.0, vec
        # Badly separated spectrum: shifting by the estimated dominant value
        # collapses |lambda_2 + s| / (lambda_1 + s) and restores fast decay.
        s = max(2.0 * lam - 1.0, 1.0)
        lam, vec, ok = _power_iteration(mat + s * np.eye(n), tol, max_iter)
        if not ok:
            raise NumericalError("power iteration failed to converge")
        return lam - s, vec

    rho_r, v = solve(M)
    rho_l, u = solve(M.T)
    if not np.isclose(rho_r, rho_l, rtol=1e-8, atol=1e-12):
        raise NumericalError(f"left/right eigenvalue mismatch: {rho_r} vs {rho_l}")
    u = u / u.sum()
    v = v / (u @ v)
    # Bilinear refinement: second-order accurate in the eigenvector errors.
    rho = float(u @ M @ v)
    return rho, u, v


# -- continuous-model transforms -------------------------------------------------


def matrix_exponent(spec: MapSpec, w: float) -> np.ndarray:
    """Matrix whose exponential gives the joint transform of (J_t, zeta_t).

    Entry (j, k) is psi_j(w) + q_jj on the diagonal and q_kj E[e^{w Z_kj}] off
    it (transposed generator convention, matching the identity
    E_i[e^{w zeta_t} 1{J_t=j}] = e_j^T exp(t Psi(w)) e_i).  Self epochs with
    nonzero jumps contribute (r_j - q_j)(E[e^{w Z_jj}] - 1) on the diagonal.
    """
    n = spec.n_states
    Q = spec.chain.Q
    q = spec.chain.exit_rates
    K = np.zeros((n, n))
    for i in range(n):
        comp = spec.zeta[i]
        if not comp.exponent_finite(w):
            raise MomentExplosionError(
                f"Laplace exponent infinite at w={w} in state "
                f"{spec.chain.states.labels[i]!r}",
                offender=i,
            )
        r_i = spec.epoch_rate(i)
        K[i, i] = comp.laplace_exponent(w) - q[i]
        if r_i > q[i]:
            jump = spec.switch_jump(i, i)
            if not jump.zeta_mgf_finite(w):
                raise MomentExplosionError(
                    f"self-jump transform infinite at w={w} in state "
                    f"{spec.chain.states.labels[i]!r}",
                    offender=(i, i),
                )
            K[i, i] += (r_i - q[i]) * (jump.zeta_mgf(w) - 1.0)
        for j in range(n):
            if j == i or Q[i, j] == 0.0:
                continue
            jump = spec.switch_jump(i, j)
            if not jump.zeta_mgf_finite(w):
                raise MomentExplosionError(
                    f"switch-jump transform infinite at w={w} on "
                    f"{spec.chain.states.labels[i]!r}->{spec.chain.states.labels[j]!r}",
                    offender=(i, j),
                )
            K[i, j] = Q[i, j] * jump.zeta_mgf(w)
    return K.T


def map_laplace_transform(spec: MapSpec, w: float, t: float, i: int, j: int) -> float:
    """E_i[e^{w zeta_t} 1{J_t = j}] via the matrix exponential."""
    if t < 0:
        raise SpecError("t must be nonnegative")
    if t == 0:
        return 1.0 if i == j else 0.0
    Psi = matrix_exponent(spec, w)
    return float(expm(t * Psi)[j, i])


def _epoch_intensities(spec: MapSpec) -> np.ndarray:
    """q~_ij: off-diagonal switching intensities, diagonal self-epoch rates."""
    n = spec.n_states
    K = np.array(spec.chain.Q, dtype=float)
    np.fill_diagonal(K, 0.0)
    for i in range(n):
        K[i, i] = spec.epoch_rate(i) - spec.chain.exit_rates[i]
    return K


def upsilon(spec: MapSpec, theta: float, method: str = "closed-form") -> np.ndarray:
    """First-epoch transform Y_ij(theta) = E_i[e^{-theta zeta_{T_1}} 1{J_{T_1}=j}].

    ``closed-form`` factorizes over the first epoch: holding time exponential
    with the epoch rate r_i, segment transform r_i / (r_i - psi_i(-theta)),
    independent next-state draw, independent switch jump; entrywise

        Y_ij = q~_ij m_{Z_ij}(-theta) / (r_i - psi_i(-theta)).

    ``paper-integral`` evaluates q~_ij * integral_0^inf (e^{t Psi(-theta)})_ji
    e^{-q~_ij t} dt by adaptive quadrature.  The two do not agree in general;
    the comparison is surfaced by the ``upsilon-compare`` task.
    """
    if theta < 0:
        raise SpecError("theta must be nonnegative")
    n = spec.n_states
    qt = _epoch_intensities(spec)
    out = np.zeros((n, n))
    if method == "closed-form":
        for i in range(n):
            comp = spec.zeta[i]
            if not comp.exponent_finite(-theta):
                raise MomentExplosionError(
                    f"segment transform infinite at theta={theta} in state "
                    f"{spec.chain.states.labels[i]!r}",
                    offender=i,
                )
            r_i = spec.epoch_rate(i)
            psi = comp.laplace_exponent(-theta)
            if psi >= r_i:
                raise MomentExplosionError(
                    f"psi_i(-theta)={psi:.6g} >= epoch rate {r_i:.6g} in state "
                    f"{spec.chain.states.labels[i]!r}: first-epoch transform diverges",
                    offender=i,
                )
            for j in range(n):
                if qt[i, j] <= 0.0:
                    continue
                jump = spec.switch_jump(i, j)
                if not jump.zeta_mgf_finite(-theta):
                    raise MomentExplosionError(
                        f"switch-jump transform infinite at theta={theta} on "
                        f"{spec.chain.states.labels[i]!r}->"
                        f"{spec.chain.states.labels[j]!r}",
                        offender=(i, j),
                    )
                out[i, j] = qt[i, j] * jump.zeta_mgf(-theta) / (r_i - psi)
        return out
    if method == "paper-integral":
        Psi = matrix_exponent(spec, -theta)
        abscissa = max(np.linalg.eigvals(Psi).real)
        for i in range(n):
            for j in range(n):
                if qt[i, j] <= 0.0:
                    continue
                rate = qt[i, j]
                if abscissa >= rate:
                    raise NumericalError(
                        f"integral diverges on entry ({i},{j}): spectral abscissa "
                        f"{abscissa:.6g} >= rate {rate:.6g}"
                    )
                val, err = integrate.quad(
                    lambda t: expm(t * Psi)[j, i] * math.exp(-rate * t),
                    0.0,
                    np.inf,
                    limit=200,
                )
                if not np.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
                    raise NumericalError(
                        f"quadrature did not converge on entry ({i},{j}): "
                        f"value {val}, error estimate {err}"
                    )
                out[i, j] = rate * val
        return out
    raise SpecError(f"unknown upsilon method {method!r}")


def upsilon_prime(spec: MapSpec, theta: float) -> np.ndarray:
    """Entrywise d/dtheta of the closed-form first-epoch transform."""
    n = spec.n_states
    qt = _epoch_intensities(spec)
    out = np.zeros((n, n))
    for i in range(n):
        comp = spec.zeta[i]
        psi = comp.laplace_exponent(-theta)
        psi_p = comp.laplace_exponent_prime(-theta)
        r_i = spec.epoch_rate(i)
        g = r_i - psi
        if g <= 0:
            raise MomentExplosionError("theta outside the first-epoch domain", offender=i)
        for j in range(n):
            if qt[i, j] <= 0.0:
                continue
            jump = spec.switch_jump(i, j)
            f = jump.zeta_mgf(-theta)
            f_p = -jump.zeta_mgf_prime(-theta)
            out[i, j] = qt[i, j] * (f_p * g - f * psi_p) / (g * g)
    return out


class MatrixEstimate(NamedTuple):
    """Monte Carlo matrix estimate with entrywise standard errors."""

    estimate: np.ndarray
    stderr: np.ndarray
    n_samples: int
    exact: bool = False


def mc_upsilon(
    spec: MapSpec, theta: float, n: int, rng: np.random.Generator
) -> MatrixEstimate:
    """Unbiased first-epoch transform estimate from exact epoch simulation."""
    if n < 1000:
        raise SpecError("mc_upsilon needs n >= 1000")
    m = spec.n_states
    est = np.zeros((m, m))
    se = np.zeros((m, m))
    for i in range(m):
        _, nxt, dz, _ = sample_first_epoch(spec, i, n, rng)
        x = np.exp(-theta * dz)
        for j in range(m):
            vals = x * (nxt == j)
            est[i, j] = vals.mean()
            se[i, j] = vals.std(ddof=1) / math.sqrt(n)
    return MatrixEstimate(est, se, n)


# -- generic tilted-matrix access ------------------------------------------------


class _Source:
    """Uniform access to M(theta), M'(theta) and the theta domain."""

    def __init__(self, source):
        if isinstance(source, MmlifsSpec) and source.is_derived:
            if source.source_map is None:
                raise MomentExplosionError(
                    "derived kernel without a source model has no closed-form transforms"
                )
            source = source.source_map
        self.source = source
        if isinstance(source, MmlifsSpec):
            self.kind = "discrete"
        elif isinstance(source, MapSpec):
            self.kind = "continuous"
        else:
            raise TypeError(f"unsupported spectral source {type(source)!r}")

    def matrix(self, theta: float) -> np.ndarray:
        if self.kind == "discrete":
            return self.source.cramer_matrix(theta)
        return upsilon(self.source, theta)

    def matrix_prime(self, theta: float) -> np.ndarray:
        if self.kind == "discrete":
            return self.source.cramer_matrix_prime(theta)
        return upsilon_prime(self.source, theta)

    def feasible(self, theta: float) -> bool:
        if theta < 0:
            return False
        if self.kind == "discrete":
            return all(
                law.abs_mgf_finite(theta) for law in self.source.kernel.values()
            )
        spec = self.source
        for i in range(spec.n_states):
            comp = spec.zeta[i]
            if not comp.exponent_finite(-theta):
                return False
            if comp.laplace_exponent(-theta) >= spec.epoch_rate(i):
                return False
        qt = _epoch_intensities(spec)
        for (i, j) in zip(*np.nonzero(qt > 0)):
            if not spec.switch_jump(int(i), int(j)).zeta_mgf_finite(-theta):
                return False
        return True

    def domain_edge(self) -> float:
        """Upper edge of the theta domain, located by bisection on finiteness."""
        if self.kind == "discrete":
            return self.source.theta_domain_edge()
        lo, hi = 0.0, 1.0
        for _ in range(64):
            if not self.feasible(hi):
                break
            lo, hi = hi, hi * 2.0
        else:
            return math.inf
        for _ in range(200):
            if hi - lo <= 1e-12 * max(1.0, hi):
                break
            mid = 0.5 * (lo + hi)
            if self.feasible(mid):
                lo = mid
            else:
                hi = mid
        return hi


def cramer_transform(source, theta: float, mc: Optional[int] = None, rng=None):
    """Matrix of tilted transition moments E_i[|A_1|^theta 1{xi_1 = j}].

    Exact for closed-form kernels; for a continuous model it is assembled from
    the embedded epoch chain and the per-transition multiplier transforms
    (algebraically the first-epoch transform).  Derived kernels are estimated
    by Monte Carlo when ``mc``/``rng`` are given, and the result is flagged
    non-exact.
    """
    if isinstance(source, MmlifsSpec):
        if not source.is_derived:
            return source.cramer_matrix(theta)
        if mc is None or rng is None:
            raise MomentExplosionError(
                "derived kernel: pass mc=<samples> and rng= for a Monte Carlo estimate"
            )
        n = source.n_states
        est = np.zeros((n, n))
        se = np.zeros((n, n))
        for (i, j), law in sorted(source.kernel.items()):
            A, _ = law.sample(rng, mc)
            vals = np.abs(A) ** theta
            p = source.chain.P[i, j]
            est[i, j] = p * vals.mean()
            se[i, j] = p * vals.std(ddof=1) / math.sqrt(mc)
        return MatrixEstimate(est, se, mc)
    if isinstance(source, MapSpec):
        spec = source
        n = spec.n_states
        P = spec.epoch_kernel()
        M = np.zeros((n, n))
        for i in range(n):
            r_i = spec.epoch_rate(i)
            psi = spec.zeta[i].laplace_exponent(-theta)
            if psi >= r_i:
                raise MomentExplosionError(
                    f"theta={theta} outside the first-epoch domain in state "
                    f"{spec.chain.states.labels[i]!r}",
                    offender=i,
                )
            seg = r_i / (r_i - psi)
            for j in range(n):
                if P[i, j] <= 0.0:
                    continue
                M[i, j] = P[i, j] * seg * spec.switch_jump(i, j).zeta_mgf(-theta)
        return M
    raise TypeError(f"unsupported source {type(source)!r}")


def rho(source, theta: float) -> float:
    """Dominant eigenvalue of the tilted transition matrix at theta."""
    rho_val, _, _ = perron(_Source(source).matrix(theta))
    return rho_val


# -- assembled spectral bundle ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class CramerSystem:
    """Tilted transition matrix with its full Perron data.

    ``P_norm`` is the stochastic normalization with entries
    v_j M_ij / (rho v_i); ``pi_theta`` = (u_i v_i) is its stationary law.
    """

    theta: float
    P_theta: np.ndarray
    rho: float
    u: np.ndarray
    v: np.ndarray
    P_norm: np.ndarray
    pi_theta: np.ndarray

    def max_invariant_violation(self) -> float:
        """Largest residual over the defining identities (for tests/validation)."""
        resid = [
            np.abs(self.u @ self.P_theta - self.rho * self.u).max(),
            np.abs(self.P_theta @ self.v - self.rho * self.v).max(),
            np.abs(self.P_norm.sum(axis=1) - 1.0).max(),
            np.abs(self.pi_theta @ self.P_norm - self.pi_theta).max(),
            abs(self.pi_theta.sum() - 1.0),
        ]
        return float(max(resid))


def _assemble_system(theta: float, M: np.ndarray) -> CramerSystem:
    rho_val, u, v = perron(M)
    P_norm = (M * v[None, :]) / (rho_val * v[:, None])
    pi_theta = u * v
    return CramerSystem(theta, M, rho_val, u, v, P_norm, pi_theta)


def cramer_system(source, theta: float) -> CramerSystem:
    system = _assemble_system(theta, _Source(source).matrix(theta))
    worst = system.max_invariant_violation()
    if worst > 1e-8:
        raise NumericalError(f"spectral bundle residual {worst:.3e}")
    return system


def dual_cramer(system: CramerSystem) -> CramerSystem:
    """Time-reversed bundle: Pi^{-1} M^T Pi with Pi = diag(pi_theta).

    The dual shares rho and pi_theta; its eigenvectors are u^_i = pi_i v_i and
    v^_i = 1 / v_i (so u^.v^ = 1, though u^ no longer sums to 1: the duality
    scaling is pinned by v^_i v_i = 1).
    """
    pi = system.pi_theta
    M_hat = (system.P_theta.T * pi[None, :]) / pi[:, None]
    u_hat = pi * system.v
    v_hat = 1.0 / system.v
    P_norm = (M_hat * v_hat[None, :]) / (system.rho * v_hat[:, None])
    return CramerSystem(system.theta, M_hat, system.rho, u_hat, v_hat, P_norm, pi)


def geometric_sampling_transform(M: np.ndarray) -> np.ndarray:
    """sum_{n>=1} 2^{-n} M^n = M (2I - M)^{-1}; requires spectral radius < 2."""
    M = np.asarray(M, dtype=float)
    if np.any(M < 0):
        raise SpecError("geometric sampling transform requires a nonnegative matrix")
    rho_val = float(np.max(np.abs(np.linalg.eigvals(M))))
    if rho_val >= 2.0:
        raise NumericalError(
            f"geometric series diverges: dominant eigenvalue {rho_val} >= 2"
        )
    n = M.shape[0]
    return M @ np.linalg.inv(2.0 * np.eye(n) - M)


# -- drift and tail-index root ----------------------------------------------------


def drift(
    source,
    theta: float,
    fd_check: bool = False,
    fd_step: float = 1e-5,
    fd_tol: float = 1e-6,
) -> float:
    """Stationary drift of the tilted log-walk, rho'(theta) / rho(theta).

    Computed from closed-form entries of M'(theta) via the eigenvalue
    perturbation identity rho' = u M' v (with sum u_i v_i = 1).  With
    ``fd_check`` the value is cross-checked against a central finite
    difference of rho; near the domain edge the difference degrades to
    one-sided with a widened tolerance.
    """
    src = _Source(source)
    M = src.matrix(theta)
    rho_val, u, v = perron(M)
    rho_prime = float(u @ src.matrix_prime(theta) @ v)
    value = rho_prime / rho_val
    if fd_check:
        h = fd_step
        if src.feasible(theta + h) and theta - h >= 0:
            fd = (rho(source, theta + h) - rho(source, theta - h)) / (2 * h)
            tol = fd_tol * max(1.0, abs(rho_prime), abs(fd))
        elif theta - h >= 0:
            fd = (rho_val - rho(source, theta - h)) / h
            tol = 1e-2 * max(1.0, abs(rho_prime), abs(fd))  # one-sided near the edge
        else:
            fd = (rho(source, theta + h) - rho_val) / h
            tol = 1e-2 * max(1.0, abs(rho_prime), abs(fd))
        if abs(fd - rho_prime) > tol:
            raise NumericalError(
                f"drift cross-check failed at theta={theta}: closed form "
                f"{rho_prime:.10g} vs finite difference {fd:.10g}"
            )
    return value


@dataclass(frozen=True)
class TailIndexSolution:
    """Result of the rho(kappa) = 1 root search."""

    status: str  # "found" | "no-tail-index" | "non-contractive"
    kappa: Optional[float] = None
    residual: Optional[float] = None
    drift: Optional[float] = None
    bracket: Optional[tuple] = None
    domain_edge: Optional[float] = None
    boundary: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.status == "found"

    def require(self) -> float:
        if not self.found:
            raise MomentExplosionError(f"no tail index available: {self.status}")
        return self.kappa


def solve_kappa(source, theta_max_hint: Optional[float] = None) -> TailIndexSolution:
    """Locate the positive root of rho(theta) = 1.

    Requires rho(0) = 1 and negative drift at 0 (contraction on average).  The
    bracket grows by doubling from 1/64 until rho > 1 or the moment-domain
    edge is reached; the root is then found by bisection on log rho, whose
    convexity makes the positive root unique.  Failure modes are reported as
    outcomes, not exceptions.
    """
    src = _Source(source)
    rho0, _, _ = perron(src.matrix(0.0))
    if abs(rho0 - 1.0) > 1e-8:
        raise ContractViolationError(f"rho(0) = {rho0} != 1: not a probability kernel")
    drift0 = drift(source, 0.0)
    edge = src.domain_edge()
    diagnostics = {"rho0": rho0, "drift0": drift0}
    if drift0 >= 0:
        return TailIndexSolution(
            status="non-contractive",
            domain_edge=None if math.isinf(edge) else edge,
            diagnostics=diagnostics,
        )
    cap = edge - EDGE_MARGIN if math.isfinite(edge) else math.inf
    if theta_max_hint is not None:
        cap = min(cap, float(theta_max_hint))
    # Expansion limit for unbounded domains: a contractive model whose rho
    # stays below 1 out to here has no usable root (entries underflow beyond).
    search_cap = cap if math.isfinite(cap) else 512.0

    def rho_at(th: float) -> float:
        val, _, _ = perron(src.matrix(th))
        return val

    lo, f_lo = 0.0, 1.0
    hi = min(1.0 / 64.0, search_cap)
    hit_cap = False
    while True:
        try:
            f_hi = rho_at(hi)
        except (SpecError, NumericalError):
            # transform underflow at large theta: rho is effectively 0 there
            if hi > 1.0:
                f_hi = 0.0
            else:
                raise
        if f_hi > 1.0:
            break
        lo, f_lo = hi, f_hi
        if hi >= search_cap:
            hit_cap = True
            break
        hi = min(hi * 2.0, search_cap)
    if hit_cap:
        diagnostics["rho_at_cap"] = f_lo
        diagnostics["search_cap"] = search_cap
        return TailIndexSolution(
            status="no-tail-index",
            bracket=(lo, search_cap),
            domain_edge=None if math.isinf(edge) else edge,
            boundary=math.isfinite(edge),
            diagnostics=diagnostics,
        )
    bracket = (lo, hi)
    a, b = lo, hi
    kappa, res = b, abs(f_hi - 1.0)
    for _ in range(300):
        mid = 0.5 * (a + b)
        f_mid = rho_at(mid)
        if abs(f_mid - 1.0) < res:
            kappa, res = mid, abs(f_mid - 1.0)
        if res <= KAPPA_RESIDUAL_TOL:
            break
        if f_mid > 1.0:
            b = mid
        else:
            a = mid
        if b - a <= 1e-15 * max(1.0, b):
            break
    boundary = math.isfinite(edge) and (edge - kappa) <= 100 * EDGE_MARGIN
    kappa_drift = drift(source, kappa)
    return TailIndexSolution(
        status="found",
        kappa=kappa,
        residual=res,
        drift=kappa_drift,
        bracket=bracket,
        domain_edge=None if math.isinf(edge) else edge,
        boundary=boundary,
        diagnostics=diagnostics,
    )
