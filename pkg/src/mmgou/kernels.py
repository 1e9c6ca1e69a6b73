"""Affine coefficient kernels and the discrete modulated recursion spec.

The recursion R_n = A_n R_{n-1} + B_n draws its coefficient pair from a kernel
indexed by the realized transition (i, j) of the driving chain.  Multipliers
are represented as A = sign * e^G with G from a closed distribution family, so
A never vanishes and E|A|^theta = E[e^{theta G}] is exactly computable.  An
explicit joint atom list may replace the independent (sign, G, B) description
when exact dependence between A and B is wanted.

Kernels may alternatively be *derived*: coefficient pairs produced by
simulating one inter-epoch segment of a continuous model.  Derived laws carry
no closed-form transforms (``mc_only`` is set) and every transform query on
them raises; spectral quantities for such models come from the continuous
side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .chains import DtmcSpec, StationaryLaw, stationary_law
from .distributions import ZERO, DistributionSpec
from .errors import MomentExplosionError, SpecError


@dataclass(frozen=True)
class CoefficientLaw:
    """Law of (A, B) for one transition.

    Independent mode: A = sign * e^{G} with P[sign = -1] = sign_neg_prob and
    G ~ log_abs, independent of B ~ intercept.  Joint mode: ``joint_atoms``
    ((a, b, prob), ...) with every a nonzero.
    """

    log_abs: DistributionSpec = ZERO
    sign_neg_prob: float = 0.0
    intercept: DistributionSpec = ZERO
    joint_atoms: Optional[tuple] = None

    mc_only = False

    def __post_init__(self):
        if self.joint_atoms is not None:
            atoms = tuple((float(a), float(b), float(w)) for a, b, w in self.joint_atoms)
            if not atoms:
                raise SpecError("joint_atoms must be nonempty")
            if any(a == 0.0 for a, _, _ in atoms):
                raise SpecError("multiplier atoms must be nonzero (A = 0 is excluded)")
            if any(w < 0 for _, _, w in atoms):
                raise SpecError("atom weights must be nonnegative")
            if abs(sum(w for _, _, w in atoms) - 1.0) > 1e-12:
                raise SpecError("atom weights must sum to 1")
            object.__setattr__(self, "joint_atoms", atoms)
        if not 0.0 <= self.sign_neg_prob <= 1.0:
            raise SpecError("sign_neg_prob must lie in [0, 1]")

    # -- sampling -----------------------------------------------------------

    def sample(self, rng: np.random.Generator, size: int):
        """Arrays (A, B) of length ``size``."""
        if self.joint_atoms is not None:
            a = np.array([x for x, _, _ in self.joint_atoms])
            b = np.array([y for _, y, _ in self.joint_atoms])
            w = np.array([z for _, _, z in self.joint_atoms])
            idx = rng.choice(len(w), size=size, p=w)
            return a[idx], b[idx]
        A = np.exp(np.asarray(self.log_abs.sample(rng, size), dtype=float))
        if self.sign_neg_prob > 0:
            sign = np.where(rng.random(size) < self.sign_neg_prob, -1.0, 1.0)
            A = A * sign
        B = np.asarray(self.intercept.sample(rng, size), dtype=float)
        return A, B

    # -- transforms ----------------------------------------------------------

    def abs_mgf(self, theta: float) -> float:
        """E|A|^theta."""
        if self.joint_atoms is not None:
            return float(sum(w * abs(a) ** theta for a, _, w in self.joint_atoms))
        return self.log_abs.mgf(theta)

    def abs_mgf_prime(self, theta: float) -> float:
        """E[|A|^theta log|A|]."""
        if self.joint_atoms is not None:
            return float(
                sum(w * abs(a) ** theta * math.log(abs(a)) for a, _, w in self.joint_atoms)
            )
        return self.log_abs.mgf_prime(theta)

    def abs_mgf_finite(self, theta: float) -> bool:
        if self.joint_atoms is not None:
            return True
        return self.log_abs.mgf_finite(theta)

    def theta_domain_edge(self) -> float:
        """Upper edge of {theta >= 0 : E|A|^theta < infinity}."""
        if self.joint_atoms is not None:
            return math.inf
        return self.log_abs.transform_domain().hi

    def intercept_abs_moment(self, p: float) -> float:
        if self.joint_atoms is not None:
            return float(sum(w * abs(b) ** p for _, b, w in self.joint_atoms))
        return self.intercept.abs_moment(p)

    def prob_negative(self) -> float:
        if self.joint_atoms is not None:
            return float(sum(w for a, _, w in self.joint_atoms if a < 0))
        return self.sign_neg_prob

    def intercept_always_zero(self) -> bool:
        if self.joint_atoms is not None:
            return all(b == 0.0 for _, b, _ in self.joint_atoms)
        return self.intercept.is_zero()

    # -- exact tilting ---------------------------------------------------------

    def tilted(self, theta: float) -> Optional["CoefficientLaw"]:
        """Law reweighted by |A|^theta, when representable exactly.

        The weight depends on |A| only, so the sign law and (in independent
        mode) the intercept law are untouched; G is tilted within its family,
        joint atoms are reweighted.  Returns None when no exact form exists.
        """
        if self.joint_atoms is not None:
            ws = np.array([w * abs(a) ** theta for a, _, w in self.joint_atoms])
            ws = ws / ws.sum()
            atoms = tuple(
                (a, b, float(w)) for (a, b, _), w in zip(self.joint_atoms, ws)
            )
            return CoefficientLaw(joint_atoms=atoms)
        g = self.log_abs.tilt(theta)
        if g is None:
            return None
        return CoefficientLaw(g, self.sign_neg_prob, self.intercept)


@dataclass(frozen=True, eq=False)
class MmlifsSpec:
    """Driving chain plus a coefficient law for every transition on its support."""

    chain: DtmcSpec
    kernel: Mapping
    source_map: object = None  # set for kernels derived from a continuous model

    def __post_init__(self):
        kernel = {tuple(k): v for k, v in dict(self.kernel).items()}
        support = {
            (i, j)
            for i in range(self.chain.n_states)
            for j in range(self.chain.n_states)
            if self.chain.P[i, j] > 0
        }
        if set(kernel) != support:
            missing = support - set(kernel)
            extra = set(kernel) - support
            raise SpecError(
                f"kernel must cover the chain support exactly; missing {sorted(missing)}, "
                f"extra {sorted(extra)}"
            )
        object.__setattr__(self, "kernel", kernel)

    @property
    def n_states(self) -> int:
        return self.chain.n_states

    @property
    def is_derived(self) -> bool:
        return any(getattr(law, "mc_only", False) for law in self.kernel.values())

    def law(self, i: int, j: int) -> CoefficientLaw:
        return self.kernel[(i, j)]

    def stationary_chain_law(self) -> StationaryLaw:
        return stationary_law(self.chain)

    def prob_a_negative(self) -> float:
        """Stationary probability that one step has A < 0."""
        pi = self.stationary_chain_law().probabilities
        total = 0.0
        for (i, j), law in self.kernel.items():
            total += pi[i] * self.chain.P[i, j] * law.prob_negative()
        return total

    def _require_closed_form(self):
        if self.is_derived:
            raise MomentExplosionError(
                "derived kernels have no closed-form transforms (mc_only); "
                "use Monte Carlo estimation or the source continuous model"
            )

    def cramer_matrix(self, theta: float) -> np.ndarray:
        """Tilted transition moments p_ij E[|A|^theta | i -> j]."""
        self._require_closed_form()
        n = self.n_states
        M = np.zeros((n, n))
        for (i, j), law in self.kernel.items():
            if not law.abs_mgf_finite(theta):
                raise MomentExplosionError(
                    f"E|A|^theta infinite at theta={theta} on transition "
                    f"{self.chain.states.labels[i]!r}->{self.chain.states.labels[j]!r}",
                    offender=(i, j),
                )
            M[i, j] = self.chain.P[i, j] * law.abs_mgf(theta)
        return M

    def cramer_matrix_prime(self, theta: float) -> np.ndarray:
        """Entrywise derivative p_ij E[|A|^theta log|A| | i -> j]."""
        self._require_closed_form()
        n = self.n_states
        M = np.zeros((n, n))
        for (i, j), law in self.kernel.items():
            M[i, j] = self.chain.P[i, j] * law.abs_mgf_prime(theta)
        return M

    def theta_domain_edge(self) -> float:
        self._require_closed_form()
        return min(law.theta_domain_edge() for law in self.kernel.values())
