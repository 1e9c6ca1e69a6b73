"""Closed parametric distribution families.

The package restricts jump laws and coefficient laws to a closed set of
families with exactly computable moment transforms, so that moment-domain
questions (where is E[e^{wZ}] finite? is E|Z|^p finite?) are decidable rather
than estimated.  Supported families:

    point_mass(c)                 Z = c
    two_point(x1, p, x2)          Z = x1 w.p. p, else x2
    uniform(a, b)                 a < b
    normal(mean, var)             var > 0
    lognormal(log_mean, log_var)  Z = e^G, G ~ Normal(log_mean, log_var)
    exponential(rate)             rate > 0
    negated_exponential(rate)     Z = -Y, Y ~ Exponential(rate)
    negated_lognormal(...)        mirror of lognormal (closure under negation)

Every spec exposes sampling, the moment transform m(w) = E[e^{wZ}] with its
explicit finiteness domain, the derivative E[Z e^{wZ}], absolute moments
E|Z|^p, and (where it stays inside the family) the exponentially tilted law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import MomentExplosionError, SpecError

_FAMILIES = {
    "point_mass": ("value",),
    "two_point": ("x1", "p", "x2"),
    "uniform": ("a", "b"),
    "normal": ("mean", "var"),
    "lognormal": ("log_mean", "log_var"),
    "exponential": ("rate",),
    "negated_exponential": ("rate",),
    "negated_lognormal": ("log_mean", "log_var"),
}

_CONTINUOUS = {"uniform", "normal", "lognormal", "exponential", "negated_exponential", "negated_lognormal"}


class TransformDomain(NamedTuple):
    """Finiteness set of w -> E[e^{wZ}]; open or closed at each finite end."""

    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    def contains(self, w: float) -> bool:
        if self.lo < w < self.hi:
            return True
        if w == self.lo and self.lo_closed:
            return True
        if w == self.hi and self.hi_closed:
            return True
        return False


@dataclass(frozen=True)
class DistributionSpec:
    family: str
    params: tuple

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise SpecError(f"unknown distribution family {self.family!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.params) != len(_FAMILIES[self.family]):
            raise SpecError(
                f"{self.family} takes parameters {_FAMILIES[self.family]}, got {self.params}"
            )
        f, p = self.family, self.params
        if f == "two_point" and not 0.0 <= p[1] <= 1.0:
            raise SpecError("two_point probability must lie in [0, 1]")
        if f == "uniform" and not p[0] < p[1]:
            raise SpecError("uniform requires a < b")
        if f in ("normal", "lognormal", "negated_lognormal") and p[1] <= 0:
            raise SpecError(f"{f} variance must be positive")
        if f in ("exponential", "negated_exponential") and p[0] <= 0:
            raise SpecError(f"{f} rate must be positive")

    # -- sampling ----------------------------------------------------------

    def sample(self, rng: np.random.Generator, size=None):
        f, p = self.family, self.params
        if f == "point_mass":
            return np.full(size, p[0]) if size is not None else p[0]
        if f == "two_point":
            u = rng.random(size)
            return np.where(u < p[1], p[0], p[2]) if size is not None else (p[0] if u < p[1] else p[2])
        if f == "uniform":
            return rng.uniform(p[0], p[1], size)
        if f == "normal":
            return rng.normal(p[0], math.sqrt(p[1]), size)
        if f == "lognormal":
            return rng.lognormal(p[0], math.sqrt(p[1]), size)
        if f == "negated_lognormal":
            return -rng.lognormal(p[0], math.sqrt(p[1]), size)
        if f == "exponential":
            return rng.exponential(1.0 / p[0], size)
        if f == "negated_exponential":
            return -rng.exponential(1.0 / p[0], size)
        raise AssertionError(f)

    # -- moment transform ----------------------------------------------------

    def transform_domain(self) -> TransformDomain:
        f, p = self.family, self.params
        inf = math.inf
        if f in ("point_mass", "two_point", "uniform", "normal"):
            return TransformDomain(-inf, inf)
        if f == "lognormal":
            return TransformDomain(-inf, 0.0, hi_closed=True)
        if f == "negated_lognormal":
            return TransformDomain(0.0, inf, lo_closed=True)
        if f == "exponential":
            return TransformDomain(-inf, p[0])
        if f == "negated_exponential":
            return TransformDomain(-p[0], inf)
        raise AssertionError(f)

    def mgf_finite(self, w: float) -> bool:
        return self.transform_domain().contains(w)

    def _require_domain(self, w: float) -> None:
        if not self.mgf_finite(w):
            raise MomentExplosionError(
                f"E[exp(w Z)] infinite at w={w} for {self.family}{self.params}",
                offender=self,
            )

    def mgf(self, w: float) -> float:
        """E[e^{wZ}], exact on the reported domain."""
        self._require_domain(w)
        f, p = self.family, self.params
        if f == "point_mass":
            return math.exp(w * p[0])
        if f == "two_point":
            return p[1] * math.exp(w * p[0]) + (1.0 - p[1]) * math.exp(w * p[2])
        if f == "uniform":
            x = w * (p[1] - p[0])
            if abs(x) < 1e-12:
                return math.exp(w * p[0]) * (1.0 + x / 2.0 + x * x / 6.0)
            return math.exp(w * p[0]) * math.expm1(x) / x
        if f == "normal":
            return math.exp(p[0] * w + 0.5 * p[1] * w * w)
        if f == "lognormal":
            if w == 0.0:
                return 1.0
            return _lognormal_exp_moment(p[0], p[1], w, order=0)
        if f == "negated_lognormal":
            if w == 0.0:
                return 1.0
            return _lognormal_exp_moment(p[0], p[1], -w, order=0)
        if f == "exponential":
            return p[0] / (p[0] - w)
        if f == "negated_exponential":
            return p[0] / (p[0] + w)
        raise AssertionError(f)

    def mgf_prime(self, w: float) -> float:
        """E[Z e^{wZ}] on the same domain as ``mgf``."""
        self._require_domain(w)
        f, p = self.family, self.params
        if f == "point_mass":
            return p[0] * math.exp(w * p[0])
        if f == "two_point":
            return p[1] * p[0] * math.exp(w * p[0]) + (1.0 - p[1]) * p[2] * math.exp(w * p[2])
        if f == "uniform":
            a, b = p
            if abs(w) * max(abs(a), abs(b), 1.0) < 1e-5:
                m1 = (a + b) / 2.0
                m2 = (a * a + a * b + b * b) / 3.0
                m3 = (a + b) * (a * a + b * b) / 4.0
                return m1 + w * m2 + 0.5 * w * w * m3
            return (math.exp(w * b) * (w * b - 1.0) - math.exp(w * a) * (w * a - 1.0)) / (
                w * w * (b - a)
            )
        if f == "normal":
            return (p[0] + p[1] * w) * self.mgf(w)
        if f == "lognormal":
            return _lognormal_exp_moment(p[0], p[1], w, order=1)
        if f == "negated_lognormal":
            return -_lognormal_exp_moment(p[0], p[1], -w, order=1)
        if f == "exponential":
            return p[0] / (p[0] - w) ** 2
        if f == "negated_exponential":
            return -p[0] / (p[0] + w) ** 2
        raise AssertionError(f)

    # -- moments -------------------------------------------------------------

    def abs_moment(self, p_order: float) -> float:
        """E|Z|^p; finite for every family in the closed set."""
        if p_order < 0:
            raise SpecError("moment order must be nonnegative")
        if p_order == 0:
            return 1.0
        f, p = self.family, self.params
        if f == "point_mass":
            return abs(p[0]) ** p_order
        if f == "two_point":
            return p[1] * abs(p[0]) ** p_order + (1.0 - p[1]) * abs(p[2]) ** p_order
        if f == "uniform":
            a, b = p
            F = lambda x: math.copysign(abs(x) ** (p_order + 1.0), x) / (p_order + 1.0)
            return (F(b) - F(a)) / (b - a)
        if f == "normal":
            m, v = p
            s = math.sqrt(v)
            val, _ = integrate.quad(
                lambda z: abs(m + s * z) ** p_order * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi),
                -40,
                40,
            )
            return val
        if f in ("lognormal", "negated_lognormal"):
            return math.exp(p_order * p[0] + 0.5 * p_order * p_order * p[1])
        if f in ("exponential", "negated_exponential"):
            return math.exp(gammaln(p_order + 1.0) - p_order * math.log(p[0]))
        raise AssertionError(f)

    def mean(self) -> float:
        f, p = self.family, self.params
        if f == "point_mass":
            return p[0]
        if f == "two_point":
            return p[1] * p[0] + (1.0 - p[1]) * p[2]
        if f == "uniform":
            return (p[0] + p[1]) / 2.0
        if f == "normal":
            return p[0]
        if f == "lognormal":
            return math.exp(p[0] + p[1] / 2.0)
        if f == "negated_lognormal":
            return -math.exp(p[0] + p[1] / 2.0)
        if f == "exponential":
            return 1.0 / p[0]
        if f == "negated_exponential":
            return -1.0 / p[0]
        raise AssertionError(f)

    def second_moment(self) -> float:
        f, p = self.family, self.params
        if f == "point_mass":
            return p[0] ** 2
        if f == "two_point":
            return p[1] * p[0] ** 2 + (1.0 - p[1]) * p[2] ** 2
        if f == "uniform":
            a, b = p
            return (a * a + a * b + b * b) / 3.0
        if f == "normal":
            return p[0] ** 2 + p[1]
        if f in ("lognormal", "negated_lognormal"):
            return math.exp(2.0 * p[0] + 2.0 * p[1])
        if f in ("exponential", "negated_exponential"):
            return 2.0 / p[0] ** 2
        raise AssertionError(f)

    # -- structure -----------------------------------------------------------

    def negate(self) -> "DistributionSpec":
        """Law of -Z, staying within the closed family set."""
        f, p = self.family, self.params
        if f == "point_mass":
            return DistributionSpec(f, (-p[0],))
        if f == "two_point":
            return DistributionSpec(f, (-p[0], p[1], -p[2]))
        if f == "uniform":
            return DistributionSpec(f, (-p[1], -p[0]))
        if f == "normal":
            return DistributionSpec(f, (-p[0], p[1]))
        if f == "lognormal":
            return DistributionSpec("negated_lognormal", p)
        if f == "negated_lognormal":
            return DistributionSpec("lognormal", p)
        if f == "exponential":
            return DistributionSpec("negated_exponential", p)
        if f == "negated_exponential":
            return DistributionSpec("exponential", p)
        raise AssertionError(f)

    def tilt(self, theta: float) -> Optional["DistributionSpec"]:
        """Law with density proportional to e^{theta z}, when it stays in-family."""
        f, p = self.family, self.params
        if theta == 0.0:
            return self
        if f == "point_mass":
            return self
        if f == "two_point":
            w1 = p[1] * math.exp(theta * p[0])
            w2 = (1.0 - p[1]) * math.exp(theta * p[2])
            return DistributionSpec(f, (p[0], w1 / (w1 + w2), p[2]))
        if f == "normal":
            return DistributionSpec(f, (p[0] + theta * p[1], p[1]))
        if f == "exponential":
            if theta >= p[0]:
                raise MomentExplosionError(
                    f"tilt {theta} outside domain of exponential(rate={p[0]})", offender=self
                )
            return DistributionSpec(f, (p[0] - theta,))
        if f == "negated_exponential":
            if theta <= -p[0]:
                raise MomentExplosionError(
                    f"tilt {theta} outside domain of negated_exponential(rate={p[0]})",
                    offender=self,
                )
            return DistributionSpec(f, (p[0] + theta,))
        return None  # uniform / lognormal tilts leave the family

    def atoms(self) -> Optional[tuple]:
        """Atom list ((x, weight), ...) for purely atomic families, else None."""
        f, p = self.family, self.params
        if f == "point_mass":
            return ((p[0], 1.0),)
        if f == "two_point":
            return ((p[0], p[1]), (p[2], 1.0 - p[1]))
        return None

    def is_continuous(self) -> bool:
        return self.family in _CONTINUOUS

    def is_zero(self) -> bool:
        """True iff Z = 0 almost surely."""
        return self.family == "point_mass" and self.params[0] == 0.0


def _lognormal_exp_moment(log_mean: float, log_var: float, w: float, order: int) -> float:
    """E[Z^order e^{wZ}] for Z = e^G lognormal, w <= 0, by adaptive quadrature."""
    if w > 0:
        raise MomentExplosionError("lognormal transform requires w <= 0")
    s = math.sqrt(log_var)

    def integrand(x):
        z = math.exp(log_mean + s * x)
        return (z ** order) * math.exp(w * z) * math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)

    val, err = integrate.quad(integrand, -40, 40, limit=200)
    return val


# -- factory helpers ---------------------------------------------------------

def point_mass(value: float) -> DistributionSpec:
    return DistributionSpec("point_mass", (value,))


def two_point(x1: float, p: float, x2: float) -> DistributionSpec:
    return DistributionSpec("two_point", (x1, p, x2))


def uniform(a: float, b: float) -> DistributionSpec:
    return DistributionSpec("uniform", (a, b))


def normal(mean: float, var: float) -> DistributionSpec:
    return DistributionSpec("normal", (mean, var))


def lognormal(log_mean: float, log_var: float) -> DistributionSpec:
    return DistributionSpec("lognormal", (log_mean, log_var))


def exponential(rate: float) -> DistributionSpec:
    return DistributionSpec("exponential", (rate,))


def negated_exponential(rate: float) -> DistributionSpec:
    return DistributionSpec("negated_exponential", (rate,))


ZERO = point_mass(0.0)
