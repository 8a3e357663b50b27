"""Posting-interval distributions and the Poisson-mixture kernel.

The interval between consecutive bulk postings is an i.i.d. draw from a
distribution A with mean ``a``.  Three families are supported: exponential,
deterministic (a point mass at ``a``) and Erlang with integer shape ``m``
(rate ``m/a``, so the mean is exactly ``a``).

Two quantities drive every downstream computation:

* ``lst`` -- the Laplace-Stieltjes transform ``E[exp(-theta * D)]``;
* ``psi`` -- the probability that exactly ``k`` events of a Poisson process
  with rate ``lam`` fall inside one interval,
  ``psi(k) = integral exp(-lam x) (lam x)^k / k! dA(x)``.

Closed forms exist for all three families (geometric, Poisson and negative
binomial mixtures respectively); adaptive quadrature of the defining integral
is kept as an independent cross-check oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats
from scipy.special import gammaln

EXPONENTIAL = "exponential"
DETERMINISTIC = "deterministic"
ERLANG = "erlang"

_KINDS = (EXPONENTIAL, DETERMINISTIC, ERLANG)


@dataclass(frozen=True)
class PostingDistribution:
    """Distribution of the interval between consecutive postings.

    ``shape`` is only meaningful for the Erlang family; it defaults to 1 and
    is ignored by the other kinds.
    """

    kind: str
    mean: float
    shape: int = 1

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(
                f"unknown distribution kind {self.kind!r}; expected one of {_KINDS}"
            )
        if not (self.mean > 0):
            raise ValueError(f"mean must be positive, got {self.mean}")
        if self.kind == ERLANG:
            if int(self.shape) != self.shape or self.shape < 1:
                raise ValueError(f"erlang shape must be an integer >= 1, got {self.shape}")

    # -- basic functionals ------------------------------------------------

    def lst(self, theta: float) -> float:
        """Laplace-Stieltjes transform ``E[exp(-theta * D)]`` for theta >= 0."""
        if theta < 0:
            raise ValueError(f"theta must be non-negative, got {theta}")
        a = self.mean
        if self.kind == EXPONENTIAL:
            return 1.0 / (1.0 + a * theta)
        if self.kind == DETERMINISTIC:
            return math.exp(-a * theta)
        m = self.shape
        return (1.0 + a * theta / m) ** (-m)

    def cdf(self, x):
        """CDF of the interval length, vectorized over ``x``."""
        x = np.asarray(x, dtype=float)
        a = self.mean
        if self.kind == EXPONENTIAL:
            return np.where(x < 0, 0.0, -np.expm1(-x / a))
        if self.kind == DETERMINISTIC:
            return np.where(x >= a, 1.0, 0.0)
        return stats.gamma.cdf(x, self.shape, scale=a / self.shape)

    def variance(self) -> float:
        if self.kind == EXPONENTIAL:
            return self.mean**2
        if self.kind == DETERMINISTIC:
            return 0.0
        return self.mean**2 / self.shape

    # -- Poisson-mixture kernel -------------------------------------------

    def psi(self, lam: float, k) -> float | np.ndarray:
        """P{exactly k rate-``lam`` events during one interval}, closed form.

        Exponential intervals give a geometric law, deterministic a Poisson
        law and Erlang a negative binomial with parameters ``m`` and
        ``m / (m + lam * a)``.  Vectorized over ``k``.
        """
        if lam <= 0:
            raise ValueError(f"lam must be positive, got {lam}")
        la = lam * self.mean
        k = np.asarray(k)
        if np.any(k < 0):
            raise ValueError("k must be non-negative")
        if self.kind == EXPONENTIAL:
            p = 1.0 / (1.0 + la)
            out = p * np.exp(k * np.log1p(-p))
        elif self.kind == DETERMINISTIC:
            out = stats.poisson.pmf(k, la)
        else:
            m = self.shape
            out = stats.nbinom.pmf(k, m, m / (m + la))
        return float(out) if out.ndim == 0 else out

    def psi_quadrature(self, lam: float, k: int) -> float:
        """Same kernel evaluated by adaptive quadrature of the defining
        integral; independent cross-check for :meth:`psi`.

        For the deterministic kind the mixing measure is a point mass, so the
        integral collapses to the integrand evaluated at the mass point.
        """
        if lam <= 0:
            raise ValueError(f"lam must be positive, got {lam}")
        if k < 0:
            raise ValueError("k must be non-negative")
        a = self.mean

        def poisson_weight(x):
            with np.errstate(divide="ignore"):
                logw = -lam * x + k * np.log(lam * x) - gammaln(k + 1)
            return np.exp(logw) if x > 0 else (1.0 if k == 0 else 0.0)

        if self.kind == DETERMINISTIC:
            return poisson_weight(a)
        if self.kind == EXPONENTIAL:
            density = lambda x: math.exp(-x / a) / a
            upper = -a * math.log(1e-13)
        else:
            m = self.shape
            frozen = stats.gamma(m, scale=a / m)
            density = frozen.pdf
            upper = float(frozen.ppf(1.0 - 1e-14))
        # the integrand peaks near x = k / lam; hint that to the integrator
        peak = min(max(k / lam, 1e-6), upper * 0.999)
        value, _ = integrate.quad(
            lambda x: poisson_weight(x) * density(x),
            0.0,
            upper,
            epsabs=1e-12,
            epsrel=1e-12,
            limit=400,
            points=[peak, a],
        )
        return value

    def psi_row(self, lam: float, kmax: int) -> tuple[np.ndarray, float]:
        """Kernel values for k = 0..kmax plus the remaining tail mass."""
        if kmax < 0:
            raise ValueError(f"kmax must be non-negative, got {kmax}")
        row = np.asarray(self.psi(lam, np.arange(kmax + 1)), dtype=float)
        tail = max(1.0 - float(row.sum()), 0.0)
        return row, tail

    # -- sampling ----------------------------------------------------------

    def sample(self, rng: np.random.Generator, size=None):
        """Draw interval lengths using the caller-owned generator."""
        a = self.mean
        if self.kind == EXPONENTIAL:
            return rng.exponential(a, size)
        if self.kind == DETERMINISTIC:
            return a if size is None else np.full(size, a)
        return rng.gamma(self.shape, a / self.shape, size)


def parse_distribution(spec: dict) -> PostingDistribution:
    """Build a distribution from a tagged config record.

    Accepted forms: ``{"kind": "exponential", "mean": 1.3}`` and
    ``{"kind": "erlang", "mean": 1.3, "shape": 3}``.  Unknown keys are
    rejected by name.
    """
    if not isinstance(spec, dict):
        raise ValueError(f"distribution spec must be a mapping, got {type(spec).__name__}")
    allowed = {"kind", "mean", "shape"}
    for key in spec:
        if key not in allowed:
            raise ValueError(f"unknown distribution key {key!r}")
    if "kind" not in spec or "mean" not in spec:
        raise ValueError("distribution spec requires 'kind' and 'mean'")
    return PostingDistribution(
        kind=str(spec["kind"]),
        mean=float(spec["mean"]),
        shape=int(spec.get("shape", 1)),
    )
