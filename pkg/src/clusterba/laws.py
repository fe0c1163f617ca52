"""Cluster-size distributions: pmf, generating function, moments, sampling.

A law describes how many stationary blockades a cluster site starts with.
Size 0 is allowed and produces a vacant site.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

_MASS_TOL = 1e-12
_RENORM_TOL = 1e-9


class LawError(ValueError):
    """Invalid law parameters or law specification string."""


def _check_t(t):
    if not 0.0 <= t <= 1.0:
        raise LawError("pgf argument must lie in [0, 1], got %r" % (t,))


@dataclass(frozen=True)
class ClusterLaw:
    """Base class; subclasses implement the pgf and sampling."""

    def pgf(self, t):
        """f(t) = sum_k mu_k t^k."""
        _check_t(t)
        return self._pgf(t)

    def pgf_d1(self, t):
        """First derivative of the generating function."""
        _check_t(t)
        return self._d1(t)

    def pgf_d2(self, t):
        """Second derivative; math.inf marks a divergent second moment."""
        _check_t(t)
        return self._d2(t)

    def moments(self):
        """(mean, variance); variance may be math.inf."""
        mean = self.pgf_d1(1.0)
        d2 = self.pgf_d2(1.0)
        if math.isinf(d2):
            return mean, math.inf
        return mean, d2 + mean - mean * mean

    def pmf(self, k):
        raise NotImplementedError

    def sample(self, rng, size):
        raise NotImplementedError

    @property
    def spec(self):
        """Round-trippable text form (see parse_law)."""
        raise NotImplementedError

    # Finite-support laws expose their weight vector; None for geometric.
    @property
    def weights(self):
        return None


@dataclass(frozen=True)
class Delta(ClusterLaw):
    """All clusters have exactly k blockades."""

    k: int

    def __post_init__(self):
        if self.k < 0 or self.k != int(self.k):
            raise LawError("delta size must be a nonnegative integer")

    def _pgf(self, t):
        return t ** self.k

    def _d1(self, t):
        if self.k == 0:
            return 0.0
        return self.k * t ** (self.k - 1)

    def _d2(self, t):
        if self.k <= 1:
            return 0.0
        return self.k * (self.k - 1) * t ** (self.k - 2)

    def pmf(self, k):
        return 1.0 if k == self.k else 0.0

    def sample(self, rng, size):
        return np.full(size, self.k, dtype=np.int64)

    @property
    def spec(self):
        return "delta:%d" % self.k

    @property
    def weights(self):
        w = np.zeros(self.k + 1)
        w[self.k] = 1.0
        return w


@dataclass(frozen=True)
class Geometric(ClusterLaw):
    """mu_k = (1-beta)^(k-1) beta for k >= 1."""

    beta: float

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise LawError("geometric parameter must lie in (0, 1)")

    def _pgf(self, t):
        return self.beta * t / (1.0 - (1.0 - self.beta) * t)

    def _d1(self, t):
        return self.beta / (1.0 - (1.0 - self.beta) * t) ** 2

    def _d2(self, t):
        b = self.beta
        return 2.0 * b * (1.0 - b) / (1.0 - (1.0 - b) * t) ** 3

    def pmf(self, k):
        if k < 1:
            return 0.0
        return (1.0 - self.beta) ** (k - 1) * self.beta

    def sample(self, rng, size):
        return rng.geometric(self.beta, size).astype(np.int64)

    @property
    def spec(self):
        return "geom:%r" % self.beta


@dataclass(frozen=True)
class TwoPoint(ClusterLaw):
    """Mass (k-1)/k at 0 and 1/k at k; mean 1, variance k-1."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise LawError("twopoint size must be a positive integer")

    def _pgf(self, t):
        return (self.k - 1.0) / self.k + t ** self.k / self.k

    def _d1(self, t):
        return t ** (self.k - 1)

    def _d2(self, t):
        if self.k == 1:
            return 0.0
        return (self.k - 1.0) * t ** (self.k - 2)

    def pmf(self, k):
        if k == 0:
            return (self.k - 1.0) / self.k
        if k == self.k:
            return 1.0 / self.k
        return 0.0

    def sample(self, rng, size):
        hit = rng.random(size) < 1.0 / self.k
        return np.where(hit, self.k, 0).astype(np.int64)

    @property
    def spec(self):
        return "twopoint:%d" % self.k

    @property
    def weights(self):
        w = np.zeros(self.k + 1)
        w[0] = (self.k - 1.0) / self.k
        w[self.k] = 1.0 / self.k
        return w


@dataclass(frozen=True)
class CustomPmf(ClusterLaw):
    """Explicit finite weight vector, index = cluster size."""

    raw_weights: tuple

    def __post_init__(self):
        w = np.asarray(self.raw_weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise LawError("pmf weights must be a nonempty vector")
        if np.any(w < 0):
            raise LawError("pmf weights must be nonnegative")
        total = w.sum()
        if abs(total - 1.0) > _RENORM_TOL:
            raise LawError("pmf weights sum to %r, not 1" % total)
        object.__setattr__(self, "raw_weights", tuple(float(x) for x in w))

    @cached_property
    def _w(self):
        w = np.asarray(self.raw_weights)
        return w / w.sum()

    def _pgf(self, t):
        return float(np.polynomial.polynomial.polyval(t, self._w))

    def _d1(self, t):
        w = self._w
        k = np.arange(len(w))
        c = (w * k)[1:]
        if c.size == 0:
            return 0.0
        return float(np.polynomial.polynomial.polyval(t, c))

    def _d2(self, t):
        w = self._w
        k = np.arange(len(w))
        c = (w * k * (k - 1))[2:]
        if c.size == 0:
            return 0.0
        return float(np.polynomial.polynomial.polyval(t, c))

    def pmf(self, k):
        if 0 <= k < len(self._w):
            return float(self._w[k])
        return 0.0

    def sample(self, rng, size):
        return rng.choice(len(self._w), size=size, p=self._w).astype(np.int64)

    @property
    def spec(self):
        return "pmf:" + ",".join(repr(x) for x in self.raw_weights)

    @property
    def weights(self):
        return self._w.copy()


@dataclass(frozen=True)
class PowerLaw(ClusterLaw):
    """mu_k proportional to k^(-alpha) for 1 <= k <= cutoff.

    The cutoff keeps every moment finite; raising it approaches the
    infinite-variance regime when alpha <= 3.
    """

    alpha: float
    cutoff: int

    def __post_init__(self):
        if self.alpha <= 1.0:
            raise LawError("power-law exponent must exceed 1")
        if self.cutoff < 1:
            raise LawError("power-law cutoff must be a positive integer")

    @cached_property
    def _w(self):
        k = np.arange(1, self.cutoff + 1, dtype=np.float64)
        w = k ** (-self.alpha)
        w /= w.sum()
        full = np.zeros(self.cutoff + 1)
        full[1:] = w
        return full

    def _pgf(self, t):
        return float(np.polynomial.polynomial.polyval(t, self._w))

    def _d1(self, t):
        w = self._w
        k = np.arange(len(w))
        return float(np.polynomial.polynomial.polyval(t, (w * k)[1:]))

    def _d2(self, t):
        w = self._w
        k = np.arange(len(w))
        c = (w * k * (k - 1))[2:]
        if c.size == 0:
            return 0.0
        return float(np.polynomial.polynomial.polyval(t, c))

    def pmf(self, k):
        if 1 <= k <= self.cutoff:
            return float(self._w[k])
        return 0.0

    def sample(self, rng, size):
        return (1 + rng.choice(self.cutoff, size=size, p=self._w[1:])).astype(
            np.int64)

    @property
    def spec(self):
        return "powerlaw:%r,%d" % (self.alpha, self.cutoff)

    @property
    def weights(self):
        return self._w.copy()


def parse_law(text):
    """Parse a law specification: delta:k, geom:beta, twopoint:k,
    pmf:w0,w1,..., powerlaw:alpha,cutoff."""
    name, sep, arg = text.partition(":")
    if not sep:
        raise LawError("law spec %r is missing parameters" % text)
    try:
        if name == "delta":
            return Delta(int(arg))
        if name == "geom":
            return Geometric(float(arg))
        if name == "twopoint":
            return TwoPoint(int(arg))
        if name == "pmf":
            return CustomPmf(tuple(float(x) for x in arg.split(",")))
        if name == "powerlaw":
            alpha, cutoff = arg.split(",")
            return PowerLaw(float(alpha), int(cutoff))
    except LawError:
        raise
    except ValueError as exc:
        raise LawError("bad law spec %r: %s" % (text, exc)) from exc
    raise LawError("unknown law family %r" % name)
