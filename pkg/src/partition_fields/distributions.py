"""Heavy-tailed laws on the positive integers and bounded centered marginals.

Two families are provided:

* ``KarlinZipf``: p_k = k**(-1/alpha) / zeta(1/alpha), alpha in (0, 1).  The
  counting function nu(x) = #{k : p_k >= 1/x} then equals
  floor((x/Z)**alpha), i.e. the regular-variation index is alpha with the
  slowly varying part frozen to the constant Z**(-alpha).
* ``HsTail``: p_n = n**(-alpha) - (n+1)**(-alpha), alpha in (0, 1/2), so the
  tail sum from n equals n**(-alpha) exactly and the slowly varying part is
  the constant 1.

Slowly varying functions are deliberately realized as constants: finite-n
normalizations become exact and verification bands do not have to absorb an
uncontrolled bias term.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import zeta

from ._hashing import low_uniforms_from, signs_from, uniforms_from

__all__ = [
    "PmfKind",
    "PowerLawPmf",
    "FinitePmf",
    "MarginalLaw",
    "make_karlin_pmf",
    "make_hs_pmf",
    "sample",
    "pmf_at",
    "tail_at",
]

# Largest label/jump magnitude we materialize.  Mass above is handled by
# resampling (KarlinZipf) or clamping (HsTail, where any jump this large
# leaves every window of interest anyway); both choices are deterministic.
_MAX_VALUE = 1 << 62


class PmfKind(enum.Enum):
    KARLIN_ZIPF = "karlin_zipf"
    HS_TAIL = "hs_tail"


@dataclass(frozen=True)
class PowerLawPmf:
    """A regularly varying pmf on {1, 2, ...} with exact analytic accessors."""

    kind: PmfKind
    alpha: float
    sv_constant: float

    def __post_init__(self):
        if self.kind is PmfKind.KARLIN_ZIPF:
            if not 0.0 < self.alpha < 1.0:
                raise ValueError(f"KarlinZipf requires alpha in (0,1), got {self.alpha}")
        elif not 0.0 < self.alpha < 0.5:
            raise ValueError(f"HsTail requires alpha in (0,1/2), got {self.alpha}")
        self._self_check()

    # -- cached constants -------------------------------------------------
    @cached_property
    def _s(self) -> float:
        # Zipf exponent 1/alpha (KarlinZipf only)
        return 1.0 / self.alpha

    @cached_property
    def _zeta_s(self) -> float:
        return float(zeta(self._s))

    # -- analytic accessors ------------------------------------------------
    def pmf_at(self, k) -> np.ndarray | float:
        """Exact probability of the label/jump value k (vectorized)."""
        k = np.asarray(k, dtype=np.float64)
        if np.any(k < 1):
            raise ValueError("pmf is supported on k >= 1")
        if self.kind is PmfKind.KARLIN_ZIPF:
            out = k ** (-self._s) / self._zeta_s
        else:
            out = k ** (-self.alpha) - (k + 1.0) ** (-self.alpha)
        return out if out.ndim else float(out)

    def tail_at(self, n) -> np.ndarray | float:
        """Exact upper tail sum over {n, n+1, ...} (vectorized)."""
        n = np.asarray(n, dtype=np.float64)
        if np.any(n < 1):
            raise ValueError("tail is defined for n >= 1")
        if self.kind is PmfKind.KARLIN_ZIPF:
            out = zeta(self._s, n) / self._zeta_s
        else:
            out = n ** (-self.alpha)
        return out if out.ndim else float(out)

    def pmf_block(self, lo: int, hi: int) -> np.ndarray:
        """p_k for k in [lo, hi) as an array."""
        return np.asarray(self.pmf_at(np.arange(lo, hi, dtype=np.float64)))

    def tail_sq_at(self, n: int) -> float:
        """Upper bound on the squared-mass tail sum over {n, n+1, ...}.

        Exact Hurwitz-zeta value for KarlinZipf; for HsTail it uses
        p_k <= alpha * k**(-alpha-1).
        """
        if self.kind is PmfKind.KARLIN_ZIPF:
            return float(zeta(2.0 * self._s, n)) / self._zeta_s**2
        return self.alpha**2 * float(zeta(2.0 + 2.0 * self.alpha, n))

    # -- sampling ------------------------------------------------------------
    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Exact draws; scalar when size is None, else int64 array."""
        m = 1 if size is None else int(size)
        if self.kind is PmfKind.HS_TAIL:
            out = _sample_hs(self.alpha, rng, m)
        else:
            out = _sample_zipf(self._s, rng, m)
        return int(out[0]) if size is None else out

    def _self_check(self, m: int = 1024, tol: float = 1e-12) -> None:
        # mass conservation: explicit head plus analytic tail
        head = float(np.sum(self.pmf_block(1, m + 1), dtype=np.longdouble))
        total = head + float(self.tail_at(m + 1))
        if abs(total - 1.0) > tol:
            raise AssertionError(f"pmf mass check failed: {total}")


@lru_cache(maxsize=128)
def make_karlin_pmf(alpha: float) -> PowerLawPmf:
    """Zipf-type law p_k = k**(-1/alpha)/Z; sv_constant = Z**(-alpha)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0,1), got {alpha}")
    z = float(zeta(1.0 / alpha))
    return PowerLawPmf(PmfKind.KARLIN_ZIPF, float(alpha), z ** (-alpha))


@lru_cache(maxsize=128)
def make_hs_pmf(alpha: float) -> PowerLawPmf:
    """Exact-tail law with tail(n) = n**(-alpha); sv_constant = 1."""
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0,1/2), got {alpha}")
    return PowerLawPmf(PmfKind.HS_TAIL, float(alpha), 1.0)


# Spec-style free-function aliases.
def sample(pmf, rng: np.random.Generator, size: int | None = None):
    return pmf.sample(rng, size)


def pmf_at(pmf, k):
    return pmf.pmf_at(k)


def tail_at(pmf, n):
    return pmf.tail_at(n)


def _sample_hs(alpha: float, rng: np.random.Generator, m: int) -> np.ndarray:
    # Exact inversion of the tail: P(k >= n) = n**(-alpha).
    u = rng.random(m)
    with np.errstate(over="ignore"):
        x = (1.0 - u) ** (-1.0 / alpha)
    x = np.minimum(x, float(_MAX_VALUE))
    k = np.ceil(x).astype(np.int64) - 1
    np.maximum(k, 1, out=k)
    return k


def _sample_zipf(s: float, rng: np.random.Generator, m: int) -> np.ndarray:
    """Rejection sampler for p_k proportional to k**(-s), s > 1 (Devroye).

    Proposal: X continuous with density (s-1) x**(-s) on [1, inf) by
    inversion, discretized as k = floor(X).  The acceptance ratio
    T/(k(T-1)) with T = (1+1/k)**(s-1) is maximized at k = 1, which yields
    the constant b/(b-1), b = 2**(s-1); expected proposals per draw are
    bounded on compact alpha sets.  expm1/log1p keep T-1 exact for huge k.
    Proposals above 2**62 are rejected (resampled), i.e. draws follow the
    law conditioned on k < 2**62; the neglected mass is tail(2**62).
    """
    x = s - 1.0
    inv_b1 = 1.0 / np.expm1(x * np.log(2.0))  # 1/(b-1)
    inv_b = 2.0**-x
    out = np.empty(m, dtype=np.int64)
    filled = 0
    while filled < m:
        todo = m - filled
        u = rng.random(todo)
        v = rng.random(todo)
        with np.errstate(over="ignore"):
            xf = u ** (-1.0 / x)
        ok = xf < float(_MAX_VALUE)
        kf = np.floor(xf, where=ok, out=np.ones_like(xf))
        tm1 = np.expm1(x * np.log1p(1.0 / kf))
        accept = ok & (v * kf * tm1 * inv_b1 <= (tm1 + 1.0) * inv_b)
        n_acc = int(np.count_nonzero(accept))
        out[filled : filled + n_acc] = kf[accept].astype(np.int64)
        filled += n_acc
    return out


@dataclass(frozen=True)
class FinitePmf:
    """Finitely supported pmf on {1..m}; oracle/test companion to PowerLawPmf.

    Implements the same accessor surface so the occupancy expectations and the
    renewal recursion can be exercised against hand-computable inputs.
    """

    probs: tuple[float, ...]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")

    @cached_property
    def _p(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)

    @cached_property
    def _tail(self) -> np.ndarray:
        # _tail[i] = sum of p_k for k >= i+1
        return np.concatenate((np.cumsum(self._p[::-1])[::-1], [0.0]))

    def pmf_at(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        idx = np.clip(k - 1, 0, len(self.probs) - 1)
        out = np.where((k >= 1) & (k <= len(self.probs)), self._p[idx], 0.0)
        return out if out.size > 1 else float(out[0])

    def tail_at(self, n):
        n = np.atleast_1d(np.asarray(n, dtype=np.int64))
        out = self._tail[np.clip(n - 1, 0, len(self.probs))]
        return out if out.size > 1 else float(out[0])

    def pmf_block(self, lo: int, hi: int) -> np.ndarray:
        out = np.zeros(hi - lo)
        ks = np.arange(lo, hi)
        inside = (ks >= 1) & (ks <= len(self.probs))
        out[inside] = self._p[ks[inside] - 1]
        return out

    def tail_sq_at(self, n: int) -> float:
        if n > len(self.probs):
            return 0.0
        return float(np.sum(self._p[n - 1 :] ** 2))

    def sample(self, rng: np.random.Generator, size: int | None = None):
        cdf = np.cumsum(self._p)
        m = 1 if size is None else int(size)
        out = (np.searchsorted(cdf, rng.random(m), side="right") + 1).astype(np.int64)
        return int(out[0]) if size is None else out


class MarginalKind(enum.Enum):
    RADEMACHER = "rademacher"
    SCALED_SIGN = "scaled_sign"
    TWO_POINT = "two_point"


@dataclass(frozen=True)
class MarginalLaw:
    """Bounded, exactly centered two-point law for spin values.

    All three kinds reduce to a two-point law taking ``value_a`` with
    probability ``prob_a`` and ``value_b`` otherwise, with
    prob_a*value_a + (1-prob_a)*value_b == 0.
    """

    kind: MarginalKind = MarginalKind.RADEMACHER
    value_a: float = 1.0
    value_b: float = -1.0
    prob_a: float = 0.5

    def __post_init__(self):
        scale = max(abs(self.value_a), abs(self.value_b), 1e-300)
        if not 0.0 < self.prob_a < 1.0:
            raise ValueError("prob_a must lie in (0,1)")
        mean = self.prob_a * self.value_a + (1.0 - self.prob_a) * self.value_b
        if abs(mean) > 1e-12 * scale:
            raise ValueError(f"marginal law must be centered, mean={mean}")

    @classmethod
    def rademacher(cls) -> "MarginalLaw":
        return cls()

    @classmethod
    def scaled_sign(cls, c: float) -> "MarginalLaw":
        if c <= 0:
            raise ValueError("scale must be positive")
        return cls(MarginalKind.SCALED_SIGN, float(c), -float(c), 0.5)

    @classmethod
    def two_point(cls, a: float, b: float, p: float) -> "MarginalLaw":
        return cls(MarginalKind.TWO_POINT, float(a), float(b), float(p))

    @property
    def second_moment(self) -> float:
        return self.prob_a * self.value_a**2 + (1.0 - self.prob_a) * self.value_b**2

    @property
    def support_bound(self) -> float:
        return max(abs(self.value_a), abs(self.value_b))

    @property
    def is_rademacher(self) -> bool:
        return self.kind is MarginalKind.RADEMACHER

    def draw_from_hash(self, h: np.ndarray) -> np.ndarray:
        """One value per hash word, distributed as the law itself."""
        if self.is_rademacher:
            return signs_from(h).astype(np.float64)
        return np.where(uniforms_from(h) < self.prob_a, self.value_a, self.value_b)

    def draw_symmetrized_from_hash(self, h: np.ndarray) -> np.ndarray:
        """One value of (independent sign) * (law draw) per hash word.

        Sign and magnitude come from disjoint bit ranges of the same word.
        """
        if self.is_rademacher:
            return signs_from(h).astype(np.float64)
        z = np.where(low_uniforms_from(h) < self.prob_a, self.value_a, self.value_b)
        return signs_from(h) * z

    def sample(self, rng: np.random.Generator, size: int | None = None):
        m = 1 if size is None else int(size)
        out = np.where(rng.random(m) < self.prob_a, self.value_a, self.value_b)
        return float(out[0]) if size is None else out
