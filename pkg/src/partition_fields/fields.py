"""Partition-driven spin fields and their partial sums at grid corners.

Every model follows the same recipe: sample the partition structure per
direction, attach replayable spin values to partition classes through the
keyed hash, materialize the spin field X, and sweep prefix sums once to read
off S at the requested corners floor(n*t).  All three 2D models share the
sweep; they differ only in what a "class" is per direction (urn box with
alternating signs, or forest root with identical signs).

Normalizations divide by Z so that the normalized field converges to the
*standard* fractional Brownian sheet; the plain power-law normalization is
recoverable by multiplying sigma back (both are reported).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy.special import gamma

from ._hashing import hash1, hash2, signs_from
from .distributions import MarginalLaw, make_hs_pmf, make_karlin_pmf
from .partition1d import UrnPath, roots_of, sample_forest, sample_urn
from .renewal import bn_sq_growth_constant, cached_renewal_sequence, var_xstar
from .seeding import spin_key

__all__ = [
    "ModelKind",
    "ModelSpec",
    "CornerGrid",
    "FieldSample",
    "simulate",
    "simulate_karlin1d",
    "simulate_hs1d",
    "simulate_karlin2d",
    "simulate_hs2d",
    "simulate_combined",
    "rectangle_sum",
    "normalization",
    "karlin1d_field",
]

DEFAULT_FOREST_FLOOR = 10**5
_RENEWAL_KMAX_NORM = 1 << 18


class ModelKind(enum.Enum):
    KARLIN_1D = "karlin1d"
    GENERALIZED_KARLIN_1D = "generalized-karlin1d"
    HS_1D = "hs1d"
    GENERALIZED_HS_1D = "generalized-hs1d"
    KARLIN_2D = "karlin2d"
    HS_2D = "hs2d"
    COMBINED_2D = "combined2d"


_1D_KINDS = {
    ModelKind.KARLIN_1D,
    ModelKind.GENERALIZED_KARLIN_1D,
    ModelKind.HS_1D,
    ModelKind.GENERALIZED_HS_1D,
}
_GENERALIZED = {ModelKind.GENERALIZED_KARLIN_1D, ModelKind.GENERALIZED_HS_1D}
# per-direction admissible alpha ranges; "karlin" means open (0,1), "hs" (0,1/2)
_ALPHA_DOMAINS = {
    ModelKind.KARLIN_1D: ("karlin",),
    ModelKind.GENERALIZED_KARLIN_1D: ("karlin",),
    ModelKind.HS_1D: ("hs",),
    ModelKind.GENERALIZED_HS_1D: ("hs",),
    ModelKind.KARLIN_2D: ("karlin", "karlin"),
    ModelKind.HS_2D: ("hs", "hs"),
    ModelKind.COMBINED_2D: ("hs", "karlin"),
}


@dataclass(frozen=True)
class ModelSpec:
    """Which model to simulate, at which horizons."""

    kind: ModelKind
    alphas: tuple[float, ...]
    n: tuple[int, ...]
    marginal: MarginalLaw = field(default_factory=MarginalLaw.rademacher)
    forest_depth: int | None = None

    def __post_init__(self):
        domains = _ALPHA_DOMAINS[self.kind]
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        if len(self.alphas) != len(domains) or len(self.n) != len(domains):
            raise ValueError(
                f"{self.kind.value} needs {len(domains)} alpha(s) and horizon(s)"
            )
        for a, dom in zip(self.alphas, domains):
            hi = 1.0 if dom == "karlin" else 0.5
            if not 0.0 < a < hi:
                raise ValueError(f"alpha={a} outside (0,{hi}) for {self.kind.value}")
        if any(v < 1 for v in self.n):
            raise ValueError("horizons must be >= 1")
        if self.forest_depth is not None and self.forest_depth < 1:
            raise ValueError("forest_depth must be positive")
        if self.kind not in _GENERALIZED and not self.marginal.is_rademacher:
            raise ValueError(f"{self.kind.value} uses ±1 spins; marginal laws apply to generalized variants")

    @property
    def is_2d(self) -> bool:
        return self.kind not in _1D_KINDS

    def hurst(self) -> tuple[float, ...]:
        """Limit Hurst index per direction: alpha/2 (urn), alpha + 1/2 (forest)."""
        return tuple(
            a / 2.0 if dom == "karlin" else a + 0.5
            for a, dom in zip(self.alphas, _ALPHA_DOMAINS[self.kind])
        )

    def effective_forest_depth(self, hi: int) -> int:
        if self.forest_depth is not None:
            return self.forest_depth
        return max(DEFAULT_FOREST_FLOOR, 64 * hi)


@dataclass(frozen=True)
class CornerGrid:
    """Evaluation times in (0,1], strictly increasing; t2 is None for 1D."""

    t1: tuple[float, ...]
    t2: tuple[float, ...] | None = None

    def __post_init__(self):
        for ts in (self.t1, self.t2):
            if ts is None:
                continue
            arr = np.asarray(ts, dtype=np.float64)
            if arr.size == 0 or np.any(arr <= 0.0) or arr[-1] > 1.0 or np.any(np.diff(arr) <= 0):
                raise ValueError("grid times must be strictly increasing within (0, 1]")
        object.__setattr__(self, "t1", tuple(float(t) for t in self.t1))
        if self.t2 is not None:
            object.__setattr__(self, "t2", tuple(float(t) for t in self.t2))

    @property
    def is_2d(self) -> bool:
        return self.t2 is not None

    def shape(self) -> tuple[int, ...]:
        return (len(self.t1),) if self.t2 is None else (len(self.t1), len(self.t2))


def _corner_floor(n: int, ts: tuple[float, ...]) -> np.ndarray:
    # floor(n*t) with a guard against 699.9999999999999-style representation
    return np.floor(n * np.asarray(ts) + 1e-9).astype(np.int64)


@dataclass(frozen=True)
class FieldSample:
    """Partial sums of one replicate at the grid corners."""

    spec: ModelSpec
    grid: CornerGrid
    raw: np.ndarray
    normalized: np.ndarray
    z_norm: float
    sigma: float
    seed: object = None
    metadata: dict = field(default_factory=dict)


def _check_kind(spec: ModelSpec, allowed: set[ModelKind]) -> None:
    if spec.kind not in allowed:
        raise ValueError(f"model kind {spec.kind.value} not handled by this simulator")


@lru_cache(maxsize=64)
def _forest_constants(alpha: float) -> tuple[float, float]:
    """(sum of q_k^2, Var(X*)) for the exact-tail jump law at ``alpha``."""
    rs = cached_renewal_sequence(make_hs_pmf(alpha), _RENEWAL_KMAX_NORM)
    varx = var_xstar(rs, warn=False)
    return 1.0 / varx, varx


def normalization(spec: ModelSpec) -> tuple[float, float]:
    """(Z, sigma) such that S/Z converges to the standard limit sheet.

    Z = sigma * prod_q n_q^{H_q} * (slowly-varying constants)^(1/2), where
    sigma^2 is the model's limit variance at t = 1.
    """
    m2 = spec.marginal.second_moment
    kind = spec.kind
    if kind in (ModelKind.KARLIN_1D, ModelKind.GENERALIZED_KARLIN_1D):
        (a,), (n,) = spec.alphas, spec.n
        sigma_sq = gamma(1 - a) * 2 ** (a - 1) * m2
        z = math.sqrt(sigma_sq * make_karlin_pmf(a).sv_constant) * n ** (a / 2)
    elif kind in (ModelKind.HS_1D, ModelKind.GENERALIZED_HS_1D):
        (a,), (n,) = spec.alphas, spec.n
        sigma_sq = bn_sq_growth_constant(a) * _forest_constants(a)[1] * m2
        z = math.sqrt(sigma_sq) * n ** (a + 0.5)
    elif kind is ModelKind.KARLIN_2D:
        (a1, a2), (n1, n2) = spec.alphas, spec.n
        sigma_sq = gamma(1 - a1) * 2 ** (a1 - 1) * gamma(1 - a2) * 2 ** (a2 - 1)
        sv = make_karlin_pmf(a1).sv_constant * make_karlin_pmf(a2).sv_constant
        z = math.sqrt(sigma_sq * sv) * n1 ** (a1 / 2) * n2 ** (a2 / 2)
    elif kind is ModelKind.HS_2D:
        (a1, a2), (n1, n2) = spec.alphas, spec.n
        sigma_sq = (
            bn_sq_growth_constant(a1)
            * bn_sq_growth_constant(a2)
            * _forest_constants(a1)[1]
            * _forest_constants(a2)[1]
        )
        z = math.sqrt(sigma_sq) * n1 ** (a1 + 0.5) * n2 ** (a2 + 0.5)
    elif kind is ModelKind.COMBINED_2D:
        (a1, a2), (n1, n2) = spec.alphas, spec.n
        sigma_sq = (
            bn_sq_growth_constant(a1)
            * _forest_constants(a1)[1]
            * gamma(1 - a2)
            * 2 ** (a2 - 1)
        )
        z = (
            math.sqrt(sigma_sq * make_karlin_pmf(a2).sv_constant)
            * n1 ** (a1 + 0.5)
            * n2 ** (a2 / 2)
        )
    else:  # pragma: no cover
        raise ValueError(kind)
    return z, math.sqrt(sigma_sq)


# ---------------------------------------------------------------------------
# shared building blocks
# ---------------------------------------------------------------------------

def _alternating_signs(path: UrnPath) -> np.ndarray:
    # (-1)**(count+1): +1 when the running count of the draw's box is odd
    return (2 * path.running_parity.astype(np.int8) - 1).astype(np.int8)


def karlin1d_field(path: UrnPath, box_values) -> np.ndarray:
    """Spin series X_i = V(box of Y_i) * (-1)**(count_i + 1).

    ``box_values`` is either a mapping label -> value or an array aligned
    with np.unique(path.labels); mainly a hook for forced-stream tests.
    """
    uniq, inv = np.unique(path.labels, return_inverse=True)
    if isinstance(box_values, Mapping):
        values = np.array([box_values[int(u)] for u in uniq], dtype=np.float64)
    else:
        values = np.asarray(box_values, dtype=np.float64)
        if values.shape != uniq.shape:
            raise ValueError("box_values must align with the distinct labels")
    return values[inv] * _alternating_signs(path)


def _prefix_at_corners_1d(x: np.ndarray, n: int, t1) -> np.ndarray:
    c = np.cumsum(x, dtype=np.float64 if x.dtype.kind == "f" else np.int64)
    idx = _corner_floor(n, t1)
    out = np.where(idx >= 1, c[np.maximum(idx - 1, 0)], 0)
    return out.astype(np.float64)


def _prefix_at_corners_2d(x: np.ndarray, n: tuple[int, int], grid: CornerGrid) -> np.ndarray:
    c = np.cumsum(np.cumsum(x, axis=0, dtype=np.int64), axis=1)
    i1 = _corner_floor(n[0], grid.t1)
    i2 = _corner_floor(n[1], grid.t2)
    out = np.zeros((i1.size, i2.size), dtype=np.float64)
    live1 = i1 >= 1
    live2 = i2 >= 1
    if np.any(live1) and np.any(live2):
        sub = c[np.ix_(i1[live1] - 1, i2[live2] - 1)]
        out[np.ix_(live1, live2)] = sub
    return out


def _product_sweep(core: np.ndarray, inv1, inv2, s1=None, s2=None) -> np.ndarray:
    """X[i,j] = core[class1(i), class2(j)] * s1[i] * s2[j] (full sweep)."""
    x = core[np.ix_(inv1, inv2)]
    if s1 is not None:
        x = x * s1[:, None]
    if s2 is not None:
        x = x * s2[None, :]
    return x


# ---------------------------------------------------------------------------
# simulators
# ---------------------------------------------------------------------------

def simulate_karlin1d(spec: ModelSpec, grid: CornerGrid, rng: np.random.Generator, seed=None) -> FieldSample:
    """Urn model with alternating signs; per-box value is (sign) x (marginal)."""
    _check_kind(spec, {ModelKind.KARLIN_1D, ModelKind.GENERALIZED_KARLIN_1D})
    if grid.is_2d:
        raise ValueError("1D model needs a 1D grid")
    (a,), (n,) = spec.alphas, spec.n
    key = spin_key(rng)
    path = sample_urn(make_karlin_pmf(a), n, rng)
    uniq, inv = np.unique(path.labels, return_inverse=True)
    values = spec.marginal.draw_symmetrized_from_hash(hash1(key, uniq))
    x = values[inv] * _alternating_signs(path)
    raw = _prefix_at_corners_1d(x, n, grid.t1)
    z, sigma = normalization(spec)
    return FieldSample(spec, grid, raw, raw / z, z, sigma, seed, {})


def simulate_hs1d(spec: ModelSpec, grid: CornerGrid, rng: np.random.Generator, seed=None) -> FieldSample:
    """Forest model with identical signs: one marginal draw per window root."""
    _check_kind(spec, {ModelKind.HS_1D, ModelKind.GENERALIZED_HS_1D})
    if grid.is_2d:
        raise ValueError("1D model needs a 1D grid")
    (a,), (n,) = spec.alphas, spec.n
    key = spin_key(rng)
    window = sample_forest(make_hs_pmf(a), -spec.effective_forest_depth(n), n, rng)
    roots = roots_of(window, np.arange(1, n + 1))
    uniq, inv = np.unique(roots, return_inverse=True)
    values = spec.marginal.draw_from_hash(hash1(key, uniq))
    x = values[inv]
    raw = _prefix_at_corners_1d(x, n, grid.t1)
    z, sigma = normalization(spec)
    meta = {"truncation_error_bound": window.truncation_error_bound}
    return FieldSample(spec, grid, raw, raw / z, z, sigma, seed, meta)


def simulate_karlin2d(spec: ModelSpec, grid: CornerGrid, rng: np.random.Generator, seed=None) -> FieldSample:
    """Product urn model, alternating in both directions."""
    _check_kind(spec, {ModelKind.KARLIN_2D})
    _require_2d(grid)
    (a1, a2), (n1, n2) = spec.alphas, spec.n
    key = spin_key(rng)
    path1 = sample_urn(make_karlin_pmf(a1), n1, rng)
    path2 = sample_urn(make_karlin_pmf(a2), n2, rng)
    u1, inv1 = np.unique(path1.labels, return_inverse=True)
    u2, inv2 = np.unique(path2.labels, return_inverse=True)
    core = signs_from(hash2(key, u1[:, None], u2[None, :]))
    x = _product_sweep(core, inv1, inv2, _alternating_signs(path1), _alternating_signs(path2))
    raw = _prefix_at_corners_2d(x, (n1, n2), grid)
    z, sigma = normalization(spec)
    return FieldSample(spec, grid, raw, raw / z, z, sigma, seed, {})


def simulate_hs2d(spec: ModelSpec, grid: CornerGrid, rng: np.random.Generator, seed=None) -> FieldSample:
    """Product forest model, identical signs on product components."""
    _check_kind(spec, {ModelKind.HS_2D})
    _require_2d(grid)
    (a1, a2), (n1, n2) = spec.alphas, spec.n
    key = spin_key(rng)
    w1 = sample_forest(make_hs_pmf(a1), -spec.effective_forest_depth(n1), n1, rng)
    w2 = sample_forest(make_hs_pmf(a2), -spec.effective_forest_depth(n2), n2, rng)
    u1, inv1 = np.unique(roots_of(w1, np.arange(1, n1 + 1)), return_inverse=True)
    u2, inv2 = np.unique(roots_of(w2, np.arange(1, n2 + 1)), return_inverse=True)
    core = signs_from(hash2(key, u1[:, None], u2[None, :]))
    x = _product_sweep(core, inv1, inv2)
    raw = _prefix_at_corners_2d(x, (n1, n2), grid)
    z, sigma = normalization(spec)
    meta = {
        "truncation_error_bound": max(w1.truncation_error_bound, w2.truncation_error_bound),
        "truncation_error_bounds": (w1.truncation_error_bound, w2.truncation_error_bound),
    }
    return FieldSample(spec, grid, raw, raw / z, z, sigma, seed, meta)


def simulate_combined(spec: ModelSpec, grid: CornerGrid, rng: np.random.Generator, seed=None) -> FieldSample:
    """Forest direction 1 (identical signs) x urn direction 2 (alternating)."""
    _check_kind(spec, {ModelKind.COMBINED_2D})
    _require_2d(grid)
    (a1, a2), (n1, n2) = spec.alphas, spec.n
    key = spin_key(rng)
    w1 = sample_forest(make_hs_pmf(a1), -spec.effective_forest_depth(n1), n1, rng)
    path2 = sample_urn(make_karlin_pmf(a2), n2, rng)
    u1, inv1 = np.unique(roots_of(w1, np.arange(1, n1 + 1)), return_inverse=True)
    u2, inv2 = np.unique(path2.labels, return_inverse=True)
    core = signs_from(hash2(key, u1[:, None], u2[None, :]))
    x = _product_sweep(core, inv1, inv2, None, _alternating_signs(path2))
    raw = _prefix_at_corners_2d(x, (n1, n2), grid)
    z, sigma = normalization(spec)
    meta = {"truncation_error_bound": w1.truncation_error_bound}
    return FieldSample(spec, grid, raw, raw / z, z, sigma, seed, meta)


_SIMULATORS = {
    ModelKind.KARLIN_1D: simulate_karlin1d,
    ModelKind.GENERALIZED_KARLIN_1D: simulate_karlin1d,
    ModelKind.HS_1D: simulate_hs1d,
    ModelKind.GENERALIZED_HS_1D: simulate_hs1d,
    ModelKind.KARLIN_2D: simulate_karlin2d,
    ModelKind.HS_2D: simulate_hs2d,
    ModelKind.COMBINED_2D: simulate_combined,
}


def simulate(spec: ModelSpec, grid: CornerGrid, rng: np.random.Generator, seed=None) -> FieldSample:
    """Dispatch to the model's simulator (pure function of spec, grid, rng state)."""
    return _SIMULATORS[spec.kind](spec, grid, rng, seed)


def _require_2d(grid: CornerGrid) -> None:
    if not grid.is_2d:
        raise ValueError("2D model needs a 2D grid")


def rectangle_sum(sample: FieldSample, a, b) -> float:
    """Sum of X over the rectangle (a, b] of grid corners, by inclusion-exclusion.

    Corners are given as grid indices where 0 denotes the origin (time 0) and
    i >= 1 denotes the i-th grid time; ``a <= b`` componentwise.
    """
    if sample.grid.is_2d:
        a1, a2 = a
        b1, b2 = b
        _check_corner(a1, len(sample.grid.t1)), _check_corner(a2, len(sample.grid.t2))
        _check_corner(b1, len(sample.grid.t1)), _check_corner(b2, len(sample.grid.t2))
        if a1 > b1 or a2 > b2:
            raise ValueError("need a <= b componentwise")

        def s(i, j):
            return 0.0 if (i == 0 or j == 0) else float(sample.raw[i - 1, j - 1])

        return s(b1, b2) - s(a1, b2) - s(b1, a2) + s(a1, a2)
    ai, bi = int(a), int(b)
    _check_corner(ai, len(sample.grid.t1)), _check_corner(bi, len(sample.grid.t1))
    if ai > bi:
        raise ValueError("need a <= b")

    def s1(i):
        return 0.0 if i == 0 else float(sample.raw[i - 1])

    return s1(bi) - s1(ai)


def _check_corner(i: int, m: int) -> None:
    if not 0 <= i <= m:
        raise IndexError(f"corner index {i} outside [0, {m}]")
