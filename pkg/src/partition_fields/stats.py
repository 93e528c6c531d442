"""Monte Carlo replicate driver and the estimators that turn fields into verdicts.

Replicate r always draws from the stream ``split(base_seed, r)`` and the
estimators run in the parent over the replicate-indexed value matrix, so the
report is a pure function of (base seed, spec, grid, R): worker count and
scheduling cannot change a single output bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributions import make_hs_pmf, make_karlin_pmf
from .fields import CornerGrid, ModelKind, ModelSpec, normalization, simulate
from .partition1d import expected_occupancy, truncation_pair_bound
from .renewal import cached_renewal_sequence, var_xstar, weights
from .seeding import SCHEME_ID, normalize_seed, replicate_generator, seed_to_hex

__all__ = [
    "ReplicateReport",
    "IdentityRecord",
    "DegenerateSampleError",
    "run_replicates",
    "ks_normal",
    "check_identity",
    "empirical_cov",
]

_IDENTITY_KMAX = 1 << 21


class DegenerateSampleError(ValueError):
    """A sample with zero spread was handed to a distributional test."""


@dataclass(frozen=True)
class IdentityRecord:
    """One finite-n variance identity: analytic target vs Monte Carlo."""

    name: str
    analytic: float
    mc: float
    se: float
    kind: str  # "exact" or "exact-mod-truncation"
    truncation_allowance: float = 0.0

    def gap(self) -> float:
        return abs(self.mc - self.analytic)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "analytic": self.analytic,
            "mc": self.mc,
            "se": self.se,
            "kind": self.kind,
            "truncation_allowance": self.truncation_allowance,
        }


@dataclass(frozen=True)
class ReplicateReport:
    """Aggregates of R independent replicates of one model/grid."""

    spec: ModelSpec
    grid: CornerGrid
    replicates: int
    base_seed_hex: str
    scheme: str
    z_norm: float
    sigma: float
    mean_vec: np.ndarray
    cov_mat: np.ndarray
    cov_se: np.ndarray
    ks: list[dict]
    identities: dict[str, IdentityRecord]
    truncation: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "model": {
                "kind": self.spec.kind.value,
                "alphas": list(self.spec.alphas),
                "n": list(self.spec.n),
                "forest_depth": self.spec.forest_depth,
            },
            "grid": {"t1": list(self.grid.t1), "t2": list(self.grid.t2) if self.grid.t2 else None},
            "replicates": self.replicates,
            "seed": self.base_seed_hex,
            "scheme": self.scheme,
            "z_norm": self.z_norm,
            "sigma": self.sigma,
            "mean_vec": self.mean_vec.tolist(),
            "cov_mat": self.cov_mat.tolist(),
            "cov_se": self.cov_se.tolist(),
            "ks": self.ks,
            "identities": {k: v.to_dict() for k, v in self.identities.items()},
            "truncation": self.truncation,
        }


def _replicate_chunk(spec: ModelSpec, grid: CornerGrid, base_seed: int, r0: int, r1: int) -> np.ndarray:
    rows = []
    for r in range(r0, r1):
        sample = simulate(spec, grid, replicate_generator(base_seed, r), seed=r)
        rows.append(sample.raw.ravel())
    return np.asarray(rows)


def simulate_raw_matrix(
    spec: ModelSpec, grid: CornerGrid, replicates: int, base_seed: int | str, parallelism: int = 1
) -> np.ndarray:
    """Raw corner sums, one row per replicate, assembled in replicate order."""
    base_seed = normalize_seed(base_seed)
    workers = max(1, int(parallelism))
    if workers == 1:
        return _replicate_chunk(spec, grid, base_seed, 0, replicates)
    # warm shared caches (renewal constants, zeta) before forking workers
    normalization(spec)
    _replicate_chunk(spec, grid, base_seed, 0, 1)
    chunk = max(16, math.ceil(replicates / (4 * workers)))
    bounds = list(range(0, replicates, chunk)) + [replicates]
    parts: list[np.ndarray | None] = [None] * (len(bounds) - 1)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {
            pool.submit(_replicate_chunk, spec, grid, base_seed, bounds[i], bounds[i + 1]): i
            for i in range(len(bounds) - 1)
        }
        for fut, i in futures.items():
            parts[i] = fut.result()
    return np.concatenate(parts, axis=0)


def run_replicates(
    spec: ModelSpec,
    grid: CornerGrid,
    replicates: int,
    base_seed: int | str,
    parallelism: int = 1,
) -> ReplicateReport:
    """Simulate R replicates and estimate moments, normality and identities.

    The result is bit-identical for any ``parallelism``: replicates own
    disjoint streams and all reductions happen here in replicate order.
    """
    if replicates < 2:
        raise ValueError("need at least 2 replicates")
    base_seed = normalize_seed(base_seed)
    raw = simulate_raw_matrix(spec, grid, replicates, base_seed, parallelism)
    z, sigma = normalization(spec)
    normalized = raw / z
    mean_vec, cov_mat, cov_se = empirical_cov(normalized)

    ks = []
    corners = _corner_labels(grid)
    for j, label in enumerate(corners):
        col = normalized[:, j]
        entry: dict = {"t": label}
        if col.size >= 100 and np.ptp(col) > 0:
            stat, pvalue = ks_normal(col, 1.0)
            entry.update(statistic=stat, p_value=pvalue)
        else:
            entry.update(statistic=None, p_value=None, degenerate=True)
        ks.append(entry)

    identities = {}
    if _grid_ends_at_one(grid):
        rec = _identity_record(spec, raw[:, -1])
        identities[rec.name] = rec

    truncation = _truncation_summary(spec)
    return ReplicateReport(
        spec=spec,
        grid=grid,
        replicates=replicates,
        base_seed_hex=seed_to_hex(base_seed),
        scheme=SCHEME_ID,
        z_norm=z,
        sigma=sigma,
        mean_vec=mean_vec,
        cov_mat=cov_mat,
        cov_se=cov_se,
        ks=ks,
        identities=identities,
        truncation=truncation,
    )


def _corner_labels(grid: CornerGrid) -> list:
    if grid.is_2d:
        return [[t1, t2] for t1 in grid.t1 for t2 in grid.t2]
    return [[t] for t in grid.t1]


def _grid_ends_at_one(grid: CornerGrid) -> bool:
    ends = grid.t1[-1] == 1.0 and (grid.t2 is None or grid.t2[-1] == 1.0)
    return ends


def _truncation_summary(spec: ModelSpec) -> dict[str, float]:
    out: dict[str, float] = {}
    domains = {
        ModelKind.HS_1D: (0,),
        ModelKind.GENERALIZED_HS_1D: (0,),
        ModelKind.HS_2D: (0, 1),
        ModelKind.COMBINED_2D: (0,),
    }.get(spec.kind, ())
    for d in domains:
        depth = spec.effective_forest_depth(spec.n[d])
        bound = truncation_pair_bound(make_hs_pmf(spec.alphas[d]), -depth)
        out[f"direction_{d + 1}"] = bound
    if out:
        out["max"] = max(v for k, v in out.items() if k.startswith("direction"))
    return out


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def empirical_cov(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(mean, unbiased covariance, delete-one jackknife SE of each entry).

    The jackknife deviations have the closed form
    (S - R u_i u_i') / ((R-1)(R-2)) with u_i the centered rows, so the SE
    needs only elementwise second and fourth moments.  SE is NaN for R < 3.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need a (R >= 2) x m matrix of replicate vectors")
    big_r, m = x.shape
    mean = x.mean(axis=0)
    u = x - mean
    s = u.T @ u
    cov = s / (big_r - 1)
    if big_r < 3:
        se = np.full((m, m), np.nan)
    else:
        m4 = (u**2).T @ (u**2)
        ss = np.maximum(big_r**2 * m4 - big_r * s**2, 0.0)
        se = np.sqrt((big_r - 1) / big_r * ss) / ((big_r - 1) * (big_r - 2))
    return mean, cov, se


def ks_normal(samples, sigma: float) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov test against Normal(0, sigma^2).

    Returns (statistic, asymptotic p-value); the Kolmogorov series is
    truncated once terms drop below 1e-12.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    if n < 100:
        raise ValueError("need at least 100 samples")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if x[0] == x[-1]:
        raise DegenerateSampleError("sample has zero spread")
    cdf = _normal_cdf(x / sigma)
    grid_hi = np.arange(1, n + 1) / n
    grid_lo = np.arange(0, n) / n
    stat = float(max(np.max(grid_hi - cdf), np.max(cdf - grid_lo)))
    return stat, _kolmogorov_sf(math.sqrt(n) * stat)


def _normal_cdf(z: np.ndarray) -> np.ndarray:
    from scipy.special import ndtr

    return ndtr(z)


def _kolmogorov_sf(lam: float, tol: float = 1e-12) -> float:
    if lam <= 0:
        return 1.0
    total = 0.0
    for j in range(1, 100001):
        term = math.exp(-2.0 * j * j * lam * lam)
        total += (term if j % 2 else -term)
        if term < tol:
            break
    return float(min(1.0, max(0.0, 2.0 * total)))


_IDENTITY_SPECS = {
    "karlin_var": (ModelKind.KARLIN_1D, ModelKind.GENERALIZED_KARLIN_1D),
    "karlin2d_var": (ModelKind.KARLIN_2D,),
    "hs_var": (ModelKind.HS_1D, ModelKind.GENERALIZED_HS_1D),
    "hs2d_var": (ModelKind.HS_2D,),
    "combined_var": (ModelKind.COMBINED_2D,),
}


def check_identity(
    name: str,
    spec: ModelSpec,
    replicates: int,
    base_seed: int | str,
    parallelism: int = 1,
) -> IdentityRecord:
    """Monte Carlo Var(S_n) at t = 1 against the finite-n analytic value.

    The urn identity Var(S_n) = E[#odd boxes] is exact; the forest-backed
    identities are exact for the untruncated partition, so the record carries
    the window truncation allowance 2 * pair_bound * (number of site pairs).
    SE assumes approximate normality of S_n: Var_hat * sqrt(2/(R-1)).
    """
    if name not in _IDENTITY_SPECS:
        raise ValueError(f"unknown identity {name!r}")
    if spec.kind not in _IDENTITY_SPECS[name]:
        raise ValueError(f"identity {name} expects kinds {_IDENTITY_SPECS[name]}")
    grid = CornerGrid(t1=(1.0,), t2=(1.0,) if spec.is_2d else None)
    raw = simulate_raw_matrix(spec, grid, replicates, base_seed, parallelism)
    s_final = raw[:, -1]
    mc = float(np.var(s_final, ddof=1))
    se = mc * math.sqrt(2.0 / (replicates - 1))
    analytic, kind, allowance = _identity_target(name, spec)
    return IdentityRecord(name, analytic, mc, se, kind, allowance)


def _identity_record(spec: ModelSpec, s_final: np.ndarray) -> IdentityRecord:
    name = next(k for k, kinds in _IDENTITY_SPECS.items() if spec.kind in kinds)
    mc = float(np.var(s_final, ddof=1))
    se = mc * math.sqrt(2.0 / (s_final.size - 1))
    analytic, kind, allowance = _identity_target(name, spec)
    return IdentityRecord(name, analytic, mc, se, kind, allowance)


def _bn_sq(alpha: float, n: int) -> float:
    kmax = max(_IDENTITY_KMAX, 16 * n)
    rs = cached_renewal_sequence(make_hs_pmf(alpha), kmax)
    return weights(rs, n).b_sq


def _sum_q_sq(alpha: float) -> float:
    rs = cached_renewal_sequence(make_hs_pmf(alpha), _IDENTITY_KMAX)
    return 1.0 / var_xstar(rs)


def _pair_allowance(spec: ModelSpec, direction: int, scale: float) -> float:
    n = spec.n[direction]
    depth = spec.effective_forest_depth(n)
    bound = truncation_pair_bound(make_hs_pmf(spec.alphas[direction]), -depth)
    return 2.0 * bound * n * n * scale


def _identity_target(name: str, spec: ModelSpec) -> tuple[float, str, float]:
    m2 = spec.marginal.second_moment
    if name == "karlin_var":
        _, ek_odd = expected_occupancy(make_karlin_pmf(spec.alphas[0]), spec.n[0])
        return ek_odd * m2, "exact", 0.0
    if name == "karlin2d_var":
        (a1, a2), (n1, n2) = spec.alphas, spec.n
        _, ek1 = expected_occupancy(make_karlin_pmf(a1), n1)
        _, ek2 = expected_occupancy(make_karlin_pmf(a2), n2)
        return ek1 * ek2, "exact", 0.0
    if name == "hs_var":
        a, n = spec.alphas[0], spec.n[0]
        analytic = _bn_sq(a, n) * m2 / _sum_q_sq(a)
        return analytic, "exact-mod-truncation", _pair_allowance(spec, 0, m2)
    if name == "hs2d_var":
        (a1, a2), (n1, n2) = spec.alphas, spec.n
        var1 = _bn_sq(a1, n1) / _sum_q_sq(a1)
        var2 = _bn_sq(a2, n2) / _sum_q_sq(a2)
        # a pair lost in one direction decorrelates terms weighted by the
        # other direction's full pair-correlation mass (its 1D variance)
        allowance = _pair_allowance(spec, 0, var2) + _pair_allowance(spec, 1, var1)
        return var1 * var2, "exact-mod-truncation", allowance
    if name == "combined_var":
        (a1, a2), (n1, n2) = spec.alphas, spec.n
        _, ek_odd = expected_occupancy(make_karlin_pmf(a2), n2)
        analytic = _bn_sq(a1, n1) * ek_odd / _sum_q_sq(a1)
        return analytic, "exact-mod-truncation", _pair_allowance(spec, 0, ek_odd)
    raise ValueError(name)
