"""Marchenko-Pastur bounds, the Monte Carlo null for the largest eigenvalue,
participation measures and spectrum classification.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from rmtsync.errors import DataError
from rmtsync.matrix import EigenDecomposition, _corr_from_standardized, jacobi_batch, standardize_columns

SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class MpBounds:
    """Support of the Marchenko-Pastur law for an n-series, t-observation correlation matrix."""

    n: int
    t: int
    q: float
    lambda_min: float
    lambda_max: float
    sigma2: float = 1.0


def mp_bounds(n: int, t: int, sigma2: float = 1.0) -> MpBounds:
    if n < 2:
        raise DataError(f"need at least 2 series, got n={n}")
    if t < n:
        raise DataError(f"q = t/n = {t}/{n} < 1; need at least as many observations as series")
    q = t / n
    r = 1.0 / math.sqrt(q)
    return MpBounds(
        n=n,
        t=t,
        q=q,
        lambda_min=sigma2 * (1.0 - r) ** 2,
        lambda_max=sigma2 * (1.0 + r) ** 2,
        sigma2=sigma2,
    )


def mp_density(lam, bounds: MpBounds):
    """Marchenko-Pastur density at ``lam`` (scalar or array); zero off the support.

    Uses ``q / (2 pi sigma2 lam) * sqrt((lmax - lam)(lam - lmin))``; with the
    unit variance used throughout this reduces to the textbook form.
    """
    x = np.asarray(lam, dtype=float)
    lo, hi = bounds.lambda_min, bounds.lambda_max
    inside = (x > lo) & (x < hi) & (x > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        rad = np.sqrt(np.where(inside, (hi - x) * (x - lo), 0.0))
        dens = np.where(inside, bounds.q / (2.0 * math.pi * bounds.sigma2) * rad / x, 0.0)
    return float(dens) if dens.ndim == 0 else dens


# --------------------------------------------------------------------------
# Monte Carlo null


@dataclass(frozen=True)
class NullSimConfig:
    n: int
    t: int
    trials: int = 10_000
    master_seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise DataError(f"need n >= 2, got {self.n}")
        if self.t < self.n:
            raise DataError(f"need t >= n, got t={self.t}, n={self.n}")
        if self.trials < 1:
            raise DataError("trials must be positive")
        object.__setattr__(self, "master_seed", int(self.master_seed) & SEED_MASK)


def trial_generator(master_seed: int, k: int) -> np.random.Generator:
    """Generator for trial ``k``: a fixed hash of (master_seed, k) via SeedSequence."""
    ss = np.random.SeedSequence(entropy=int(master_seed) & SEED_MASK, spawn_key=(int(k),))
    return np.random.Generator(np.random.PCG64(ss))


def trial_correlation(n: int, t: int, master_seed: int, k: int) -> np.ndarray:
    """Correlation matrix of trial ``k``: t x n standard normals, columns standardized."""
    z = trial_generator(master_seed, k).standard_normal((t, n))
    return _corr_from_standardized(standardize_columns(z))


def _max_eigenvalues(n: int, t: int, master_seed: int, start: int, stop: int) -> np.ndarray:
    mats = np.stack([trial_correlation(n, t, master_seed, k) for k in range(start, stop)])
    return jacobi_batch(mats, vectors=False).max(axis=1)


@dataclass(frozen=True, eq=False)
class NullSimResult:
    config: NullSimConfig
    max_eigenvalues: np.ndarray
    theoretical: MpBounds
    empirical_max: float = field(init=False)
    count_above_theoretical: int = field(init=False)

    def __post_init__(self):
        vals = np.asarray(self.max_eigenvalues, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "max_eigenvalues", vals)
        object.__setattr__(self, "empirical_max", float(vals.max()))
        object.__setattr__(
            self, "count_above_theoretical", int(np.sum(vals > self.theoretical.lambda_max))
        )

    def quantiles(self) -> dict[str, float]:
        p = np.quantile(self.max_eigenvalues, [0.5, 0.95, 0.99])
        return {"p50": float(p[0]), "p95": float(p[1]), "p99": float(p[2])}

    def to_dict(self) -> dict:
        return {
            "n": self.config.n,
            "t": self.config.t,
            "trials": self.config.trials,
            "master_seed": self.config.master_seed,
            "theoretical_lambda_max": self.theoretical.lambda_max,
            "empirical_max": self.empirical_max,
            "count_above_theoretical": self.count_above_theoretical,
            "quantiles": self.quantiles(),
            "max_eigenvalues": [float(x) for x in self.max_eigenvalues],
        }

    @classmethod
    def from_dict(cls, d: dict) -> NullSimResult:
        cfg = NullSimConfig(d["n"], d["t"], d["trials"], d["master_seed"])
        res = cls(cfg, np.array(d["max_eigenvalues"], dtype=float), mp_bounds(cfg.n, cfg.t))
        if len(res.max_eigenvalues) != cfg.trials:
            raise DataError("null cache: max_eigenvalues length does not match trials")
        if res.count_above_theoretical != d["count_above_theoretical"]:
            raise DataError("null cache: stored exceedance count disagrees with the list")
        return res


def simulate_null(config: NullSimConfig, workers: int = 1, chunk_size: int = 1000) -> NullSimResult:
    """Largest-eigenvalue distribution of pure-noise correlation matrices.

    Trial k draws from :func:`trial_generator`, so the output depends only on
    ``config``; ``workers`` and ``chunk_size`` affect speed, not bytes.
    """
    bounds = mp_bounds(config.n, config.t)
    edges = list(range(0, config.trials, max(1, chunk_size))) + [config.trials]
    jobs = [(config.n, config.t, config.master_seed, a, b) for a, b in zip(edges, edges[1:])]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_max_eigenvalues, *zip(*jobs)))
    else:
        parts = [_max_eigenvalues(*job) for job in jobs]
    return NullSimResult(config, np.concatenate(parts), bounds)


def null_to_json(result: NullSimResult) -> str:
    return json.dumps(result.to_dict(), indent=1) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def null_cache_path(cache_dir, config: NullSimConfig) -> Path:
    name = f"null_n{config.n}_t{config.t}_trials{config.trials}_seed{config.master_seed}.json"
    return Path(cache_dir) / name


def cached_simulate_null(config: NullSimConfig, cache_dir, workers: int = 1) -> NullSimResult:
    """Load the null for ``config`` from ``cache_dir`` or simulate and store it."""
    path = null_cache_path(cache_dir, config)
    if path.exists():
        try:
            return NullSimResult.from_dict(json.loads(path.read_text(encoding="utf-8")))
        except (ValueError, KeyError, TypeError):
            pass  # corrupt or stale cache: recompute below
    result = simulate_null(config, workers=workers)
    write_atomic(path, null_to_json(result))
    return result


# --------------------------------------------------------------------------
# Eigenvector structure


def _unit(v, tol: float) -> np.ndarray:
    x = np.asarray(v, dtype=float)
    norm = math.sqrt(float(np.dot(x, x)))
    if abs(norm - 1.0) > tol:
        raise DataError(f"eigenvector must have unit norm (tol {tol:g}), got {norm:.10g}")
    return x


def ipr(v, tol: float = 1e-8) -> float:
    """Inverse participation ratio: sum of fourth powers of a unit vector's components.

    ``tol`` bounds how far ``||v||`` may sit from 1. Loosen it only for vectors
    whose components were rounded for publication; the sum is taken as given,
    without renormalizing.
    """
    x = _unit(v, tol)
    return float(np.sum(x**4))


def participation_number(v, tol: float = 1e-8) -> float:
    """Effective number of contributing components, ``1 / ipr(v)``."""
    return 1.0 / ipr(v, tol)


def info_fraction(decomp: EigenDecomposition) -> float:
    """Share of the trace carried by the largest eigenvalue, ``lambda_max / N``."""
    return float(decomp.eigenvalues[0]) / decomp.n


@dataclass(frozen=True)
class EigenFlags:
    above_theoretical: bool
    above_simulated: bool | None
    within_noise_band: bool


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    eigenvalues: np.ndarray
    ipr: np.ndarray
    participation_number: np.ndarray
    info_fraction: float
    flags: tuple[EigenFlags, ...]
    bounds: MpBounds
    simulated_max: float | None = None
    null_quantiles: dict | None = None

    def to_dict(self, labels=None, eigenvectors=None) -> dict:
        out = {
            "n": self.bounds.n,
            "t": self.bounds.t,
            "q": self.bounds.q,
            "theoretical_lambda_min": self.bounds.lambda_min,
            "theoretical_lambda_max": self.bounds.lambda_max,
            "simulated_max": self.simulated_max,
            "null_quantiles": self.null_quantiles,
            "info_fraction": self.info_fraction,
            "eigenmodes": [
                {
                    "rank": k + 1,
                    "eigenvalue": float(self.eigenvalues[k]),
                    "ipr": float(self.ipr[k]),
                    "participation_number": float(self.participation_number[k]),
                    "above_theoretical": f.above_theoretical,
                    "above_simulated": f.above_simulated,
                    "within_noise_band": f.within_noise_band,
                }
                for k, f in enumerate(self.flags)
            ],
        }
        if eigenvectors is not None:
            for k, mode in enumerate(out["eigenmodes"]):
                comps = [float(x) for x in eigenvectors[k]]
                mode["components"] = dict(zip(labels, comps)) if labels else comps
        return out


def classify_spectrum(
    decomp: EigenDecomposition,
    bounds: MpBounds,
    null: NullSimResult | None = None,
) -> SpectrumReport:
    """Flag each eigenvalue against the theoretical and (optionally) simulated noise ceiling.

    The simulated ceiling is the largest eigenvalue seen across all null trials.
    An eigenvalue is inside the noise band when it lies in
    ``[lambda_min, ceiling]``, where the ceiling is the simulated maximum if a
    null is supplied and the theoretical ``lambda_max`` otherwise.
    """
    if decomp.n != bounds.n:
        raise DataError(f"spectrum has {decomp.n} eigenvalues but bounds are for n={bounds.n}")
    if null is not None and (null.config.n, null.config.t) != (bounds.n, bounds.t):
        raise DataError(
            f"null was simulated for (n={null.config.n}, t={null.config.t}), "
            f"bounds are for (n={bounds.n}, t={bounds.t})"
        )
    sim_max = null.empirical_max if null is not None else None
    ceiling = sim_max if sim_max is not None else bounds.lambda_max
    flags = []
    for lam in decomp.eigenvalues:
        flags.append(
            EigenFlags(
                above_theoretical=bool(lam > bounds.lambda_max),
                above_simulated=None if sim_max is None else bool(lam > sim_max),
                within_noise_band=bool(bounds.lambda_min <= lam <= ceiling),
            )
        )
    iprs = np.array([ipr(v) for v in decomp.eigenvectors])
    return SpectrumReport(
        eigenvalues=np.array(decomp.eigenvalues),
        ipr=iprs,
        participation_number=1.0 / iprs,
        info_fraction=info_fraction(decomp),
        flags=tuple(flags),
        bounds=bounds,
        simulated_max=sim_max,
        null_quantiles=null.quantiles() if null is not None else None,
    )
