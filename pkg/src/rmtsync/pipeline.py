"""Period analysis, clustering and rolling runs assembled into report bundles."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from pathlib import Path

from rmtsync import __version__
from rmtsync.clustering import (
    Dendrogram,
    agnes_average,
    corr_rows_to_distances,
    corr_to_metric_distance,
    to_newick,
)
from rmtsync.config import AnalysisConfig, provenance_hash
from rmtsync.errors import ConfigError, DataError
from rmtsync.matrix import CorrelationMatrix, EigenDecomposition, correlation_matrix, eigen_symmetric
from rmtsync.panel import GrowthPanel, LevelPanel, PeriodSpec, growth_rates, parse_panel_csv, select_window
from rmtsync.rmt import (
    NullSimConfig,
    NullSimResult,
    SpectrumReport,
    cached_simulate_null,
    classify_spectrum,
    mp_bounds,
    simulate_null,
)
from rmtsync.rolling import RollingPoint, rolling_info_fraction


@dataclass
class Workspace:
    """A loaded config plus its panel, with CLI overrides already applied."""

    config: AnalysisConfig
    data_bytes: bytes
    levels: LevelPanel
    growth: GrowthPanel
    overrides: dict

    @classmethod
    def load(cls, config: AnalysisConfig, overrides: dict | None = None) -> Workspace:
        try:
            data = Path(config.data_path).read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read data file {config.data_path}: {exc}") from None
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError:
            raise DataError(f"{config.data_path} is not UTF-8") from None
        levels = parse_panel_csv(text)
        return cls(config, data, levels, growth_rates(levels), dict(overrides or {}))

    def provenance(self) -> dict:
        return {
            "tool": "rmtsync",
            "tool_version": __version__,
            "config_sha256": hashlib.sha256(self.config.source_bytes).hexdigest(),
            "data_sha256": hashlib.sha256(self.data_bytes).hexdigest(),
            "bundle_hash": provenance_hash(self.config.source_bytes, self.data_bytes),
            "master_seed": self.config.master_seed,
            "null_trials": self.config.null_trials,
            "overrides": dict(sorted(self.overrides.items())),
        }


def period_spec(ws: Workspace, name: str, countries=None) -> PeriodSpec:
    spec = ws.config.period(name)
    if countries is not None:
        spec = replace(spec, country_subset=tuple(countries))
    return spec


def period_correlation(ws: Workspace, name: str, countries=None) -> tuple[GrowthPanel, CorrelationMatrix]:
    spec = period_spec(ws, name, countries)
    try:
        window = select_window(ws.growth, spec)
        return window, correlation_matrix(window)
    except DataError as exc:
        raise DataError(f"period {name!r}: {exc}") from exc


def null_for(ws: Workspace, n: int, t: int, cache_dir=None, workers: int = 1) -> NullSimResult:
    cfg = NullSimConfig(n, t, ws.config.null_trials, ws.config.master_seed)
    cache_dir = cache_dir or ws.config.cache_dir
    if cache_dir is None:
        return simulate_null(cfg, workers=workers)
    return cached_simulate_null(cfg, cache_dir, workers=workers)


def cluster(corr: CorrelationMatrix, mode: str) -> Dendrogram:
    if mode == "corr-rows":
        return agnes_average(corr_rows_to_distances(corr))
    if mode == "corr-metric":
        return agnes_average(corr_to_metric_distance(corr))
    raise ConfigError(f"unknown clustering mode {mode!r}")


@dataclass
class PeriodResult:
    name: str
    window: GrowthPanel
    corr: CorrelationMatrix
    decomp: EigenDecomposition
    report: SpectrumReport
    null: NullSimResult
    dendrogram: Dendrogram
    mode: str

    def to_dict(self) -> dict:
        n, t = len(self.window.countries), len(self.window.years)
        return {
            "name": self.name,
            "start_year": self.window.years[0],
            "end_year": self.window.years[-1],
            "countries": list(self.window.countries),
            "n": n,
            "t": t,
            "spectrum": self.report.to_dict(self.window.countries, self.decomp.eigenvectors),
            "null": null_summary(self.null),
            "clustering": {
                "mode": self.mode,
                "dendrogram": self.dendrogram.to_dict(),
                "newick": to_newick(self.dendrogram),
            },
        }


def null_summary(null: NullSimResult) -> dict:
    d = null.to_dict()
    d.pop("max_eigenvalues")
    return d


def analyze_period(ws: Workspace, name: str, countries=None, mode=None, cache_dir=None, workers=1) -> PeriodResult:
    window, corr = period_correlation(ws, name, countries)
    n, t = corr.n, len(window.years)
    if n < 2:
        raise DataError(f"period {name!r}: need at least 2 countries")
    if t < n:
        raise DataError(f"period {name!r}: {t} years for {n} countries gives q < 1")
    decomp = eigen_symmetric(corr)
    null = null_for(ws, n, t, cache_dir, workers)
    report = classify_spectrum(decomp, mp_bounds(n, t), null)
    mode = mode or ws.config.clustering_mode
    return PeriodResult(name, window, corr, decomp, report, null, cluster(corr, mode), mode)


def run_rolling(ws: Workspace, window_len=None, countries=None, skip_invalid=False) -> list[RollingPoint]:
    cfg = ws.config.rolling
    if cfg is None:
        raise ConfigError("config has no [rolling] section")
    try:
        if window_len is not None:
            cfg = replace(cfg, window_len=window_len)
        if countries is not None:
            cfg = replace(cfg, countries=tuple(countries))
    except DataError as exc:
        raise ConfigError(f"rolling: {exc}") from None
    return rolling_info_fraction(ws.growth, cfg, skip_invalid=skip_invalid)


def rolling_dict(ws: Workspace, points: list[RollingPoint], countries) -> dict:
    return {
        "countries": list(countries),
        "window_len": points[0].window_end - points[0].window_start + 1,
        "points": [
            {
                "window_start": p.window_start,
                "window_end": p.window_end,
                "lambda_max": p.lambda_max,
                "info_fraction": p.info_fraction,
                "theoretical_lambda_max": p.theoretical_lambda_max,
            }
            for p in points
        ],
    }


def bundle(ws: Workspace, periods: list[PeriodResult], rolling: dict | None = None) -> dict:
    return {
        "provenance": ws.provenance(),
        "periods": {p.name: p.to_dict() for p in periods},
        "rolling": rolling,
    }
