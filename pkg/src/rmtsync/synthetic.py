"""One-factor synthetic growth panels, integrated to positive levels.

growth_i(t) = mean + beta_i * f(t) + eps_i(t), with f ~ N(0, factor_sd^2) and
eps_i ~ N(0, noise_sd^2) all independent. Levels start at ``base_level`` in
``start_year`` and compound the growth rates forward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rmtsync.errors import DataError
from rmtsync.panel import LevelPanel


@dataclass(frozen=True)
class FactorModel:
    countries: tuple[str, ...]
    loadings: tuple[float, ...]
    start_year: int = 1885
    end_year: int = 2006
    mean_growth: float = 2.0
    factor_sd: float = 2.0
    noise_sd: float = 2.0
    base_level: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "countries", tuple(self.countries))
        object.__setattr__(self, "loadings", tuple(float(b) for b in self.loadings))
        if not self.countries:
            raise DataError("need at least one country")
        if len(self.loadings) != len(self.countries):
            raise DataError(
                f"{len(self.loadings)} loadings for {len(self.countries)} countries"
            )
        nums = (*self.loadings, self.mean_growth, self.factor_sd, self.noise_sd, self.base_level)
        if not all(math.isfinite(x) for x in nums):
            raise DataError("model parameters must be finite")
        if self.factor_sd < 0 or self.noise_sd < 0:
            raise DataError("standard deviations must be non-negative")
        if self.base_level <= 0:
            raise DataError("base_level must be positive")
        if self.end_year <= self.start_year:
            raise DataError("end_year must be after start_year")


def generate_growth(model: FactorModel, seed: int) -> np.ndarray:
    """(T-1) x N percent growth grid for years start_year+1 .. end_year."""
    rng = np.random.default_rng(seed)
    t = model.end_year - model.start_year
    f = rng.standard_normal(t) * model.factor_sd
    eps = rng.standard_normal((t, len(model.countries))) * model.noise_sd
    g = model.mean_growth + np.outer(f, model.loadings) + eps
    if np.any(g <= -100.0):
        raise DataError("parameters produce a growth rate at or below -100%; reduce the spread")
    return g


def generate_panel(model: FactorModel, seed: int) -> LevelPanel:
    g = generate_growth(model, seed)
    factors = np.vstack([np.ones(len(model.countries)), 1.0 + g / 100.0])
    levels = model.base_level * np.cumprod(factors, axis=0)
    return LevelPanel(
        years=tuple(range(model.start_year, model.end_year + 1)),
        countries=model.countries,
        values=levels,
    )
