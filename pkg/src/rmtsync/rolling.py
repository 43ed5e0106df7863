"""Sliding-window share of variance carried by the largest eigenvalue."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass

from rmtsync.errors import DataError
from rmtsync.matrix import correlation_matrix, eigen_symmetric
from rmtsync.panel import GrowthPanel, PeriodSpec, select_window
from rmtsync.rmt import info_fraction, mp_bounds

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RollingConfig:
    start_year: int
    end_year: int
    window_len: int = 12
    step: int = 1
    countries: tuple[str, ...] | None = None
    exclusions: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.step < 1:
            raise DataError("step must be at least 1")
        if self.window_len < 3:
            raise DataError("window_len must be at least 3")
        if self.countries is not None:
            object.__setattr__(self, "countries", tuple(self.countries))
            if self.window_len < len(self.countries):
                raise DataError(
                    f"window_len {self.window_len} is shorter than the {len(self.countries)} "
                    "series (q < 1)"
                )
        if self.end_year - self.start_year + 1 < self.window_len:
            raise DataError(
                f"{self.start_year}-{self.end_year} is shorter than one {self.window_len}-year window"
            )

    def window_starts(self) -> range:
        return range(self.start_year, self.end_year - self.window_len + 2, self.step)


@dataclass(frozen=True)
class RollingPoint:
    window_start: int
    window_end: int
    lambda_max: float
    info_fraction: float
    theoretical_lambda_max: float


def rolling_info_fraction(
    growth: GrowthPanel,
    config: RollingConfig,
    skip_invalid: bool = False,
) -> list[RollingPoint]:
    """One point per window position, ordered by window start.

    A window that touches an exclusion range, has missing data, or holds a
    constant series raises :class:`DataError`; with ``skip_invalid`` it is
    dropped with a warning instead.
    """
    n = len(config.countries) if config.countries is not None else len(growth.countries)
    if config.window_len < n:
        raise DataError(f"window_len {config.window_len} < {n} series (q < 1)")
    theoretical = mp_bounds(n, config.window_len).lambda_max
    points = []
    for start in config.window_starts():
        end = start + config.window_len - 1
        spec = PeriodSpec(start, end, config.exclusions, config.countries)
        try:
            window = select_window(growth, spec)
            decomp = eigen_symmetric(correlation_matrix(window))
        except DataError as exc:
            if not skip_invalid:
                raise DataError(f"rolling window {start}-{end}: {exc}") from exc
            log.warning("skipping rolling window %d-%d: %s", start, end, exc)
            continue
        lam = float(decomp.eigenvalues[0])
        points.append(RollingPoint(start, end, lam, info_fraction(decomp), theoretical))
    if not points:
        raise DataError("no valid rolling windows")
    return points


ROLLING_FIELDS = ("window_start", "window_end", "lambda_max", "info_fraction", "theoretical_lambda_max")


def rolling_to_csv(points: list[RollingPoint]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(ROLLING_FIELDS)
    for p in points:
        w.writerow([p.window_start, p.window_end, repr(p.lambda_max), repr(p.info_fraction),
                    repr(p.theoretical_lambda_max)])
    return out.getvalue()
