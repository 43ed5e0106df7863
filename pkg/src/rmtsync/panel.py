"""Annual level panels: CSV ingestion, percent growth, window selection, diagnostics.

Missing observations are stored as NaN in the value grid. They are never
imputed; a selection that would need one raises :class:`DataError`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from rmtsync.errors import DataError

# Wartime growth years dropped from period windows (inclusive).
DEFAULT_EXCLUSIONS: tuple[tuple[int, int], ...] = ((1914, 1919), (1939, 1947))


def _grids_equal(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and bool(np.array_equal(a, b, equal_nan=True))


@dataclass(frozen=True, eq=False)
class LevelPanel:
    """Year x country grid of positive levels; NaN marks a missing entry."""

    years: tuple[int, ...]
    countries: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        years = tuple(int(y) for y in self.years)
        countries = tuple(str(c) for c in self.countries)
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "countries", countries)
        object.__setattr__(self, "values", values)
        _check_axes(years, countries, values)
        present = values[~np.isnan(values)]
        if not np.all(np.isfinite(present)):
            raise DataError("levels must be finite")
        if np.any(present <= 0):
            raise DataError("levels must be strictly positive")

    def __eq__(self, other):
        if not isinstance(other, LevelPanel):
            return NotImplemented
        return (
            self.years == other.years
            and self.countries == other.countries
            and _grids_equal(self.values, other.values)
        )

    def column(self, country: str) -> np.ndarray:
        return self.values[:, self.countries.index(country)]


@dataclass(frozen=True, eq=False)
class GrowthPanel:
    """Year x country grid of percent growth; year t is the change from t-1 to t."""

    years: tuple[int, ...]
    countries: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        years = tuple(int(y) for y in self.years)
        countries = tuple(str(c) for c in self.countries)
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "countries", countries)
        object.__setattr__(self, "values", values)
        _check_axes(years, countries, values, allow_empty=True)
        if np.any(np.isinf(values)):
            raise DataError("growth rates must be finite")

    def __eq__(self, other):
        if not isinstance(other, GrowthPanel):
            return NotImplemented
        return (
            self.years == other.years
            and self.countries == other.countries
            and _grids_equal(self.values, other.values)
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class PeriodSpec:
    """Inclusive growth-year window with exclusions and an optional country subset."""

    start_year: int
    end_year: int
    exclusions: tuple[tuple[int, int], ...] = ()
    country_subset: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.start_year > self.end_year:
            raise DataError(f"start_year {self.start_year} is after end_year {self.end_year}")
        excl = tuple((int(lo), int(hi)) for lo, hi in self.exclusions)
        for lo, hi in excl:
            if lo > hi:
                raise DataError(f"malformed exclusion range {lo}-{hi}")
        object.__setattr__(self, "exclusions", excl)
        if self.country_subset is not None:
            object.__setattr__(self, "country_subset", tuple(self.country_subset))

    def is_excluded(self, year: int) -> bool:
        return any(lo <= year <= hi for lo, hi in self.exclusions)


def _check_axes(years, countries, values, allow_empty=False):
    if values.ndim != 2 or values.shape != (len(years), len(countries)):
        raise DataError(
            f"value grid has shape {values.shape}, expected {(len(years), len(countries))}"
        )
    if not years and not allow_empty:
        raise DataError("panel has no data rows")
    if any(b <= a for a, b in zip(years, years[1:])):
        raise DataError("years must be strictly increasing")
    if not countries:
        raise DataError("panel has no countries")
    if any(not c for c in countries):
        raise DataError("country codes must be non-empty")
    if len(set(countries)) != len(countries):
        dup = sorted({c for c in countries if countries.count(c) > 1})
        raise DataError(f"duplicate country code(s): {', '.join(dup)}")


def parse_panel_csv(text: str | TextIO) -> LevelPanel:
    """Parse a ``year,<country>,...`` CSV into a :class:`LevelPanel`.

    Empty cells become NaN. Raises :class:`DataError` on duplicate years or
    country codes, non-numeric or non-positive cells, or no data rows.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty CSV input") from None
    header = [h.strip() for h in header]
    if header and header[0].startswith("﻿"):
        header[0] = header[0][1:]
    if not header or header[0].lower() != "year":
        raise DataError("first header cell must be 'year'")
    countries = header[1:]
    if not countries:
        raise DataError("header names no countries")
    if len(set(countries)) != len(countries):
        dup = sorted({c for c in countries if countries.count(c) > 1})
        raise DataError(f"duplicate country code(s): {', '.join(dup)}")

    years: list[int] = []
    rows: list[list[float]] = []
    seen: set[int] = set()
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
        try:
            year = int(row[0].strip())
        except ValueError:
            raise DataError(f"line {lineno}: year {row[0]!r} is not an integer") from None
        if year in seen:
            raise DataError(f"line {lineno}: duplicate year {year}")
        seen.add(year)
        parsed = []
        for country, cell in zip(countries, row[1:]):
            cell = cell.strip()
            if not cell:
                parsed.append(math.nan)
                continue
            try:
                value = float(cell)
            except ValueError:
                raise DataError(
                    f"line {lineno}: non-numeric value {cell!r} for {country}"
                ) from None
            if not math.isfinite(value) or value <= 0:
                raise DataError(
                    f"line {lineno}: level for {country} in {year} must be finite and positive"
                )
            parsed.append(value)
        years.append(year)
        rows.append(parsed)

    if not rows:
        raise DataError("CSV has no data rows")
    order = sorted(range(len(years)), key=years.__getitem__)
    return LevelPanel(
        years=tuple(years[i] for i in order),
        countries=tuple(countries),
        values=np.array([rows[i] for i in order], dtype=float),
    )


def serialize_panel_csv(panel: LevelPanel | GrowthPanel) -> str:
    """Inverse of :func:`parse_panel_csv`; floats use their shortest round-trip repr."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["year", *panel.countries])
    for year, row in zip(panel.years, panel.values):
        writer.writerow([year, *("" if math.isnan(v) else repr(float(v)) for v in row)])
    return out.getvalue()


def growth_rates(panel: LevelPanel) -> GrowthPanel:
    """Percent change ``100 * (x_t / x_{t-1} - 1)``; the first panel year drops out.

    A growth value is missing when either level is missing or when year t-1 is
    not in the panel at all.
    """
    years = np.asarray(panel.years)
    values = panel.values
    with np.errstate(invalid="ignore"):
        g = 100.0 * (values[1:] / values[:-1] - 1.0)
    consecutive = (years[1:] - years[:-1]) == 1
    g[~consecutive, :] = np.nan
    return GrowthPanel(years=panel.years[1:], countries=panel.countries, values=g)


def trim_years(panel: LevelPanel, start_year: int, end_year: int) -> LevelPanel:
    """Restrict a level panel to years in ``[start_year, end_year]``."""
    keep = [i for i, y in enumerate(panel.years) if start_year <= y <= end_year]
    if not keep:
        raise DataError(f"no years in {start_year}-{end_year}")
    return LevelPanel(
        years=tuple(panel.years[i] for i in keep),
        countries=panel.countries,
        values=panel.values[keep],
    )


def select_window(growth: GrowthPanel, spec: PeriodSpec, allow_gaps: bool = False) -> GrowthPanel:
    """Restrict ``growth`` to the rows and columns named by ``spec``.

    With ``allow_gaps=False`` the selected years must form an unbroken run, so a
    window that touches an exclusion range (or a year absent from the panel) is
    an error. Any missing value for a selected country inside the window is
    always an error.
    """
    if spec.country_subset is not None:
        unknown = [c for c in spec.country_subset if c not in growth.countries]
        if unknown:
            raise DataError(f"unknown country code(s): {', '.join(unknown)}")
        if len(set(spec.country_subset)) != len(spec.country_subset):
            raise DataError("country subset lists a code twice")
        cols = [growth.countries.index(c) for c in spec.country_subset]
    else:
        cols = list(range(len(growth.countries)))

    label = f"{spec.start_year}-{spec.end_year}"
    if not allow_gaps:
        hit = [
            (lo, hi)
            for lo, hi in spec.exclusions
            if lo <= spec.end_year and hi >= spec.start_year
        ]
        if hit:
            lo, hi = hit[0]
            raise DataError(f"window {label} intersects excluded years {lo}-{hi}")

    rows = [
        i
        for i, y in enumerate(growth.years)
        if spec.start_year <= y <= spec.end_year and not spec.is_excluded(y)
    ]
    if not rows:
        raise DataError(f"window {label} selects no years")
    years = tuple(growth.years[i] for i in rows)
    if not allow_gaps:
        expected = tuple(range(spec.start_year, spec.end_year + 1))
        if years != expected:
            absent = sorted(set(expected) - set(years))
            raise DataError(f"window {label} is not contiguous; missing years {absent[:5]}")

    values = growth.values[np.ix_(rows, cols)]
    countries = tuple(growth.countries[j] for j in cols)
    bad = np.isnan(values)
    if bad.any():
        j = int(np.argmax(bad.any(axis=0)))
        missing_years = [years[i] for i in np.flatnonzero(bad[:, j])]
        raise DataError(
            f"window {label}: {countries[j]} has missing growth in {missing_years[:5]}"
        )
    return GrowthPanel(years=years, countries=countries, values=values)


@dataclass(frozen=True)
class Finding:
    kind: str  # "missing" | "outlier" | "constant"
    country: str
    years: tuple[int, ...]
    detail: str = field(default="", compare=False)


def _runs(years: Sequence[int], mask: Iterable[bool]) -> list[tuple[int, int]]:
    """Maximal runs of consecutive positions where ``mask`` is true, as (first, last) years."""
    runs = []
    start = None
    prev = None
    for y, m in zip(years, mask):
        if m and start is None:
            start = y
        elif not m and start is not None:
            runs.append((start, prev))
            start = None
        prev = y
    if start is not None:
        runs.append((start, prev))
    return runs


def validate_panel(
    panel: LevelPanel,
    outlier_threshold: float = 25.0,
    min_constant_run: int = 3,
) -> list[Finding]:
    """Diagnostic pass over a level panel; never raises on bad data.

    Reports missing-value spans, years where ``|growth|`` exceeds
    ``outlier_threshold`` percent, and runs of at least ``min_constant_run``
    identical consecutive growth rates (zero-variance stretches that make a
    correlation undefined).
    """
    findings: list[Finding] = []
    growth = growth_rates(panel)
    for j, country in enumerate(panel.countries):
        for lo, hi in _runs(panel.years, np.isnan(panel.values[:, j])):
            span = tuple(y for y in panel.years if lo <= y <= hi)
            findings.append(Finding("missing", country, span, f"missing levels {lo}-{hi}"))

        g = growth.values[:, j]
        for year, value in zip(growth.years, g):
            if not math.isnan(value) and abs(value) > outlier_threshold:
                findings.append(
                    Finding("outlier", country, (year,), f"growth {value:+.1f}% in {year}")
                )

        run: list[int] = []
        last = math.nan
        for i, (year, value) in enumerate(zip(growth.years, g)):
            contiguous = i > 0 and growth.years[i - 1] == year - 1
            if not math.isnan(value) and contiguous and run and abs(value - last) <= 1e-9:
                run.append(year)
            else:
                if len(run) >= min_constant_run:
                    findings.append(_constant_finding(country, run, last))
                run = [] if math.isnan(value) else [year]
            last = value
        if len(run) >= min_constant_run:
            findings.append(_constant_finding(country, run, last))
    return findings


def _constant_finding(country, run, value):
    return Finding(
        "constant",
        country,
        tuple(run),
        f"growth constant at {value:.4g}% over {run[0]}-{run[-1]}",
    )
