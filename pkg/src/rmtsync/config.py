"""Analysis configuration documents (TOML).

Grammar, all keys optional unless noted::

    data_path = "panel.csv"            # required; relative to the config file
    null_trials = 10000
    master_seed = 20080301
    clustering_mode = "corr-rows"      # or "corr-metric"
    cache_dir = "null-cache"           # relative to the config file
    exclusions = [[1914, 1919], [1939, 1947]]

    [country_groups]
    majors6 = ["usa", "gbr", "deu", "fra", "ita", "jpn"]

    [periods.gold_standard]            # at least one period for `analyze`
    start = 1886
    end = 1913
    countries = "all"                  # "all", a group name, or a list of codes
    exclusions = []                    # overrides the top-level list

    [rolling]
    countries = "majors6"
    start = 1948
    end = 2006
    window = 12
    step = 1
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from rmtsync.errors import ConfigError
from rmtsync.panel import DEFAULT_EXCLUSIONS, PeriodSpec
from rmtsync.rolling import RollingConfig

CLUSTERING_MODES = ("corr-rows", "corr-metric")


def country_aliases() -> dict[str, str]:
    """Suggested lowercase codes for the sixteen economies, mapped to country names."""
    text = resources.files("rmtsync").joinpath("data/aliases.json").read_text(encoding="utf-8")
    return json.loads(text)


@dataclass(frozen=True)
class AnalysisConfig:
    data_path: Path
    periods: dict[str, PeriodSpec] = field(default_factory=dict)
    country_groups: dict[str, tuple[str, ...]] = field(default_factory=dict)
    null_trials: int = 10_000
    master_seed: int = 0
    clustering_mode: str = "corr-rows"
    rolling: RollingConfig | None = None
    cache_dir: Path | None = None
    source_bytes: bytes = b""

    def period(self, name: str) -> PeriodSpec:
        try:
            return self.periods[name]
        except KeyError:
            known = ", ".join(sorted(self.periods)) or "none"
            raise ConfigError(f"unknown period {name!r} (known: {known})") from None

    def resolve_countries(self, value) -> tuple[str, ...] | None:
        return _resolve_countries(value, self.country_groups)


def _resolve_countries(value, groups) -> tuple[str, ...] | None:
    if value is None or value == "all":
        return None
    if isinstance(value, str):
        if value in groups:
            return groups[value]
        if "," in value:
            return tuple(c.strip() for c in value.split(",") if c.strip())
        raise ConfigError(f"unknown country group {value!r}")
    if isinstance(value, list) and all(isinstance(c, str) for c in value):
        return tuple(value)
    raise ConfigError(f"countries must be 'all', a group name, or a list of codes, got {value!r}")


def _ranges(value, where) -> tuple[tuple[int, int], ...]:
    if not isinstance(value, list):
        raise ConfigError(f"{where}: exclusions must be a list of [lo, hi] pairs")
    out = []
    for item in value:
        if (
            not isinstance(item, list)
            or len(item) != 2
            or not all(isinstance(x, int) for x in item)
            or item[0] > item[1]
        ):
            raise ConfigError(f"{where}: malformed exclusion {item!r}")
        out.append((item[0], item[1]))
    return tuple(out)


def _int(doc, key, default, where="config"):
    value = doc.get(key, default)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{where}: {key} must be an integer")
    return value


def parse_config(text: str, base_dir: Path = Path(".")) -> AnalysisConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from None

    if "data_path" not in doc or not isinstance(doc["data_path"], str):
        raise ConfigError("config must set data_path")
    data_path = (base_dir / doc["data_path"]).resolve()

    groups = {}
    for name, members in doc.get("country_groups", {}).items():
        if not isinstance(members, list) or not all(isinstance(c, str) for c in members):
            raise ConfigError(f"country group {name!r} must be a list of codes")
        groups[name] = tuple(members)

    default_excl = _ranges(doc.get("exclusions", [list(r) for r in DEFAULT_EXCLUSIONS]), "config")

    periods = {}
    for name, p in doc.get("periods", {}).items():
        where = f"period {name!r}"
        if not isinstance(p, dict) or "start" not in p or "end" not in p:
            raise ConfigError(f"{where} needs start and end")
        excl = _ranges(p["exclusions"], where) if "exclusions" in p else default_excl
        try:
            periods[name] = PeriodSpec(
                _int(p, "start", None, where),
                _int(p, "end", None, where),
                excl,
                _resolve_countries(p.get("countries"), groups),
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None

    mode = doc.get("clustering_mode", "corr-rows")
    if mode not in CLUSTERING_MODES:
        raise ConfigError(f"clustering_mode must be one of {CLUSTERING_MODES}, got {mode!r}")

    rolling = None
    if "rolling" in doc:
        r = doc["rolling"]
        excl = _ranges(r["exclusions"], "rolling") if "exclusions" in r else default_excl
        try:
            rolling = RollingConfig(
                start_year=_int(r, "start", None, "rolling"),
                end_year=_int(r, "end", None, "rolling"),
                window_len=_int(r, "window", 12, "rolling"),
                step=_int(r, "step", 1, "rolling"),
                countries=_resolve_countries(r.get("countries"), groups),
                exclusions=excl,
            )
        except ValueError as exc:
            raise ConfigError(f"rolling: {exc}") from None

    trials = _int(doc, "null_trials", 10_000)
    if trials < 1:
        raise ConfigError("null_trials must be positive")
    cache_dir = doc.get("cache_dir")
    return AnalysisConfig(
        data_path=data_path,
        periods=periods,
        country_groups=groups,
        null_trials=trials,
        master_seed=_int(doc, "master_seed", 0),
        clustering_mode=mode,
        rolling=rolling,
        cache_dir=(base_dir / cache_dir).resolve() if isinstance(cache_dir, str) else None,
        source_bytes=text.encode("utf-8"),
    )


def load_config(path) -> AnalysisConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, path.parent)


def provenance_hash(config_bytes: bytes, data_bytes: bytes) -> str:
    """SHA-256 over the length-prefixed config and data bytes.

    Command-line overrides are recorded next to the hash, not inside it.
    """
    h = hashlib.sha256()
    for chunk in (config_bytes, data_bytes):
        h.update(len(chunk).to_bytes(8, "big"))
        h.update(chunk)
    return h.hexdigest()
