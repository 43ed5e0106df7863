"""Command-line entry point: ``rmtsync {analyze,nullsim,cluster,rolling,gen-synthetic}``.

Exit codes: 0 success, 1 data or validation error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from rmtsync.clustering import to_newick
from rmtsync.config import country_aliases, load_config
from rmtsync.errors import ConfigError, DataError, RmtSyncError
from rmtsync.panel import serialize_panel_csv
from rmtsync.pipeline import (
    Workspace,
    analyze_period,
    bundle,
    cluster,
    null_summary,
    period_correlation,
    rolling_dict,
    run_rolling,
)
from rmtsync.rmt import NullSimConfig, null_cache_path, null_to_json, simulate_null, write_atomic
from rmtsync.rolling import rolling_to_csv
from rmtsync.svg import dendrogram_svg, rolling_svg
from rmtsync.synthetic import FactorModel, generate_panel

log = logging.getLogger("rmtsync")


def _dump(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def _countries_arg(value: str | None, config=None):
    if value is None:
        return None
    if config is not None and value in config.country_groups:
        return config.country_groups[value]
    codes = tuple(c.strip() for c in value.split(",") if c.strip())
    if not codes:
        raise ConfigError("--countries is empty")
    return codes


def _workspace(args):
    if not args.config:
        raise ConfigError("--config is required for this command")
    config = load_config(args.config)
    overrides = {}
    if getattr(args, "trials", None) is not None:
        if args.trials < 1:
            raise ConfigError("--trials must be positive")
        config = replace(config, null_trials=args.trials)
        overrides["trials"] = args.trials
    if getattr(args, "seed", None) is not None:
        config = replace(config, master_seed=args.seed)
        overrides["seed"] = args.seed
    for key in ("period", "countries", "mode", "window"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return Workspace.load(config, overrides)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cache_dir(args, ws=None) -> Path:
    if getattr(args, "cache_dir", None):
        return Path(args.cache_dir)
    if ws is not None and ws.config.cache_dir is not None:
        return ws.config.cache_dir
    return Path(args.out_dir) / "null-cache"


def _print_period(res) -> None:
    r = res.report
    print(f"period {res.name}: {res.window.years[0]}-{res.window.years[-1]}, "
          f"N={r.bounds.n}, T={r.bounds.t}, Q={r.bounds.q:.4f}")
    print(f"  theoretical noise band [{r.bounds.lambda_min:.4f}, {r.bounds.lambda_max:.4f}], "
          f"simulated max {r.simulated_max:.4f} over {res.null.config.trials} trials")
    print(f"  largest-eigenvalue share {r.info_fraction:.4f}")
    print("  rank  eigenvalue  participation  ipr      flag")
    for k, (lam, pn, ip, f) in enumerate(zip(r.eigenvalues, r.participation_number, r.ipr, r.flags)):
        flag = ("above simulated" if f.above_simulated else
                "above theoretical" if f.above_theoretical else
                "noise" if f.within_noise_band else "below band")
        print(f"  {k + 1:>4}  {lam:10.4f}  {pn:13.3f}  {ip:.4f}  {flag}")


def cmd_analyze(args) -> int:
    ws = _workspace(args)
    countries = _countries_arg(args.countries, ws.config)
    names = [args.period] if args.period else sorted(ws.config.periods)
    if not names:
        raise ConfigError("config defines no periods")
    results = []
    for name in names:
        res = analyze_period(ws, name, countries, args.mode, _cache_dir(args, ws), args.workers)
        _print_period(res)
        results.append(res)
    rolling = None
    if not args.period and ws.config.rolling is not None:
        points = run_rolling(ws, args.window, skip_invalid=args.skip_invalid)
        ccodes = ws.config.rolling.countries or ws.growth.countries
        rolling = rolling_dict(ws, points, ccodes)
    out = _out_dir(args)
    stem = f"analyze_{args.period}" if args.period else "report"
    if args.format == "csv":
        for res in results:
            write_atomic(out / f"analyze_{res.name}.csv", _spectrum_csv(res))
    else:
        write_atomic(out / f"{stem}.json", _dump(bundle(ws, results, rolling)))
    return 0


def _spectrum_csv(res) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "eigenvalue", "ipr", "participation_number",
                "above_theoretical", "above_simulated", "within_noise_band"])
    r = res.report
    for k, f in enumerate(r.flags):
        w.writerow([k + 1, repr(float(r.eigenvalues[k])), repr(float(r.ipr[k])),
                    repr(float(r.participation_number[k])), int(f.above_theoretical),
                    int(bool(f.above_simulated)), int(f.within_noise_band)])
    return buf.getvalue()


def cmd_nullsim(args) -> int:
    try:
        cfg = NullSimConfig(args.n, args.t, args.trials, args.seed)
    except DataError as exc:
        raise DataError(f"invalid null dimensions: {exc}") from None
    result = simulate_null(cfg, workers=args.workers)
    path = null_cache_path(_cache_dir(args), cfg)
    write_atomic(path, null_to_json(result))
    q = result.quantiles()
    if args.format == "json":
        sys.stdout.write(_dump(null_summary(result)))
    elif args.format == "csv":
        print("n,t,trials,master_seed,theoretical_lambda_max,empirical_max,count_above_theoretical,p50,p95,p99")
        print(",".join(str(x) for x in (
            cfg.n, cfg.t, cfg.trials, cfg.master_seed, repr(result.theoretical.lambda_max),
            repr(result.empirical_max), result.count_above_theoretical,
            repr(q["p50"]), repr(q["p95"]), repr(q["p99"]))))
    else:
        print(f"n={cfg.n} t={cfg.t} trials={cfg.trials} seed={cfg.master_seed}")
        print(f"theoretical lambda_max {result.theoretical.lambda_max:.6f}")
        print(f"empirical max {result.empirical_max:.6f}")
        print(f"count above theoretical {result.count_above_theoretical} of {cfg.trials}")
        print(f"quantiles p50 {q['p50']:.6f} p95 {q['p95']:.6f} p99 {q['p99']:.6f}")
    log.info("wrote %s", path)
    return 0


def cmd_cluster(args) -> int:
    if not args.period:
        raise ConfigError("cluster needs --period")
    ws = _workspace(args)
    countries = _countries_arg(args.countries, ws.config)
    window, corr = period_correlation(ws, args.period, countries)
    mode = args.mode or ws.config.clustering_mode
    dendro = cluster(corr, mode)
    out = _out_dir(args)
    stem = f"cluster_{args.period}_{mode}"
    payload = {"provenance": ws.provenance(), "mode": mode, **dendro.to_dict()}
    write_atomic(out / f"{stem}.json", _dump(payload))
    write_atomic(out / f"{stem}.nwk", to_newick(dendro) + "\n")
    title = f"Average linkage ({mode}), {window.years[0]}-{window.years[-1]}"
    write_atomic(out / f"{stem}.svg", dendrogram_svg(dendro, title))
    print(to_newick(dendro))
    return 0


def cmd_rolling(args) -> int:
    ws = _workspace(args)
    countries = _countries_arg(args.countries, ws.config)
    points = run_rolling(ws, args.window, countries, args.skip_invalid)
    codes = countries or (ws.config.rolling.countries or ws.growth.countries)
    out = _out_dir(args)
    if args.format == "json":
        write_atomic(out / "rolling.json",
                     _dump({"provenance": ws.provenance(), **rolling_dict(ws, points, codes)}))
    else:
        write_atomic(out / "rolling.csv", rolling_to_csv(points))
    write_atomic(out / "rolling.svg", rolling_svg(points, len(codes)))
    for p in points:
        print(f"{p.window_start}-{p.window_end}  lambda_max {p.lambda_max:.4f}  share {p.info_fraction:.4f}")
    return 0


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise DataError(f"{what} must be comma-separated numbers") from None


def cmd_gen_synthetic(args) -> int:
    countries = _countries_arg(args.countries) or tuple(country_aliases())
    loadings = _floats(args.loadings, "--loadings")
    if len(loadings) == 1:
        loadings = loadings * len(countries)
    model = FactorModel(
        countries=countries,
        loadings=tuple(loadings),
        start_year=args.start,
        end_year=args.end,
        mean_growth=args.mean_growth,
        factor_sd=args.factor_sd,
        noise_sd=args.noise_sd,
    )
    text = serialize_panel_csv(generate_panel(model, args.seed))
    path = Path(args.out) if args.out else _out_dir(args) / "synthetic_panel.csv"
    write_atomic(path, text)
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rmtsync", description="Random-matrix diagnostics for annual growth panels."
    )
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="TOML analysis config")
        sp.add_argument("--out-dir", default="rmtsync-out")

    a = sub.add_parser("analyze", help="spectrum, null comparison and clustering per period")
    common(a)
    a.add_argument("--period", help="period name; all periods plus rolling when omitted")
    a.add_argument("--countries", help="group name or comma-separated codes")
    a.add_argument("--trials", type=int)
    a.add_argument("--seed", type=int)
    a.add_argument("--mode", choices=("corr-rows", "corr-metric"))
    a.add_argument("--window", type=int)
    a.add_argument("--skip-invalid", action="store_true")
    a.add_argument("--format", choices=("json", "csv"), default="json")
    a.add_argument("--cache-dir")
    a.add_argument("--workers", type=int, default=1)
    a.set_defaults(func=cmd_analyze)

    n = sub.add_parser("nullsim", help="Monte Carlo largest-eigenvalue null")
    common(n, config=False)
    n.add_argument("--n", type=int, required=True, help="number of series")
    n.add_argument("--t", type=int, required=True, help="observations per series")
    n.add_argument("--trials", type=int, default=10_000)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--format", choices=("text", "json", "csv"), default="text")
    n.add_argument("--cache-dir")
    n.add_argument("--workers", type=int, default=1)
    n.set_defaults(func=cmd_nullsim)

    c = sub.add_parser("cluster", help="average-linkage dendrogram for one period")
    common(c)
    c.add_argument("--period")
    c.add_argument("--countries")
    c.add_argument("--mode", choices=("corr-rows", "corr-metric"))
    c.set_defaults(func=cmd_cluster)

    r = sub.add_parser("rolling", help="sliding-window largest-eigenvalue share")
    common(r)
    r.add_argument("--window", type=int)
    r.add_argument("--countries")
    r.add_argument("--skip-invalid", action="store_true")
    r.add_argument("--format", choices=("json", "csv"), default="csv")
    r.set_defaults(func=cmd_rolling)

    g = sub.add_parser("gen-synthetic", help="write a one-factor synthetic level panel")
    common(g, config=False)
    g.add_argument("--countries", help="comma-separated codes (default: the 16 alias codes)")
    g.add_argument("--loadings", default="0", help="one value or one per country")
    g.add_argument("--start", type=int, default=1885)
    g.add_argument("--end", type=int, default=2006)
    g.add_argument("--mean-growth", type=float, default=2.0)
    g.add_argument("--factor-sd", type=float, default=2.0)
    g.add_argument("--noise-sd", type=float, default=2.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output CSV path (default: <out-dir>/synthetic_panel.csv)")
    g.set_defaults(func=cmd_gen_synthetic)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"rmtsync: config error: {exc}", file=sys.stderr)
        return 2
    except RmtSyncError as exc:
        print(f"rmtsync: data error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
