"""Command-line front end.

Subcommands: ``ingest`` (fetch/parse/repair and write per-station series),
``tables`` (summary tables per variable), ``figures`` (figure-data bundle
for one station), ``fit`` (single-model debug printout).
"""

from __future__ import annotations

import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import click

from . import density, ghcn, models, reporting, series as series_mod
from .stations import ConfigError, RunConfig, Station, load_config

VARIABLE_CHOICES = click.Choice(["avg", "dtr", "both"])


def _load(config_path: Optional[str]) -> RunConfig:
    try:
        return load_config(config_path)
    except (ConfigError, OSError) as exc:
        raise click.ClickException(str(exc))


def _apply_overrides(config: RunConfig, endpoint, out, hac_bandwidth, strict_qc):
    if endpoint:
        config.endpoint = endpoint
    if out:
        config.output_dir = Path(out)
    if hac_bandwidth is not None:
        if hac_bandwidth == "auto":
            config.hac_bandwidth = "auto"
        else:
            try:
                config.hac_bandwidth = int(hac_bandwidth)
            except ValueError:
                raise click.ClickException(
                    f"--hac-bandwidth must be 'auto' or an integer, got {hac_bandwidth!r}"
                )
    if strict_qc:
        config.strict_qc = True


def _select(config: RunConfig, station_codes) -> list[Station]:
    try:
        return config.select(list(station_codes) or None)
    except ConfigError as exc:
        raise click.ClickException(str(exc))


def _series_path(config: RunConfig, code: str) -> Path:
    return config.output_dir / "series" / f"{code}.csv"


def _load_series(config: RunConfig, code: str) -> series_mod.TemperatureSeries:
    path = _series_path(config, code)
    if not path.exists():
        raise FileNotFoundError(
            f"no series file {path}; run `tempdyn ingest` for {code} first"
        )
    return series_mod.read_series_csv(path)


@click.group()
def main():
    """Daily temperature trend/seasonality analysis for GHCN stations."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--station", "station_codes", multiple=True, help="Airport code; repeatable.")
@click.option("--endpoint", default=None, help="Archive base URL override.")
@click.option("--strict-qc", is_flag=True, help="Treat qflag-failing values as missing.")
@click.option("--out", default=None, help="Output directory override.")
@click.option("--refresh", is_flag=True, help="Re-download even on cache hit.")
def ingest(config_path, station_codes, endpoint, strict_qc, out, refresh):
    """Fetch, parse, repair, and write per-station daily series CSVs."""
    config = _load(config_path)
    _apply_overrides(config, endpoint, out, None, strict_qc)
    stations = _select(config, station_codes)

    series_dir = config.output_dir / "series"
    series_dir.mkdir(parents=True, exist_ok=True)

    def ingest_one(station: Station) -> dict:
        entry = {"station": station.code, "ghcn_id": station.ghcn_id}
        try:
            cache_file = Path(config.cache_dir) / f"{station.ghcn_id}.dly"
            entry["source"] = "cache" if cache_file.exists() and not refresh else "network"
            payload = ghcn.fetch_station(
                station.ghcn_id, config.endpoint, config.cache_dir, refresh=refresh
            )
            records = ghcn.parse_dly(payload)
            observations, notes = ghcn.station_observations(
                records, config.window_start, config.window_end, config.strict_qc
            )
            built = series_mod.build_series(
                observations, config.window_start, config.window_end
            )
            series_mod.write_series_csv(built, _series_path(config, station.code))
            entry.update(
                status="ok",
                rows=len(built),
                series_csv=str(_series_path(config, station.code)),
                interpolated={
                    element: [d.isoformat() for d in dates]
                    for element, dates in notes.interpolated.items()
                },
                inversions_repaired=[d.isoformat() for d in notes.inversions_repaired],
                qc_suppressed={
                    element: [d.isoformat() for d in dates]
                    for element, dates in notes.qc_suppressed.items()
                },
            )
        except Exception as exc:  # noqa: BLE001 - reported in the manifest
            entry.update(status="error", error=f"{type(exc).__name__}: {exc}")
        entry["fetched_at"] = datetime.now(timezone.utc).isoformat()
        return entry

    workers = max(1, min(4, len(stations)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        entries = list(pool.map(ingest_one, stations))

    reporting.write_manifest(entries, config.output_dir / "manifest.json")
    failed = [e for e in entries if e["status"] != "ok"]
    for entry in entries:
        if entry["status"] == "ok":
            click.echo(f"{entry['station']}: {entry['rows']} rows")
        else:
            click.echo(f"{entry['station']}: FAILED ({entry['error']})", err=True)
    if failed:
        sys.exit(1)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--station", "station_codes", multiple=True)
@click.option("--variable", default="both", type=VARIABLE_CHOICES)
@click.option("--hac-bandwidth", default=None, help="'auto' or a nonnegative integer.")
@click.option("--out", default=None)
def tables(config_path, station_codes, variable, hac_bandwidth, out):
    """Per-station summary tables (trend movement, Wald p-values, rho, R2)."""
    config = _load(config_path)
    _apply_overrides(config, None, out, hac_bandwidth, False)
    stations = _select(config, station_codes)
    variables = ["avg", "dtr"] if variable == "both" else [variable]

    tables_dir = config.output_dir / "tables"
    tables_dir.mkdir(parents=True, exist_ok=True)

    any_failure = False
    for var in variables:
        loaded = []
        for station in stations:
            try:
                loaded.append((station.code, _load_series(config, station.code)))
            except Exception as exc:  # noqa: BLE001
                loaded.append((station.code, exc))
        report = models.batch_report(loaded, var, config.hac_bandwidth)
        reporting.write_table_csv(report, tables_dir / f"table_{var}.csv")
        reporting.write_table_text(report, tables_dir / f"table_{var}.txt")
        click.echo(f"wrote {tables_dir / f'table_{var}.csv'}")
        for code, diagnostic in report.failures:
            any_failure = True
            click.echo(f"{var} {code}: FAILED ({diagnostic})", err=True)
    if any_failure:
        sys.exit(1)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--station", "station_code", required=True)
@click.option("--hac-bandwidth", default=None)
@click.option("--out", default=None)
def figures(config_path, station_code, hac_bandwidth, out):
    """Figure-data bundle for one station: densities, trends, seasonals."""
    config = _load(config_path)
    _apply_overrides(config, None, out, hac_bandwidth, False)
    try:
        config.station(station_code)  # validate the code before any work
        station_series = _load_series(config, station_code)
    except Exception as exc:  # noqa: BLE001
        raise click.ClickException(str(exc))

    figures_dir = config.output_dir / "figures" / station_code
    figures_dir.mkdir(parents=True, exist_ok=True)

    dummies = series_mod.month_dummies(station_series)
    for var in ("avg", "dtr"):
        y = station_series.variable(var)
        estimate = density.kde(y)
        reporting.write_density_csv(estimate, figures_dir / f"density_{var}.csv")

        trend = models.fit_trend(station_series, var, config.hac_bandwidth)
        reporting.write_trend_csv(
            station_series, var, trend, figures_dir / f"trend_{var}.csv"
        )

        detrended = models.detrend(station_series, var, trend)
        fixed = models.fit_fixed_seasonal(detrended, dummies)
        seasonal_fitted = dummies @ fixed.fit.beta
        reporting.write_seasonal_fit_csv(
            station_series,
            detrended,
            seasonal_fitted,
            figures_dir / f"seasonal_fit_{var}.csv",
        )
        reporting.write_patterns_csv(
            [fixed.pattern], figures_dir / f"fixed_pattern_{var}.csv"
        )

        evolving = models.fit_evolving_seasonal(
            detrended, dummies, station_series.t
        )
        reporting.write_patterns_csv(
            reporting.evolving_patterns(evolving, station_series),
            figures_dir / f"evolving_pattern_{var}.csv",
        )
    click.echo(f"wrote figure data under {figures_dir}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--station", "station_code", required=True)
@click.option("--variable", default="avg", type=click.Choice(["avg", "dtr"]))
@click.option(
    "--model",
    default="joint",
    type=click.Choice(["trend", "seasonal", "evolving", "joint"]),
)
@click.option("--hac-bandwidth", default=None)
def fit(config_path, station_code, variable, model, hac_bandwidth):
    """Fit a single specification and print its coefficient table."""
    config = _load(config_path)
    _apply_overrides(config, None, None, hac_bandwidth, False)
    try:
        config.station(station_code)
        station_series = _load_series(config, station_code)
    except Exception as exc:  # noqa: BLE001
        raise click.ClickException(str(exc))

    if model == "trend":
        result = models.fit_trend(station_series, variable, config.hac_bandwidth)
        _print_fit(result.fit)
        click.echo(f"delta_trend: {result.delta_trend:.4f} F over the sample")
        return

    trend = models.fit_trend(station_series, variable, config.hac_bandwidth)
    detrended = models.detrend(station_series, variable, trend)
    dummies = series_mod.month_dummies(station_series)
    if model == "seasonal":
        _print_fit(
            models.fit_fixed_seasonal(detrended, dummies, config.hac_bandwidth).fit
        )
    elif model == "evolving":
        _print_fit(
            models.fit_evolving_seasonal(
                detrended, dummies, station_series.t, config.hac_bandwidth
            ).fit
        )
    else:
        joint = models.fit_joint(station_series, variable, config.hac_bandwidth)
        _print_fit(joint.fit)
        suite = models.hypothesis_suite(joint)
        click.echo(
            f"p(nt)={suite.p_nt:.4f}  p(ns)={suite.p_ns:.4f}  p(nts)={suite.p_nts:.4f}"
        )


DAYS_PER_DECADE = 3652.5


def _print_fit(fit_result) -> None:
    # slopes on daily time are tiny; show a per-decade rescaling alongside
    click.echo(f"{'name':<8}{'coef':>16}{'hac_se':>14}{'p':>10}{'per_decade':>14}")
    for name in fit_result.names:
        per_decade = ""
        if name == "time" or name.startswith("dt"):
            per_decade = f"{fit_result.coef(name) * DAYS_PER_DECADE:>14.4g}"
        click.echo(
            f"{name:<8}{fit_result.coef(name):>16.6g}"
            f"{fit_result.se(name):>14.4g}{fit_result.coef_p(name):>10.4f}{per_decade}"
        )
    click.echo(
        f"nobs={fit_result.nobs}  R2={fit_result.r_squared:.4f}  "
        f"bandwidth={fit_result.bandwidth}"
    )


if __name__ == "__main__":
    main()
