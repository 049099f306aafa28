"""The four nested conditional-mean specifications and their hypothesis tests.

For a daily series Y (AVG or DTR) over t = 1..T:

  trend:             Y ~ c + b*t                              (raw data)
  fixed seasonal:    Y~ ~ D_1..D_12                           (de-trended, no intercept)
  evolving seasonal: Y~ ~ D_1..D_12, D_1*t..D_12*t            (de-trended, no intercept)
  joint:             Y ~ c, t, Y(-1), D_i (i != 7), D_i*t (i != 7)

July is dropped from the joint design so the intercept captures July and
the remaining seasonal coefficients are relative to July. The joint fit
estimates over t = 2..T (the first day feeds the lag), with the time
regressor un-rescaled (t in days).

Three Wald hypotheses are evaluated on the joint fit:

  p(nt)  no trend:                time and all 11 interactions zero  (df 12)
  p(ns)  no seasonality:          11 dummies and 11 interactions zero (df 22)
  p(nts) no trending seasonality: 11 interactions zero                (df 11)
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date
from statistics import median
from typing import Optional, Sequence, Union

import numpy as np

from .regression import (
    Bandwidth,
    DesignMatrix,
    ModelFit,
    WaldResult,
    fit_with_hac,
    wald_test,
)
from .series import TemperatureSeries

JULY = 7
STAR_LEVEL = 0.01

DUMMY_NAMES = tuple(f"d{i:02d}" for i in range(1, 13))
INTERACTION_NAMES = tuple(f"dt{i:02d}" for i in range(1, 13))
JOINT_DUMMIES = tuple(n for i, n in enumerate(DUMMY_NAMES, start=1) if i != JULY)
JOINT_INTERACTIONS = tuple(
    n for i, n in enumerate(INTERACTION_NAMES, start=1) if i != JULY
)


MODEL_KINDS = ("trend", "fixed_seasonal", "evolving_seasonal", "joint")


@dataclass(frozen=True)
class ModelSpec:
    """One of the four estimable specifications for one regressand."""

    kind: str
    regressand: str

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.regressand not in ("avg", "dtr"):
            raise ValueError(f"unknown regressand {self.regressand!r}")

    @property
    def on_detrended(self) -> bool:
        """Seasonal specifications regress trend-regression residuals."""
        return self.kind in ("fixed_seasonal", "evolving_seasonal")

    @property
    def included_regressors(self) -> tuple[str, ...]:
        if self.kind == "trend":
            return ("const", "time")
        if self.kind == "fixed_seasonal":
            return DUMMY_NAMES
        if self.kind == "evolving_seasonal":
            return DUMMY_NAMES + INTERACTION_NAMES
        return ("const", "time", "lag") + JOINT_DUMMIES + JOINT_INTERACTIONS


@dataclass(frozen=True)
class SeasonalPattern:
    """Twelve month effects in deg F, January first."""

    month_effects: tuple[float, ...]
    evaluated_at: str

    def __post_init__(self):
        if len(self.month_effects) != 12:
            raise ValueError("a seasonal pattern has exactly 12 month effects")


@dataclass(frozen=True)
class TrendFit:
    """Linear-trend regression of one variable, with HAC inference."""

    variable: str
    fit: ModelFit
    slope: float
    delta_trend: float  # slope * (T - 1): total fitted movement over the sample
    slope_p: float

    @property
    def starred(self) -> bool:
        return self.slope_p < STAR_LEVEL


@dataclass(frozen=True)
class FixedSeasonalFit:
    fit: ModelFit
    pattern: SeasonalPattern


@dataclass(frozen=True)
class EvolvingSeasonalFit:
    """Dummies plus dummy*time interactions on de-trended data."""

    fit: ModelFit

    def pattern_at(self, t: float) -> SeasonalPattern:
        effects = tuple(
            self.fit.coef(DUMMY_NAMES[i]) + self.fit.coef(INTERACTION_NAMES[i]) * t
            for i in range(12)
        )
        return SeasonalPattern(effects, evaluated_at=f"t={t:g}")

    def pattern_for_year(
        self, series: TemperatureSeries, year: int, anchor: tuple[int, int] = (7, 1)
    ) -> SeasonalPattern:
        """Pattern evaluated at the t of the anchor date (default July 1)."""
        t = series.position_of(date(year, *anchor)) + 1
        pattern = self.pattern_at(float(t))
        return SeasonalPattern(pattern.month_effects, evaluated_at=str(year))


@dataclass(frozen=True)
class JointFit:
    variable: str
    fit: ModelFit

    @property
    def rho(self) -> float:
        return self.fit.coef("lag")

    @property
    def rho_p(self) -> float:
        return self.fit.coef_p("lag")

    @property
    def rho_starred(self) -> bool:
        return self.rho_p < STAR_LEVEL

    @property
    def r_squared(self) -> float:
        return self.fit.r_squared


@dataclass(frozen=True)
class HypothesisSuite:
    no_trend: WaldResult
    no_seasonality: WaldResult
    no_trending_seasonality: WaldResult

    @property
    def p_nt(self) -> float:
        return self.no_trend.p_value

    @property
    def p_ns(self) -> float:
        return self.no_seasonality.p_value

    @property
    def p_nts(self) -> float:
        return self.no_trending_seasonality.p_value


@dataclass(frozen=True)
class CityReport:
    """One summary-table row: trend movement plus joint-model statistics."""

    station: str
    delta_trend: float
    delta_trend_starred: bool
    p_nt: float
    p_ns: float
    p_nts: float
    rho: float
    rho_starred: bool
    r_squared: float
    hac_bandwidth: int


@dataclass(frozen=True)
class BatchReport:
    variable: str
    rows: tuple[CityReport, ...]
    median_row: Optional[CityReport]
    failures: tuple[tuple[str, str], ...]  # (station, diagnostic)


def trend_design(series: TemperatureSeries) -> DesignMatrix:
    data = np.column_stack([np.ones(len(series)), series.t.astype(np.float64)])
    return DesignMatrix(("const", "time"), data)


def fit_trend(
    series: TemperatureSeries, variable: str, bandwidth: Bandwidth = "auto"
) -> TrendFit:
    fit = fit_with_hac(trend_design(series), series.variable(variable), bandwidth)
    slope = fit.coef("time")
    return TrendFit(
        variable=variable,
        fit=fit,
        slope=slope,
        delta_trend=slope * (len(series) - 1),
        slope_p=fit.coef_p("time"),
    )


def detrend(series: TemperatureSeries, variable: str, trend_fit: TrendFit) -> np.ndarray:
    """Residuals from the trend regression (mean zero by construction)."""
    if trend_fit.variable != variable:
        raise ValueError(
            f"trend fit is for {trend_fit.variable!r}, not {variable!r}"
        )
    if trend_fit.fit.nobs != len(series):
        raise ValueError("trend fit does not match series length")
    return trend_fit.fit.residuals


def seasonal_design(dummies: np.ndarray) -> DesignMatrix:
    return DesignMatrix(DUMMY_NAMES, dummies)


def evolving_design(dummies: np.ndarray, t: np.ndarray) -> DesignMatrix:
    t = np.asarray(t, dtype=np.float64)
    data = np.column_stack([dummies, dummies * t[:, None]])
    return DesignMatrix(DUMMY_NAMES + INTERACTION_NAMES, data)


def fit_fixed_seasonal(
    detrended: np.ndarray, dummies: np.ndarray, bandwidth: Bandwidth = "auto"
) -> FixedSeasonalFit:
    """Intercept regression per month: coefficient i is the month-i mean."""
    fit = fit_with_hac(seasonal_design(dummies), detrended, bandwidth)
    pattern = SeasonalPattern(tuple(float(b) for b in fit.beta), evaluated_at="fixed")
    return FixedSeasonalFit(fit, pattern)


def fit_evolving_seasonal(
    detrended: np.ndarray,
    dummies: np.ndarray,
    t: np.ndarray,
    bandwidth: Bandwidth = "auto",
) -> EvolvingSeasonalFit:
    return EvolvingSeasonalFit(
        fit_with_hac(evolving_design(dummies, t), detrended, bandwidth)
    )


def joint_design(
    month: np.ndarray, t: np.ndarray, y: np.ndarray
) -> tuple[DesignMatrix, np.ndarray]:
    """Design and regressand for the joint model, estimation sample t = 2..T."""
    y = np.asarray(y, dtype=np.float64)
    if len(y) < 2:
        raise ValueError("joint model needs at least two observations")
    month = np.asarray(month)[1:]
    time = np.asarray(t, dtype=np.float64)[1:]
    lag = y[:-1]
    columns = [np.ones(len(time)), time, lag]
    names = ["const", "time", "lag"]
    for i in range(1, 13):
        if i == JULY:
            continue
        columns.append((month == i).astype(np.float64))
        names.append(DUMMY_NAMES[i - 1])
    for i in range(1, 13):
        if i == JULY:
            continue
        columns.append((month == i).astype(np.float64) * time)
        names.append(INTERACTION_NAMES[i - 1])
    return DesignMatrix(tuple(names), np.column_stack(columns)), y[1:]


def fit_joint(
    series: TemperatureSeries, variable: str, bandwidth: Bandwidth = "auto"
) -> JointFit:
    design, y = joint_design(series.month, series.t, series.variable(variable))
    return JointFit(variable, fit_with_hac(design, y, bandwidth))


def hypothesis_suite(joint: JointFit) -> HypothesisSuite:
    fit = joint.fit
    return HypothesisSuite(
        no_trend=wald_test(fit, ("time",) + JOINT_INTERACTIONS),
        no_seasonality=wald_test(fit, JOINT_DUMMIES + JOINT_INTERACTIONS),
        no_trending_seasonality=wald_test(fit, JOINT_INTERACTIONS),
    )


def city_report(
    station: str,
    series: TemperatureSeries,
    variable: str,
    bandwidth: Bandwidth = "auto",
) -> CityReport:
    trend = fit_trend(series, variable, bandwidth)
    joint = fit_joint(series, variable, bandwidth)
    tests = hypothesis_suite(joint)
    return CityReport(
        station=station,
        delta_trend=trend.delta_trend,
        delta_trend_starred=trend.starred,
        p_nt=tests.p_nt,
        p_ns=tests.p_ns,
        p_nts=tests.p_nts,
        rho=joint.rho,
        rho_starred=joint.rho_starred,
        r_squared=joint.r_squared,
        hac_bandwidth=joint.fit.bandwidth,
    )


MIN_ROWS_FOR_MEDIAN = 8


def batch_report(
    station_series: Sequence[tuple[str, Union[TemperatureSeries, Exception]]],
    variable: str,
    bandwidth: Bandwidth = "auto",
    max_workers: int = 4,
) -> BatchReport:
    """Per-station rows in input order plus a column-wise median row.

    Fits run on a bounded worker pool (each station is independent) and are
    joined back in input order. A station failure only aborts that row; an
    entry may carry an Exception instead of a series to record an upstream
    failure. The median row is produced when every requested station
    succeeded or at least MIN_ROWS_FOR_MEDIAN did.
    """

    def one(entry: tuple[str, Union[TemperatureSeries, Exception]]):
        station, series = entry
        if isinstance(series, Exception):
            return station, series
        try:
            return station, city_report(station, series, variable, bandwidth)
        except Exception as exc:  # noqa: BLE001 - diagnostics per station
            return station, exc

    workers = max(1, min(max_workers, len(station_series) or 1))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(one, station_series))

    rows: list[CityReport] = []
    failures: list[tuple[str, str]] = []
    for station, outcome in outcomes:
        if isinstance(outcome, Exception):
            failures.append((station, f"{type(outcome).__name__}: {outcome}"))
        else:
            rows.append(outcome)
    median_row = None
    if rows and (not failures or len(rows) >= MIN_ROWS_FOR_MEDIAN):
        median_row = CityReport(
            station="Median",
            delta_trend=median(r.delta_trend for r in rows),
            delta_trend_starred=False,
            p_nt=median(r.p_nt for r in rows),
            p_ns=median(r.p_ns for r in rows),
            p_nts=median(r.p_nts for r in rows),
            rho=median(r.rho for r in rows),
            rho_starred=False,
            r_squared=median(r.r_squared for r in rows),
            hac_bandwidth=rows[0].hac_bandwidth,
        )
    return BatchReport(variable, tuple(rows), median_row, tuple(failures))
