"""Derived forecasts: ultimate times, expected and probable new records,
waiting times, AFT corrections, sub-threshold probabilities, and
cross-discipline equivalent times.

Every operation accepts an AftMode. CORRECTED strips the footwear step
effect (gamma = 0) from location and scale before evaluating, matching
exceedance probabilities between the two parameter sets. All record and
sub-threshold probabilities are computed from the threshold-free yearly
measure, so they are invariant to the choice of u_d.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import HorizonExceededError, SupportError
from .model import (
    XI_EPS,
    GlobalModel,
    location_at,
    poisson_measure_above,
    scale_at,
    upper_endpoint_time,
)

DEFAULT_ORIGIN_YEAR = 2020
HORIZON_CAP = 2150
TRUNCATION_MASS = 1e-6


class AftMode(str, enum.Enum):
    WITH_AFT = "with-aft"
    CORRECTED = "corrected"


@dataclass(frozen=True)
class RecordRef:
    """A reference record: discipline, time in positive seconds, year set."""

    discipline: str
    seconds: float
    year_set: int

    @property
    def x(self) -> float:
        return -self.seconds


@dataclass(frozen=True)
class WaitingTime:
    years: float
    truncated_at_year: int
    truncation_mass: float  # surviving no-record probability at truncation


def _resolve(model: GlobalModel, mode: AftMode) -> GlobalModel:
    mode = AftMode(mode)
    return model.without_aft() if mode is AftMode.CORRECTED else model


def ultimate_time(model: GlobalModel, discipline: str, year: int,
                  mode: AftMode = AftMode.WITH_AFT) -> float:
    """The year's shortest achievable time, in positive seconds."""
    return upper_endpoint_time(_resolve(model, mode), discipline, year)


def expected_new_record(model: GlobalModel, record: RecordRef, year: int,
                        mode: AftMode = AftMode.WITH_AFT) -> float:
    """Expected time of a new record, given one is set in `year` (seconds)."""
    m = _resolve(model, mode)
    d = record.discipline
    xi = m.shape(d)
    p = m.params(d)
    y = year - m.year_origin
    # GPD scale of excesses over the record level; era and AFT terms cancel
    sigma_r = p.sigma0 + xi * (record.x - p.mu0) + p.delta * y
    if sigma_r <= 0:
        raise SupportError(
            f"record {record.seconds:.1f}s outside the support for {d!r} in {year}"
        )
    if xi >= 1.0:
        raise SupportError(f"expected record undefined for xi = {xi:.3g} >= 1")
    return -(record.x + sigma_r / (1.0 - xi))


def prob_record_in_year(model: GlobalModel, record: RecordRef, year: int,
                        mode: AftMode = AftMode.WITH_AFT) -> float:
    """Probability that the record falls in `year`."""
    m = _resolve(model, mode)
    lam = poisson_measure_above(m, record.discipline, year, record.x)
    return float(-np.expm1(-lam))


def prob_record_before_year(model: GlobalModel, record: RecordRef, year: int,
                            mode: AftMode = AftMode.WITH_AFT,
                            origin_year: int = DEFAULT_ORIGIN_YEAR) -> float:
    """Probability that the record falls in some year of [origin, year)."""
    if year <= origin_year:
        raise SupportError(f"year {year} must be after the forecast origin {origin_year}")
    m = _resolve(model, mode)
    total = sum(
        poisson_measure_above(m, record.discipline, k, record.x)
        for k in range(origin_year, year)
    )
    return float(-np.expm1(-total))


def earliest_year_at_confidence(model: GlobalModel, record: RecordRef, level: float,
                                mode: AftMode = AftMode.WITH_AFT,
                                origin_year: int = DEFAULT_ORIGIN_YEAR,
                                horizon_cap: int = HORIZON_CAP) -> int:
    """Smallest year before which the record falls with probability >= level."""
    if not 0.0 <= level < 1.0:
        raise SupportError(f"level must be in [0, 1), got {level}")
    if level == 0.0:
        return origin_year
    m = _resolve(model, mode)
    target = -np.log1p(-level)  # required cumulative measure
    total = 0.0
    for k in range(origin_year, horizon_cap):
        total += poisson_measure_above(m, record.discipline, k, record.x)
        if total >= target:
            return k + 1
    raise HorizonExceededError(
        f"probability {-np.expm1(-total):.4g} at horizon cap {horizon_cap} "
        f"still below level {level}",
        value_at_cap=float(-np.expm1(-total)),
    )


def expected_waiting_time(model: GlobalModel, record: RecordRef,
                          mode: AftMode = AftMode.WITH_AFT,
                          origin_year: int = DEFAULT_ORIGIN_YEAR,
                          horizon_cap: int = HORIZON_CAP) -> WaitingTime:
    """Expected number of years until the record is broken.

    The sum over years is truncated once the surviving no-record probability
    drops below TRUNCATION_MASS; the leftover mass is reported so callers can
    bound the truncation error.
    """
    m = _resolve(model, mode)
    expected = 0.0
    survive = 1.0
    t = 0
    while True:
        t += 1
        year = origin_year + t - 1
        if year >= horizon_cap:
            raise HorizonExceededError(
                f"no-record probability {survive:.3g} has not vanished by the "
                f"horizon cap {horizon_cap}",
                value_at_cap=survive,
            )
        p = prob_record_in_year(model, record, year, mode)
        expected += t * p * survive
        survive *= 1.0 - p
        if survive < TRUNCATION_MASS:
            break
    return WaitingTime(years=expected, truncated_at_year=year, truncation_mass=survive)


def aft_corrected_time(model: GlobalModel, discipline: str, year: int,
                       seconds: float) -> float:
    """The equivalent time had AFT shoes not been available (seconds).

    Defined by matching the expected-exceedance measure of the performance
    under the with-AFT and AFT-removed parameter sets for the same year.
    """
    if year < model.aft_start_year:
        raise SupportError(
            f"year {year} precedes the AFT adoption year {model.aft_start_year}"
        )
    x = -seconds
    xi = model.shape(discipline)
    mu = location_at(model, discipline, year)
    sigma = scale_at(model, discipline, year)
    if abs(xi) >= XI_EPS and 1.0 + xi * (x - mu) / sigma <= 0:
        raise SupportError(
            f"time {seconds:.1f}s beyond the support for {discipline!r} in {year}"
        )
    stripped = model.without_aft()
    mu_c = location_at(stripped, discipline, year)
    sigma_c = scale_at(stripped, discipline, year)
    x_c = mu_c + sigma_c * (x - mu) / sigma
    return -x_c


def prob_sub_threshold(model: GlobalModel, discipline: str, target_seconds: float,
                       year: int, mode: AftMode = AftMode.WITH_AFT) -> float:
    """Probability that `target_seconds` is beaten in `year`."""
    m = _resolve(model, mode)
    lam = poisson_measure_above(m, discipline, year, -target_seconds)
    return float(-np.expm1(-lam))


def prob_sub_threshold_before_year(model: GlobalModel, discipline: str,
                                   target_seconds: float, year: int,
                                   mode: AftMode = AftMode.WITH_AFT,
                                   origin_year: int = DEFAULT_ORIGIN_YEAR) -> float:
    """Probability that `target_seconds` is beaten in some year of [origin, year)."""
    if year <= origin_year:
        raise SupportError(f"year {year} must be after the forecast origin {origin_year}")
    m = _resolve(model, mode)
    total = sum(
        poisson_measure_above(m, discipline, k, -target_seconds)
        for k in range(origin_year, year)
    )
    return float(-np.expm1(-total))


def earliest_year_sub_threshold(model: GlobalModel, discipline: str,
                                target_seconds: float, level: float,
                                mode: AftMode = AftMode.WITH_AFT,
                                origin_year: int = DEFAULT_ORIGIN_YEAR,
                                horizon_cap: int = HORIZON_CAP) -> int:
    """Smallest year before which the target time falls with prob >= level."""
    if not 0.0 <= level < 1.0:
        raise SupportError(f"level must be in [0, 1), got {level}")
    if level == 0.0:
        return origin_year
    m = _resolve(model, mode)
    needed = -np.log1p(-level)
    total = 0.0
    for k in range(origin_year, horizon_cap):
        total += poisson_measure_above(m, discipline, k, -target_seconds)
        if total >= needed:
            return k + 1
    raise HorizonExceededError(
        f"cumulative probability at cap {horizon_cap} below level {level}",
        value_at_cap=float(-np.expm1(-total)),
    )


def equivalent_time(model: GlobalModel, source: str, target: str, seconds: float,
                    year: int, mode: AftMode = AftMode.WITH_AFT) -> float:
    """The target-discipline time with the same yearly exceedance measure.

    Inverts the measure bracket in the target discipline; with a shared tail
    shape this reduces to a location-scale map between the two disciplines.
    """
    m = _resolve(model, mode)
    lam = poisson_measure_above(m, source, year, -seconds)
    xi_t = m.shape(target)
    mu_t = location_at(m, target, year)
    sigma_t = scale_at(m, target, year)
    if abs(xi_t) < XI_EPS:
        if lam <= 0:
            raise SupportError(
                f"zero measure unattainable in target discipline {target!r} (xi = 0)"
            )
        x_t = mu_t - sigma_t * np.log(lam)
    else:
        x_t = mu_t + sigma_t * (lam ** (-xi_t) - 1.0) / xi_t
    return -float(x_t)
