"""Core non-stationary point-process model for top running performances.

Everything here lives on the performance scale: times are negated seconds,
so faster races are larger values and "exceeding" a threshold means running
faster than it. Calendar years enter through a yearly covariate
y = year - year_origin; location and scale are step functions of the year,
with an extra step shift from the AFT (advanced footwear) adoption year on.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import (
    InvalidParameterError,
    NoFiniteEndpointError,
    SupportError,
    UnknownDisciplineError,
)

# Below this |xi| the exponential-limit forms are used; keeps the likelihood
# well behaved when an optimizer wanders near xi = 0.
XI_EPS = 1e-8


@dataclass(frozen=True)
class DisciplineParams:
    """Per-discipline parameters of the yearly point-process model.

    mu0    : location at y = 0 (performance scale, i.e. negated seconds)
    sigma0 : scale at y = 0 (seconds)
    beta   : era trend of the location (performance scale per year)
    gamma  : AFT step effect on the location (performance scale)
    delta  : linear trend of the threshold-excess scale (seconds per year)
    """

    mu0: float
    sigma0: float
    beta: float = 0.0
    gamma: float = 0.0
    delta: float = 0.0


@dataclass(frozen=True)
class GlobalModel:
    """Joint model over disciplines with a shared tail shape.

    A per-discipline shape can be supplied through ``xi_by_discipline`` for
    the model-comparison variant; by default all disciplines share ``xi``.
    """

    xi: float
    disciplines: Mapping[str, DisciplineParams]
    thresholds: Mapping[str, float]
    aft_start_year: int = 2018
    year_origin: int = 2000
    xi_by_discipline: Optional[Mapping[str, float]] = None

    def params(self, discipline: str) -> DisciplineParams:
        try:
            return self.disciplines[discipline]
        except KeyError:
            raise UnknownDisciplineError(discipline) from None

    def threshold(self, discipline: str) -> float:
        try:
            return self.thresholds[discipline]
        except KeyError:
            raise UnknownDisciplineError(discipline) from None

    def shape(self, discipline: str) -> float:
        if self.xi_by_discipline is not None and discipline in self.xi_by_discipline:
            return self.xi_by_discipline[discipline]
        if discipline not in self.disciplines:
            raise UnknownDisciplineError(discipline)
        return self.xi

    def without_aft(self) -> "GlobalModel":
        """The same model with the AFT step effect removed (gamma = 0)."""
        stripped = {d: replace(p, gamma=0.0) for d, p in self.disciplines.items()}
        return replace(self, disciplines=stripped)

    def to_dict(self) -> dict:
        out = {
            "xi": self.xi,
            "aft_start_year": self.aft_start_year,
            "year_origin": self.year_origin,
            "disciplines": {
                d: {
                    "mu0": p.mu0,
                    "sigma0": p.sigma0,
                    "beta": p.beta,
                    "gamma": p.gamma,
                    "delta": p.delta,
                }
                for d, p in self.disciplines.items()
            },
            "thresholds": dict(self.thresholds),
        }
        if self.xi_by_discipline is not None:
            out["xi_by_discipline"] = dict(self.xi_by_discipline)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "GlobalModel":
        disciplines = {
            d: DisciplineParams(**vals) for d, vals in data["disciplines"].items()
        }
        return cls(
            xi=float(data["xi"]),
            disciplines=disciplines,
            thresholds={d: float(u) for d, u in data["thresholds"].items()},
            aft_start_year=int(data.get("aft_start_year", 2018)),
            year_origin=int(data.get("year_origin", 2000)),
            xi_by_discipline=(
                {d: float(x) for d, x in data["xi_by_discipline"].items()}
                if data.get("xi_by_discipline")
                else None
            ),
        )


@dataclass(frozen=True)
class ExceedanceSet:
    """Threshold exceedances for one discipline, indexed by year.

    Observations are (year, x) pairs on the performance scale with
    x strictly above the discipline threshold.
    """

    discipline: str
    observations: tuple[tuple[int, float], ...]
    horizon: tuple[int, int]

    def __post_init__(self):
        lo, hi = self.horizon
        if lo > hi:
            raise ValueError(f"empty horizon {self.horizon}")
        for year, _ in self.observations:
            if not lo <= year <= hi:
                raise ValueError(f"observation year {year} outside horizon {self.horizon}")

    @property
    def years(self) -> np.ndarray:
        return np.array([y for y, _ in self.observations], dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([x for _, x in self.observations], dtype=float)

    def __len__(self):
        return len(self.observations)


# ---------------------------------------------------------------------------
# parameter evolution

def _mu_sigma(p: DisciplineParams, xi: float, y, aft):
    """Location and scale at relative year(s) y with AFT indicator(s)."""
    mu = p.mu0 + p.beta * y + p.gamma * aft
    sigma = p.sigma0 + xi * p.beta * y + xi * p.gamma * aft + p.delta * y
    return mu, sigma


def _year_covariates(model: GlobalModel, year):
    y = np.asarray(year, dtype=float) - model.year_origin
    aft = (np.asarray(year) >= model.aft_start_year).astype(float)
    return y, aft


def location_at(model: GlobalModel, discipline: str, year: int) -> float:
    """Location parameter mu(year) on the performance scale."""
    p = model.params(discipline)
    y, aft = _year_covariates(model, year)
    mu, _ = _mu_sigma(p, model.shape(discipline), y, aft)
    return float(mu)


def scale_at(model: GlobalModel, discipline: str, year: int) -> float:
    """Scale parameter sigma(year), in seconds; must be positive."""
    p = model.params(discipline)
    y, aft = _year_covariates(model, year)
    _, sigma = _mu_sigma(p, model.shape(discipline), y, aft)
    sigma = float(sigma)
    if sigma <= 0:
        raise InvalidParameterError(
            f"sigma({year}) = {sigma:.6g} <= 0 for discipline {discipline!r}"
        )
    return sigma


def threshold_scale_at(model: GlobalModel, discipline: str, year: int) -> float:
    """GPD scale of the excesses over the discipline threshold at `year`.

    Equals sigma(year) + xi * (u - mu(year)); the AFT and era terms cancel,
    leaving sigma0 + xi * (u - mu0) + delta * y.
    """
    xi = model.shape(discipline)
    u = model.threshold(discipline)
    mu = location_at(model, discipline, year)
    sigma = scale_at(model, discipline, year)
    sigma_u = sigma + xi * (u - mu)
    if sigma_u <= 0:
        raise InvalidParameterError(
            f"sigma_u({year}) = {sigma_u:.6g} <= 0 for discipline {discipline!r}"
        )
    return float(sigma_u)


# ---------------------------------------------------------------------------
# measure, intensity, excess distribution

def poisson_measure_above(model: GlobalModel, discipline: str, year: int, x: float) -> float:
    """Expected number of performances at or above x (performance scale) in `year`.

    Threshold-free: this is the integrated point-process measure of the
    one-year region above level x. Returns 0 beyond the support endpoint.
    """
    xi = model.shape(discipline)
    mu = location_at(model, discipline, year)
    sigma = scale_at(model, discipline, year)
    if abs(xi) < XI_EPS:
        return float(np.exp(-(x - mu) / sigma))
    bracket = 1.0 + xi * (x - mu) / sigma
    if bracket <= 0:
        return 0.0
    return float(bracket ** (-1.0 / xi))


def intensity_at(model: GlobalModel, discipline: str, year: int, x: float) -> float:
    """Point-process intensity at (year, x): events per year per second."""
    xi = model.shape(discipline)
    mu = location_at(model, discipline, year)
    sigma = scale_at(model, discipline, year)
    if abs(xi) < XI_EPS:
        return float(np.exp(-(x - mu) / sigma) / sigma)
    bracket = 1.0 + xi * (x - mu) / sigma
    if bracket <= 0:
        return 0.0
    return float(bracket ** (-1.0 / xi - 1.0) / sigma)


def gpd_excess_survival(model: GlobalModel, discipline: str, year: int, x: float) -> float:
    """P(X > x | X > u) for the year's excess distribution; x must be >= u."""
    u = model.threshold(discipline)
    if x < u:
        raise SupportError(
            f"x = {x:.6g} below threshold u = {u:.6g} for discipline {discipline!r}"
        )
    xi = model.shape(discipline)
    sigma_u = threshold_scale_at(model, discipline, year)
    if abs(xi) < XI_EPS:
        return float(np.exp(-(x - u) / sigma_u))
    bracket = 1.0 + xi * (x - u) / sigma_u
    if bracket <= 0:
        return 0.0
    return float(bracket ** (-1.0 / xi))


def upper_endpoint(model: GlobalModel, discipline: str, year: int) -> float:
    """Support endpoint on the performance scale; requires xi < 0."""
    xi = model.shape(discipline)
    if xi >= -XI_EPS:
        raise NoFiniteEndpointError(
            f"no finite endpoint for discipline {discipline!r}: xi = {xi:.6g} >= 0"
        )
    mu = location_at(model, discipline, year)
    sigma = scale_at(model, discipline, year)
    return mu - sigma / xi


def upper_endpoint_time(model: GlobalModel, discipline: str, year: int) -> float:
    """The year's ultimate (shortest achievable) time, in positive seconds."""
    return -upper_endpoint(model, discipline, year)


# ---------------------------------------------------------------------------
# likelihood

def _discipline_loglik(xi, p, u, grid_y, grid_aft, obs_y, obs_aft, obs_x):
    """Log-likelihood contribution of one discipline; -inf when infeasible.

    Vectorized over the yearly grid and the observations; shared by
    log_likelihood and the fitting objective.
    """
    mu_g, sig_g = _mu_sigma(p, xi, grid_y, grid_aft)
    if np.any(sig_g <= 0):
        return -np.inf
    if abs(xi) < XI_EPS:
        lam_u = np.exp(-(u - mu_g) / sig_g)
    else:
        bracket_u = np.clip(1.0 + xi * (u - mu_g) / sig_g, 0.0, None)
        lam_u = np.zeros_like(bracket_u)
        pos = bracket_u > 0
        lam_u[pos] = bracket_u[pos] ** (-1.0 / xi)
    total = -float(np.sum(lam_u))
    if obs_x.size:
        mu_o, sig_o = _mu_sigma(p, xi, obs_y, obs_aft)
        if np.any(sig_o <= 0):
            return -np.inf
        if abs(xi) < XI_EPS:
            total += float(np.sum(-np.log(sig_o) - (obs_x - mu_o) / sig_o))
        else:
            bracket_o = 1.0 + xi * (obs_x - mu_o) / sig_o
            if np.any(bracket_o <= 0):
                return -np.inf
            total += float(
                np.sum(-np.log(sig_o) + (-1.0 / xi - 1.0) * np.log(bracket_o))
            )
    return total


def log_likelihood(model: GlobalModel, data: Iterable[ExceedanceSet]) -> float:
    """Joint point-process log-likelihood over disciplines.

    The time integral of the yearly measure reduces to a unit-weight sum over
    the integer years of each horizon because all covariates are yearly steps.
    Support violations (an observation beyond the endpoint, or a non-positive
    scale anywhere on the horizon) yield -inf rather than raising, so
    optimizers can probe infeasible points.
    """
    total = 0.0
    for es in data:
        p = model.params(es.discipline)
        xi = model.shape(es.discipline)
        u = model.threshold(es.discipline)
        years = np.arange(es.horizon[0], es.horizon[1] + 1)
        grid_y, grid_aft = _year_covariates(model, years)
        obs_y, obs_aft = _year_covariates(model, es.years)
        contrib = _discipline_loglik(
            xi, p, u, grid_y, grid_aft, obs_y, obs_aft, es.values
        )
        if not np.isfinite(contrib):
            return -np.inf
        total += contrib
    return total
