"""Seeded synthetic-season generator; the independent oracle for fitting,
bootstrap, diagnostics and the acceptance suite.

Randomness comes from numpy's Philox counter-based generator, keyed per
(discipline, year) through SeedSequence spawn keys, so output is
bit-reproducible for a fixed seed and independent of generation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import PerformanceRecord
from .errors import InvalidParameterError
from .model import XI_EPS, ExceedanceSet, GlobalModel, poisson_measure_above, threshold_scale_at


@dataclass(frozen=True)
class SimConfig:
    model: GlobalModel
    horizon: tuple[int, int]
    seed: int
    athlete_pool: int = 500

    def __post_init__(self):
        if self.horizon[0] > self.horizon[1]:
            raise ValueError(f"empty horizon {self.horizon}")


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=key))
    )


def _draw_excesses(rng, n, sigma_u, xi):
    u01 = rng.random(n)
    if abs(xi) < XI_EPS:
        return -np.log1p(-u01) * sigma_u
    return sigma_u * ((1.0 - u01) ** (-xi) - 1.0) / xi


def simulate(config: SimConfig) -> dict[str, ExceedanceSet]:
    """Draw one synthetic season set per discipline.

    Per discipline and year: N ~ Poisson(expected yearly exceedance count),
    then N excesses over the threshold by inverse transform of the year's
    GPD excess distribution.
    """
    model = config.model
    lo, hi = config.horizon
    out = {}
    for d_idx, d in enumerate(sorted(model.disciplines)):
        u = model.threshold(d)
        obs = []
        for year in range(lo, hi + 1):
            lam = poisson_measure_above(model, d, year, u)
            if not np.isfinite(lam):
                raise InvalidParameterError(
                    f"non-finite exceedance rate for {d!r} in {year}"
                )
            sigma_u = threshold_scale_at(model, d, year)
            rng = _stream(config.seed, d_idx, year)
            n = rng.poisson(lam)
            if n:
                xs = u + _draw_excesses(rng, n, sigma_u, model.shape(d))
                obs.extend((year, float(x)) for x in np.sort(xs)[::-1])
        out[d] = ExceedanceSet(discipline=d, observations=tuple(obs), horizon=(lo, hi))
    return out


def simulate_records(config: SimConfig) -> list[PerformanceRecord]:
    """Exceedances rendered as raw PerformanceRecord fixtures.

    Athlete ids are drawn without replacement from the pool within each
    (discipline, year), so best-per-athlete-per-year deduplication leaves
    the fixture unchanged.
    """
    sets = simulate(config)
    records = []
    for d_idx, d in enumerate(sorted(sets)):
        es = sets[d]
        by_year: dict[int, list[float]] = {}
        for year, x in es.observations:
            by_year.setdefault(year, []).append(x)
        for year, xs in sorted(by_year.items()):
            if len(xs) > config.athlete_pool:
                raise InvalidParameterError(
                    f"athlete pool {config.athlete_pool} smaller than yearly count {len(xs)}"
                )
            rng = _stream(config.seed, d_idx, year, 1)
            athletes = rng.choice(config.athlete_pool, size=len(xs), replace=False)
            records.extend(
                PerformanceRecord(
                    discipline=d,
                    athlete=f"ath{int(a):05d}",
                    year=year,
                    seconds=-x,
                )
                for a, x in zip(athletes, xs)
            )
    return records
