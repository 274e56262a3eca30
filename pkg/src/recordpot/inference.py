"""Joint maximum-likelihood estimation, AIC, and parametric bootstrap.

The likelihood factorizes over disciplines once the shared tail shape is
fixed, so the fit profiles the shape: for each candidate xi the remaining
per-discipline parameters are maximized independently by Nelder-Mead
(warm-started along the profile path), and a bounded scalar search picks
xi. Hard support boundaries for xi < 0 make gradients unreliable, hence
the derivative-free local searches with multi-start.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import BootstrapFailureError, FitFailureError, InsufficientDataError, RecordPotError
from .model import (
    DisciplineParams,
    ExceedanceSet,
    GlobalModel,
    _discipline_loglik,
    log_likelihood,
)
from .simgen import SimConfig, simulate

MIN_EXCEEDANCES = 30
XI_BOUND = 0.9


@dataclass(frozen=True)
class FitConfig:
    max_evals: int = 40000          # evaluation budget per discipline per start
    tol: float = 1e-6               # log-likelihood convergence tolerance
    multistart: int = 8
    init_strategy: str = "moment"   # "moment" only, kept for provenance echo
    shared_xi: bool = True
    use_gamma: bool = True
    use_delta: bool = True
    seed: int = 0
    aft_start_year: int = 2018
    year_origin: int = 2000
    xi_search: tuple[float, float] = (-0.85, 0.5)

    def __post_init__(self):
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")

    def n_params(self, n_disciplines: int) -> int:
        per_d = 3 + int(self.use_gamma) + int(self.use_delta)
        if self.shared_xi:
            return 1 + per_d * n_disciplines
        return (per_d + 1) * n_disciplines


@dataclass
class StartTrace:
    start: int
    log_likelihood: float
    n_evals: int
    feasible: bool
    converged: bool


@dataclass
class FitResult:
    model: GlobalModel
    log_likelihood: float
    n_params: int
    converged: bool
    starts: list[StartTrace]
    config: FitConfig

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "log_likelihood": self.log_likelihood,
            "n_params": self.n_params,
            "converged": self.converged,
            "starts": [
                {
                    "start": t.start,
                    "log_likelihood": t.log_likelihood,
                    "n_evals": t.n_evals,
                    "feasible": t.feasible,
                    "converged": t.converged,
                }
                for t in self.starts
            ],
        }


def aic(result: FitResult) -> float:
    """Akaike information criterion: 2k - 2 loglik."""
    return 2.0 * result.n_params - 2.0 * result.log_likelihood


# ---------------------------------------------------------------------------
# internal fitting machinery

class _DisciplineData:
    """Precomputed covariate arrays for one discipline's likelihood."""

    def __init__(self, es: ExceedanceSet, u: float, config: FitConfig):
        self.discipline = es.discipline
        self.u = u
        years = np.arange(es.horizon[0], es.horizon[1] + 1)
        org = config.year_origin
        self.grid_y = (years - org).astype(float)
        self.grid_aft = (years >= config.aft_start_year).astype(float)
        self.obs_y = es.years - org
        self.obs_aft = (es.years >= config.aft_start_year).astype(float)
        self.obs_x = es.values


def _unpack(theta, config: FitConfig) -> DisciplineParams:
    mu0, log_sigma0, beta = theta[0], theta[1], theta[2]
    i = 3
    gamma = delta = 0.0
    if config.use_gamma:
        gamma = theta[i]
        i += 1
    if config.use_delta:
        delta = theta[i]
    return DisciplineParams(
        mu0=float(mu0), sigma0=float(np.exp(log_sigma0)),
        beta=float(beta), gamma=float(gamma), delta=float(delta),
    )


def _negloglik(theta, xi, dd: _DisciplineData, config: FitConfig) -> float:
    p = _unpack(theta, config)
    ll = _discipline_loglik(
        xi, p, dd.u, dd.grid_y, dd.grid_aft, dd.obs_y, dd.obs_aft, dd.obs_x
    )
    if not np.isfinite(ll):
        return 1e10
    return -ll


def _fit_discipline(xi, dd, x0, config, maxfev, fatol):
    res = minimize(
        _negloglik, x0, args=(xi, dd, config), method="Nelder-Mead",
        options={"maxfev": int(maxfev), "fatol": fatol, "xatol": 1e-6},
    )
    return res.fun, res.x, res.nfev, bool(res.success)


def _moment_init(dd: _DisciplineData, config: FitConfig, xi0: float) -> np.ndarray:
    if dd.obs_y.size >= 2 and np.ptp(dd.obs_y) > 0:
        slope = float(np.polyfit(dd.obs_y, dd.obs_x, 1)[0])
    else:
        slope = 0.0
    mu0 = float(np.median(dd.obs_x - slope * dd.obs_y))
    mean_excess = float(np.mean(dd.obs_x - dd.u))
    sigma_u = max(mean_excess * (1.0 - xi0), 1e-3)
    sigma0 = max(sigma_u - xi0 * (dd.u - mu0), 0.5 * sigma_u)
    theta = [mu0, np.log(sigma0), slope]
    if config.use_gamma:
        theta.append(0.0)
    if config.use_delta:
        theta.append(0.0)
    return np.array(theta)


def _jitter(theta, rng, dd):
    scale = max(float(np.std(dd.obs_x)), 1.0)
    out = theta.copy()
    out[0] += rng.normal(0.0, scale)
    out[1] += rng.normal(0.0, 0.3)
    out[2] *= 1.0 + rng.normal(0.0, 0.3)
    for i in range(3, out.size):
        out[i] += rng.normal(0.0, 1.0)
    return out


def _run_start(ddata, inits, xi0, config: FitConfig):
    """One multi-start iteration: profile xi, return (negll, xi, thetas, evals, ok)."""
    evals = [0]
    budget = config.max_evals * len(ddata)
    warm = dict(inits)
    inner_ok = {d: True for d in ddata}

    def inner(xi, maxfev, fatol):
        total = 0.0
        for d, dd in ddata.items():
            fev_left = max(budget - evals[0], 50)
            f, x, nfev, ok = _fit_discipline(
                xi, dd, warm[d], config, min(maxfev, fev_left), fatol
            )
            evals[0] += nfev
            if f >= 1e9:
                # the warm start is infeasible at this xi and Nelder-Mead
                # cannot leave a flat penalty plateau; retry from a fresh
                # moment init for this xi before giving up
                alt = _moment_init(dd, config, xi)
                f2, x2, nfev, ok2 = _fit_discipline(
                    xi, dd, alt, config, min(maxfev, fev_left), fatol
                )
                evals[0] += nfev
                if f2 < f:
                    f, x, ok = f2, x2, ok2
            if f < 1e9:
                # never store penalty-region output: it would poison the
                # warm starts of later profile evaluations
                warm[d] = x
            inner_ok[d] = ok
            total += f
        return total

    if config.shared_xi:
        lo, hi = config.xi_search
        xi0 = float(np.clip(xi0, lo + 1e-3, hi - 1e-3))
        inner(xi0, 1500, 1e-6)  # settle the warm starts before profiling
        prof = minimize_scalar(
            lambda xi: inner(xi, 1200, 1e-6),
            bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-3, "maxiter": 30},
        )
        xi_hat = float(prof.x)
        f = inner(xi_hat, 4000, config.tol)
        xi_by_d = None
    else:
        # disciplines decouple fully; profile xi per discipline
        xi_by_d = {}
        f = 0.0
        for d, dd in ddata.items():
            warm_d = {d: warm[d]}
            seen = [0]

            def inner_d(xi):
                fd, x, nfev, ok = _fit_discipline(
                    xi, dd, warm_d[d], config, 1200, 1e-6
                )
                warm_d[d] = x
                inner_ok[d] = ok
                seen[0] += nfev
                return fd

            lo, hi = config.xi_search
            prof = minimize_scalar(
                inner_d, bounds=(lo, hi), method="bounded",
                options={"xatol": 1e-3, "maxiter": 30},
            )
            xi_by_d[d] = float(prof.x)
            fd, x, nfev, ok = _fit_discipline(
                xi_by_d[d], dd, warm_d[d], config, 4000, config.tol
            )
            warm[d] = x
            f += fd
            evals[0] += seen[0] + nfev
        xi_hat = float(np.mean(list(xi_by_d.values())))

    converged = all(inner_ok.values()) and evals[0] <= budget
    return f, xi_hat, xi_by_d, dict(warm), evals[0], converged


def fit(
    data: Iterable[ExceedanceSet],
    thresholds: Mapping[str, float],
    config: FitConfig = FitConfig(),
    warm_start: Optional[GlobalModel] = None,
) -> FitResult:
    """Maximize the joint point-process likelihood over all disciplines.

    `thresholds` supplies u_d for every discipline present in `data`.
    With multistart > 1 the best of all starts is returned. A warm-start
    model replaces the moment initialization of the first start (used by
    the bootstrap refits).
    """
    data = list(data)
    if not data:
        raise InsufficientDataError("no exceedance sets supplied")
    ddata: dict[str, _DisciplineData] = {}
    # canonical discipline order so results do not depend on input order
    for es in sorted(data, key=lambda e: e.discipline):
        if len(es) < MIN_EXCEEDANCES:
            raise InsufficientDataError(
                f"discipline {es.discipline!r} has {len(es)} exceedances; "
                f"need at least {MIN_EXCEEDANCES} for a meaningful fit"
            )
        if es.discipline not in thresholds:
            raise RecordPotError(f"no threshold supplied for {es.discipline!r}")
        ddata[es.discipline] = _DisciplineData(es, thresholds[es.discipline], config)

    rng = np.random.default_rng(config.seed)
    base_inits = {d: _moment_init(dd, config, -0.1) for d, dd in ddata.items()}
    if warm_start is not None:
        for d in ddata:
            p = warm_start.params(d)
            theta = [p.mu0, np.log(max(p.sigma0, 1e-6)), p.beta]
            if config.use_gamma:
                theta.append(p.gamma)
            if config.use_delta:
                theta.append(p.delta)
            base_inits[d] = np.array(theta)

    best = None
    traces: list[StartTrace] = []
    for s in range(max(config.multistart, 1)):
        if s == 0:
            inits = base_inits
            xi0 = warm_start.xi if warm_start is not None else -0.1
        else:
            inits = {d: _jitter(base_inits[d], rng, ddata[d]) for d in ddata}
            xi0 = float(np.clip(-0.1 + rng.uniform(-0.3, 0.3), *config.xi_search))
        f, xi_hat, xi_by_d, thetas, nev, ok = _run_start(ddata, inits, xi0, config)
        feasible = bool(f < 1e9)
        traces.append(StartTrace(s, float(-f) if feasible else -np.inf,
                                 int(nev), feasible, bool(ok)))
        if feasible and (best is None or f < best[0]):
            best = (f, xi_hat, xi_by_d, thetas, ok)

    if best is None:
        raise FitFailureError("all starts infeasible or non-finite", traces)

    f, xi_hat, xi_by_d, thetas, ok = best
    params = {d: _unpack(thetas[d], config) for d in ddata}
    model = GlobalModel(
        xi=xi_hat,
        disciplines=params,
        thresholds={d: float(thresholds[d]) for d in ddata},
        aft_start_year=config.aft_start_year,
        year_origin=config.year_origin,
        xi_by_discipline=xi_by_d,
    )
    ll = log_likelihood(model, data)
    if not np.isfinite(ll):
        raise FitFailureError("optimum failed the feasibility check", traces)
    return FitResult(
        model=model,
        log_likelihood=float(ll),
        n_params=config.n_params(len(ddata)),
        converged=ok,
        starts=traces,
        config=config,
    )


# ---------------------------------------------------------------------------
# parametric bootstrap

@dataclass
class BootstrapResult:
    level: float
    seed: int
    replicates: int
    n_failed: int
    param_intervals: dict[str, tuple[float, float]]
    functional_intervals: dict[str, tuple[float, float]]
    replicate_models: list[GlobalModel] = field(repr=False, default_factory=list)

    def functional_interval(self, fn: Callable[[GlobalModel], float],
                            level: Optional[float] = None) -> tuple[float, float]:
        """Percentile interval of an arbitrary model functional over the
        same replicate set."""
        vals = np.array([fn(m) for m in self.replicate_models])
        return _percentile_interval(vals, self.level if level is None else level)

    def functional_bias(self, fn: Callable[[GlobalModel], float],
                        reference: float) -> float:
        """Parametric-bootstrap bias estimate of a functional: the replicate
        mean minus the point estimate `reference`. Subtracting this from the
        point estimate gives the standard bootstrap bias-corrected value."""
        vals = np.array([fn(m) for m in self.replicate_models])
        return float(np.mean(vals) - reference)


def _percentile_interval(vals: np.ndarray, level: float) -> tuple[float, float]:
    # median-unbiased quantiles: the default linear interpolation pulls the
    # tail quantiles inward at the replicate counts used here
    lo = np.percentile(vals, 100.0 * (1.0 - level) / 2.0, method="median_unbiased")
    hi = np.percentile(vals, 100.0 * (1.0 + level) / 2.0, method="median_unbiased")
    return float(lo), float(hi)


def _flat_params(model: GlobalModel) -> dict[str, float]:
    out = {"xi": model.xi}
    for d in sorted(model.disciplines):
        p = model.disciplines[d]
        for name in ("mu0", "sigma0", "beta", "gamma", "delta"):
            out[f"{d}.{name}"] = getattr(p, name)
        if model.xi_by_discipline is not None:
            out[f"{d}.xi"] = model.xi_by_discipline[d]
    return out


def bootstrap_ci(
    result: FitResult,
    data: Sequence[ExceedanceSet],
    replicates: int = 200,
    level: float = 0.95,
    seed: int = 0,
    functionals: Optional[Mapping[str, Callable[[GlobalModel], float]]] = None,
    warm_start: bool = True,
) -> BootstrapResult:
    """Parametric bootstrap percentile intervals for parameters and, through
    the kept replicate models, any downstream forecast functional.

    Replicate datasets are simulated from the fitted model and refit with a
    single start, warm-started at the fitted parameters unless `warm_start`
    is false (cold refits are slower but reproduce the dispersion of a fit
    from scratch). Deterministic given `seed`; replicate seeds are derived
    by index, so results do not depend on evaluation order.
    """
    if replicates < 50:
        raise ValueError("replicates must be >= 50")
    if not 0.0 <= level < 1.0:
        raise ValueError("level must be in [0, 1)")
    data = list(data)
    horizons = {es.horizon for es in data}
    if len(horizons) != 1:
        raise RecordPotError("bootstrap requires a common horizon across disciplines")
    horizon = horizons.pop()

    estimate = _flat_params(result.model)
    if level == 0.0:
        degenerate = {k: (v, v) for k, v in estimate.items()}
        fints = {}
        if functionals:
            fints = {
                name: (fn(result.model), fn(result.model))
                for name, fn in functionals.items()
            }
        return BootstrapResult(level, seed, replicates, 0, degenerate, fints,
                               [result.model] * 0)

    refit_config = replace(result.config, multistart=1)
    rep_seeds = np.random.SeedSequence(seed).generate_state(replicates, dtype=np.uint64)
    models = []
    n_failed = 0
    for i in range(replicates):
        sim = simulate(SimConfig(model=result.model, horizon=horizon,
                                 seed=int(rep_seeds[i])))
        try:
            rep = fit(list(sim.values()), result.model.thresholds,
                      refit_config,
                      warm_start=result.model if warm_start else None)
        except RecordPotError:
            n_failed += 1
            continue
        models.append(rep.model)
    if n_failed > 0.2 * replicates:
        raise BootstrapFailureError(n_failed, replicates)

    tables: dict[str, list[float]] = {k: [] for k in estimate}
    for m in models:
        for k, v in _flat_params(m).items():
            if k in tables:
                tables[k].append(v)
    param_intervals = {
        k: _percentile_interval(np.array(v), level) for k, v in tables.items() if v
    }
    functional_intervals = {}
    if functionals:
        for name, fn in functionals.items():
            vals = np.array([fn(m) for m in models])
            functional_intervals[name] = _percentile_interval(vals, level)
    return BootstrapResult(
        level=level, seed=seed, replicates=replicates, n_failed=n_failed,
        param_intervals=param_intervals, functional_intervals=functional_intervals,
        replicate_models=models,
    )
