import numpy as np
import pytest

from conftest import random_valid_model
from recordpot.errors import (
    InvalidParameterError,
    NoFiniteEndpointError,
    SupportError,
    UnknownDisciplineError,
)
from recordpot.model import (
    DisciplineParams,
    ExceedanceSet,
    GlobalModel,
    gpd_excess_survival,
    intensity_at,
    location_at,
    log_likelihood,
    poisson_measure_above,
    scale_at,
    threshold_scale_at,
    upper_endpoint,
    upper_endpoint_time,
)


def simple_model(**kw):
    p = dict(mu0=-7591.0, sigma0=30.63, beta=12.51, gamma=12.60, delta=3.77)
    p.update(kw.pop("params", {}))
    return GlobalModel(
        xi=kw.pop("xi", -0.251),
        disciplines={"marM": DisciplineParams(**p)},
        thresholds={"marM": kw.pop("threshold", -7564.319)},
        **kw,
    )


class TestLocation:
    def test_published_marathon_men_2019(self):
        # mu0 + beta*19 + gamma, hand-evaluated
        assert location_at(simple_model(), "marM", 2019) == pytest.approx(-7340.71, abs=0.5)

    def test_constant_when_no_trend(self):
        m = simple_model(params=dict(beta=0.0, gamma=0.0))
        for year in (2001, 2010, 2019, 2030):
            assert location_at(m, "marM", year) == -7591.0

    def test_aft_indicator_off_before_2018(self):
        assert location_at(simple_model(), "marM", 2017) == pytest.approx(
            -7591 + 12.51 * 17, abs=0.5
        )

    def test_unknown_discipline(self):
        with pytest.raises(UnknownDisciplineError, match="nope"):
            location_at(simple_model(), "nope", 2019)


class TestScale:
    def test_published_marathon_men_2019(self):
        # 30.63 - 0.251*12.51*19 - 0.251*12.60 + 3.77*19
        assert scale_at(simple_model(), "marM", 2019) == pytest.approx(39.44, abs=0.1)

    def test_reduces_to_sigma0(self):
        m = simple_model(params=dict(beta=0.0, gamma=0.0, delta=0.0))
        assert scale_at(m, "marM", 2015) == pytest.approx(30.63)

    def test_published_marathon_women_2019(self):
        m = GlobalModel(
            xi=-0.251,
            disciplines={"marW": DisciplineParams(
                mu0=-8418.0, sigma0=101.95, beta=7.83, gamma=51.42, delta=0.36)},
            thresholds={"marW": -8564.0},
        )
        assert scale_at(m, "marW", 2019) == pytest.approx(58.54, abs=0.15)

    def test_nonpositive_scale_raises(self):
        m = simple_model(params=dict(sigma0=1.0, delta=-5.0))
        with pytest.raises(InvalidParameterError):
            scale_at(m, "marM", 2019)


class TestThresholdScale:
    def test_constant_in_year_when_delta_zero(self):
        m = simple_model(params=dict(beta=1.0, gamma=0.0, delta=0.0))
        vals = {threshold_scale_at(m, "marM", y) for y in range(2001, 2020)}
        assert max(vals) - min(vals) < 1e-9

    def test_closed_form_marathon_men(self):
        m = simple_model(threshold=-7320.0)
        expect = 30.63 + (-0.251) * (-7320 + 7591) + 3.77 * 19
        assert threshold_scale_at(m, "marM", 2019) == pytest.approx(expect, abs=1e-9)

    def test_two_routes_agree_on_random_models(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            m = random_valid_model(rng)
            p = m.disciplines["D"]
            for year in (2003, 2018, 2027):
                via_sigma = threshold_scale_at(m, "D", year)
                y = year - m.year_origin
                closed = p.sigma0 + m.xi * (m.thresholds["D"] - p.mu0) + p.delta * y
                assert via_sigma == pytest.approx(closed, rel=1e-9)


class TestPoissonMeasure:
    def test_two_hour_marathon_2020(self):
        lam = poisson_measure_above(simple_model(), "marM", 2020, -7200.0)
        assert lam == pytest.approx(0.0015, abs=0.0005)

    def test_zero_at_endpoint(self):
        m = simple_model()
        x_h = upper_endpoint(m, "marM", 2020)
        assert poisson_measure_above(m, "marM", 2020, x_h) == 0.0
        assert poisson_measure_above(m, "marM", 2020, x_h + 10.0) == 0.0

    def test_one_at_location(self):
        m = simple_model()
        mu = location_at(m, "marM", 2012)
        assert poisson_measure_above(m, "marM", 2012, mu) == pytest.approx(1.0)

    def test_threshold_free(self):
        a = poisson_measure_above(simple_model(threshold=-7500.0), "marM", 2019, -7300.0)
        b = poisson_measure_above(simple_model(threshold=-7400.0), "marM", 2019, -7300.0)
        assert a == b

    def test_strictly_decreasing_in_x(self):
        m = simple_model()
        xs = np.linspace(-7500, upper_endpoint(m, "marM", 2019) - 1.0, 40)
        vals = [poisson_measure_above(m, "marM", 2019, x) for x in xs]
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestIntensity:
    def test_zero_beyond_endpoint(self):
        m = simple_model()
        x_h = upper_endpoint(m, "marM", 2019)
        assert intensity_at(m, "marM", 2019, x_h + 1.0) == 0.0

    def test_matches_finite_difference_of_measure(self):
        rng = np.random.default_rng(11)
        m = simple_model()
        x_h = upper_endpoint(m, "marM", 2019)
        for _ in range(10):
            x = rng.uniform(-7500.0, x_h - 5.0)
            h = 1e-4
            fd = -(
                poisson_measure_above(m, "marM", 2019, x + h)
                - poisson_measure_above(m, "marM", 2019, x - h)
            ) / (2 * h)
            assert intensity_at(m, "marM", 2019, x) == pytest.approx(fd, rel=1e-5)

    def test_exponential_limit_at_small_xi(self):
        m = simple_model(xi=1e-12, params=dict(delta=0.0))
        mu = location_at(m, "marM", 2010)
        sig = scale_at(m, "marM", 2010)
        x = mu + 25.0
        assert intensity_at(m, "marM", 2010, x) == pytest.approx(
            np.exp(-(x - mu) / sig) / sig
        )


class TestExcessSurvival:
    def test_one_at_threshold(self):
        m = simple_model()
        assert gpd_excess_survival(m, "marM", 2019, m.thresholds["marM"]) == pytest.approx(1.0)

    def test_zero_beyond_endpoint(self):
        m = simple_model()
        x_h = upper_endpoint(m, "marM", 2019)
        assert gpd_excess_survival(m, "marM", 2019, x_h) == pytest.approx(0.0, abs=1e-12)
        assert gpd_excess_survival(m, "marM", 2019, x_h + 1.0) == 0.0

    def test_below_threshold_raises(self):
        m = simple_model()
        with pytest.raises(SupportError):
            gpd_excess_survival(m, "marM", 2019, m.thresholds["marM"] - 1.0)

    def test_ratio_identity_with_measure(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            m = random_valid_model(rng)
            u = m.thresholds["D"]
            year = int(rng.integers(2001, 2030))
            x_h = upper_endpoint(m, "D", year)
            x = rng.uniform(u, x_h)
            lhs = gpd_excess_survival(m, "D", year, x)
            rhs = poisson_measure_above(m, "D", year, x) / poisson_measure_above(
                m, "D", year, u
            )
            assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_monotone_from_one_to_zero(self):
        m = simple_model()
        u = m.thresholds["marM"]
        xs = np.linspace(u, upper_endpoint(m, "marM", 2019), 30)
        vals = [gpd_excess_survival(m, "marM", 2019, x) for x in xs]
        assert vals[0] == pytest.approx(1.0)
        assert vals[-1] == pytest.approx(0.0, abs=1e-12)
        assert all(a >= b for a, b in zip(vals, vals[1:]))


class TestEndpoint:
    def test_marathon_men_2019_ultimate(self):
        assert upper_endpoint_time(simple_model(), "marM", 2019) == pytest.approx(
            7183.6, abs=2.0
        )

    def test_positive_xi_has_no_endpoint(self):
        with pytest.raises(NoFiniteEndpointError):
            upper_endpoint_time(simple_model(xi=0.1), "marM", 2019)


class TestLogLikelihood:
    def test_empty_data_is_negative_total_measure(self):
        m = simple_model()
        es = ExceedanceSet("marM", (), horizon=(2001, 2019))
        u = m.thresholds["marM"]
        expect = -sum(poisson_measure_above(m, "marM", y, u) for y in range(2001, 2020))
        assert log_likelihood(m, [es]) == pytest.approx(expect)

    def test_single_observation_hand_arithmetic(self):
        m = simple_model()
        mu = location_at(m, "marM", 2010)
        es = ExceedanceSet("marM", ((2010, mu),), horizon=(2010, 2010))
        u = m.thresholds["marM"]
        expect = -poisson_measure_above(m, "marM", 2010, u) + np.log(
            intensity_at(m, "marM", 2010, mu)
        )
        assert log_likelihood(m, [es]) == pytest.approx(expect)

    def test_observation_beyond_endpoint_is_minus_inf(self):
        m = simple_model()
        x_bad = upper_endpoint(m, "marM", 2010) + 1.0
        es = ExceedanceSet("marM", ((2010, x_bad),), horizon=(2001, 2019))
        assert log_likelihood(m, [es]) == -np.inf

    def test_infeasible_scale_is_minus_inf_not_raise(self):
        m = simple_model(params=dict(sigma0=1.0, delta=-5.0))
        es = ExceedanceSet("marM", ((2002, -7500.0),), horizon=(2001, 2019))
        assert log_likelihood(m, [es]) == -np.inf


class TestModelSerialization:
    def test_round_trip(self, paper_model):
        again = GlobalModel.from_dict(paper_model.to_dict())
        assert again == paper_model

    def test_per_discipline_shape_round_trip(self):
        m = simple_model()
        m2 = GlobalModel(
            xi=m.xi, disciplines=m.disciplines, thresholds=m.thresholds,
            xi_by_discipline={"marM": -0.3},
        )
        assert m2.shape("marM") == -0.3
        assert GlobalModel.from_dict(m2.to_dict()).shape("marM") == -0.3

    def test_without_aft_strips_gamma_only(self):
        m = simple_model()
        s = m.without_aft()
        assert s.disciplines["marM"].gamma == 0.0
        assert s.disciplines["marM"].beta == m.disciplines["marM"].beta
