import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hexcover.field_model import (
    EXPERIMENT_PARAMS,
    FieldParams,
    InfeasibleToleranceError,
    PlanningQuery,
    SingularSystemError,
    compute_r_max,
    compute_r_min,
    covariance,
    estimation_error,
    kriging_system,
    noise_floor,
    single_sample_error,
)

# Frozen with a 40-digit mpmath evaluation of the closed forms.
R_MIN_03 = 4.9733450101586638
R_MIN_02 = 3.9330095525419642
R_MIN_01 = 2.7010606911969075
R_MAX_EXP = 20.404249557383874
NOISE_FLOOR_EXP = 0.0360921338419658
EXAMPLE_ERROR = 0.44377114737361516

UNIT = FieldParams(1.0, 1.0, 1.0)


def direct_error(x, samples, params):
    # independent route: explicit dense solve, no factorization reuse
    pts = np.asarray(samples, float).reshape(-1, 2)
    x = np.asarray(x, float)
    b = params.sigma0_sq * np.exp(-np.sum((pts - x) ** 2, axis=1) / (2 * params.length_scale ** 2))
    d2 = np.sum((pts[:, None] - pts[None]) ** 2, axis=2)
    c = params.sigma0_sq * np.exp(-d2 / (2 * params.length_scale ** 2)) + params.noise_var * np.eye(len(pts))
    return params.sigma0_sq - b @ np.linalg.solve(c, b)


class TestFieldParams:
    def test_experiment_values(self):
        assert EXPERIMENT_PARAMS.sigma0_sq == pytest.approx(12.87 ** 2, rel=1e-15)
        assert EXPERIMENT_PARAMS.sigma0 == pytest.approx(12.87)

    @pytest.mark.parametrize("kw", [
        dict(sigma0_sq=0.0, length_scale=1.0),
        dict(sigma0_sq=1.0, length_scale=0.0),
        dict(sigma0_sq=1.0, length_scale=1.0, noise_var=-1e-3),
        dict(sigma0_sq=math.nan, length_scale=1.0),
        dict(sigma0_sq=1.0, length_scale=math.inf),
    ])
    def test_invalid_rejected(self, kw):
        with pytest.raises(ValueError):
            FieldParams(**kw)

    def test_frozen(self):
        with pytest.raises(AttributeError):
            UNIT.sigma0_sq = 2.0


class TestCovariance:
    def test_at_zero(self):
        assert covariance(0.0, EXPERIMENT_PARAMS) == EXPERIMENT_PARAMS.sigma0_sq

    def test_unit_value(self):
        assert covariance(1.0, FieldParams(1.0, 1.0)) == pytest.approx(0.60653065971263342, rel=1e-14)

    def test_at_r_max_is_e_minus_3(self):
        p = EXPERIMENT_PARAMS
        assert covariance(compute_r_max(p), p) == pytest.approx(math.exp(-3.0) * p.sigma0_sq, rel=1e-12)

    def test_truncation(self):
        p = EXPERIMENT_PARAMS
        r_max = compute_r_max(p)
        assert covariance(r_max, p, truncated=True) > 0
        assert covariance(r_max * (1 + 1e-9), p, truncated=True) == 0.0
        assert covariance(5.0, p, truncated=True) == covariance(5.0, p)

    def test_array_input(self):
        r = np.array([0.0, 1.0, 2.0])
        out = covariance(r, UNIT)
        assert out.shape == (3,)
        assert np.all(np.diff(out) < 0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            covariance(-1e-12, UNIT)
        with pytest.raises(ValueError):
            covariance(np.array([1.0, -1.0]), UNIT)


class TestRadii:
    def test_r_max(self):
        assert compute_r_max(FieldParams(1.0, 1.0)) == pytest.approx(2.4494897427831781, rel=1e-15)
        assert compute_r_max(EXPERIMENT_PARAMS) == pytest.approx(R_MAX_EXP, rel=1e-14)

    @pytest.mark.parametrize("frac,expected", [(0.3, R_MIN_03), (0.2, R_MIN_02), (0.1, R_MIN_01)])
    def test_r_min_experiment(self, frac, expected):
        assert compute_r_min(EXPERIMENT_PARAMS, frac * EXPERIMENT_PARAMS.sigma0_sq) == pytest.approx(expected, rel=1e-12)

    def test_noise_floor(self):
        assert noise_floor(EXPERIMENT_PARAMS) == pytest.approx(NOISE_FLOOR_EXP, rel=1e-13)
        assert noise_floor(FieldParams(1.0, 1.0, 1.0)) == 0.5
        assert noise_floor(FieldParams(3.0, 1.0, 0.0)) == 0.0

    def test_unit_boundary_rejected(self):
        # log argument is exactly one: even a collocated sample only reaches delta
        with pytest.raises(InfeasibleToleranceError):
            compute_r_min(UNIT, 0.5)

    @pytest.mark.parametrize("delta", [0.0, -1.0, 1.0, 2.0, 0.3])
    def test_out_of_range_rejected(self, delta):
        with pytest.raises(InfeasibleToleranceError):
            compute_r_min(UNIT, delta)

    def test_r_min_vanishes_at_noise_floor(self):
        p = EXPERIMENT_PARAMS
        floor = noise_floor(p)
        radii = [compute_r_min(p, floor * (1 + eps)) for eps in (1e-2, 1e-4, 1e-6)]
        assert radii[0] > radii[1] > radii[2] > 0
        assert radii[2] < 1e-2

    def test_planning_query(self):
        q = PlanningQuery.from_fraction(EXPERIMENT_PARAMS, 0.3)
        assert q.r_min == pytest.approx(R_MIN_03, rel=1e-12)
        assert q.r_max == compute_r_max(EXPERIMENT_PARAMS)
        assert q.delta_fraction == pytest.approx(0.3)
        with pytest.raises(InfeasibleToleranceError):
            PlanningQuery.from_fraction(EXPERIMENT_PARAMS, 1e-4)


class TestEstimationError:
    def test_empty_is_prior(self):
        assert estimation_error((1.0, 2.0), [], EXPERIMENT_PARAMS) == EXPERIMENT_PARAMS.sigma0_sq

    def test_example_configuration(self):
        r = 0.93255461
        s = [(r, 0), (-r, 0), (0, r), (0, -r)]
        assert estimation_error((0, 0), s, UNIT) == pytest.approx(EXAMPLE_ERROR, abs=1e-12)

    def test_matches_direct_solve(self, rng):
        for _ in range(25):
            p = FieldParams(rng.uniform(0.5, 5), rng.uniform(0.5, 3), rng.uniform(0.01, 1))
            pts = rng.uniform(-3, 3, size=(rng.integers(1, 12), 2))
            x = rng.uniform(-3, 3, 2)
            assert estimation_error(x, pts, p) == pytest.approx(direct_error(x, pts, p), rel=1e-9, abs=1e-12)

    def test_single_sample_at_r_min_equals_delta(self):
        p = EXPERIMENT_PARAMS
        for frac in (0.3, 0.2, 0.1):
            delta = frac * p.sigma0_sq
            r = compute_r_min(p, delta)
            assert estimation_error((0, 0), [(r, 0)], p) == pytest.approx(delta, rel=1e-9)
            assert single_sample_error(r, p) == pytest.approx(delta, rel=1e-12)

    def test_collocated_sample_reaches_noise_floor(self):
        p = EXPERIMENT_PARAMS
        assert estimation_error((2, 3), [(2, 3)], p) == pytest.approx(noise_floor(p), rel=1e-9)

    def test_duplicates_without_noise(self):
        p = FieldParams(1.0, 1.0, 0.0)
        with pytest.raises(SingularSystemError):
            estimation_error((0, 0), [(1, 1), (1, 1)], p)

    def test_duplicates_with_noise_allowed(self):
        once = estimation_error((0, 0), [(1, 0)], UNIT)
        twice = estimation_error((0, 0), [(1, 0), (1, 0)], UNIT)
        assert twice < once

    def test_truncated_ignores_far_samples(self):
        p = EXPERIMENT_PARAMS
        far = [(100.0, 0.0)]
        assert estimation_error((0, 0), far, p, truncated=True) == p.sigma0_sq
        assert estimation_error((0, 0), far, p) <= p.sigma0_sq

    def test_truncated_equals_exact_inside_range(self, rng):
        p = EXPERIMENT_PARAMS
        pts = rng.uniform(-5, 5, size=(6, 2))
        assert estimation_error((0, 0), pts, p, truncated=True) == estimation_error((0, 0), pts, p)

    def test_kriging_system_shape_and_symmetry(self, rng):
        pts = rng.uniform(0, 10, size=(5, 2))
        sys_ = kriging_system((1, 1), pts, EXPERIMENT_PARAMS)
        assert sys_.gram.shape == (5, 5)
        np.testing.assert_allclose(sys_.gram, sys_.gram.T)
        assert np.all(np.linalg.eigvalsh(sys_.gram) > 0)
        assert np.all((sys_.cross_cov >= 0) & (sys_.cross_cov <= EXPERIMENT_PARAMS.sigma0_sq))


coords = st.floats(-20, 20, allow_nan=False)
point = st.tuples(coords, coords)


@given(x=point, samples=st.lists(point, min_size=0, max_size=8), y=point,
       noise=st.floats(1e-3, 2.0), ls=st.floats(0.5, 10.0))
def test_monotone_in_sample_set(x, samples, y, noise, ls):
    p = FieldParams(4.0, ls, noise)
    before = estimation_error(x, samples, p)
    after = estimation_error(x, samples + [y], p)
    assert after <= before + 1e-9
    assert 0.0 <= after <= p.sigma0_sq


@given(rho=st.floats(0, 50), frac=st.floats(0.01, 0.99))
def test_single_sample_closed_form(rho, frac):
    p = EXPERIMENT_PARAMS
    assert estimation_error((0, 0), [(rho, 0)], p) == pytest.approx(float(single_sample_error(rho, p)), rel=1e-9, abs=1e-12)
