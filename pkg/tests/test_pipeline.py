from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import trpca.pipeline as pipeline
from trpca.curve import arclength_param, eval_scaled, fourier_fit, project
from trpca.errors import (DomainError, InsufficientDataError, PipelineError,
                          UndefinedPveError)
from trpca.geometry import cmod, torus_dist
from trpca.models import BsvmParams, BwcParams
from trpca.pipeline import (PipelineConfig, Scores, apca, compute_scores,
                            max_projection_distance, pve, ridge_pca, scenario_sample,
                            worker_count)
from trpca.ridge import explicit_edge_ridge

from conftest import CATALOG, CATALOG_IDS

SKEWED = CATALOG[1]  # BSvM(0, 0, 0.3, 0.6, 0.5)


@pytest.fixture(scope="module")
def horizontal():
    return arclength_param(fourier_fit(explicit_edge_ridge(BsvmParams(0, 0, 0, 1, 0),
                                                           "axis_horizontal"), 15))


def shifted_curve(catalog, params, shift):
    comp = catalog.ridge(params)[1]
    moved = replace(comp, ordered_points=cmod(comp.ordered_points + shift),
                    mu=tuple(cmod(np.array(comp.mu) + shift)))
    return arclength_param(fourier_fit(moved, 15))


class TestScores:
    def test_on_ridge_point(self, horizontal):
        sc = compute_scores(horizontal, np.array([[np.pi / 2, 0.0]]))
        assert sc.s1[0] == pytest.approx(np.pi / 2, abs=1e-8)
        assert sc.s2[0] == 0.0

    def test_off_ridge_point(self, horizontal):
        sc = compute_scores(horizontal, np.array([[0.0, 0.2]]))
        assert sc.m2 == pytest.approx(np.pi, abs=1e-12)
        assert sc.s1[0] == pytest.approx(0.0, abs=1e-8)
        assert sc.s2[0] == pytest.approx(0.2, abs=1e-10)

    def test_sign_flips_across_ridge(self, horizontal):
        sc = compute_scores(horizontal, np.array([[0.0, 0.2], [0.0, -0.2]]))
        assert sc.s2[0] == pytest.approx(-sc.s2[1])

    def test_first_score_matches_dense_oracle(self, catalog, rng):
        fr = catalog.curve(SKEWED)
        alpha = rng.uniform(-np.pi, np.pi, 500)
        pts = eval_scaled(fr, alpha)
        grid = -np.pi + 2 * np.pi * np.arange(100_000) / 100_000
        table = eval_scaled(fr, grid)
        oracle = np.array([grid[np.argmin(torus_dist(table, p))] for p in pts])
        sc = compute_scores(fr, pts)
        assert np.abs(cmod(sc.s1 - oracle)).max() < 1e-4
        assert np.all(sc.s2 == 0.0)

    @pytest.mark.parametrize("params", CATALOG, ids=CATALOG_IDS)
    def test_scale_grid_doubling(self, catalog, params):
        fr = catalog.curve(params)
        assert abs(max_projection_distance(fr, 256) - max_projection_distance(fr)) < 1e-3

    def test_bounded_second_score(self, catalog, rng):
        fr = catalog.curve(CATALOG[6])
        sc = compute_scores(fr, rng.uniform(-np.pi, np.pi, (2000, 2)))
        assert np.all(np.abs(sc.s2) <= np.pi)
        assert np.all((sc.s1 >= -np.pi) & (sc.s1 < np.pi))

    def test_reconstruction(self, catalog, rng):
        fr = catalog.curve(SKEWED)
        pts = np.vstack([rng.uniform(-np.pi, np.pi, (200, 2)),
                         eval_scaled(fr, rng.uniform(-np.pi, np.pi, 50))])
        sc = compute_scores(fr, pts)
        foot = project(fr, pts).foot
        assert np.array_equal(eval_scaled(fr, sc.s1), foot)
        on = sc.s2 == 0
        assert on.sum() >= 50
        assert torus_dist(eval_scaled(fr, sc.s1[on]), pts[on]).max() < 1e-6

    @settings(max_examples=10)
    @given(st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
    def test_shift_invariance(self, c1, c2):
        from conftest import _RidgeCache
        cache = _SHIFT_CACHE.setdefault("c", _RidgeCache())
        shift = np.array([c1, c2])
        pts = np.random.default_rng(7).uniform(-np.pi, np.pi, (100, 2))
        base = compute_scores(cache.curve(SKEWED), pts)
        moved = compute_scores(shifted_curve(cache, SKEWED, shift), cmod(pts + shift))
        ok = ~(base.tie | moved.tie)
        assert np.abs(cmod(moved.s1 - base.s1))[ok].max() < 1e-4
        assert np.abs(moved.s2 - base.s2)[ok].max() < 1e-4

    def test_degenerate_scale(self, horizontal):
        with pytest.raises(Exception, match="degenerate"):
            compute_scores(horizontal, np.zeros((3, 2)), m2=0.0)

    def test_empty(self, horizontal):
        with pytest.raises(InsufficientDataError):
            compute_scores(horizontal, np.empty((0, 2)))


_SHIFT_CACHE = {}


class TestPve:
    def test_all_on_ridge(self):
        sc = Scores(s1=np.linspace(-3, 3, 50), s2=np.zeros(50), m2=1.0)
        assert pve(sc) == 1.0

    @given(st.integers(0, 2**31 - 1))
    def test_swap_is_complement(self, seed):
        r = np.random.default_rng(seed)
        sc = Scores(s1=r.uniform(-np.pi, np.pi, 30), s2=r.normal(0, 0.5, 30), m2=1.0)
        assert pve(sc) + pve(sc.swapped()) == pytest.approx(1.0, abs=1e-12)

    def test_identical_points(self):
        with pytest.raises(UndefinedPveError):
            pve(Scores(s1=np.full(5, 0.3), s2=np.zeros(5), m2=1.0))

    def test_single_point(self):
        with pytest.raises(InsufficientDataError):
            pve(Scores(s1=np.zeros(1), s2=np.zeros(1), m2=1.0))


class TestApca:
    def test_line_slope(self, rng):
        x = rng.uniform(-1.5, 1.5, 2000)
        pts = np.column_stack([x, 0.5 * x + rng.normal(0, 1e-3, x.size)])
        res = apca(pts)
        v = res.components[:, 0]
        assert v[1] / v[0] == pytest.approx(0.5, abs=0.01)
        assert res.pve > 0.99

    def test_scores_are_unwrapped_eigen_coordinates(self, rng):
        pts = cmod(rng.normal([np.pi - 0.1, 0.0], [0.8, 0.3], (500, 2)))
        res = apca(pts)
        x = cmod(pts - np.array(res.center))
        assert np.allclose(res.scores, x @ res.components)
        assert res.variances[0] >= res.variances[1]

    def test_errors(self):
        with pytest.raises(InsufficientDataError):
            apca(np.zeros((2, 2)))
        with pytest.raises(Exception, match="degenerate"):
            apca(np.zeros((10, 2)))


class TestRidgePca:
    def test_independent_heterogeneous_takes_edge_path(self):
        x = pipeline.model_sample(BsvmParams(0, 0, 0, 1.5, 0), 2000, 21)
        fit = ridge_pca(x)
        assert fit.diagnostics["ridge_branch"] == "explicit:axis_horizontal"
        assert "axis_horizontal" in fit.edge_flags
        pts = eval_scaled(fit.curve, np.linspace(-np.pi, np.pi, 64, endpoint=False))
        assert np.ptp(pts[:, 1]) < 1e-10
        assert fit.pve > 0.5

    def test_implicit_path_bwc(self):
        x = pipeline.model_sample(BwcParams(1.0, -2.0, 0.3, 0.6, 0.5), 600, 22)
        fit = ridge_pca(x, PipelineConfig(model="bwc", grid_n=200))
        assert fit.selected.model == "bwc"
        assert fit.diagnostics["ridge_branch"] == "implicit"
        assert torus_dist(fit.curve.mu, fit.selected.params.mu) < 1e-12
        assert 0 <= fit.pve <= 1
        doc = fit.to_dict()
        assert doc["model"] == "bwc" and set(doc["lrt"]) == {"homogeneity", "independence"}

    def test_isotropic_independent_is_ambiguous(self):
        x = pipeline.model_sample(BsvmParams(0.5, 0.5, 1.0, 1.0, 0.0), 500, 23)
        fit = ridge_pca(x, PipelineConfig(model="bsvm"))
        if fit.diagnostics["accepted_restrictions"] == ["homogeneous", "independent"]:
            assert "ridge_ambiguous" in fit.edge_flags

    def test_stage_named_on_failure(self, monkeypatch):
        def boom(*args, **kwargs):
            raise ValueError("no curve")
        monkeypatch.setattr(pipeline, "fourier_fit", boom)
        x = pipeline.model_sample(BsvmParams(0, 0, 0, 1.5, 0), 300, 24)
        with pytest.raises(PipelineError) as info:
            ridge_pca(x)
        assert info.value.step == "ii"
        assert isinstance(info.value.cause, ValueError)

    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError):
            ridge_pca(np.zeros((5, 2)))

    @pytest.mark.parametrize("kwargs", [{"model": "gauss"}, {"alpha": 0.5}, {"alpha": 0.0},
                                        {"fourier_m": 0}, {"grid_n": 8}])
    def test_config_validation(self, kwargs):
        with pytest.raises(DomainError):
            PipelineConfig(**kwargs)


class TestThreads:
    def test_default(self, monkeypatch):
        monkeypatch.delenv("TRPCA_THREADS", raising=False)
        assert worker_count() >= 1

    def test_explicit(self, monkeypatch):
        monkeypatch.setenv("TRPCA_THREADS", "3")
        assert worker_count() == 3

    @pytest.mark.parametrize("raw", ["-1", "two"])
    def test_invalid(self, monkeypatch, raw):
        monkeypatch.setenv("TRPCA_THREADS", raw)
        with pytest.raises(DomainError):
            worker_count()


class TestScenarios:
    def test_mixture_labels(self):
        x, labels = scenario_sample(4, 400, 5)
        assert x.shape == (400, 2)
        assert set(np.unique(labels)) == {0, 1}
        y, again = scenario_sample(4, 400, 5)
        assert np.array_equal(x, y) and np.array_equal(labels, again)

    def test_single_component(self):
        x, labels = scenario_sample(3, 50, 1)
        assert np.all(labels == 0)
        assert np.all((x >= -np.pi) & (x < np.pi))

    def test_unknown(self):
        with pytest.raises(DomainError):
            scenario_sample(5, 10, 0)
