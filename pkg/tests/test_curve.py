import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import cKDTree

import trpca.curve as curve_mod
from trpca.curve import (FourierRidge, TabulatedRidge, arclength, arclength_param, eval_curve,
                         eval_scaled, fourier_fit, fourier_from_coefficients, inverse_arclength,
                         polyline_length, project, ridge_table, tangent)
from trpca.errors import DomainError, InsufficientDataError, ParametrizationError
from trpca.geometry import TorusPoint, cmod, torus_dist
from trpca.models import BsvmParams, BwcParams
from trpca.ridge import ConnectedRidge, _box, explicit_edge_ridge

from conftest import CATALOG, CATALOG_IDS

HORIZONTAL = BsvmParams(0, 0, 0, 1, 0)
DIAGONAL = BsvmParams(0, 0, 1, 1, 2)


@pytest.fixture(scope="module")
def horizontal():
    return arclength_param(fourier_fit(explicit_edge_ridge(HORIZONTAL, "axis_horizontal"), 15))


@pytest.fixture(scope="module")
def diagonal():
    return arclength_param(fourier_fit(explicit_edge_ridge(DIAGONAL, "diagonal_pos"), 15))


@pytest.fixture(scope="module")
def bsvm_curve(catalog):
    return catalog.curve(CATALOG[1])


def dense_projection(fr, points, n=100_000):
    """Exhaustive projection over ``n`` equispaced arguments."""
    alphas = -np.pi + 2 * np.pi * np.arange(n) / n
    table = eval_scaled(fr, alphas)
    out = np.empty(len(points))
    dist = np.empty(len(points))
    for i, p in enumerate(points):
        d = torus_dist(table, p)
        k = np.argmin(d)
        out[i], dist[i] = alphas[k], d[k]
    return out, dist


class TestFourierFit:
    def test_horizontal_coefficients(self, horizontal):
        expected = np.zeros(16)
        expected[0] = 2.0
        assert np.allclose(horizontal.a, expected, atol=1e-12)
        assert np.allclose(horizontal.b, 0.0, atol=1e-12)

    def test_diagonal_coefficients(self, diagonal):
        a = np.zeros(16)
        a[1] = 1.0
        b = np.zeros(15)
        b[0] = 1.0
        assert np.allclose(diagonal.a, a, atol=1e-12)
        assert np.allclose(diagonal.b, b, atol=1e-12)

    @pytest.mark.parametrize("params", CATALOG, ids=CATALOG_IDS)
    def test_catalog_accuracy(self, catalog, params):
        fr = catalog.curve(params)
        pts = catalog.ridge(params)[1].ordered_points
        assert project(fr, pts).dist.max() < 1e-2
        # and every point of the curve's 1024 grid is near the ridge
        tree = cKDTree(_box(pts), boxsize=2 * np.pi)
        assert tree.query(_box(fr.table[1]))[0].max() < 1e-2

    @pytest.mark.parametrize("params", CATALOG[:2] + CATALOG[4:6], ids=CATALOG_IDS[:2] + CATALOG_IDS[4:6])
    def test_quadrature_doubling(self, catalog, params, monkeypatch):
        comp = catalog.ridge(params)[1]
        fr = catalog.curve(params)
        monkeypatch.setattr(curve_mod, "_GL_COEF", 2 * curve_mod._GL_COEF)
        finer = fourier_fit(comp, 15)
        assert np.abs(finer.a - fr.a).max() < 1e-9
        assert np.abs(finer.b - fr.b).max() < 1e-9
        assert abs(arclength_param(fr, nodes=2048).total_length_R - fr.total_length_R) < 1e-9

    def test_bad_order(self):
        with pytest.raises(DomainError):
            fourier_fit(explicit_edge_ridge(HORIZONTAL, "axis_horizontal"), 0)

    def test_too_few_points(self):
        comp = explicit_edge_ridge(HORIZONTAL, "axis_horizontal", n_points=20)
        with pytest.raises(InsufficientDataError):
            fourier_fit(comp, 15)
        assert fourier_fit(comp, 9).m == 9

    def test_multivalued(self):
        t = np.linspace(-np.pi, np.pi, 400, endpoint=False)
        circle = np.column_stack([np.cos(t), np.sin(t)])
        pts = np.vstack([[0.0, 0.0], circle])
        comp = ConnectedRidge(ordered_points=pts, mu=TorusPoint(0.0, 0.0), quadrant_sign=0)
        with pytest.raises(ParametrizationError):
            fourier_fit(comp, 5)

    def test_open_piece(self):
        t = np.linspace(0.0, 2.0, 200)
        comp = ConnectedRidge(ordered_points=np.column_stack([t, 0.1 * t]),
                              mu=TorusPoint(0.0, 0.0), quadrant_sign=0)
        with pytest.raises(ParametrizationError):
            fourier_fit(comp, 5)

    def test_rebuild_from_coefficients(self, bsvm_curve):
        again = fourier_from_coefficients(bsvm_curve.a, bsvm_curve.b, bsvm_curve.index_coord,
                                          bsvm_curve.mu)
        assert again.total_length_R == bsvm_curve.total_length_R
        with pytest.raises(DomainError):
            fourier_from_coefficients(bsvm_curve.a, bsvm_curve.b[:-1], 1, (0, 0))


class TestEvalCurve:
    def test_through_location(self, catalog):
        for params in CATALOG:
            fr = catalog.curve(params)
            pt = eval_curve(fr, fr.mu_j)
            assert torus_dist(pt, fr.mu) < 1e-14

    def test_horizontal(self, rng):
        comp = explicit_edge_ridge(BsvmParams(0.4, -1.0, 0, 1, 0), "axis_horizontal")
        fr = fourier_fit(comp, 15)
        phi = rng.uniform(-np.pi, np.pi, 50)
        pts = eval_curve(fr, phi)
        assert np.allclose(pts[:, 0], phi, atol=1e-15)
        assert np.allclose(pts[:, 1], -1.0, atol=1e-12)

    def test_diagonal(self, diagonal, rng):
        phi = rng.uniform(-np.pi, np.pi, 256)
        pts = eval_curve(diagonal, phi)
        assert np.all(torus_dist(pts, np.column_stack([phi, cmod(phi)])) < 1e-10)

    def test_vertical_index(self):
        fr = fourier_fit(explicit_edge_ridge(BwcParams(0.5, 0, 0.6, 0.1, 0), "axis_vertical"), 15)
        pts = eval_curve(fr, np.array([0.3, -2.0]))
        assert np.allclose(pts, [[0.5, 0.3], [0.5, -2.0]], atol=1e-12)


class TestArcLength:
    def test_horizontal(self, horizontal):
        assert horizontal.total_length_R == pytest.approx(2 * np.pi, abs=1e-12)
        t = np.linspace(0, 2 * np.pi, 17)
        assert np.allclose(arclength(horizontal, t), t, atol=1e-12)

    def test_diagonal(self, diagonal):
        assert diagonal.total_length_R == pytest.approx(2 * np.sqrt(2) * np.pi, abs=1e-12)
        t = np.linspace(0, 2 * np.pi, 17)
        assert np.allclose(arclength(diagonal, t), np.sqrt(2) * t, atol=1e-12)

    def test_polyline_oracle(self, catalog):
        fr = catalog.curve(BwcParams(0, 0, 0.3, 0.3, 0.6))
        phi = fr.mu_j + 2 * np.pi * np.arange(100_001) / 100_000
        assert fr.total_length_R == pytest.approx(polyline_length(eval_curve(fr, phi)), abs=1e-4)

    def test_inverse(self, bsvm_curve, rng):
        s = rng.uniform(0, bsvm_curve.total_length_R, 100)
        assert np.allclose(arclength(bsvm_curve, inverse_arclength(bsvm_curve, s)), s, atol=1e-10)

    def test_strictly_increasing(self, catalog):
        for params in CATALOG:
            assert np.all(np.diff(catalog.curve(params).arclen_L) > 0)

    def test_requires_table(self):
        fr = fourier_fit(explicit_edge_ridge(HORIZONTAL, "axis_horizontal"), 15)
        assert not fr.has_arclength
        with pytest.raises(DomainError):
            eval_scaled(fr, 0.0)


class TestEvalScaled:
    def test_origin_is_location(self, catalog):
        for params in CATALOG:
            fr = catalog.curve(params)
            assert torus_dist(eval_scaled(fr, 0.0), fr.mu) < 1e-8

    def test_horizontal_quarter(self):
        comp = explicit_edge_ridge(BsvmParams(1.0, -2.0, 0, 1, 0), "axis_horizontal")
        fr = arclength_param(fourier_fit(comp, 15))
        pt = eval_scaled(fr, np.pi / 2)
        assert torus_dist(pt, (cmod(1.0 + np.pi / 2), -2.0)) < 1e-10

    def test_diagonal_half_length(self, diagonal):
        assert torus_dist(eval_scaled(diagonal, -np.pi), (-np.pi, -np.pi)) < 1e-10

    @given(st.floats(-20.0, 20.0))
    def test_periodic(self, alpha):
        fr = arclength_param(fourier_fit(explicit_edge_ridge(DIAGONAL, "diagonal_pos"), 15))
        a = eval_scaled(fr, alpha)
        b = eval_scaled(fr, cmod(alpha + 2 * np.pi))
        assert torus_dist(a, b) < 1e-12

    def test_periodic_exact_on_grid(self, bsvm_curve):
        alpha = -np.pi + 2 * np.pi * np.arange(64) / 64
        assert np.array_equal(eval_scaled(bsvm_curve, alpha), eval_scaled(bsvm_curve, cmod(alpha)))

    def test_signed_distance_matches_polyline(self, catalog, rng):
        for params in (CATALOG[1], CATALOG[6]):
            fr = catalog.curve(params)
            R = fr.total_length_R
            for a1, a2 in rng.uniform(-np.pi, np.pi, (50, 2)):
                signed = R / (2 * np.pi) * cmod(a1 - a2)
                path = eval_scaled(fr, a2 + np.linspace(0.0, cmod(a1 - a2), 20_001))
                assert signed == pytest.approx(np.sign(signed) * polyline_length(path), abs=1e-4)

    def test_tangent_matches_difference_quotient(self, bsvm_curve, rng):
        alpha = rng.uniform(-3.0, 3.0, 50)
        h = 1e-6
        fd = cmod(eval_scaled(bsvm_curve, alpha + h) - eval_scaled(bsvm_curve, alpha - h)) / (2 * h)
        assert np.allclose(tangent(bsvm_curve, alpha), fd, atol=1e-6)
        speed = np.linalg.norm(tangent(bsvm_curve, alpha), axis=1)
        assert np.allclose(speed, bsvm_curve.total_length_R / (2 * np.pi), rtol=1e-10)


class TestProject:
    def test_self_projection(self, bsvm_curve):
        pr = project(bsvm_curve, eval_scaled(bsvm_curve, 0.7))
        assert pr.alpha[0] == pytest.approx(0.7, abs=1e-7)
        assert pr.dist[0] < 1e-8

    def test_horizontal_drop(self, horizontal):
        pr = project(horizontal, np.array([1.0, 0.3]))
        assert pr.alpha[0] == pytest.approx(1.0, abs=1e-8)
        assert pr.foot[0] == pytest.approx((1.0, 0.0), abs=1e-8)
        assert pr.dist[0] == pytest.approx(0.3, abs=1e-12)

    def test_seam_point_has_single_foot(self, horizontal):
        pr = project(horizontal, np.array([0.5, -np.pi]))
        assert pr.dist[0] == pytest.approx(np.pi)
        assert pr.alpha[0] == pytest.approx(0.5, abs=1e-7)
        assert not pr.tie[0]

    def test_tie_goes_to_smaller_alpha(self, diagonal):
        # equidistant from alpha = 0 and alpha = -pi
        pr = project(diagonal, np.array([[np.pi / 2, -np.pi / 2]]))
        assert pr.tie[0]
        assert pr.alpha[0] == pytest.approx(-np.pi, abs=1e-7)
        assert pr.dist[0] == pytest.approx(np.pi / np.sqrt(2), abs=1e-10)

    def test_dense_oracle(self, bsvm_curve, rng):
        pts = rng.uniform(-np.pi, np.pi, (200, 2))
        pr = project(bsvm_curve, pts)
        ref_alpha, ref_dist = dense_projection(bsvm_curve, pts)
        step = 2 * np.pi / 100_000
        assert np.all(pr.dist <= ref_dist + 1e-12)
        unique = ~pr.tie
        gap = np.abs(cmod(pr.alpha - ref_alpha))
        assert np.all(gap[unique] <= step)

    @settings(max_examples=30)
    @given(st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi), st.integers(0, 2**31 - 1))
    def test_optimality(self, t1, t2, seed):
        fr = _shared_bsvm_curve()
        p = np.array([t1, t2])
        pr = project(fr, p)
        alphas = np.random.default_rng(seed).uniform(-np.pi, np.pi, 1000)
        assert pr.dist[0] <= torus_dist(eval_scaled(fr, alphas), p).min() + 1e-12
        assert torus_dist(pr.foot[0], eval_scaled(fr, pr.alpha[0])) == 0


_CURVE = {}


def _shared_bsvm_curve():
    # hypothesis tests cannot take function-scoped fixtures
    if "c" not in _CURVE:
        from conftest import _RidgeCache
        _CURVE["c"] = _RidgeCache().curve(CATALOG[1])
    return _CURVE["c"]


class TestTabulatedRidge:
    def test_reproduces_table(self, bsvm_curve):
        rows = ridge_table(bsvm_curve)
        tab = TabulatedRidge(rows)
        assert np.allclose(tab.scaled(rows[:, 0]), rows[:, 1:], atol=1e-12)
        assert torus_dist(tab.mu, bsvm_curve.mu) < 1e-12

    def test_close_to_fourier_curve(self, catalog, rng):
        for params in CATALOG:
            fr = catalog.curve(params)
            tab = TabulatedRidge(ridge_table(fr))
            alpha = rng.uniform(-np.pi, np.pi, 500)
            assert torus_dist(tab.scaled(alpha), eval_scaled(fr, alpha)).max() < 1e-7

    def test_projection_agrees(self, bsvm_curve, rng):
        tab = TabulatedRidge(ridge_table(bsvm_curve))
        pts = rng.uniform(-np.pi, np.pi, (100, 2))
        a = project(tab, pts)
        b = project(bsvm_curve, pts)
        ok = ~(a.tie | b.tie)
        assert np.abs(cmod(a.alpha - b.alpha))[ok].max() < 1e-6

    def test_unsorted_rows(self, bsvm_curve):
        rows = ridge_table(bsvm_curve)
        shuffled = rows[np.random.default_rng(0).permutation(len(rows))]
        assert np.array_equal(TabulatedRidge(shuffled).table[1], rows[:, 1:])

    def test_bad_rows(self):
        with pytest.raises(DomainError):
            TabulatedRidge(np.zeros((4, 3)))
        rows = np.column_stack([np.zeros(10), np.zeros(10), np.zeros(10)])
        with pytest.raises(DomainError):
            TabulatedRidge(rows)


def test_polyline_length_wraps():
    pts = np.array([[np.pi - 0.1, 0.0], [-np.pi + 0.1, 0.0]])
    assert polyline_length(pts) == pytest.approx(0.2)


def test_fourier_ridge_is_frozen(horizontal):
    assert isinstance(horizontal, FourierRidge)
    with pytest.raises(AttributeError):
        horizontal.m = 3
