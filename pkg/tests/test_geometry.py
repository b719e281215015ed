import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from spinc_lab import geometry as geo
from spinc_lab.clifford import Signature
from spinc_lab.scenarios import UnknownScenarioError, get_scenario, lorentz_flat

finite = st.floats(-1.5, 1.5, allow_nan=False, allow_infinity=False)


@given(arrays(float, 3, elements=finite))
def test_differentiate_polynomial(x):
    f = lambda y: np.array([y[0] ** 3 * y[1], np.sin(y[2])])
    d0 = geo.differentiate(f, x, 0)
    assert np.allclose(d0, [3 * x[0] ** 2 * x[1], 0.0], atol=1e-9)
    d2 = geo.differentiate(f, x, 2, richardson=True)
    assert np.allclose(d2, [0.0, np.cos(x[2])], atol=1e-10)


def test_chart_boundary():
    bounds = (np.zeros(2), np.ones(2), (False, True))
    with pytest.raises(geo.ChartBoundaryError):
        geo.differentiate(lambda y: y, np.array([1e-5, 0.5]), 0, bounds=bounds)
    # periodic axis never complains
    geo.differentiate(lambda y: y, np.array([0.5, 1e-5]), 1, bounds=bounds)


@st.composite
def spd(draw, n=3):
    a = draw(arrays(float, (n, n), elements=st.floats(-1, 1, allow_nan=False)))
    return a @ a.T + 0.5 * np.eye(n)


@given(spd())
def test_frame_orthonormal(g):
    E, eps = geo.orthonormal_frame(g)
    assert np.allclose(E.T @ g @ E, np.diag(eps), atol=1e-10)
    assert np.all(eps == 1)


def test_lorentzian_frame_orders_signs():
    g = np.array([[-1.0, 0.2], [0.2, 1.0]])
    E, eps = geo.orthonormal_frame(g, Signature(1, 1))
    assert list(eps) == [1.0, -1.0]
    assert np.allclose(E.T @ g @ E, np.diag(eps))


def test_degenerate_metric():
    with pytest.raises(geo.DegenerateMetricError):
        geo.orthonormal_frame(np.array([[1.0, 1.0], [1.0, 1.0]]), Signature(1, 1))
    with pytest.raises(geo.DegenerateMetricError):
        geo.orthonormal_frame(-np.eye(2), Signature(2, 0))


def test_polar_christoffel():
    gam = geo.christoffel(lambda x: np.diag([1.0, x[0] ** 2]), np.array([1.7, 0.3]))
    assert gam[0, 1, 1] == pytest.approx(-1.7, abs=1e-9)
    assert gam[1, 0, 1] == pytest.approx(1 / 1.7, abs=1e-9)


@pytest.mark.parametrize("name", ["sphere2-unit", "sphere2-stereo-north"])
def test_sphere_curvature(name):
    sc = get_scenario(name)
    for x in sc.sample(np.random.default_rng(0), 5):
        jet = geo.geometry_jet(sc, x)
        assert jet.scalar == pytest.approx(2.0, abs=1e-6)
        assert np.allclose(jet.ricci, np.eye(2), atol=1e-6)
        assert geo.riemann_symmetry_residual(jet) < 1e-6
        assert geo.bianchi_residual(jet) < 1e-6
        assert geo.frame_compatibility_residual(jet) < 1e-8
        assert geo.frame_orthonormality_residual(jet) < 1e-12


@given(st.integers(0, 2 ** 31 - 1))
def test_perturbed_torus_jet_invariants(seed):
    sc = get_scenario("torus2-perturbed")
    x = sc.sample(np.random.default_rng(seed), 1)[0]
    jet = geo.geometry_jet(sc, x)
    assert geo.riemann_symmetry_residual(jet) < 1e-6
    assert geo.bianchi_residual(jet) < 1e-6
    assert geo.frame_compatibility_residual(jet) < 1e-8
    # in 2D, Ric = (Scal/2) g
    assert np.allclose(jet.ricci, jet.scalar / 2 * np.eye(2), atol=1e-6)


def test_flat_lorentz_jet_vanishes():
    sc = lorentz_flat(1, 1)
    jet = geo.geometry_jet(sc, np.array([0.1, 0.2]))
    assert np.max(np.abs(jet.riemann)) < 1e-10
    assert list(jet.eps) == [1.0, -1.0]


def test_symmetric_tensor_field():
    k = geo.SymmetricTensorField(lambda x: np.array([[1.0, x[0]], [0.0, 1.0]]), "bad")
    with pytest.raises(ValueError):
        k(np.array([0.5, 0.0]))


def test_covariant_derivative_of_metric_vanishes():
    sc = get_scenario("torus2-perturbed")
    x = np.array([0.4, 1.1])
    assert np.max(np.abs(geo.covariant_derivative_tensor(sc.metric, sc.metric, x))) < 1e-8


def test_unknown_scenario():
    with pytest.raises(UnknownScenarioError):
        get_scenario("no-such-manifold")
