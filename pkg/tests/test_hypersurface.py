import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinc_lab import hypersurface as hs
from spinc_lab.scenarios import UnknownScenarioError

seeds = st.integers(0, 2 ** 31 - 1)


def sample(imm, seed, count=2):
    return imm.base.sample(np.random.default_rng(seed), count)


@pytest.mark.parametrize("name", hs.immersion_names())
def test_gauss_and_dirac_gauss(name):
    imm = hs.get_immersion(name)
    field = hs.default_ambient_field(imm, seed=2)
    for u in sample(imm, 5):
        for a in range(imm.base.dim):
            assert np.max(np.abs(hs.gauss_formula_residual(imm, field, u, a))) < 1e-5
        assert np.max(np.abs(hs.dirac_gauss_residual(imm, field, u))) < 1e-5
        s, v = hs.omega_split_residuals(imm, field, u)
        assert abs(s) < 1e-5 and np.max(np.abs(v)) < 1e-5


@settings(max_examples=10)
@given(seeds)
def test_gauss_property_warped(seed):
    imm = hs.get_immersion("torus2-in-warped-cylinder")
    field = hs.default_ambient_field(imm, seed=seed)
    u = sample(imm, seed, 1)[0]
    for a in range(2):
        assert np.max(np.abs(hs.gauss_formula_residual(imm, field, u, a))) < 1e-5


@pytest.mark.parametrize("name,H", [("sphere2-in-r3", -1.0), ("sphere2-in-r3-inward", 1.0)])
def test_sphere_weingarten(name, H):
    imm = hs.get_immersion(name)
    u = np.array([1.0, 2.0])
    w = hs.weingarten(imm, u)
    assert np.allclose(w, H * np.eye(2), atol=1e-8)
    assert hs.mean_curvature(w, np.ones(2)) == pytest.approx(H, abs=1e-8)
    assert hs.weingarten_asymmetry(imm, u) < 1e-8


def test_parallel_restriction_on_sphere():
    imm = hs.get_immersion("sphere2-in-r3")
    field = hs.default_ambient_field(imm, "parallel", seed=4)
    for u in sample(imm, 4, 5):
        rep = hs.morel_check(imm, field, u)
        assert rep.ell_plus_half_w < 1e-6
        assert abs(rep.equality_quantity) < 1e-6
        assert rep.eigen_residual < 1e-6
        assert rep.c_n == 2.0


def test_parallel_restriction_rejects_non_parallel():
    imm = hs.get_immersion("torus2-in-warped-cylinder")
    field = hs.default_ambient_field(imm, "auto", seed=0)
    with pytest.raises(hs.NotParallelError):
        hs.morel_check(imm, field, np.array([0.3, 0.4]))


def test_flat_slice_parallel_field():
    imm = hs.get_immersion("torus2-flat-slice")
    field = hs.default_ambient_field(imm, "parallel")
    rep = hs.morel_check(imm, field, np.array([0.3, 0.4]))
    assert rep.ell_plus_half_w < 1e-10 and abs(rep.equality_quantity) < 1e-10


def test_odd_dimension_both_chiralities():
    for name in ("torus3-in-warped-cylinder", "torus3-in-warped-cylinder-minus"):
        imm = hs.get_immersion(name)
        field = hs.default_ambient_field(imm, seed=1)
        u = sample(imm, 1, 1)[0]
        assert np.max(np.abs(hs.dirac_gauss_residual(imm, field, u))) < 1e-5
    assert hs.get_immersion("torus3-in-warped-cylinder-minus").kappa == -1


def test_bullet_compatibility_sign():
    """<X.phi1, phi2> + (-1)^s <phi1, X.phi2> = 0 in the base form."""
    imm = hs.get_immersion("torus2-in-warped-cylinder")
    rep = imm.base_rep
    rng = np.random.default_rng(0)
    p1, p2 = (rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(2))
    v = rng.normal(size=2)
    B = rep.form
    lhs = np.vdot(hs.bullet(imm, v, p1), B @ p2) + np.vdot(p1, B @ hs.bullet(imm, v, p2))
    assert abs(lhs) < 1e-12


def test_unknown_immersion():
    with pytest.raises(UnknownScenarioError):
        hs.get_immersion("klein-bottle")


def test_immersion_invariants():
    imm = hs.get_immersion("sphere2-in-r3")
    r = imm.invariant_residuals(np.array([1.0, 1.0]))
    assert max(r.values()) < 1e-12
