import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinc_lab import cylinder as cy
from spinc_lab.scenarios import get_scenario


def pts(cyl, n=3, seed=0):
    return cyl.base.sample(np.random.default_rng(seed), n)


@pytest.mark.parametrize("name", ["cylinder-static-torus2", "cylinder-conformal-torus2", "cylinder-sphere-cone",
                                  "cylinder-fourier-torus2", "cylinder-conformal-torus3"])
def test_curvature_relations(name):
    cyl = cy.cylinder(name)
    for x in pts(cyl):
        lo, hi = cyl.t_interval
        for t in (0.8 * lo, 0.0, 0.6 * hi):
            res = cy.cylinder_curvature_residuals(cyl, x, t)
            assert max(res.values()) < 1e-5, res
            assert cy.geodesic_defect(cyl, x, t) < 1e-8


def test_bala_codazzi_and_not():
    good = cy.cylinder("cylinder-F-constant")
    bad = cy.cylinder("cylinder-F-noncodazzi")
    x = np.array([0.4, 1.3])
    assert max(cy.bala_residuals(good, x, 0.1)) < 1e-5
    first, second = cy.bala_residuals(bad, x, 0.1)
    assert first < 1e-5 and second > 1e-3


@settings(max_examples=8)
@given(st.floats(-0.28, 0.28), st.integers(0, 1000))
def test_transport_preserves_form_and_intertwines(t1, seed):
    cyl = cy.cylinder("cylinder-fourier-torus2")
    x = pts(cyl, 1, seed)[0]
    res = cy.parallel_transport(cyl, x, np.array([1.0, 0.5j]), 0.0, t1)
    assert res.unitarity_defect < 1e-8
    assert cy.intertwining_defect(cyl, res) < 1e-7


def test_transport_round_trip():
    cyl = cy.cylinder("cylinder-conformal-torus2")
    x = np.array([0.2, 2.0])
    fwd = cy.parallel_transport(cyl, x, None, 0.0, 0.4)
    back = cy.parallel_transport(cyl, x, None, 0.4, 0.0)
    assert np.allclose(back.propagator @ fwd.propagator, np.eye(2), atol=1e-8)


def test_transport_outside_interval():
    cyl = cy.cylinder("cylinder-conformal-torus2")
    with pytest.raises(cy.TransportError):
        cy.parallel_transport(cyl, np.zeros(2), None, 0.0, 5.0)


def test_commutator_formula_and_refinement():
    cyl = cy.cylinder("cylinder-conformal-torus2")
    field = cy.transported_field(cyl, lambda x: np.array([np.cos(x[0]), 1j * np.sin(x[1])]))
    x, t = np.array([0.7, 1.9]), 0.15
    assert np.max(np.abs(cy.commutator_residual(cyl, field, x, t))) < 1e-4
    coarse = np.max(np.abs(cy.commutator_residual(cyl, field, x, t, h=0.05)))
    fine = np.max(np.abs(cy.commutator_residual(cyl, field, x, t, h=0.025)))
    assert coarse / fine >= 2


def test_commutator_with_connection():
    cyl = cy.flat_box_with_field()
    d = cyl.rep.dim
    field = cy.SmoothSpinorField(lambda y: np.exp(1j * y[1]) * np.ones(d) * (1 + y[0]), d)
    assert np.max(np.abs(cy.commutator_residual(cyl, field, np.array([0.3, -0.2]), 0.1))) < 1e-4


@pytest.mark.parametrize("name,sign", [("cylinder-sphere-cone", -1), ("cylinder-sphere-cone-inward", 1)])
def test_killing_to_parallel(name, sign):
    cyl = cy.cylinder(name)
    phi = cy.sphere_killing_spinor(np.array([1.0, 0.0]), sign)
    p = pts(cyl, 3, 5)
    pc = cy.build_parallel_from_killing(cyl, phi, p)
    res = pc.residuals(p, [-0.2, 0.0, 0.3])
    assert res["tangential"] < 1e-4 and res["normal"] < 1e-4
    x = p[0]
    assert np.array_equal(pc.restriction(x), phi(x))


def test_rank_one_example():
    cyl, phi = cy.rank_one_killing()
    p = pts(cyl, 3, 1)
    pc = cy.build_parallel_from_killing(cyl, phi, p)
    assert max(pc.residuals(p, [-0.3, 0.3]).values()) < 1e-4


def test_preconditions_enforced():
    cyl = cy.cylinder("cylinder-sphere-cone")
    wrong = cy.sphere_killing_spinor(np.array([1.0, 0.0]), +1)
    with pytest.raises(cy.PreconditionError):
        cy.build_parallel_from_killing(cyl, wrong, pts(cyl, 2))
    bad = cy.cylinder("cylinder-F-noncodazzi")
    with pytest.raises(cy.PreconditionError):
        cy.build_parallel_from_killing(bad, cy.SmoothSpinorField(lambda x: np.array([1.0, 0.0]), 2),
                                       pts(bad, 2))


def test_cylinder_needs_family():
    with pytest.raises(ValueError):
        cy.cylinder("torus2-flat")
