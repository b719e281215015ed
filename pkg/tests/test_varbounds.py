import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinc_lab import lattice as lat
from spinc_lab import varbounds as vb
from spinc_lab.scenarios import FourierTensor, get_scenario


@pytest.fixture(scope="module")
def flat():
    return get_scenario("torus2-flat")


def test_c_n_exact():
    assert [vb.c_n(n) for n in range(1, 7)] == [0.0, 2.0, 2.0, 2 * np.sqrt(2), 2 * np.sqrt(2), 2 * np.sqrt(3)]


def test_k_specs():
    assert len(vb.k_basis(2)) == 9
    assert np.allclose(vb.k_field("conformal")(np.zeros(2)), np.eye(2))
    assert np.allclose(vb.k_field("zero")(np.ones(2)), 0)
    k = vb.k_field("diag-sin-x2")
    assert k(np.array([0.0, np.pi / 2]))[0, 0] == pytest.approx(1.0)
    assert isinstance(vb.k_field({"terms": [{"i": 0, "j": 1, "amp": 1, "freq": [1, 0]}]}), FourierTensor)
    with pytest.raises(vb.VariationError):
        vb.k_field("nonsense")
    with pytest.raises(ValueError):
        vb.k_field({"terms": [{"i": 0, "j": 0, "amp": 1, "freq": [0, 0], "extra": 1}]})


@settings(max_examples=10)
@given(st.integers(-2, 2), st.integers(-2, 2), st.sampled_from([1, -1]))
def test_plane_wave_is_lattice_eigenvector(p1, p2, branch):
    D = lat.assemble_dirac(get_scenario("torus2-flat"), 12)
    psi, lam = vb.plane_wave_spinor(D, (p1, p2), branch)
    r = D.matrix @ psi - lam * psi
    assert np.linalg.norm(r) <= 1e-10 * max(1.0, np.linalg.norm(psi))


def test_calibration_resolves_unit_constant():
    cal = vb.calibrate_pairing(16, 1e-3)
    assert cal["resolved"] == 1
    assert abs(cal["constant"] - 1) < 1e-6


def test_trivial_examples(flat):
    par = vb.variation_check(flat, "diag-sin-x2", "parallel", 16, 1e-3)
    assert abs(par.lhs) < 1e-10 and abs(par.rhs) < 1e-10
    zero = vb.dirac_variation_operator_check(flat, "zero", "plane:1,0", 16, 1e-3)
    assert zero["residual"] < 1e-12 and zero["rhs_norm"] == 0.0


def test_conformal_operator_closed_form(flat):
    # k = g: tr k = 2, div k = 0, D^k = D, so the right side is -(1/2) D psi (Dirac part, no stabilizer)
    out = vb.dirac_variation_operator_check(flat, "conformal", "plane:1,0", 16, 1e-3)
    D = lat.assemble_dirac(flat, 16, order=vb.VARIATION_ORDER)
    psi, _, _ = vb.select_spinor(D, "plane:1,0")
    v = D.raw @ psi
    expected = 0.5 * np.sqrt(np.real(np.vdot(v, D.weight_vector() * v)))
    assert out["rhs_norm"] == pytest.approx(expected, rel=1e-10)
    assert out["residual"] < 1e-8


def test_generic_variation_and_fit_oracle(flat):
    k = {"constant": [[0.2, 0.0], [0.0, -0.1]], "terms": [{"i": 0, "j": 1, "amp": 0.3, "freq": [0, 1]}]}
    rep = vb.variation_check(flat, k, "plane:1,1", 16, 1e-3)
    assert rep.agreement < 5e-3
    assert abs(rep.fit_slope - rep.lhs) < 1e-6
    assert rep.pairing == vb.PAIRING and rep.spinor_reading == vb.SPINOR_READING


def test_operator_residual_second_order():
    """Order-2 stencil: residual ratio under grid doubling sits in [3, 5]."""
    sc = get_scenario("torus2-perturbed")
    res = [vb.dirac_variation_operator_check(sc, "diag-sin-x2", "eigen:2", N, 1e-3, order=2)["residual"]
           for N in (12, 24)]
    assert 3.0 <= res[0] / res[1] <= 5.0


def test_degenerate_family_rejected(flat):
    with pytest.raises(vb.VariationError):
        vb.variation_check(flat, {"constant": [[-400.0, 0.0], [0.0, 1.0]]}, "plane:1,0", 12, 1e-2)


def test_lagrange_functional_trivial(flat):
    D = lat.assemble_dirac(flat, 12)
    par, _, _ = vb.select_spinor(D, "parallel")
    assert vb.lagrange_functional(D, par, 0.0, 1.0, np.zeros(D.grid.sites)) == pytest.approx(0, abs=1e-14)
    psi, lam = vb.plane_wave_spinor(D, (1, 0))
    assert vb.lagrange_functional(D, psi, lam, 1.0, np.zeros(D.grid.sites)) == pytest.approx(0, abs=1e-10)


def test_frkim_eigenspinor_matches_pairing(flat):
    out = vb.frkim_first_variation(flat, "plane:1,0", "auto", 1.0, "conformal", 12, 1e-3)
    assert abs(out["dW_dt"]) > 0.1
    assert out["agreement"] < 1e-4 * out["scale"]
    classical = vb.frkim_first_variation(flat, "plane:1,0", "auto", 0.0, "mode:4", 12, 1e-3)
    assert abs(classical["dW_dt"]) < 1e-8


@pytest.mark.parametrize("q", [0, 1, 3])
def test_bound_margins(q):
    reps = vb.bound_check(get_scenario("torus2-magnetic", flux=q), 16, 8)
    assert all(r.margin >= -r.tol_disc for r in reps)
    assert all(r.c_n == 2.0 for r in reps)
    if q == 3:
        zero = [r for r in reps if abs(r.eigenvalue) < 0.05]
        assert len(zero) == 3
        B = 2 * np.pi * 3 / (2 * np.pi) ** 2
        assert all(r.rhs_inf == pytest.approx(-B, rel=0.02) for r in zero)
        assert len({np.sign(r.chirality) for r in zero}) == 1
    if q == 0:
        zero = [r for r in reps if abs(r.eigenvalue) < 1e-10]
        assert len(zero) == 2 and all(abs(r.margin) < 1e-8 for r in zero)
