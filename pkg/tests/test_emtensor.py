import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinc_lab import emtensor as em
from spinc_lab.checks import random_literal_field
from spinc_lab.cylinder import sphere_killing_spinor
from spinc_lab.scenarios import get_scenario
from spinc_lab.spinc import constant_field, dirac_pointwise, hermitian, plane_wave, spinc_jet


@given(st.integers(0, 2 ** 31 - 1))
def test_symmetric_and_trace_is_dirac_pairing(seed):
    sc = get_scenario("torus2-perturbed")
    rng = np.random.default_rng(seed)
    f = random_literal_field(rng, 2, 2)
    x = sc.sample(rng, 1)[0]
    sj = spinc_jet(sc, x)
    v = em.em_tensor(f, sc, x, sj=sj)
    assert np.allclose(v.T, v.T.T)
    # tr T = Re <D psi, psi> for s = 0
    dpsi = dirac_pointwise(f, sc, x, sj)
    assert np.trace(v.T) == pytest.approx(hermitian(sj.rep, dpsi, f(x)).real, abs=1e-8)


def test_parallel_spinor_has_zero_tensor():
    sc = get_scenario("torus2-flat")
    v = em.em_tensor(constant_field([1, 1j]), sc, np.array([0.1, 0.2]))
    assert np.max(np.abs(v.T)) == 0.0
    assert v.ell_norm_sq() == 0.0


def test_zero_set_flagged():
    sc = get_scenario("torus2-flat")
    v = em.em_tensor(constant_field([0, 0]), sc, np.array([0.1, 0.2]))
    assert v.in_zero_set and v.ell_norm_sq() is None


def test_plane_wave_tensor():
    sc = get_scenario("torus2-flat")
    rep = spinc_jet(sc, np.zeros(2)).rep
    M = 1j * rep.gammas[0]
    w, vec = np.linalg.eigh(M)
    f = plane_wave([1.0, 0.0], vec[:, 1])
    v = em.em_tensor(f, sc, np.array([0.4, 0.9]))
    assert v.T[0, 0] == pytest.approx(w[1], abs=1e-9)
    assert abs(v.T[1, 1]) < 1e-9 and abs(v.T[0, 1]) < 1e-9


@pytest.mark.parametrize("sign", [-1, 1])
def test_sphere_killing_spinor(sign):
    sc = get_scenario("sphere2-unit")
    phi = sphere_killing_spinor(np.array([1.0, 0.5j]) / np.sqrt(1.25), sign)
    F = lambda x: sign * np.eye(2)
    pts = sc.sample(np.random.default_rng(3), 4)
    assert em.max_killing_residual(phi, F, sc, pts) < 1e-7
    # nabla_X phi = F(X).phi / 2 with e_a.e_a = -1 gives ell = -F/2
    v = em.em_tensor(phi, sc, pts[0])
    assert np.allclose(v.ell, -0.5 * sign * np.eye(2), atol=1e-7)
    assert em.killing_em_defect(v, sign * np.eye(2), np.ones(2)) < 1e-7


def test_codazzi():
    sc = get_scenario("sphere2-unit")
    pts = sc.sample(np.random.default_rng(0), 3)
    assert em.max_codazzi_residual(lambda x: np.eye(2), sc, pts) < 1e-8
    flat = get_scenario("torus2-flat")
    bad = lambda x: np.array([[np.sin(x[1]), 0.0], [0.0, 0.0]])
    assert em.max_codazzi_residual(bad, flat, flat.sample(np.random.default_rng(0), 3)) > 1e-3


def test_killing_rejects_asymmetric_F():
    sc = get_scenario("torus2-flat")
    with pytest.raises(ValueError):
        em.killing_residual(constant_field([1, 0]), lambda x: np.array([[0, 1.0], [0, 0]]), sc,
                            np.zeros(2), 0)


def test_csv(tmp_path):
    sc = get_scenario("torus2-flat")
    vals = [em.em_tensor(constant_field([1, 0]), sc, np.array([0.1 * i, 0.0])) for i in range(3)]
    p = tmp_path / "em.csv"
    em.write_em_csv(vals, str(p))
    lines = p.read_text().splitlines()
    assert len(lines) == 4
