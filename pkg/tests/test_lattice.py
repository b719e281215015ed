import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinc_lab import lattice as lat
from spinc_lab.scenarios import get_scenario


@pytest.fixture(scope="module")
def magnetic():
    return get_scenario("torus2-magnetic", flux=3)


def test_grid_basics():
    g = lat.LatticeGrid(get_scenario("torus2-flat"), (8, 10))
    assert g.sites == 80 and g.n == 2
    assert np.allclose(g.spacing, 2 * np.pi / np.array([8, 10]))
    # raster order: last axis fastest
    assert np.allclose(g.coords()[1], [0.0, g.spacing[1]])
    assert np.array_equal(g.shift_index(0, 1)[g.shift_index(0, -1)], np.arange(80))


def test_integration_is_exact_for_trig():
    g = lat.LatticeGrid(get_scenario("torus2-flat"), (12, 12))
    X = g.coords()
    assert lat.integrate(np.sin(X[:, 0]) ** 2, g) == pytest.approx(2 * np.pi ** 2, rel=1e-13)


@pytest.mark.parametrize("q", [0, 1, 3, -2])
def test_plaquette_flux_is_integer(q):
    g = lat.LatticeGrid(get_scenario("torus2-magnetic", flux=q), (10, 10))
    assert g.plaquette_flux() == pytest.approx(q, abs=1e-10)


@pytest.mark.parametrize("name", ["torus2-flat", "torus2-perturbed", "torus2-magnetic", "torus1-flat", "torus3-flat"])
def test_hermitian(name):
    sc = get_scenario(name)
    N = 8 if sc.dim == 3 else 12
    assert lat.assemble_dirac(sc, N).hermiticity_defect() < 1e-10


def test_flat_spectrum_matches_fourier():
    sc = get_scenario("torus2-flat")
    ev = lat.spectrum(lat.assemble_dirac(sc, 16), 10).eigenvalues
    orc = lat.fourier_oracle(sc.upper - sc.lower)
    assert np.max(np.abs(np.sort(np.abs(ev)) - np.sort(np.abs(orc))[:10])) < 0.02
    assert np.sum(np.abs(ev) < 1e-10) == 2


def test_flat_convergence_ratio():
    sc = get_scenario("torus2-flat")
    orc = np.sort(np.abs(lat.fourier_oracle(sc.upper - sc.lower)))[:8]
    err = [np.max(np.abs(np.sort(np.abs(lat.spectrum(lat.assemble_dirac(sc, N), 8).eigenvalues)) - orc))
           for N in (16, 32)]
    assert 3.5 <= err[0] / err[1] <= 4.5


def test_circle_doubled_integers():
    sc = get_scenario("torus1-flat")
    ev = np.sort(lat.spectrum(lat.assemble_dirac(sc, 64)).eigenvalues)
    small = np.sort(np.abs(ev))[:6]
    # naive doubling: every integer appears twice
    assert np.allclose(small, [0, 0, 1, 1, 1, 1], atol=5e-3)


def test_magnetic_zero_modes_and_level(magnetic):
    res = lat.spectrum(lat.assemble_dirac(magnetic, 24), 8, vectors=True)
    ev = res.eigenvalues
    assert np.sum(np.abs(ev) <= 0.05) == 3
    excited = ev[np.abs(ev) > 0.05]
    assert np.min(excited ** 2) == pytest.approx(magnetic.reference["first_excited_sq"], rel=0.05)
    w = res.eigenvectors.conj() * lat.assemble_dirac(magnetic, 24).weight_vector()[:, None]
    gram = w.T @ res.eigenvectors
    assert np.allclose(gram, np.eye(8), atol=1e-10)


def test_flux_reversal_mirrors_spectrum():
    a = lat.spectrum(lat.assemble_dirac(get_scenario("torus2-magnetic", flux=2), 12)).eigenvalues
    b = lat.spectrum(lat.assemble_dirac(get_scenario("torus2-magnetic", flux=-2), 12)).eigenvalues
    assert np.allclose(np.sort(a), np.sort(-b), atol=1e-10)


@settings(max_examples=6)
@given(st.integers(0, 2 ** 31 - 1))
def test_gauge_invariance(seed):
    sc = get_scenario("torus2-magnetic", flux=1)
    g = lat.LatticeGrid(sc, (8, 8))
    theta = np.random.default_rng(seed).uniform(0, 2 * np.pi, g.sites)
    U = lat.gauge_transform(g.links(), g, theta)
    a = lat.spectrum(lat.assemble_dirac(sc, 8)).eigenvalues
    b = lat.spectrum(lat.assemble_dirac(sc, 8, links=U)).eigenvalues
    assert np.max(np.abs(a - b)) < 1e-10


def test_sparse_solver_agrees_with_dense(monkeypatch, magnetic):
    D = lat.assemble_dirac(magnetic, 16)
    dense = lat.spectrum(D, 6).eigenvalues
    monkeypatch.setattr(lat, "DENSE_LIMIT", 10)
    sparse = lat.spectrum(D, 6)
    assert sparse.solver != "dense"
    assert np.allclose(dense, sparse.eigenvalues, atol=1e-8)


def test_two_grid_estimate():
    res = lat.two_grid_spectrum(get_scenario("torus2-perturbed"), 16, 6)
    assert res.convergence is not None and np.all(np.isfinite(res.convergence))
    assert np.max(res.convergence) < 0.05


def test_em_trace_equals_dirac_part():
    sc = get_scenario("torus2-perturbed")
    D = lat.assemble_dirac(sc, 12)
    res = lat.spectrum(D, 4, vectors=True)
    psi = res.eigenvectors[:, 3]
    T = lat.lattice_em_tensor(D, psi)
    tr = sum(w * np.trace(v.T) for w, v in zip(D.weights, T))
    assert tr == pytest.approx(lat.dirac_part_expectation(D, psi), abs=1e-12)


def test_dump_operator(tmp_path):
    D = lat.assemble_dirac(get_scenario("torus2-flat"), 8)
    p = tmp_path / "op.bin"
    D.dump(str(p))
    raw = np.fromfile(p, dtype="<f8")
    back = (raw[0::2] + 1j * raw[1::2]).reshape(D.dim, D.dim)
    assert np.array_equal(back, D.matrix.toarray())


def test_unknown_stabilizer():
    with pytest.raises(lat.LatticeError):
        lat.assemble_dirac(get_scenario("torus2-flat"), 8, stabilizer="bogus")
