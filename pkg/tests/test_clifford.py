import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinc_lab import clifford as cl


@st.composite
def signatures(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    s = draw(st.integers(0, n))
    return cl.Signature(n - s, s)


def test_ipow_cycle():
    assert [cl.ipow(k) for k in range(-1, 5)] == [-1j, 1, 1j, -1, -1j, 1]


def test_invalid_signature():
    with pytest.raises(cl.CliffordError):
        cl.Signature(0, 0)
    with pytest.raises(cl.CliffordError):
        cl.Signature(-1, 2)


@given(signatures())
def test_relations_and_volume(sig):
    rep = cl.build_gamma_rep(sig)
    assert rep.dim == 2 ** (sig.n // 2)
    assert cl.anticommutator_residual(rep) <= 1e-13
    om = cl.volume_element(rep)
    assert np.max(np.abs(om @ om - np.eye(rep.dim))) <= 1e-13
    for g in rep.gammas:
        if sig.n % 2 == 0:
            assert np.max(np.abs(om @ g + g @ om)) <= 1e-13
        else:
            assert np.max(np.abs(om @ g - g @ om)) <= 1e-13
    if sig.n % 2:
        assert np.allclose(om, np.eye(rep.dim), atol=1e-13)


@given(signatures())
def test_adjoint_rule(sig):
    rep = cl.build_gamma_rep(sig)
    B = cl.invariant_form(rep)
    assert np.allclose(B, B.conj().T, atol=1e-13)
    assert abs(np.linalg.det(B)) > 1e-8
    sign = (-1) ** (sig.s + 1)
    for g in rep.gammas:
        assert np.max(np.abs(g.conj().T @ B - sign * B @ g)) <= 1e-13


@given(st.integers(1, 8))
def test_riemannian_form_is_identity(n):
    rep = cl.build_gamma_rep(cl.Signature(n, 0))
    assert np.allclose(rep.form, np.eye(rep.dim))


@given(signatures().filter(lambda s: s.n % 2 == 0))
def test_chirality_interchange(sig):
    rep = cl.build_gamma_rep(sig)
    pp, pm = rep.chirality_projectors
    assert np.allclose(pp + pm, np.eye(rep.dim))
    for g in rep.gammas:
        assert np.allclose(pm @ g @ pp, g @ pp, atol=1e-13)
        assert np.allclose(pp @ g @ pm, g @ pm, atol=1e-13)


def test_volume_examples():
    r20 = cl.build_gamma_rep(cl.Signature(2, 0))
    g1, g2 = r20.gammas
    assert np.allclose(cl.volume_element(r20), 1j * g1 @ g2)
    r11 = cl.build_gamma_rep(cl.Signature(1, 1))
    assert np.allclose(cl.volume_element(r11), r11.gammas[0] @ r11.gammas[1])
    r40 = cl.build_gamma_rep(cl.Signature(4, 0))
    g = r40.gammas
    assert np.allclose(cl.volume_element(r40), -(g[0] @ g[1] @ g[2] @ g[3]))


def test_lorentzian_form_proportional_to_timelike_generator():
    rep = cl.build_gamma_rep(cl.Signature(1, 1))
    B, g2 = rep.form, rep.gammas[1]
    c = np.vdot(g2.ravel(), B.ravel()) / np.vdot(g2.ravel(), g2.ravel())
    assert np.allclose(B, c * g2)


def test_other_odd_rep_is_negated():
    a = cl.build_gamma_rep(cl.Signature(3, 0))
    b = cl.build_gamma_rep(cl.Signature(3, 0), other=True)
    assert all(np.allclose(x, -y) for x, y in zip(a.gammas, b.gammas))
    assert np.allclose(cl.volume_element(b), -np.eye(2))


@pytest.mark.parametrize("r,s", [(2, 0), (3, 0), (1, 1), (2, 1), (4, 0), (3, 1)])
@pytest.mark.parametrize("kappa", [1, -1])
def test_alpha_embedding_reproduces_base(r, s, kappa):
    base = cl.build_gamma_rep(cl.Signature(r, s))
    amb = cl.build_gamma_rep(cl.Signature(r + 1, s))
    al = cl.alpha_embed(base, amb, kappa)
    assert al.residual <= 1e-12
    for img, g in zip(al.images, base.gammas):
        blk = al.kappa * al.basis.conj().T @ img @ al.basis
        assert np.allclose(al.intertwiner @ blk @ al.intertwiner_inv, g, atol=1e-12)
    phi = np.arange(1, base.dim + 1) + 0.5j
    assert np.allclose(al.to_base(al.to_ambient(phi)), phi)


def test_alpha_rejects_wrong_ambient():
    with pytest.raises(cl.CliffordError):
        cl.alpha_embed(cl.build_gamma_rep(cl.Signature(2, 0)), cl.build_gamma_rep(cl.Signature(2, 1)))


@given(st.floats(-5, 5, allow_nan=False))
def test_two_form_eigenvalues(b):
    rep = cl.build_gamma_rep(cl.Signature(2, 0))
    M = cl.two_form_matrix(rep, np.array([[0.0, b], [-b, 0.0]]))
    ev = np.sort_complex(np.linalg.eigvals(M))
    assert np.allclose(np.sort(ev.imag), [-abs(b), abs(b)], atol=1e-12)
    assert np.allclose(ev.real, 0, atol=1e-12)
    assert cl.two_form_norm(np.array([[0.0, b], [-b, 0.0]])) == pytest.approx(abs(b))


def test_two_form_rejects_symmetric():
    rep = cl.build_gamma_rep(cl.Signature(2, 0))
    with pytest.raises(cl.CliffordError):
        cl.two_form_matrix(rep, np.eye(2))


@given(signatures(max_n=5), st.integers(0, 2 ** 31 - 1))
def test_interior_product_identity(sig, seed):
    """2 Omega.psi = sum_j eps_j e_j.(e_j -| Omega).psi in every signature."""
    rep = cl.build_gamma_rep(sig)
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(sig.n, sig.n))
    om = a - a.T
    psi = rng.normal(size=rep.dim) + 1j * rng.normal(size=rep.dim)
    lhs = 2 * cl.two_form_action(rep, om, psi)
    rhs = sum(sig.eps[j] * rep.gammas[j] @ rep.gamma_of(cl.interior_vector(sig, om, np.eye(sig.n)[j])) @ psi
              for j in range(sig.n))
    assert np.allclose(lhs, rhs, atol=1e-10)


@given(st.floats(-np.pi, np.pi, allow_nan=False))
def test_plane_rotor_rotates(angle):
    rep = cl.build_gamma_rep(cl.Signature(3, 0))
    R = cl.plane_rotor(rep, 0, 1, angle)
    assert np.allclose(R.conj().T @ R, np.eye(rep.dim), atol=1e-12)
    rotated = R @ rep.gammas[0] @ np.linalg.inv(R)
    c, s = np.cos(angle), np.sin(angle)
    expected = [rep.gamma_of([c, -s, 0]), rep.gamma_of([c, s, 0])]
    assert any(np.allclose(rotated, e, atol=1e-12) for e in expected)


def test_clifford_action_checks_length():
    rep = cl.build_gamma_rep(cl.Signature(2, 0))
    with pytest.raises(cl.CliffordError):
        cl.clifford_action(rep, [1, 0, 0], [1, 0])
