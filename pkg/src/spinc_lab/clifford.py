"""Matrix representations of the complex Clifford algebras Cl_{r,s}.

Signature ordering: the first ``r`` basis vectors square (under the inner
product) to +1 and satisfy ``e_j . e_j = -1`` in the algebra; the last ``s``
square to -1 in the inner product and ``e_j . e_j = +1`` in the algebra.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache, reduce
from itertools import combinations
from typing import Optional

import numpy as np

MAX_DIM = 12
ALG_TOL = 1e-13

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_I2 = np.eye(2, dtype=complex)


class CliffordError(ValueError):
    pass


def ipow(k: int) -> complex:
    """Exact integer powers of i (negative exponents allowed)."""
    return (1, 1j, -1, -1j)[k % 4]


@dataclass(frozen=True)
class Signature:
    r: int
    s: int

    def __post_init__(self):
        if self.r < 0 or self.s < 0 or self.r + self.s < 1:
            raise CliffordError(f"invalid signature ({self.r},{self.s})")

    @property
    def n(self) -> int:
        return self.r + self.s

    @property
    def m(self) -> int:
        return self.n // 2

    @property
    def spinor_dim(self) -> int:
        return 2 ** self.m

    @property
    def eps(self) -> np.ndarray:
        """Inner-product signs of the orthonormal basis vectors."""
        return np.array([1.0] * self.r + [-1.0] * self.s)

    def raised(self) -> "Signature":
        """Signature of a hypersurface's ambient space (spacelike normal)."""
        return Signature(self.r + 1, self.s)


@dataclass(frozen=True, eq=False)
class GammaRep:
    signature: Signature
    gammas: tuple
    volume: np.ndarray
    form: np.ndarray
    chirality_projectors: Optional[tuple] = None
    negated: bool = False

    @property
    def dim(self) -> int:
        return self.signature.spinor_dim

    @property
    def n(self) -> int:
        return self.signature.n

    def gamma_of(self, v) -> np.ndarray:
        """Matrix of Clifford multiplication by sum_j v_j e_j."""
        v = np.asarray(v)
        return np.tensordot(v, np.asarray(self.gammas), axes=(0, 0))

    def to_json(self) -> str:
        def enc(a):
            a = np.asarray(a)
            return [[[float(z.real), float(z.imag)] for z in row] for row in a]

        payload = {
            "signature": [self.signature.r, self.signature.s],
            "gammas": [enc(g) for g in self.gammas],
            "volume": enc(self.volume),
            "form": enc(self.form),
        }
        return json.dumps(payload, sort_keys=True)


def _kron_all(mats):
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def _hermitian_generators(n: int) -> list[np.ndarray]:
    """n mutually anticommuting Hermitian involutions of size 2^(n//2)."""
    m = n // 2
    out = []
    for k in range(m):
        head = [_SZ] * k
        tail = [_I2] * (m - k - 1)
        out.append(_kron_all(head + [_SX] + tail))
        out.append(_kron_all(head + [_SY] + tail))
    if n % 2:
        out.append(_kron_all([_SZ] * m))
    return out


def _volume(gammas, sig: Signature) -> np.ndarray:
    m, s, n = sig.m, sig.s, sig.n
    phase = ipow(m - s) if n % 2 == 0 else ipow(m - 1 + s)
    return phase * reduce(np.matmul, gammas)


def _leading_entry(a: np.ndarray, tol: float = 1e-12) -> complex:
    flat = a.ravel()
    idx = np.flatnonzero(np.abs(flat) > tol)
    return complex(flat[idx[0]]) if idx.size else 0.0


def _clean(a: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.real[np.abs(a.real) < tol] = 0.0
    a.imag[np.abs(a.imag) < tol] = 0.0
    return a


def _solve_invariant_form(gammas, sig: Signature, volume) -> np.ndarray:
    d = gammas[0].shape[0]
    sign = (-1) ** (sig.s + 1)
    eye = np.eye(d, dtype=complex)
    prod_t = reduce(np.matmul, gammas[sig.r:], eye)
    prod_s = reduce(np.matmul, gammas[: sig.r], eye)
    raw = [eye, volume, prod_t, prod_s, prod_t @ volume, prod_s @ volume]
    cands: list[np.ndarray] = []
    for c in raw:
        basis = np.array([b.ravel() for b in cands]) if cands else np.zeros((0, d * d))
        v = c.ravel()
        if basis.size:
            coef, *_ = np.linalg.lstsq(basis.T, v, rcond=None)
            if np.linalg.norm(basis.T @ coef - v) < 1e-10 * np.linalg.norm(v):
                continue
        cands.append(c)
    cols = []
    for c in cands:
        cols.append(np.concatenate([(g.conj().T @ c - sign * c @ g).ravel() for g in gammas]))
    mat = np.array(cols).T
    _, sv, vh = np.linalg.svd(mat)
    if sv[-1] > 1e-10 * max(1.0, sv[0]):
        raise CliffordError(f"no invariant form in candidate span for {sig}")
    coef = vh[-1].conj()
    b = sum(c_ * m_ for c_, m_ in zip(coef, cands))
    herm = b + b.conj().T
    if np.max(np.abs(herm)) < 1e-10:
        herm = 1j * (b - b.conj().T)
    lead = _leading_entry(herm)
    herm = herm / (np.sign(lead.real) if abs(lead.real) > 1e-12 else np.sign(lead.imag))
    herm = herm / np.max(np.abs(herm))
    return _clean(herm)


@lru_cache(maxsize=None)
def _cached_rep(r: int, s: int, other: bool) -> GammaRep:
    sig = Signature(r, s)
    if sig.n > MAX_DIM:
        raise CliffordError(f"dimension {sig.n} exceeds cap {MAX_DIM}")
    herm = _hermitian_generators(sig.n)
    gammas = [1j * h for h in herm]
    gammas = [g if j < r else 1j * g for j, g in enumerate(gammas)]
    negated = False
    if sig.n % 2:
        vol = _volume(gammas, sig)
        target = -1.0 if other else 1.0
        if abs(vol[0, 0] - target) > 1e-12:
            gammas = [-g for g in gammas]
            negated = True
    gammas = [_clean(g) for g in gammas]
    for g in gammas:
        g.setflags(write=False)
    vol = _clean(_volume(gammas, sig))
    form = _solve_invariant_form(gammas, sig, vol)
    proj = None
    if sig.n % 2 == 0:
        eye = np.eye(sig.spinor_dim, dtype=complex)
        proj = ((eye + vol) / 2, (eye - vol) / 2)
    return GammaRep(sig, tuple(gammas), vol, form, proj, negated)


def build_gamma_rep(sig: Signature, other: bool = False) -> GammaRep:
    """Deterministic irreducible representation of Cl_{r,s}.

    For odd n the representation on which the complex volume element acts
    as +I is returned; ``other=True`` gives the inequivalent one (all
    generators negated).
    """
    return _cached_rep(sig.r, sig.s, bool(other))


def volume_element(rep: GammaRep) -> np.ndarray:
    return _volume(list(rep.gammas), rep.signature)


def invariant_form(rep: GammaRep) -> np.ndarray:
    return rep.form


def clifford_action(rep: GammaRep, v, sigma) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[0] != rep.n:
        raise CliffordError("vector length does not match signature")
    return rep.gamma_of(v) @ np.asarray(sigma)


def two_form_matrix(rep: GammaRep, omega) -> np.ndarray:
    """Clifford matrix of a 2-form given by its orthonormal-frame components.

    ``omega[i, j] = Omega(e_i, e_j)``; the form equals
    sum_{i<j} eps_i eps_j Omega(e_i,e_j) e_i ^ e_j, so in the Riemannian case
    this is sum_{i<j} Omega_ij e_i e_j.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (rep.n, rep.n) or np.max(np.abs(omega + omega.T), initial=0.0) > 1e-12:
        raise CliffordError("two-form must be an antisymmetric n x n matrix")
    eps = rep.signature.eps
    out = np.zeros((rep.dim, rep.dim), dtype=complex)
    for i, j in combinations(range(rep.n), 2):
        if omega[i, j] != 0.0:
            out += eps[i] * eps[j] * omega[i, j] * (rep.gammas[i] @ rep.gammas[j])
    return out


def two_form_action(rep: GammaRep, omega, sigma) -> np.ndarray:
    return two_form_matrix(rep, omega) @ np.asarray(sigma)


def interior_vector(sig: Signature, omega, x) -> np.ndarray:
    """Frame components (as a vector) of the 1-form X -| Omega."""
    x = np.asarray(x, dtype=float)
    return sig.eps * (x @ np.asarray(omega))


def two_form_norm(omega, sig: Optional[Signature] = None) -> float:
    """|Omega|, with |Omega|^2 = sum_{i<j} Omega(e_i,e_j)^2."""
    omega = np.asarray(omega, dtype=float)
    iu = np.triu_indices(omega.shape[0], 1)
    return float(np.sqrt(np.sum(omega[iu] ** 2)))


def plane_rotor(rep: GammaRep, a: int, b: int, angle: float) -> np.ndarray:
    """Spin lift of the rotation e_a -> cos e_a + sin e_b in a spacelike plane."""
    eye = np.eye(rep.dim, dtype=complex)
    return np.cos(angle / 2) * eye + np.sin(angle / 2) * (rep.gammas[a] @ rep.gammas[b])


@dataclass(frozen=True, eq=False)
class AlphaEmbedding:
    """Identification of the ambient spinor module with the hypersurface one.

    ``images[j]`` is nu.e_j in the ambient representation.  ``basis`` spans
    the ambient subspace used (everything for n even, one chirality block
    for n odd) and ``intertwiner`` maps basis coordinates to base spinors so
    that ``S (basis^H kappa*images[j] basis) S^-1 = gamma_j``.
    """

    base: GammaRep
    ambient: GammaRep
    images: tuple
    basis: np.ndarray
    intertwiner: np.ndarray
    intertwiner_inv: np.ndarray
    kappa: int = 1
    chirality: int = 0
    form_scale: complex = 1.0
    residual: float = 0.0

    def to_base(self, psi) -> np.ndarray:
        return self.intertwiner @ (self.basis.conj().T @ np.asarray(psi))

    def to_ambient(self, phi) -> np.ndarray:
        return self.basis @ (self.intertwiner_inv @ np.asarray(phi))

    def ambient_to_base_matrix(self, mat) -> np.ndarray:
        """Conjugate an ambient endomorphism preserving the block into base coordinates."""
        return self.intertwiner @ self.basis.conj().T @ mat @ self.basis @ self.intertwiner_inv


def _group_average_intertwiner(targets, sources) -> np.ndarray:
    d = targets[0].shape[0]
    n = len(targets)
    words = [()]
    for k in range(1, n + 1):
        words.extend(combinations(range(n), k))
    eye = np.eye(d, dtype=complex)

    def prod(mats, word):
        return reduce(np.matmul, (mats[i] for i in word), eye)

    for seed in range(d * d):
        x = np.zeros((d, d), dtype=complex)
        x.flat[seed] = 1.0
        s = sum(prod(targets, w) @ x @ np.linalg.inv(prod(sources, w)) for w in words)
        if np.max(np.abs(s)) > 1e-8:
            return s
    raise CliffordError("no intertwiner found")


def alpha_embed(rep_n: GammaRep, rep_n1: GammaRep, kappa: int = 1) -> AlphaEmbedding:
    """Images nu.e_j of the base generators inside the ambient algebra.

    ``kappa`` only matters for odd n and fixes the hypersurface
    multiplication X.phi = kappa (nu.X.psi)|_M.  The chirality block is then
    forced: on it the base volume element must act as +I, and since
    omega_{r,s}(nu e_1 ... nu e_n) = (-1)^(s+1) omega_{r+1,s}, the block is
    P^+ when kappa (-1)^(s+1) = +1 and P^- otherwise.
    """
    sig, amb = rep_n.signature, rep_n1.signature
    if amb != sig.raised():
        raise CliffordError(f"ambient signature {amb} is not the raise of {sig}")
    nu = rep_n1.gammas[0]
    images = tuple(nu @ g for g in rep_n1.gammas[1:])
    if sig.n % 2 == 0:
        basis = np.eye(rep_n1.dim, dtype=complex)
        kappa = 1
    else:
        kappa = 1 if kappa >= 0 else -1
        chir = kappa * (-1) ** (sig.s + 1)
        proj = rep_n1.chirality_projectors[0 if chir > 0 else 1]
        vol = rep_n1.volume
        if np.allclose(vol, np.diag(np.diag(vol)), atol=1e-14):
            cols = np.flatnonzero(np.abs(np.diag(proj) - 1) < 1e-12)
            basis = np.eye(rep_n1.dim, dtype=complex)[:, cols]
        else:
            w, v = np.linalg.eigh(proj)
            basis = v[:, w > 0.5]
    blocks = [kappa * basis.conj().T @ a @ basis for a in images]
    s = _group_average_intertwiner(list(rep_n.gammas), blocks)
    s = s / abs(np.linalg.det(s)) ** (1.0 / s.shape[0])
    lead = _leading_entry(s)
    s = s * (abs(lead) / lead)
    # ratio between the base form and the restricted ambient form; zero when
    # the block is null for the ambient form (indefinite, s odd)
    gram = s.conj().T @ rep_n.form @ s
    ref = basis.conj().T @ rep_n1.form @ basis
    denom = np.vdot(ref.ravel(), ref.ravel())
    scale = np.vdot(ref.ravel(), gram.ravel()) / denom if abs(denom) > 1e-12 else 0.0
    s_inv = np.linalg.inv(s)
    res = max(np.max(np.abs(s @ b @ s_inv - g)) for b, g in zip(blocks, rep_n.gammas))
    if res > 1e-10:
        raise CliffordError(f"intertwiner residual {res:.3e}")
    return AlphaEmbedding(rep_n, rep_n1, images, basis, s, s_inv, kappa,
                          chir if sig.n % 2 else 0, complex(scale), float(res))


def anticommutator_residual(rep: GammaRep) -> float:
    """Max entrywise deviation from the Cl_{r,s} relations."""
    eps = rep.signature.eps
    eye = np.eye(rep.dim)
    worst = 0.0
    for j in range(rep.n):
        for k in range(rep.n):
            lhs = rep.gammas[j] @ rep.gammas[k] + rep.gammas[k] @ rep.gammas[j]
            rhs = -2.0 * eps[j] * eye if j == k else 0.0 * eye
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst
