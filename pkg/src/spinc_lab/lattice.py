"""Lattice Dirac operators on flat and perturbed tori with U(1) flux.

Sites are ordered in C (raster) order; a global vector stores the spinor
components of each site contiguously: index = site * d + a.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .clifford import GammaRep, build_gamma_rep, two_form_matrix
from .emtensor import EMTensorValue, NORM_FLOOR
from .geometry import Scenario, jet_from_metric, orthonormal_frame
from .spinc import connection_matrices

DENSE_LIMIT = 4096
SPARSE_PADDING = 8
HERMITICITY_TOL = 1e-10


class LatticeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LatticeGrid:
    scenario: Scenario
    dims: tuple
    t: Optional[float] = None

    def __post_init__(self):
        sc = self.scenario
        if not all(sc.periodic):
            raise LatticeError(f"{sc.name} is not a torus scenario")
        if sc.signature.s != 0:
            raise LatticeError("lattice backend needs a Riemannian signature")
        if len(self.dims) != sc.dim or min(self.dims) < 8:
            raise LatticeError("grid needs one count >= 8 per axis")

    @property
    def n(self) -> int:
        return self.scenario.dim

    @property
    def periods(self) -> np.ndarray:
        return self.scenario.upper - self.scenario.lower

    @property
    def spacing(self) -> np.ndarray:
        return self.periods / np.asarray(self.dims)

    @property
    def sites(self) -> int:
        return int(np.prod(self.dims))

    def coords(self) -> np.ndarray:
        """Site coordinates, shape (sites, n)."""
        axes = [self.scenario.lower[i] + self.spacing[i] * np.arange(self.dims[i]) for i in range(self.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def metric_fn(self):
        if self.t is None:
            return self.scenario.metric
        fam = self.scenario.family
        t = self.t
        return lambda x: np.asarray(fam(t, np.asarray(x, dtype=float)), dtype=float)

    def metric_samples(self) -> np.ndarray:
        g = self.metric_fn()
        return np.stack([g(x) for x in self.coords()])

    def weights(self) -> np.ndarray:
        """sqrt(det g) times the coordinate cell volume."""
        g = self.metric_samples()
        return np.sqrt(np.linalg.det(g)) * float(np.prod(self.spacing))

    def shift_index(self, axis: int, step: int) -> np.ndarray:
        idx = np.arange(self.sites).reshape(self.dims)
        return np.roll(idx, -step, axis=axis).ravel()

    def links(self) -> np.ndarray:
        """U[mu, site] for the edge site -> site + mu (effective connection a/2)."""
        sc = self.scenario
        U = np.ones((self.n, self.sites), dtype=complex)
        X = self.coords()
        h = self.spacing
        if sc.flux is not None:
            if self.n != 2:
                raise LatticeError("flux scenarios are two-dimensional")
            L1, L2 = self.periods
            B = 2.0 * np.pi * sc.flux / (L1 * L2)  # field seen by spinors
            x1, x2 = X[:, 0], X[:, 1]
            U[1] = np.exp(1j * B * x1 * h[1])
            seam = np.isclose(x1, sc.lower[0] + (self.dims[0] - 1) * h[0])
            U[0] = np.where(seam, np.exp(-1j * B * L1 * x2), 1.0)
        elif sc.connection_fn is not None:
            for mu in range(self.n):
                mid = X.copy()
                mid[:, mu] += 0.5 * h[mu]
                a = np.array([sc.connection(x)[mu] for x in mid])
                U[mu] = np.exp(0.5j * a * h[mu])
        return U

    def plaquette_flux(self) -> float:
        """Sum of plaquette angles over the (0,1) plane divided by 2 pi."""
        U = self.links()
        s0, s1 = self.shift_index(0, 1), self.shift_index(1, 1)
        plaq = U[0] * U[1][s0] * np.conj(U[0][s1]) * np.conj(U[1])
        return float(np.sum(np.angle(plaq)) / (2 * np.pi))


def gauge_transform(U: np.ndarray, grid: LatticeGrid, theta: np.ndarray) -> np.ndarray:
    """U_mu(x) -> e^{i theta(x)} U_mu(x) e^{-i theta(x+mu)}."""
    out = U.copy()
    for mu in range(grid.n):
        out[mu] = np.exp(1j * theta) * U[mu] * np.exp(-1j * theta[grid.shift_index(mu, 1)])
    return out


@dataclass(frozen=True, eq=False)
class DiracMatrix:
    grid: LatticeGrid
    rep: GammaRep
    matrix: sp.csr_matrix  # symmetrized operator, Hermitian for the w-inner product
    weights: np.ndarray  # per site
    nabla: tuple  # raw covariant difference operators per frame direction
    raw: sp.csr_matrix  # Dirac part before symmetrization
    stabilizer: sp.csr_matrix
    rho: float = 1.0

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def weight_vector(self) -> np.ndarray:
        return np.repeat(self.weights, self.rep.dim)

    def hermiticity_defect(self, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        w = self.weight_vector()
        a = rng.normal(size=self.dim) + 1j * rng.normal(size=self.dim)
        b = rng.normal(size=self.dim) + 1j * rng.normal(size=self.dim)
        lhs = np.vdot(self.matrix @ a, w * b)
        rhs = np.vdot(a, w * (self.matrix @ b))
        return float(abs(lhs - rhs) / max(1.0, abs(lhs)))

    def dump(self, path: str) -> None:
        """Dense operator as little-endian f64 interleaved re/im, row-major."""
        dense = self.matrix.toarray()
        np.ascontiguousarray(dense).astype("<c16").view("<f8").tofile(path)


def _central_difference(grid: LatticeGrid, U: np.ndarray, mu: int, order: int = 2) -> sp.csr_matrix:
    """Gauge-covariant central difference; order 4 uses two-link products for the far points."""
    n = grid.sites
    fwd, bwd = grid.shift_index(mu, 1), grid.shift_index(mu, -1)
    rows = np.concatenate((np.arange(n), np.arange(n)))
    cols = np.concatenate((fwd, bwd))
    up, dn = U[mu], np.conj(U[mu][bwd])
    if order == 2:
        vals = np.concatenate((up, -dn)) / (2.0 * grid.spacing[mu])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    if order != 4:
        raise LatticeError(f"stencil order must be 2 or 4, got {order}")
    up2, dn2 = up * U[mu][fwd], dn * np.conj(U[mu][bwd][bwd])
    rows = np.concatenate((rows, rows))
    cols = np.concatenate((cols, fwd[fwd], bwd[bwd]))
    vals = np.concatenate((8 * up, -8 * dn, -up2, dn2)) / (12.0 * grid.spacing[mu])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _laplacian(grid: LatticeGrid, U: np.ndarray, weight=None) -> sp.csr_matrix:
    """Gauge-covariant nearest-neighbour Laplacian, axis mu scaled by weight[mu]."""
    n = grid.sites
    wt = np.ones(grid.n) if weight is None else np.asarray(weight, dtype=float)
    out = sp.csr_matrix((n, n), dtype=complex)
    for mu in range(grid.n):
        fwd, bwd = grid.shift_index(mu, 1), grid.shift_index(mu, -1)
        rows = np.concatenate((np.arange(n),) * 3)
        cols = np.concatenate((fwd, bwd, np.arange(n)))
        vals = np.concatenate((U[mu], np.conj(U[mu][bwd]), -2.0 * np.ones(n)))
        out = out + sp.csr_matrix((vals, (rows, cols)), shape=(n, n)) * (wt[mu] / grid.spacing[mu] ** 2)
    return out


def _gauge_curvature_term(grid: LatticeGrid, U: np.ndarray, rep: GammaRep, frames) -> sp.csr_matrix:
    """Per-site h/2-weighted i(F/2). term that cancels the Laplacian on harmonic spinors.

    F is read off the plaquette angles of the links (the links carry a/2, so
    the plaquette field is Omega/2).
    """
    blocks = np.zeros((grid.sites, rep.dim, rep.dim), dtype=complex)
    h = grid.spacing
    for mu in range(grid.n):
        for nu in range(mu + 1, grid.n):
            smu, snu = grid.shift_index(mu, 1), grid.shift_index(nu, 1)
            plaq = U[mu] * U[nu][smu] * np.conj(U[mu][snu]) * np.conj(U[nu])
            f = np.angle(plaq) / (h[mu] * h[nu])
            # average the four plaquettes around each site
            bmu, bnu = grid.shift_index(mu, -1), grid.shift_index(nu, -1)
            f = 0.25 * (f + f[bmu] + f[bnu] + f[bmu][bnu])
            if not np.any(f):
                continue
            scale = 0.5 * (h[mu] + h[nu]) / 2.0
            for s in range(grid.sites):
                F = np.zeros((grid.n, grid.n))
                F[mu, nu], F[nu, mu] = f[s], -f[s]
                Ff = frames[s].T @ F @ frames[s]
                blocks[s] += scale * 1j * two_form_matrix(rep, Ff)
    return sp.block_diag(list(blocks), format="csr")


def _site_geometry(grid: LatticeGrid, rep: GammaRep, flat: bool):
    """Per-site frames and spin-connection matrices (zero for constant metrics)."""
    X = grid.coords()
    gfn = grid.metric_fn()
    frames = np.empty((grid.sites, grid.n, grid.n))
    spin = np.zeros((grid.n, grid.sites, rep.dim, rep.dim), dtype=complex)
    zero_a = np.zeros(grid.n)
    for s, x in enumerate(X):
        if flat:
            frames[s] = orthonormal_frame(gfn(x), grid.scenario.signature)[0]
            continue
        jet = jet_from_metric(gfn, x, grid.scenario.signature, curvature=False)
        frames[s] = jet.frame
        for k, m in enumerate(connection_matrices(jet, rep, zero_a)):
            spin[k, s] = m
    return frames, spin


def _is_constant_metric(grid: LatticeGrid) -> bool:
    g = grid.metric_samples()
    return bool(np.max(np.abs(g - g[0])) == 0.0)


def assemble_dirac(scenario: Scenario, dims, t: Optional[float] = None, *, rho: float = 1.0,
                   stabilizer: str = "wilson", links: Optional[np.ndarray] = None,
                   order: int = 2) -> DiracMatrix:
    """Covariant central differences + site spin connection, then w-symmetrized.

    ``stabilizer`` selects the doubler-suppressing term, multiplied by the
    volume element when n is even so that it adds in quadrature:
    "wilson" is rho h/2 (-Delta + i F.) with F the link curvature,
    "plain-wilson" drops the curvature part, "quartic" is rho h^3/8 Delta^2
    (experimental), "none" adds nothing and is what odd n gets.
    """
    if isinstance(dims, int):
        dims = (dims,) * scenario.dim
    grid = LatticeGrid(scenario, tuple(int(d) for d in dims), t)
    rep = build_gamma_rep(scenario.signature)
    d = rep.dim
    U = grid.links() if links is None else links
    flat = _is_constant_metric(grid)
    frames, spin = _site_geometry(grid, rep, flat)
    eye_d = sp.identity(d, format="csr")
    diffs = [sp.kron(_central_difference(grid, U, mu, order), eye_d, format="csr") for mu in range(grid.n)]
    nabla = []
    for j in range(grid.n):
        op = sum(sp.kron(sp.diags(frames[:, mu, j]), eye_d) @ diffs[mu] for mu in range(grid.n))
        if not flat:
            op = op + sp.block_diag(list(spin[j]), format="csr")
        nabla.append(sp.csr_matrix(op))
    raw = sum(sp.kron(sp.identity(grid.sites), sp.csr_matrix(rep.gammas[j])) @ nabla[j]
              for j in range(grid.n))
    raw = sp.csr_matrix(raw)
    lap = sp.kron(_laplacian(grid, U), eye_d, format="csr")
    twisted = grid.n % 2 == 0
    if stabilizer == "wilson" and not twisted:
        # no element anticommutes with D in odd dimension, so any scalar mass
        # creates spurious zero crossings; keep the doubled naive spectrum
        stabilizer = "none"
    if stabilizer in ("wilson", "plain-wilson"):
        stab = -sp.kron(_laplacian(grid, U, weight=0.5 * rho * grid.spacing), eye_d, format="csr")
        if stabilizer == "wilson":
            stab = stab + rho * _gauge_curvature_term(grid, U, rep, frames)
    elif stabilizer == "quartic":
        hbar = float(np.max(grid.spacing))
        stab = rho * hbar ** 3 / 8.0 * (lap @ lap)
    elif stabilizer == "none":
        stab = sp.csr_matrix(raw.shape, dtype=complex)
    else:
        raise LatticeError(f"unknown stabilizer {stabilizer!r}")
    if twisted and stabilizer != "none":
        stab = stab @ sp.kron(sp.identity(grid.sites), sp.csr_matrix(rep.volume))
    w_site = grid.weights()
    w = np.repeat(w_site, d)
    total = raw + stab
    sym = 0.5 * (total + sp.diags(1.0 / w) @ total.conj().T @ sp.diags(w))
    return DiracMatrix(grid, rep, sp.csr_matrix(sym), w_site, tuple(nabla), raw,
                       sp.csr_matrix(stab), rho)


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray]  # columns, w-normalized
    dims: tuple
    convergence: Optional[np.ndarray] = None
    solver: str = "dense"

    def lowest_abs(self, k: int) -> np.ndarray:
        order = np.argsort(np.abs(self.eigenvalues), kind="stable")[:k]
        return np.sort(self.eigenvalues[order])


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k]) if v[k] != 0 else v


def spectrum(D: DiracMatrix, count: Optional[int] = None, *, vectors: bool = False) -> SpectrumResult:
    """Ascending eigenvalues of the w-Hermitian operator; ``count`` keeps the smallest |lambda|."""
    sw = np.sqrt(D.weight_vector())
    A = sp.diags(sw) @ D.matrix @ sp.diags(1.0 / sw)
    solver = "dense"
    if D.dim <= DENSE_LIMIT or (count is not None and count >= D.dim - 1):
        H = A.toarray()
        H = 0.5 * (H + H.conj().T)
        if vectors:
            vals, vecs = sla.eigh(H)
        else:
            vals, vecs = sla.eigh(H, eigvals_only=True), None
    else:
        if count is None:
            raise LatticeError("iterative solver needs an eigenvalue count")
        solver = "shift-invert"
        H = sp.csc_matrix(0.5 * (A + A.conj().T))
        try:
            # padding so that degenerate clusters at the cut are resolved whole
            k = min(D.dim - 2, count + SPARSE_PADDING)
            vals, vecs = spla.eigsh(H, k=k, sigma=0.0, which="LM", tol=1e-12,
                                    v0=np.ones(D.dim, dtype=complex))
        except (spla.ArpackNoConvergence, RuntimeError) as exc:
            raise LatticeError(f"eigensolver did not converge: {exc}; dim={D.dim}, "
                               f"nnz={H.nnz}") from exc
    if count is not None:
        keep = np.argsort(np.abs(vals), kind="stable")[:count]
        keep = keep[np.argsort(vals[keep], kind="stable")]
        vals = vals[keep]
        vecs = None if vecs is None else vecs[:, keep]
    else:
        order = np.argsort(vals, kind="stable")
        vals = vals[order]
        vecs = None if vecs is None else vecs[:, order]
    if vectors and vecs is not None:
        vecs = vecs / sw[:, None]
        vecs = np.stack([_fix_phase(vecs[:, i]) for i in range(vecs.shape[1])], axis=1)
    else:
        vecs = None
    return SpectrumResult(np.asarray(vals, dtype=float), vecs, D.grid.dims, None, solver)


def two_grid_spectrum(scenario: Scenario, N: int, count: int, t: Optional[float] = None,
                      **kw) -> SpectrumResult:
    """Spectrum at N with the Richardson error estimate |lam_N - lam_{N/2}| / 3."""
    if N // 2 < 8:
        raise LatticeError(f"two-grid estimate needs N >= 16 (coarse grid N/2 >= 8), got N={N}")
    fine = spectrum(assemble_dirac(scenario, N, t, **kw), count, vectors=True)
    coarse = spectrum(assemble_dirac(scenario, N // 2, t, **kw), count)
    est = np.abs(fine.eigenvalues - coarse.eigenvalues) / 3.0
    return SpectrumResult(fine.eigenvalues, fine.eigenvectors, fine.dims, est, fine.solver)


def integrate(samples, grid: LatticeGrid, weights: Optional[np.ndarray] = None) -> float:
    samples = np.asarray(samples)
    w = grid.weights() if weights is None else weights
    if samples.shape[0] != w.shape[0]:
        raise LatticeError("sample count does not match the grid")
    return float(np.real(np.sum(w * samples)))


def inner_product(psi, phi, grid: LatticeGrid, weights: Optional[np.ndarray] = None) -> float:
    """int Re<psi, phi> dv (Riemannian, so the spinor form is the identity)."""
    return float(np.real(complex_inner_product(psi, phi, grid, weights)))


def complex_inner_product(psi, phi, grid: LatticeGrid, weights: Optional[np.ndarray] = None) -> complex:
    psi = np.asarray(psi).reshape(grid.sites, -1)
    phi = np.asarray(phi).reshape(grid.sites, -1)
    if psi.shape != phi.shape:
        raise LatticeError("spinor shapes differ")
    w = grid.weights() if weights is None else weights
    return complex(np.sum(w * np.sum(np.conj(psi) * phi, axis=1)))


def lattice_em_tensor(D: DiracMatrix, psi) -> list[EMTensorValue]:
    """Per-site T_psi from the same difference stencil as the Dirac part of D."""
    if psi is None:
        raise LatticeError("eigenvectors were not computed")
    d, n = D.rep.dim, D.grid.n
    psi = np.asarray(psi)
    nab = [np.asarray(D.nabla[j] @ psi).reshape(-1, d) for j in range(n)]
    ps = psi.reshape(-1, d)
    gam = D.rep.gammas
    q = np.empty((ps.shape[0], n, n))
    for a in range(n):
        for b in range(n):
            q[:, a, b] = np.real(np.sum(np.conj(nab[b] @ gam[a].T) * ps, axis=1))
    T = 0.5 * (q + np.swapaxes(q, 1, 2))
    nsq = np.real(np.sum(np.conj(ps) * ps, axis=1))
    floor = NORM_FLOOR * float(np.max(nsq))
    X = D.grid.coords()
    return [EMTensorValue(X[s], T[s], float(nsq[s]), T[s] / nsq[s] if nsq[s] >= floor else None)
            for s in range(ps.shape[0])]


def dirac_part_expectation(D: DiracMatrix, psi) -> float:
    """Re<D_raw psi, psi>_w, the quantity reproduced by the weighted EM trace."""
    w = D.weight_vector()
    return float(np.real(np.vdot(D.raw @ psi, w * psi)))


def fourier_oracle(periods, metric=None, kmax: int = 6, dim: int = 2) -> np.ndarray:
    """Exact flat-torus Dirac spectrum +-|p|_g over the dual lattice (spin structure trivial)."""
    periods = np.asarray(periods, dtype=float)
    n = periods.size
    ginv = np.linalg.inv(np.eye(n) if metric is None else np.asarray(metric))
    rng = np.arange(-kmax, kmax + 1)
    ks = np.stack(np.meshgrid(*([rng] * n), indexing="ij"), axis=-1).reshape(-1, n)
    p = 2 * np.pi * ks / periods
    mags = np.sqrt(np.einsum("ki,ij,kj->k", p, ginv, p))
    if n == 1:
        # one spinor component: the eigenvalue is a signed multiple of p
        return np.sort(p[:, 0])
    half = dim // 2
    return np.sort(np.concatenate([np.repeat(mags, half), -np.repeat(mags, half)]))
