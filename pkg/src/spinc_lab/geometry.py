"""Chart-based semi-Riemannian geometry: derivatives, frames, curvature.

Curvature convention: R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z,
ric(Y,Z) = sum_j eps_j <R(e_j,Y)Z, e_j>, which gives Scal = +2 on the unit 2-sphere.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .clifford import Signature

FD_STEP = np.finfo(float).eps ** 0.2
FRAME_TOL = 1e-10

# 4th-order central stencil
_OFFSETS = (-2.0, -1.0, 1.0, 2.0)
_WEIGHTS = (1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0)


class ChartBoundaryError(ValueError):
    pass


class DegenerateMetricError(ValueError):
    pass


def _stencil(f, x, axis, h):
    acc = None
    for off, w in zip(_OFFSETS, _WEIGHTS):
        xs = np.array(x, dtype=float)
        xs[axis] += off * h
        val = w * np.asarray(f(xs))
        acc = val if acc is None else acc + val
    return acc / h


def differentiate(f: Callable, x, axis: int, h: Optional[float] = None, *,
                  bounds: Optional[tuple] = None, richardson: bool = False):
    """Partial derivative of an array-valued evaluator along one chart axis.

    Fourth-order central differences with step eps^(1/5) (chart coordinates
    are O(1) in every catalog scenario, so no per-point rescaling);
    ``richardson=True`` combines steps h and h/2 into a sixth-order estimate.
    ``bounds`` is ``(lower, upper, periodic)`` of the chart; points closer
    than the stencil reach to a non-periodic edge raise ChartBoundaryError.
    """
    x = np.asarray(x, dtype=float)
    if h is None:
        h = FD_STEP
    if bounds is not None:
        lower, upper, periodic = bounds
        if not periodic[axis]:
            reach = 2.0 * h
            if x[axis] - reach < lower[axis] or x[axis] + reach > upper[axis]:
                raise ChartBoundaryError(
                    f"point {x.tolist()} within {reach:.2e} of chart edge on axis {axis}")
    d = _stencil(f, x, axis, h)
    if richardson:
        d = (16.0 * _stencil(f, x, axis, h / 2) - d) / 15.0
    return d


def gradient(f: Callable, x, *, bounds=None, h=None):
    """Stack of partial derivatives, leading axis = coordinate direction."""
    x = np.asarray(x, dtype=float)
    return np.stack([differentiate(f, x, k, h, bounds=bounds) for k in range(x.size)])


def orthonormal_frame(g, sig: Optional[Signature] = None) -> tuple[np.ndarray, np.ndarray]:
    """Signature-ordered Gram-Schmidt of the coordinate basis.

    Returns ``(E, eps)`` where the columns of E are the frame vectors in
    coordinates and ``E^T g E = diag(eps)`` with the +1 entries first.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    if sig is None or sig.s == 0:
        # Riemannian: Gram-Schmidt in coordinate order is L^{-T} for g = L L^T
        try:
            L = np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            if sig is not None:
                raise DegenerateMetricError(f"metric is not positive definite for {sig}") from None
        else:
            return np.linalg.inv(L).T, np.ones(n)
    vecs, signs = [], []
    for k in range(n):
        v = np.zeros(n)
        v[k] = 1.0
        for e, s in zip(vecs, signs):
            v = v - s * (e @ g @ v) * e
        nrm = v @ g @ v
        if abs(nrm) < 1e-12 * max(1.0, np.max(np.abs(g))):
            raise DegenerateMetricError(f"degenerate direction {k} in Gram-Schmidt")
        s = 1.0 if nrm > 0 else -1.0
        vecs.append(v / np.sqrt(abs(nrm)))
        signs.append(s)
    order = sorted(range(n), key=lambda k: (signs[k] < 0, k))
    E = np.stack([vecs[k] for k in order], axis=1)
    eps = np.array([signs[k] for k in order])
    if sig is not None and int(np.sum(eps < 0)) != sig.s:
        raise DegenerateMetricError(f"metric signature does not match {sig}")
    return E, eps


def christoffel_from(g, dg) -> np.ndarray:
    """Gamma^i_{jk} from the metric and dg[k, i, j] = d_k g_ij."""
    ginv = np.linalg.inv(g)
    # t[l, j, k] = d_j g_lk + d_k g_lj - d_l g_jk
    t = np.einsum("jlk->ljk", dg) + np.einsum("klj->ljk", dg) - dg
    return 0.5 * np.einsum("il,ljk->ijk", ginv, t)


@dataclass(frozen=True, eq=False)
class GeometryJet:
    x: np.ndarray
    metric: np.ndarray
    inverse: np.ndarray
    frame: np.ndarray
    eps: np.ndarray
    christoffel: np.ndarray
    frame_connection: np.ndarray  # [i, j, k] = <nabla_{e_i} e_j, e_k>
    riemann: Optional[np.ndarray] = None  # [a, b, c, d] = <R(e_a,e_b)e_c, e_d>
    ricci: Optional[np.ndarray] = None  # ric(e_a, e_b)
    scalar: Optional[float] = None
    dframe: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.metric.shape[0]

    def covariant_frame_derivative(self, i: int) -> np.ndarray:
        """Frame components of nabla_{e_i} e_j as rows: out[j, c] = coefficient on e_c."""
        return self.frame_connection[i] * self.eps[None, :]

    def ricci_endomorphism(self) -> np.ndarray:
        """Matrix M with Ric(e_a) = sum_b M[b, a] e_b."""
        return (self.ricci * self.eps[None, :]).T

    def to_frame_tensor(self, h) -> np.ndarray:
        """Frame components h(e_a, e_b) of a coordinate (0,2)-tensor."""
        return self.frame.T @ np.asarray(h) @ self.frame

    def vector_to_frame(self, v) -> np.ndarray:
        """Frame coefficients of a coordinate vector."""
        return np.linalg.solve(self.frame, np.asarray(v))

    def covector_to_frame_vector(self, a) -> np.ndarray:
        """Frame coefficients of the metric dual of a coordinate covector."""
        return self.eps * (self.frame.T @ np.asarray(a))


@dataclass(frozen=True, eq=False)
class Scenario:
    """A model manifold chart with its Spin^c connection data.

    ``metric_fn(x)`` returns the coordinate metric; ``connection_fn(x)``
    returns the real coordinate covector a with connection 1-form i*a.
    ``family(t, x)`` is present for metric families g_t with g_0 = metric.
    """

    name: str
    signature: Signature
    metric_fn: Callable
    lower: np.ndarray
    upper: np.ndarray
    periodic: tuple
    connection_fn: Optional[Callable] = None
    flux: Optional[int] = None
    reference: dict = field(default_factory=dict)
    backends: tuple = ("pointwise",)
    family: Optional[Callable] = None
    sample_margin: float = 0.0
    description: str = ""
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.signature.n

    @property
    def bounds(self) -> tuple:
        return (self.lower, self.upper, self.periodic)

    def metric(self, x) -> np.ndarray:
        return np.asarray(self.metric_fn(np.asarray(x, dtype=float)), dtype=float)

    def connection(self, x) -> np.ndarray:
        if self.connection_fn is None:
            return np.zeros(self.dim)
        return np.asarray(self.connection_fn(np.asarray(x, dtype=float)), dtype=float)

    def at(self, t: float) -> "Scenario":
        """The member g_t of the metric family, as its own scenario."""
        if self.family is None:
            raise ValueError(f"scenario {self.name} has no metric family")
        fam = self.family
        return Scenario(f"{self.name}@t={t:g}", self.signature, lambda x: fam(t, x),
                        self.lower, self.upper, self.periodic, self.connection_fn,
                        self.flux, {}, self.backends, None, self.sample_margin,
                        self.description, dict(self.params, t=t))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        lo = np.where(self.periodic, self.lower, self.lower + self.sample_margin)
        hi = np.where(self.periodic, self.upper, self.upper - self.sample_margin)
        return lo + (hi - lo) * rng.random((count, self.dim))


def metric_derivatives(metric_fn, x, bounds=None) -> np.ndarray:
    return gradient(metric_fn, x, bounds=bounds)


def christoffel(metric_fn, x, bounds=None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return christoffel_from(metric_fn(x), metric_derivatives(metric_fn, x, bounds))


def frame_at(metric_fn, sig: Optional[Signature] = None):
    def E(x):
        return orthonormal_frame(metric_fn(x), sig)[0]
    return E


def geometry_jet(scenario: Scenario, x, t: Optional[float] = None, *,
                 curvature: bool = True) -> GeometryJet:
    """All pointwise geometric data at x (at family parameter t if given)."""
    sc = scenario if t is None else scenario.at(t)
    return jet_from_metric(sc.metric, x, sc.signature, bounds=sc.bounds, curvature=curvature)


def jet_from_metric(metric_fn, x, sig: Optional[Signature] = None, *, bounds=None,
                    curvature: bool = True) -> GeometryJet:
    x = np.asarray(x, dtype=float)
    g = np.asarray(metric_fn(x), dtype=float)
    ginv = np.linalg.inv(g)
    gam = christoffel(metric_fn, x, bounds)
    E, eps = orthonormal_frame(g, sig)
    frame_fn = frame_at(metric_fn, sig)
    dE = gradient(frame_fn, x, bounds=bounds)  # dE[mu, :, j] = d_mu e_j
    # nabla_{e_i} e_j in coordinates: E[mu,i] (dE[mu,:,j] + Gamma[:, mu, l] E[l, j])
    nab = np.einsum("mi,mqj->iqj", E, dE) + np.einsum("mi,qml,lj->iqj", E, gam, E)
    conn = np.einsum("iqj,qp,pk->ijk", nab, g, E)
    riem = ric = scal = None
    if curvature:
        dgam = gradient(lambda y: christoffel(metric_fn, y, bounds), x, bounds=bounds)
        # dgam[k, i, l, j] = d_k Gamma^i_{lj};  R^i_{jkl} for R(d_k, d_l) d_j
        rc = (np.einsum("kilj->ijkl", dgam) - np.einsum("likj->ijkl", dgam)
              + np.einsum("ikp,plj->ijkl", gam, gam) - np.einsum("ilp,pkj->ijkl", gam, gam))
        riem = np.einsum("ijkl,ka,lb,jc,im,md->abcd", rc, E, E, E, g, E)
        ric = np.einsum("j,jabj->ab", eps, riem)
        scal = float(np.sum(eps * np.diag(ric)))
    return GeometryJet(x, g, ginv, E, eps, gam, conn, riem, ric, scal, dE)


def frame_compatibility_residual(jet: GeometryJet) -> float:
    """max |eps_k w_jk(e_i) + eps_j w_kj(e_i)| (zero for a metric connection)."""
    w = jet.frame_connection
    return float(np.max(np.abs(w + np.swapaxes(w, 1, 2)))) if w.size else 0.0


def bianchi_residual(jet: GeometryJet) -> float:
    r = jet.riemann
    cyc = r + np.einsum("abcd->bcad", r) + np.einsum("abcd->cabd", r)
    return float(np.max(np.abs(cyc)))


def riemann_symmetry_residual(jet: GeometryJet) -> float:
    r = jet.riemann
    return float(max(np.max(np.abs(r + np.swapaxes(r, 0, 1))),
                     np.max(np.abs(r + np.swapaxes(r, 2, 3))),
                     np.max(np.abs(r - np.einsum("abcd->cdab", r)))))


def frame_orthonormality_residual(jet: GeometryJet) -> float:
    return float(np.max(np.abs(jet.frame.T @ jet.metric @ jet.frame - np.diag(jet.eps))))


def covariant_derivative_tensor(metric_fn, h_fn, x, bounds=None) -> np.ndarray:
    """Coordinate components (nabla_k h)_ij of a symmetric (0,2)-tensor field."""
    x = np.asarray(x, dtype=float)
    gam = christoffel(metric_fn, x, bounds)
    h = np.asarray(h_fn(x))
    dh = gradient(h_fn, x, bounds=bounds)
    return dh - np.einsum("lki,lj->kij", gam, h) - np.einsum("lkj,il->kij", gam, h)


def covariant_derivative_endomorphism(metric_fn, f_fn, x, bounds=None) -> np.ndarray:
    """Coordinate components (nabla_k F)^i_j of an endomorphism field."""
    x = np.asarray(x, dtype=float)
    gam = christoffel(metric_fn, x, bounds)
    f = np.asarray(f_fn(x))
    df = gradient(f_fn, x, bounds=bounds)
    return df + np.einsum("ikl,lj->kij", gam, f) - np.einsum("lkj,il->kij", gam, f)


@dataclass(frozen=True, eq=False)
class SymmetricTensorField:
    """Coordinate (0,2)-tensor field k(x); symmetry enforced at evaluation."""

    fn: Callable
    label: str = ""

    def __call__(self, x) -> np.ndarray:
        k = np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)
        if np.max(np.abs(k - k.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(k))):
            raise ValueError(f"tensor field {self.label!r} is not symmetric at {x}")
        return k


def endomorphism_from_tensor(metric_fn, k_fn):
    """F = g^{-1} k as an endomorphism field (F^i_j)."""
    def F(x):
        return np.linalg.solve(metric_fn(x), k_fn(x))
    return F


def tensor_from_endomorphism(metric_fn, f_fn):
    def k(x):
        return metric_fn(x) @ f_fn(x)
    return k


def sample_points(scenario: Scenario, count: int, seed: int) -> np.ndarray:
    return scenario.sample(np.random.default_rng(seed), count)


def as_array(seq: Sequence[float]) -> np.ndarray:
    return np.asarray(seq, dtype=float)
