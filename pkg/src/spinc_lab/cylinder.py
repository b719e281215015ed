"""Generalized cylinders dt^2 + g_t: curvature relations, spinor transport along t-lines,
the leafwise commutator, and parallel spinors built from generalized Killing spinors."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .clifford import GammaRep, Signature, build_gamma_rep, interior_vector, ipow
from .emtensor import max_codazzi_residual, max_killing_residual
from .geometry import (Scenario, covariant_derivative_endomorphism, covariant_derivative_tensor,
                       differentiate, geometry_jet, gradient, jet_from_metric, orthonormal_frame)
from .hypersurface import _alpha, weingarten_endomorphism
from .scenarios import cylinder_ambient, family_from_endomorphism, get_scenario, torus_flat
from .spinc import (SmoothSpinorField, connection_matrices, covariant_derivatives, spinc_jet)

TRANSPORT_STEP = 0.05
FIELD_STEPS_PER_UNIT = 40


class TransportError(RuntimeError):
    pass


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CylinderScenario:
    """I x M with metric dt^2 + g_t; ``F`` set when g_t = g((id - tF)^2 ., .)."""

    base: Scenario
    t_interval: tuple = (-0.5, 0.5)
    F: Optional[Callable] = None
    ambient_connection: Optional[Callable] = None
    name: str = ""

    @property
    def n(self) -> int:
        return self.base.dim

    def family(self, t: float, x) -> np.ndarray:
        return np.asarray(self.base.family(t, np.asarray(x, dtype=float)), dtype=float)

    def gdot(self, t: float, x) -> np.ndarray:
        return differentiate(lambda s: self.family(s[0], x), np.array([t]), 0)

    def gddot(self, t: float, x) -> np.ndarray:
        return differentiate(lambda s: self.gdot(s[0], x), np.array([t]), 0)

    def slice_metric(self, t: float) -> Callable:
        return lambda x: self.family(t, x)

    @cached_property
    def ambient(self) -> Scenario:
        return cylinder_ambient(self.base, self.t_interval, self.ambient_connection,
                                name=f"{self.name or self.base.name}-ambient")

    @cached_property
    def rep(self) -> GammaRep:
        return build_gamma_rep(self.base.signature.raised())

    def check_interval(self, x, ts=None) -> None:
        """(id - tF) must stay invertible and g_t keep its signature."""
        t0, t1 = self.t_interval
        for t in (np.linspace(t0, t1, 11) if ts is None else ts):
            g = self.family(t, x)
            if np.linalg.cond(g) > 1e12:
                raise PreconditionError(f"g_t degenerate at t={t:g}, x={np.asarray(x).tolist()}")
            orthonormal_frame(g, self.base.signature)


def cylinder(name: str, **overrides) -> CylinderScenario:
    """CylinderScenario for a catalog entry carrying a metric family."""
    base = get_scenario(name)
    if base.family is None:
        raise ValueError(f"scenario {name!r} has no metric family")
    t_int = tuple(base.params.get("t_interval", (-0.5, 0.5)))
    return CylinderScenario(base, overrides.get("t_interval", t_int),
                            overrides.get("F", base.params.get("F_fn")),
                            overrides.get("ambient_connection"), name)


def cylinder_from_F(base: Scenario, F: Callable, t_interval=(-0.5, 0.5), name: str = "") -> CylinderScenario:
    fam = family_from_endomorphism(base.metric_fn, F)
    b = Scenario(base.name, base.signature, base.metric_fn, base.lower, base.upper, base.periodic,
                 base.connection_fn, base.flux, dict(base.reference), base.backends, fam,
                 base.sample_margin, base.description, dict(base.params))
    return CylinderScenario(b, tuple(t_interval), F, None, name or f"{base.name}-F")


def flat_box_with_field() -> CylinderScenario:
    """Flat cylinder over a box with a(d/dt) = 0 but nu -| Omega != 0."""
    base = Scenario("box2-flat", Signature(2, 0), lambda x: np.eye(2), np.full(2, -2.0),
                    np.full(2, 2.0), (False, False), sample_margin=0.1,
                    family=lambda t, x: (1.0 + 0.3 * t) ** 2 * np.eye(2))

    def a(y):
        t, x1, x2 = y
        return np.array([0.0, 0.4 * t * np.sin(x2) + 0.2 * x2, 0.3 * t * x1 + 0.1 * t * t])

    return CylinderScenario(base, (-0.5, 0.5), None, a, "box2-connection")


# -- curvature ----------------------------------------------------------------

def _frame_tensor(E, h):
    return E.T @ h @ E


def cylinder_curvature_residuals(cyl: CylinderScenario, x, t: float) -> dict:
    """Max residuals of the Weingarten, Gauss, Codazzi and Riccati relations at (t, x)."""
    x = np.asarray(x, dtype=float)
    y = np.concatenate(([t], x))
    jz = geometry_jet(cyl.ambient, y, curvature=True)
    gt = cyl.slice_metric(t)
    jm = jet_from_metric(gt, x, cyl.base.signature, bounds=cyl.base.bounds)
    E = jm.frame
    if np.max(np.abs(jz.frame[1:, 1:] - E)) > 1e-9:
        raise RuntimeError("ambient frame does not restrict to the slice frame")
    gd = _frame_tensor(E, cyl.gdot(t, x))
    gdd = _frame_tensor(E, cyl.gddot(t, x))
    rz = jz.riemann
    w_form = jz.frame_connection[1:, 1:, 0]
    weing = float(np.max(np.abs(w_form + 0.5 * gd)))
    gauss = rz[1:, 1:, 1:, 1:] - jm.riemann - 0.25 * (np.einsum("ux,vy->uvxy", gd, gd)
                                                      - np.einsum("uy,vx->uvxy", gd, gd))
    ngd = covariant_derivative_tensor(gt, lambda z: cyl.gdot(t, z), x, cyl.base.bounds)
    ngd_f = np.einsum("kij,ka,ib,jc->abc", ngd, E, E, E)  # (nabla_a gdot)(b, c)
    codazzi = rz[1:, 1:, 1:, 0] - 0.5 * (np.einsum("yxu->xyu", ngd_f) - ngd_f)
    wmat = weingarten_endomorphism(-0.5 * gd, jm.eps)
    gdw = wmat.T @ gd  # gdot(W e_a, e_b)
    riccati = rz[1:, 0, 0, 1:] + 0.5 * (gdd + gdw)
    return {"weingarten": weing, "gauss": float(np.max(np.abs(gauss))),
            "codazzi": float(np.max(np.abs(codazzi))), "riccati": float(np.max(np.abs(riccati)))}


def geodesic_defect(cyl: CylinderScenario, x, t: float) -> float:
    """|nabla_nu nu| from ambient jets."""
    jz = geometry_jet(cyl.ambient, np.concatenate(([t], x)), curvature=False)
    return float(np.max(np.abs(jz.frame_connection[0, 0, :])))


def bala_residuals(cyl: CylinderScenario, x, t: float) -> tuple[float, float]:
    """max |<R(U,nu)nu,V>| and max |<R(U,V)W,nu>| over tangent frame vectors."""
    jz = geometry_jet(cyl.ambient, np.concatenate(([t], np.asarray(x, dtype=float))), curvature=True)
    r = jz.riemann
    return float(np.max(np.abs(r[1:, 0, 0, 1:]))), float(np.max(np.abs(r[1:, 1:, 1:, 0])))


# -- transport ----------------------------------------------------------------

def nu_connection(cyl: CylinderScenario, t: float, x) -> tuple[np.ndarray, np.ndarray]:
    """(w, S): w[j, k] = <nabla_nu e_j, e_k> and the spinor matrix of nabla_nu."""
    x = np.asarray(x, dtype=float)
    g = cyl.family(t, x)
    E, eps = orthonormal_frame(g, cyl.base.signature)
    dE = differentiate(lambda s: orthonormal_frame(cyl.family(s[0], x), cyl.base.signature)[0],
                       np.array([t]), 0)
    gd = cyl.gdot(t, x)
    w = E.T @ g @ dE + 0.5 * E.T @ gd @ E  # [k, j] -> transpose below
    w = w.T
    rep = cyl.rep
    amb_eps = np.concatenate(([1.0], eps))
    s = np.zeros((rep.dim, rep.dim), dtype=complex)
    for j in range(cyl.n):
        coeff = np.concatenate(([0.0], eps * w[j]))
        s += amb_eps[j + 1] * rep.gammas[j + 1] @ rep.gamma_of(coeff)
    a_nu = cyl.ambient.connection(np.concatenate(([t], x)))[0]
    return w, 0.25 * s + 0.5j * a_nu * np.eye(rep.dim)


def _rk4(cyl, x, t0, t1, steps, with_vectors=False):
    d = cyl.rep.dim
    n = cyl.n
    P = np.eye(d, dtype=complex)
    Z = np.eye(n)
    h = (t1 - t0) / steps

    def rhs(t, P, Z):
        w, S = nu_connection(cyl, t, x)
        eps = cyl.base.signature.eps
        # d/dt X_k = -sum_j X_j eps_k w[j, k]  (columns of Z are transported vectors)
        dz = -(w * eps[None, :]).T @ Z if with_vectors else Z
        return -S @ P, dz

    t = t0
    for _ in range(steps):
        k1 = rhs(t, P, Z)
        k2 = rhs(t + h / 2, P + h / 2 * k1[0], Z + h / 2 * k1[1])
        k3 = rhs(t + h / 2, P + h / 2 * k2[0], Z + h / 2 * k2[1])
        k4 = rhs(t + h, P + h * k3[0], Z + h * k3[1])
        P = P + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        if with_vectors:
            Z = Z + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        t = t0 + (_ + 1) * h
    return P, Z


@dataclass(frozen=True, eq=False)
class TransportResult:
    x: np.ndarray
    t0: float
    t1: float
    propagator: np.ndarray  # ambient spinor coordinates
    vector_propagator: np.ndarray  # zeta in frame coordinates
    steps: int
    unitarity_defect: float
    initial: Optional[np.ndarray] = None
    final: Optional[np.ndarray] = None

    def apply(self, psi) -> np.ndarray:
        return self.propagator @ np.asarray(psi)


def parallel_transport(cyl: CylinderScenario, x, spinor, t0: float, t1: float,
                       tol: float = 1e-9, max_halvings: int = 14) -> TransportResult:
    """Solve nabla_nu psi = 0 along t -> (t, x) by RK4 with step halving."""
    x = np.asarray(x, dtype=float)
    lo, hi = cyl.t_interval
    if min(t0, t1) < lo - 1e-12 or max(t0, t1) > hi + 1e-12:
        raise TransportError(f"t-line [{t0}, {t1}] leaves the interval {cyl.t_interval}")
    if t0 == t1:
        eye = np.eye(cyl.rep.dim, dtype=complex)
        sp = None if spinor is None else np.asarray(spinor, dtype=complex)
        return TransportResult(x, t0, t1, eye, np.eye(cyl.n), 0, 0.0, sp, sp)
    steps = max(2, int(np.ceil(abs(t1 - t0) / TRANSPORT_STEP)))
    prev = _rk4(cyl, x, t0, t1, steps, True)
    for _ in range(max_halvings):
        steps *= 2
        cur = _rk4(cyl, x, t0, t1, steps, True)
        if max(np.max(np.abs(cur[0] - prev[0])), np.max(np.abs(cur[1] - prev[1]))) <= tol:
            break
        prev = cur
    else:
        raise TransportError(f"step-size underflow: no agreement within {tol:g} after {steps} steps")
    P, Z = cur
    B = cyl.rep.form
    defect = float(np.max(np.abs(P.conj().T @ B @ P - B)))
    sp = None if spinor is None else np.asarray(spinor, dtype=complex)
    return TransportResult(x, t0, t1, P, Z, steps, defect, sp, None if sp is None else P @ sp)


def intertwining_defect(cyl: CylinderScenario, res: TransportResult) -> float:
    """max_X |tau nu.X - nu.(zeta X) tau| over frame vectors X."""
    rep = cyl.rep
    nu = rep.gammas[0]
    worst = 0.0
    for a in range(cyl.n):
        e = np.zeros(cyl.n + 1)
        e[a + 1] = 1.0
        zx = np.concatenate(([0.0], res.vector_propagator[:, a]))
        lhs = res.propagator @ nu @ rep.gamma_of(e)
        rhs = nu @ rep.gamma_of(zx) @ res.propagator
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def transported_field(cyl: CylinderScenario, phi_ambient: Callable, t0: float = 0.0,
                      steps_per_unit: int = FIELD_STEPS_PER_UNIT) -> SmoothSpinorField:
    """psi(t, x) = tau_{t0}^t phi(x) with a fixed step count (smooth in (t, x))."""
    def fn(y):
        t, x = y[0], y[1:]
        phi = np.asarray(phi_ambient(x), dtype=complex)
        if t == t0:
            return phi
        steps = max(4, int(np.ceil(max(abs(cyl.t_interval[0]), abs(cyl.t_interval[1])) * steps_per_unit)))
        P, _ = _rk4(cyl, x, t0, t, steps)
        return P @ phi

    return SmoothSpinorField(fn, cyl.rep.dim, "transported")


# -- commutator ---------------------------------------------------------------

def _leafwise_dirac(cyl: CylinderScenario, field: SmoothSpinorField, y, h=None) -> np.ndarray:
    """D~ psi = i^s sum_j eps_j nu.e_j.nabla^{M_t}_{e_j} psi on ambient spinors."""
    t, x = y[0], y[1:]
    rep = cyl.rep
    jm = jet_from_metric(cyl.slice_metric(t), x, cyl.base.signature, bounds=cyl.base.bounds,
                         curvature=False)
    a_full = cyl.ambient.connection(y)
    a_frame = jm.frame.T @ a_full[1:]
    sub = _SubRep(rep)
    mats = connection_matrices(jm, sub, a_frame)
    psi = field(y)
    d = np.stack([differentiate(lambda z: field(np.concatenate(([t], z))), x, mu, h,
                                bounds=cyl.base.bounds) for mu in range(cyl.n)])
    ek = jm.frame.T @ d
    nu = rep.gammas[0]
    out = sum(jm.eps[j] * nu @ sub.gammas[j] @ (ek[j] + mats[j] @ psi) for j in range(cyl.n))
    return ipow(cyl.base.signature.s) * out


class _SubRep:
    """Tangential generators of the ambient representation, as a GammaRep stand-in."""

    def __init__(self, rep: GammaRep):
        self.gammas = rep.gammas[1:]
        self.dim = rep.dim
        self.n = rep.n - 1

    def gamma_of(self, v):
        return np.tensordot(np.asarray(v), np.asarray(self.gammas), axes=(0, 0))


def _nabla_nu(cyl: CylinderScenario, field: SmoothSpinorField, y, h=None) -> np.ndarray:
    t, x = y[0], y[1:]
    _, S = nu_connection(cyl, t, x)
    dpsi = differentiate(lambda s: field(np.concatenate((s, x))), np.array([t]), 0, h)
    return dpsi + S @ field(y)


def commutator_sides(cyl: CylinderScenario, field: SmoothSpinorField, x, t: float,
                     h: Optional[float] = None) -> tuple[np.ndarray, np.ndarray]:
    """(lhs, rhs) of i^-s [nabla_nu, D~] psi = D^W psi - n/2 nu.grad H.psi + 1/2 nu.div W.psi
    + i/2 nu.(nu -| Omega).psi; ``h`` forces the outer difference step."""
    x = np.asarray(x, dtype=float)
    y = np.concatenate(([t], x))
    rep = cyl.rep
    s = cyl.base.signature.s
    dt_field = SmoothSpinorField(lambda z: _leafwise_dirac(cyl, field, z), rep.dim)
    nab_field = SmoothSpinorField(lambda z: _nabla_nu(cyl, field, z, h), rep.dim)
    lhs = ipow(-s) * (_nabla_nu(cyl, dt_field, y, h) - _leafwise_dirac(cyl, nab_field, y, h))

    n = cyl.n
    gt = cyl.slice_metric(t)
    jm = jet_from_metric(gt, x, cyl.base.signature, bounds=cyl.base.bounds, curvature=False)
    E, eps = jm.frame, jm.eps
    sub = _SubRep(rep)
    nu = rep.gammas[0]

    def W_coords(z):
        return -0.5 * np.linalg.solve(gt(z), cyl.gdot(t, z))

    wmat = np.linalg.solve(E, W_coords(x) @ E)  # W(e_a) = sum_b wmat[b, a] e_b
    psi_nab = _base_nabla(cyl, field, y, jm)
    dW = sum(eps[i] * nu @ sub.gammas[i] @ (psi_nab.T @ wmat[:, i]) for i in range(n))

    H = lambda z: float(np.trace(W_coords(z))) / n
    dH = np.array([differentiate(lambda z: np.array(H(z)), x, mu, bounds=cyl.base.bounds)
                   for mu in range(n)])
    grad_h = eps * (E.T @ dH)
    nW = covariant_derivative_endomorphism(gt, W_coords, x, cyl.base.bounds)
    div_c = np.einsum("kj,kij->i", np.linalg.inv(gt(x)), nW)
    div_w = np.linalg.solve(E, div_c)
    sjz = spinc_jet(cyl.ambient, y, rep)
    e0 = np.zeros(n + 1)
    e0[0] = 1.0
    inner = interior_vector(rep.signature, sjz.omega, e0)
    psi = field(y)
    rhs = (dW - 0.5 * n * nu @ sub.gamma_of(grad_h) @ psi + 0.5 * nu @ sub.gamma_of(div_w) @ psi
           + 0.5j * nu @ rep.gamma_of(inner) @ psi)
    return lhs, rhs


def _base_nabla(cyl, field, y, jm) -> np.ndarray:
    """Rows nabla^{M_t}_{e_k} psi on ambient spinors."""
    t, x = y[0], y[1:]
    sub = _SubRep(cyl.rep)
    a_frame = jm.frame.T @ cyl.ambient.connection(y)[1:]
    mats = connection_matrices(jm, sub, a_frame)
    d = np.stack([differentiate(lambda z: field(np.concatenate(([t], z))), x, mu,
                                bounds=cyl.base.bounds) for mu in range(cyl.n)])
    ek = jm.frame.T @ d
    psi = field(y)
    return np.stack([ek[k] + mats[k] @ psi for k in range(cyl.n)])


def commutator_residual(cyl: CylinderScenario, field: SmoothSpinorField, x, t: float,
                        h: Optional[float] = None) -> np.ndarray:
    lhs, rhs = commutator_sides(cyl, field, x, t, h)
    return lhs - rhs


# -- generalized Killing spinors -> parallel spinors ---------------------------

@dataclass(frozen=True, eq=False)
class ParallelConstruction:
    cylinder: CylinderScenario
    field: SmoothSpinorField  # ambient spinor field on the cylinder chart
    base_field: SmoothSpinorField
    killing_defect: float
    codazzi_defect: float

    def restriction(self, x) -> np.ndarray:
        """psi at t = 0 in base spinor coordinates (tau_0^0 = id)."""
        return self.base_field(x)

    def residuals(self, points, times) -> dict:
        amb = self.cylinder.ambient
        rep = self.cylinder.rep
        tang = nu_part = 0.0
        for x in points:
            for t in times:
                y = np.concatenate(([t], x))
                nab = covariant_derivatives(self.field, amb, y, spinc_jet(amb, y, rep))
                nu_part = max(nu_part, float(np.linalg.norm(nab[0])))
                tang = max(tang, float(np.max(np.linalg.norm(nab[1:], axis=1))))
        return {"tangential": tang, "normal": nu_part}


def build_parallel_from_killing(cyl: CylinderScenario, phi: SmoothSpinorField, points,
                                killing_tol: float = 1e-7, codazzi_tol: float = 1e-7,
                                kappa: int = 1) -> ParallelConstruction:
    """psi(t, x) = tau_0^t phi(x); requires F Killing data and the Codazzi condition."""
    if cyl.F is None:
        raise PreconditionError("cylinder must be built from an endomorphism F")
    kd = max_killing_residual(phi, cyl.F, cyl.base, points)
    if kd > killing_tol:
        raise PreconditionError(f"Killing residual {kd:.3e} exceeds {killing_tol:g}")
    cd = max_codazzi_residual(cyl.F, cyl.base, points) if cyl.n > 1 else 0.0
    if cd > codazzi_tol:
        raise PreconditionError(f"Codazzi residual {cd:.3e} exceeds {codazzi_tol:g}")
    for x in points:
        cyl.check_interval(x)
    al = _alpha(cyl.base.signature.r, cyl.base.signature.s, kappa)
    field = transported_field(cyl, lambda x: al.to_ambient(phi(x)))
    return ParallelConstruction(cyl, field, phi, kd, cd)


def sphere_killing_spinor(sigma, sign: int = -1) -> SmoothSpinorField:
    """Killing spinor on the unit sphere with nabla_X phi = sign/2 X.phi (polar chart)."""
    from .hypersurface import get_immersion, parallel_spinor_polar
    imm = get_immersion("sphere2-in-r3")
    phi = imm.restrict(parallel_spinor_polar(sigma))
    if sign < 0:
        return phi
    vol = imm.base_rep.volume
    return SmoothSpinorField(lambda u: vol @ phi(u), phi.dim, "killing+")


def rank_one_killing(f: float = 0.4, sigma=(1.0, 0.0)) -> tuple[CylinderScenario, SmoothSpinorField]:
    """Flat chart, F = diag(f, 0), phi = exp(f x1 gamma_1 / 2) sigma."""
    base = Scenario("box2-flat", Signature(2, 0), lambda x: np.eye(2), np.full(2, -3.0),
                    np.full(2, 3.0), (False, False), sample_margin=0.1)
    F = lambda x: np.diag([f, 0.0])
    cyl = cylinder_from_F(base, F, (-0.5, 0.5), "box2-F-rank1")
    rep = build_gamma_rep(Signature(2, 0))
    g1 = rep.gammas[0]
    sigma = np.asarray(sigma, dtype=complex)

    def fn(x):
        c = 0.5 * f * x[0]
        return (np.cos(c) * np.eye(2) + np.sin(c) * g1) @ sigma

    return cyl, SmoothSpinorField(fn, 2, "killing-rank1")
