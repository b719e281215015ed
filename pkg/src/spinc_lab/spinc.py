"""Pointwise Spin^c calculus on a chart: spin connection, Dirac operator, curvature."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .clifford import (GammaRep, build_gamma_rep, clifford_action, interior_vector, ipow,
                       two_form_matrix, two_form_norm)
from .geometry import GeometryJet, Scenario, differentiate, geometry_jet, gradient


@dataclass(frozen=True, eq=False)
class SmoothSpinorField:
    """x -> complex spinor components in the frame trivialization."""

    fn: Callable
    dim: int
    label: str = ""
    derivative: Optional[Callable] = None  # optional (x, axis) -> d_axis psi

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=complex)

    def partial(self, x, axis: int, bounds=None) -> np.ndarray:
        if self.derivative is not None:
            return np.asarray(self.derivative(np.asarray(x, dtype=float), axis), dtype=complex)
        return differentiate(self, x, axis, bounds=bounds)

    def scaled(self, c: complex) -> "SmoothSpinorField":
        fn = self.fn
        return SmoothSpinorField(lambda x: c * np.asarray(fn(x)), self.dim, f"{c}*{self.label}")


def constant_field(sigma, label: str = "constant") -> SmoothSpinorField:
    sigma = np.asarray(sigma, dtype=complex)
    return SmoothSpinorField(lambda x: sigma.copy(), sigma.size, label,
                             derivative=lambda x, axis: np.zeros_like(sigma))


def plane_wave(p, sigma, label: str = "") -> SmoothSpinorField:
    """e^{i p.x} sigma."""
    p = np.asarray(p, dtype=float)
    sigma = np.asarray(sigma, dtype=complex)
    return SmoothSpinorField(lambda x: np.exp(1j * (p @ x)) * sigma, sigma.size,
                             label or f"plane-wave p={p.tolist()}",
                             derivative=lambda x, axis: 1j * p[axis] * np.exp(1j * (p @ x)) * sigma)


class LiteralError(ValueError):
    pass


def _literal_term(term: dict, n: int):
    unknown = set(term) - {"c", "powers", "freq"}
    if unknown:
        raise LiteralError(f"unknown spinor-literal keys {sorted(unknown)}")
    c = term.get("c", [1.0, 0.0])
    if len(c) != 2:
        raise LiteralError("coefficient must be [re, im]")
    coef = complex(c[0], c[1])
    powers = np.asarray(term.get("powers", [0] * n), dtype=int)
    freq = np.asarray(term.get("freq", [0.0] * n), dtype=float)
    if powers.size != n or freq.size != n or np.any(powers < 0):
        raise LiteralError(f"powers/freq must have length {n} with non-negative powers")
    return coef, powers, freq


def spinor_literal(spec, n: int, dim: int) -> SmoothSpinorField:
    """Field from the config grammar: one list of terms per spinor component.

    Each term is ``{"c": [re, im], "powers": [p_1..p_n], "freq": [k_1..k_n]}``
    and contributes c * prod x_i^p_i * exp(i k.x).
    """
    comps = spec["components"] if isinstance(spec, dict) else spec
    if len(comps) != dim:
        raise LiteralError(f"expected {dim} spinor components, got {len(comps)}")
    parsed = [[_literal_term(t, n) for t in comp] for comp in comps]

    def value(x):
        out = np.zeros(dim, dtype=complex)
        for a, terms in enumerate(parsed):
            for c, p, k in terms:
                out[a] += c * np.prod(x ** p) * np.exp(1j * (k @ x))
        return out

    def deriv(x, axis):
        out = np.zeros(dim, dtype=complex)
        for a, terms in enumerate(parsed):
            for c, p, k in terms:
                base = c * np.exp(1j * (k @ x))
                mono = np.prod(x ** p)
                d = 1j * k[axis] * mono
                if p[axis] > 0:
                    q = p.copy()
                    q[axis] -= 1
                    d = d + p[axis] * np.prod(x ** q)
                out[a] += base * d
        return out

    return SmoothSpinorField(value, dim, "literal", derivative=deriv)


@dataclass(frozen=True, eq=False)
class SpincConnectionJet:
    jet: GeometryJet
    rep: GammaRep
    a_value: np.ndarray  # a(e_k)
    S: tuple  # connection matrices per frame direction
    omega: np.ndarray  # Omega(e_i, e_j)
    omega_norm: float

    @property
    def n(self) -> int:
        return self.jet.n

    def gamma_vec(self, v) -> np.ndarray:
        return self.rep.gamma_of(v)

    def ricci_vector(self, a: int) -> np.ndarray:
        """Frame coefficients of Ric(e_a)."""
        return self.jet.eps * self.jet.ricci[a]


def rep_for(scenario: Scenario) -> GammaRep:
    return build_gamma_rep(scenario.signature)


def connection_matrices(jet: GeometryJet, rep: GammaRep, a_frame) -> list[np.ndarray]:
    eps = jet.eps
    n = jet.n
    mats = []
    for k in range(n):
        nab = jet.covariant_frame_derivative(k)  # row j: coefficients of nabla_{e_k} e_j
        s = np.zeros((rep.dim, rep.dim), dtype=complex)
        for j in range(n):
            s += eps[j] * rep.gammas[j] @ rep.gamma_of(nab[j])
        mats.append(0.25 * s + 0.5j * a_frame[k] * np.eye(rep.dim))
    return mats


def curvature_form(scenario: Scenario, x, jet: GeometryJet) -> np.ndarray:
    """Frame components Omega(e_i,e_j) of da."""
    da = gradient(scenario.connection, x, bounds=scenario.bounds)  # da[mu, nu] = d_mu a_nu
    om = da - da.T
    E = jet.frame
    return E.T @ om @ E


def spinc_jet(scenario: Scenario, x, rep: Optional[GammaRep] = None, *,
              curvature: bool = False, jet: Optional[GeometryJet] = None) -> SpincConnectionJet:
    rep = rep or rep_for(scenario)
    x = np.asarray(x, dtype=float)
    if jet is None or (curvature and jet.riemann is None):
        jet = geometry_jet(scenario, x, curvature=curvature)
    a_frame = jet.frame.T @ scenario.connection(x)
    mats = connection_matrices(jet, rep, a_frame)
    om = curvature_form(scenario, x, jet) if scenario.connection_fn is not None else np.zeros((jet.n, jet.n))
    om = 0.5 * (om - om.T)
    return SpincConnectionJet(jet, rep, a_frame, tuple(mats), om, two_form_norm(om))


def frame_derivatives(field: SmoothSpinorField, scenario: Scenario, x, jet: GeometryJet) -> np.ndarray:
    """Rows e_k(psi): directional derivatives of the components along frame vectors."""
    d = np.stack([field.partial(x, mu, scenario.bounds) for mu in range(jet.n)])
    return jet.frame.T @ d


def covariant_derivatives(field: SmoothSpinorField, scenario: Scenario, x,
                          sj: Optional[SpincConnectionJet] = None) -> np.ndarray:
    """All nabla_{e_k} psi stacked as rows."""
    x = np.asarray(x, dtype=float)
    sj = sj or spinc_jet(scenario, x)
    psi = field(x)
    ek = frame_derivatives(field, scenario, x, sj.jet)
    return np.stack([ek[k] + sj.S[k] @ psi for k in range(sj.n)])


def covariant_derivative(field: SmoothSpinorField, scenario: Scenario, x, k: int,
                         sj: Optional[SpincConnectionJet] = None) -> np.ndarray:
    return covariant_derivatives(field, scenario, x, sj)[k]


def dirac_from_derivatives(rep: GammaRep, eps, nabla) -> np.ndarray:
    s = rep.signature.s
    out = sum(eps[j] * rep.gammas[j] @ nabla[j] for j in range(rep.n))
    return ipow(s) * out


def dirac_pointwise(field: SmoothSpinorField, scenario: Scenario, x,
                    sj: Optional[SpincConnectionJet] = None) -> np.ndarray:
    sj = sj or spinc_jet(scenario, x)
    return dirac_from_derivatives(sj.rep, sj.jet.eps, covariant_derivatives(field, scenario, x, sj))


def curvature_operator(sj: SpincConnectionJet, a: int, b: int) -> np.ndarray:
    """Matrix of R^Sigma(e_a, e_b)."""
    rep, eps = sj.rep, sj.jet.eps
    r = sj.jet.riemann[a, b]
    out = np.zeros((rep.dim, rep.dim), dtype=complex)
    for j in range(sj.n):
        for k in range(sj.n):
            if r[j, k] != 0.0:
                out += eps[j] * eps[k] * r[j, k] * rep.gammas[j] @ rep.gammas[k]
    return 0.25 * out + 0.5j * sj.omega[a, b] * np.eye(rep.dim)


def spinor_curvature(field: SmoothSpinorField, scenario: Scenario, x, a: int, b: int,
                     sj: Optional[SpincConnectionJet] = None) -> np.ndarray:
    if sj is None or sj.jet.riemann is None:
        sj = spinc_jet(scenario, x, curvature=True)
    return curvature_operator(sj, a, b) @ field(x)


def covariant_derivative_field(field: SmoothSpinorField, scenario: Scenario, k: int,
                               rep: Optional[GammaRep] = None) -> SmoothSpinorField:
    """The spinor field x -> nabla_{e_k} psi(x) (numerical derivatives only)."""
    rep = rep or rep_for(scenario)

    def fn(y):
        return covariant_derivative(field, scenario, y, k, spinc_jet(scenario, y, rep))

    return SmoothSpinorField(fn, field.dim, f"nabla_{k} {field.label}")


def curvature_commutator(field: SmoothSpinorField, scenario: Scenario, x, a: int, b: int,
                         rep: Optional[GammaRep] = None) -> np.ndarray:
    """nabla_a nabla_b psi - nabla_b nabla_a psi - nabla_[e_a,e_b] psi by nested differentiation."""
    rep = rep or rep_for(scenario)
    x = np.asarray(x, dtype=float)
    sj = spinc_jet(scenario, x, rep)
    fa = covariant_derivative_field(field, scenario, a, rep)
    fb = covariant_derivative_field(field, scenario, b, rep)
    ab = covariant_derivative(fb, scenario, x, a, sj)
    ba = covariant_derivative(fa, scenario, x, b, sj)
    w = sj.jet.frame_connection
    bracket = sj.jet.eps * (w[a, b] - w[b, a])
    nab = covariant_derivatives(field, scenario, x, sj)
    return ab - ba - bracket @ nab


def ricci_identity_residual(field: SmoothSpinorField, scenario: Scenario, x, a: int,
                            sj: Optional[SpincConnectionJet] = None) -> np.ndarray:
    """sum_k eps_k e_k.R(e_k,X)psi - 1/2 Ric(X).psi + i/2 (X -| Omega).psi for X = e_a."""
    if sj is None or sj.jet.riemann is None:
        sj = spinc_jet(scenario, x, curvature=True)
    rep, eps = sj.rep, sj.jet.eps
    psi = field(x)
    lhs = sum(eps[k] * rep.gammas[k] @ curvature_operator(sj, k, a) @ psi for k in range(sj.n))
    xa = np.zeros(sj.n)
    xa[a] = 1.0
    ric = 0.5 * clifford_action(rep, sj.ricci_vector(a), psi)
    inner = 0.5j * clifford_action(rep, interior_vector(rep.signature, sj.omega, xa), psi)
    return lhs - ric + inner


def hermitian(rep: GammaRep, s1, s2) -> complex:
    """<s1, s2> = s1^* B s2."""
    return complex(np.conj(s1) @ rep.form @ s2)


def norm_sq(rep: GammaRep, s) -> float:
    return float(hermitian(rep, s, s).real)


def metric_compatibility_residual(f1: SmoothSpinorField, f2: SmoothSpinorField,
                                  scenario: Scenario, x, k: int) -> float:
    """|e_k Re<f1,f2> - Re<nabla f1,f2> - Re<f1, nabla f2>|."""
    rep = rep_for(scenario)
    sj = spinc_jet(scenario, x, rep)
    pair = lambda y: np.array(hermitian(rep, f1(y), f2(y)).real)
    d = np.array([differentiate(pair, x, mu, bounds=scenario.bounds) for mu in range(sj.n)])
    lhs = float(sj.jet.frame[:, k] @ d)
    n1 = covariant_derivative(f1, scenario, x, k, sj)
    n2 = covariant_derivative(f2, scenario, x, k, sj)
    return abs(lhs - hermitian(rep, n1, f2(x)).real - hermitian(rep, f1(x), n2).real)


def two_form_clifford(sj: SpincConnectionJet) -> np.ndarray:
    return two_form_matrix(sj.rep, sj.omega)
