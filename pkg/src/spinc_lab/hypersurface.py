"""Spinors on hypersurfaces: restriction, Weingarten map, Gauss-type identities.

Immersions are coordinate slices {t = t0} of ambient charts (t, u) with
g_tt = 1 and g_ti = 0, so the unit normal is d/dt and the ambient frame is
(nu, base frame).  The base scenario is given independently; its jets are
never shared with the ambient computation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .clifford import (AlphaEmbedding, GammaRep, alpha_embed, build_gamma_rep, interior_vector,
                       ipow, two_form_matrix, two_form_norm)
from .emtensor import em_tensor
from .geometry import GeometryJet, Scenario, geometry_jet
from .scenarios import (cylinder_ambient, cylinder_conformal, cylinder_fourier, cylinder_static,
                        get_scenario, torus_flat)
from .spinc import (SmoothSpinorField, covariant_derivatives, dirac_from_derivatives,
                    dirac_pointwise, spinc_jet)

UNIT_TOL = 1e-10
INDUCED_TOL = 1e-8


class ImmersionError(ValueError):
    pass


class NotParallelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Immersion:
    name: str
    ambient: Scenario
    base: Scenario
    t0: float = 0.0
    kappa: int = 1
    description: str = ""

    @property
    def alpha(self) -> AlphaEmbedding:
        return _alpha(self.base.signature.r, self.base.signature.s, self.kappa)

    @property
    def base_rep(self) -> GammaRep:
        return self.alpha.base

    @property
    def ambient_rep(self) -> GammaRep:
        return self.alpha.ambient

    def embedding(self, u) -> np.ndarray:
        return np.concatenate(([self.t0], np.asarray(u, dtype=float)))

    def normal(self, u) -> np.ndarray:
        nu = np.zeros(self.ambient.dim)
        nu[0] = 1.0
        return nu

    def with_kappa(self, kappa: int) -> "Immersion":
        return Immersion(self.name, self.ambient, self.base, self.t0, kappa, self.description)

    def restrict(self, field: SmoothSpinorField) -> SmoothSpinorField:
        """phi(u) = psi(t0, u) in base spinor coordinates."""
        al = self.alpha
        emb = self.embedding
        return SmoothSpinorField(lambda u: al.to_base(field(emb(u))), al.base.dim,
                                 f"{field.label}|M")

    def invariant_residuals(self, u) -> dict:
        y = self.embedding(u)
        g = self.ambient.metric(y)
        nu = self.normal(u)
        unit = abs(nu @ g @ nu - 1.0)
        orth = float(np.max(np.abs(g[0, 1:])))
        induced = float(np.max(np.abs(g[1:, 1:] - self.base.metric(u))))
        return {"normal_unit": unit, "normal_orthogonal": orth, "induced_metric": induced}

    def check(self, u) -> None:
        r = self.invariant_residuals(u)
        if r["normal_unit"] > UNIT_TOL or r["normal_orthogonal"] > UNIT_TOL:
            raise ImmersionError(f"{self.name}: normal is not unit/orthogonal at {u}: {r}")
        if r["induced_metric"] > INDUCED_TOL:
            raise ImmersionError(f"{self.name}: induced metric differs from base at {u}: {r}")


_ALPHA_CACHE: dict = {}


def _alpha(r: int, s: int, kappa: int) -> AlphaEmbedding:
    key = (r, s, kappa)
    if key not in _ALPHA_CACHE:
        from .clifford import Signature
        sig = Signature(r, s)
        _ALPHA_CACHE[key] = alpha_embed(build_gamma_rep(sig), build_gamma_rep(sig.raised()), kappa)
    return _ALPHA_CACHE[key]


def bullet(imm: Immersion, v, phi) -> np.ndarray:
    """X . phi for a tangent frame vector, in base spinor coordinates."""
    return imm.base_rep.gamma_of(v) @ np.asarray(phi)


def bullet_from_ambient(imm: Immersion, v, psi) -> np.ndarray:
    """kappa (nu.X.psi)|_M computed on the ambient side."""
    rep = imm.ambient_rep
    X = rep.gamma_of(np.concatenate(([0.0], np.asarray(v, dtype=float))))
    return imm.kappa * imm.alpha.to_base(rep.gammas[0] @ X @ np.asarray(psi))


def _frame_match(imm: Immersion, jz: GeometryJet, jm: GeometryJet) -> None:
    if abs(jz.frame[0, 0] - 1.0) > UNIT_TOL or np.max(np.abs(jz.frame[1:, 1:] - jm.frame)) > 1e-9:
        raise ImmersionError(f"{imm.name}: ambient frame does not restrict to the base frame")


def weingarten(imm: Immersion, u, jet: Optional[GeometryJet] = None) -> np.ndarray:
    """<W(e_a), e_b> = <nabla^Z_{e_a} e_b, nu> from ambient jets (base frame indices)."""
    jz = jet or geometry_jet(imm.ambient, imm.embedding(u), curvature=False)
    w = jz.frame_connection[1:, 1:, 0]
    return 0.5 * (w + w.T)


def weingarten_asymmetry(imm: Immersion, u) -> float:
    jz = geometry_jet(imm.ambient, imm.embedding(u), curvature=False)
    w = jz.frame_connection[1:, 1:, 0]
    return float(np.max(np.abs(w - w.T)))


def weingarten_endomorphism(wform: np.ndarray, eps) -> np.ndarray:
    """Matrix M with W(e_a) = sum_b M[b, a] e_b."""
    return (np.asarray(wform) * np.asarray(eps)[None, :]).T


def mean_curvature(wform: np.ndarray, eps) -> float:
    return float(np.trace(weingarten_endomorphism(wform, eps)) / len(eps))


def gauss_formula_residual(imm: Immersion, field: SmoothSpinorField, u, a: int) -> np.ndarray:
    """(nabla^Z_X psi)|_M - nabla^M_X phi + (kappa/2) W(X).phi for X = e_a."""
    u = np.asarray(u, dtype=float)
    imm.check(u)
    y = imm.embedding(u)
    sjz = spinc_jet(imm.ambient, y, imm.ambient_rep)
    nab_z = covariant_derivatives(field, imm.ambient, y, sjz)
    lhs = imm.alpha.to_base(nab_z[a + 1])
    phi_field = imm.restrict(field)
    sjm = spinc_jet(imm.base, u, imm.base_rep)
    _frame_match(imm, sjz.jet, sjm.jet)
    nab_m = covariant_derivatives(phi_field, imm.base, u, sjm)
    wmat = weingarten_endomorphism(weingarten(imm, u, sjz.jet), sjm.jet.eps)
    return lhs - nab_m[a] + 0.5 * imm.kappa * bullet(imm, wmat[:, a], phi_field(u))


def dirac_gauss_residual(imm: Immersion, field: SmoothSpinorField, u) -> np.ndarray:
    """nu.D^Z psi - D~ phi - i^s (n/2) H phi + i^s nabla_nu psi, restricted; D~ = kappa D^M."""
    u = np.asarray(u, dtype=float)
    imm.check(u)
    y = imm.embedding(u)
    repz = imm.ambient_rep
    sjz = spinc_jet(imm.ambient, y, repz)
    nab_z = covariant_derivatives(field, imm.ambient, y, sjz)
    dz = dirac_from_derivatives(repz, sjz.jet.eps, nab_z)
    lhs = imm.alpha.to_base(repz.gammas[0] @ dz)
    nab_nu = imm.alpha.to_base(nab_z[0])
    phi_field = imm.restrict(field)
    sjm = spinc_jet(imm.base, u, imm.base_rep)
    dm = dirac_pointwise(phi_field, imm.base, u, sjm)
    n = imm.base.dim
    H = mean_curvature(weingarten(imm, u, sjz.jet), sjm.jet.eps)
    i_s = ipow(imm.base.signature.s)
    phi = phi_field(u)
    return lhs - imm.kappa * dm - i_s * 0.5 * n * H * phi + i_s * nab_nu


def omega_split_residuals(imm: Immersion, field: SmoothSpinorField, u) -> tuple[float, np.ndarray]:
    """Scalar |O^Z|^2 - |O^M|^2 - |nu-|O^Z|^2 and spinor (O^Z.psi)|_M - O^M.phi - (nu-|O^Z).phi."""
    u = np.asarray(u, dtype=float)
    y = imm.embedding(u)
    sjz = spinc_jet(imm.ambient, y, imm.ambient_rep)
    sjm = spinc_jet(imm.base, u, imm.base_rep)
    oz, om = sjz.omega, sjm.omega
    nu = np.zeros(imm.ambient.dim)
    nu[0] = 1.0
    inner = interior_vector(imm.ambient.signature, oz, nu)[1:]
    scalar = two_form_norm(oz) ** 2 - two_form_norm(om) ** 2 - float(np.sum(inner ** 2))
    psi = field(y)
    lhs = imm.alpha.to_base(two_form_matrix(imm.ambient_rep, oz) @ psi)
    phi = imm.alpha.to_base(psi)
    spinor = (lhs - two_form_matrix(imm.base_rep, om) @ phi
              - imm.kappa * bullet(imm, inner, phi))
    return float(scalar), spinor


@dataclass(frozen=True)
class ParallelRestrictionReport:
    u: tuple
    ell_plus_half_w: float  # || 2 ell^phi + W ||
    equality_quantity: float
    c_n: float
    H: float
    parallel_defect: float
    eigen_residual: float  # || D~ phi + (n/2) H phi ||


def c_n(n: int) -> float:
    return 2.0 * np.sqrt(n // 2)


def parallel_defect(imm: Immersion, field: SmoothSpinorField, y) -> float:
    nab = covariant_derivatives(field, imm.ambient, y, spinc_jet(imm.ambient, y, imm.ambient_rep))
    return float(np.max(np.abs(nab)))


def morel_check(imm: Immersion, field: SmoothSpinorField, u, *, parallel_tol: float = 1e-6) -> ParallelRestrictionReport:
    u = np.asarray(u, dtype=float)
    y = imm.embedding(u)
    defect = parallel_defect(imm, field, y)
    if defect > parallel_tol:
        raise NotParallelError(f"ambient field is not parallel at {y.tolist()}: {defect:.3e}")
    sjz = spinc_jet(imm.ambient, y, imm.ambient_rep, curvature=True)
    w = weingarten(imm, u, sjz.jet)
    phi_field = imm.restrict(field)
    sjm = spinc_jet(imm.base, u, imm.base_rep)
    em = em_tensor(phi_field, imm.base, u, sj=sjm)
    if em.ell is None:
        raise NotParallelError("restricted spinor vanishes")
    n = imm.base.dim
    equality = sjz.jet.scalar - 2.0 * sjz.jet.ricci[0, 0] - c_n(n) * sjm.omega_norm
    H = mean_curvature(w, sjm.jet.eps)
    dm = dirac_pointwise(phi_field, imm.base, u, sjm)
    eig = float(np.max(np.abs(imm.kappa * dm + 0.5 * n * H * phi_field(u))))
    return ParallelRestrictionReport(tuple(u.tolist()), float(np.max(np.abs(2.0 * em.ell + w))), float(equality),
                       c_n(n), H, defect, eig)


# -- model immersions ---------------------------------------------------------

def _polar_rotor(rep: GammaRep, theta: float, phi: float, inward: bool) -> np.ndarray:
    """Spin lift of the polar frame (r or -r, theta-hat, phi-hat) relative to (+-z, x, y)."""
    sgn = -1.0 if inward else 1.0
    g0, g1, g2 = rep.gammas
    eye = np.eye(rep.dim, dtype=complex)
    uy = np.cos(theta / 2) * eye + np.sin(theta / 2) * sgn * (g0 @ g1)
    uz = np.cos(phi / 2) * eye + np.sin(phi / 2) * (g1 @ g2)
    return uz @ uy


def parallel_spinor_polar(sigma, inward: bool = False) -> SmoothSpinorField:
    """Parallel spinor of flat R^3 expressed in the polar-chart frame."""
    rep = build_gamma_rep(get_scenario("r3-polar-outward").signature)
    sigma = np.asarray(sigma, dtype=complex)

    def fn(y):
        return np.linalg.solve(_polar_rotor(rep, y[1], y[2], inward), sigma)

    return SmoothSpinorField(fn, rep.dim, "parallel-r3")


def _warped(n: int, t0: float, kappa: int = 1) -> Immersion:
    base_family = cylinder_conformal(n)
    amb = cylinder_ambient(base_family, (-0.5, 0.5))
    base = torus_flat(n, metric=(1.0 + t0) ** 2 * np.eye(n), name=f"torus{n}-scaled")
    return Immersion(f"torus{n}-in-warped-cylinder", amb, base, t0, kappa,
                     "slice of dt^2 + (1+t)^2 g_flat")


def _fourier_with_connection(t0: float = 0.1) -> Immersion:
    fam = cylinder_fourier(2)

    def a_amb(y):
        t, x1, x2 = y
        return np.array([0.2 * np.sin(x1) + 0.1 * t,
                         0.3 * np.cos(x2) + 0.5 * t * np.sin(x1 + x2),
                         0.4 * x1 + 0.25 * t * t * np.cos(x1)])

    amb = cylinder_ambient(fam, (-0.3, 0.3), connection=a_amb)
    base = Scenario("torus2-fourier-slice", fam.signature, lambda x: fam.family(t0, x), fam.lower,
                    fam.upper, fam.periodic, connection_fn=lambda x: a_amb(np.concatenate(([t0], x)))[1:],
                    description="slice of the Fourier cylinder with restricted connection")
    return Immersion("torus2-in-fourier-cylinder", amb, base, t0, 1,
                     "curved cylinder slice with a generic ambient connection")


def _flat_slice() -> Immersion:
    amb = cylinder_ambient(cylinder_static(2), (-0.5, 0.5))
    return Immersion("torus2-flat-slice", amb, torus_flat(2), 0.0, 1, "slice of a product cylinder")


def _sphere(inward: bool) -> Immersion:
    amb = get_scenario("r3-polar-inward" if inward else "r3-polar-outward")
    return Immersion("sphere2-in-r3" + ("-inward" if inward else ""), amb, get_scenario("sphere2-unit"),
                     0.0, 1, "unit sphere in Euclidean 3-space, normal " + ("inward" if inward else "outward"))


_IMMERSIONS: dict[str, Callable[[], Immersion]] = {
    "sphere2-in-r3": lambda: _sphere(False),
    "sphere2-in-r3-inward": lambda: _sphere(True),
    "torus2-flat-slice": _flat_slice,
    "torus2-in-warped-cylinder": lambda: _warped(2, 0.2),
    "torus3-in-warped-cylinder": lambda: _warped(3, 0.2),
    "torus3-in-warped-cylinder-minus": lambda: _warped(3, 0.2, -1),
    "torus2-in-fourier-cylinder": _fourier_with_connection,
}


def immersion_names() -> list[str]:
    return sorted(_IMMERSIONS)


def get_immersion(name: str) -> Immersion:
    from .scenarios import UnknownScenarioError
    try:
        return _IMMERSIONS[name]()
    except KeyError:
        raise UnknownScenarioError(f"unknown immersion {name!r}") from None


def default_ambient_field(imm: Immersion, kind: str = "auto", seed: int = 0) -> SmoothSpinorField:
    """Parallel field for the sphere immersions, a smooth generic field otherwise."""
    d = imm.ambient_rep.dim
    rng = np.random.default_rng(seed)
    sigma = rng.normal(size=d) + 1j * rng.normal(size=d)
    sigma /= np.linalg.norm(sigma)
    if kind == "parallel" or (kind == "auto" and imm.name.startswith("sphere2-in-r3")):
        if not imm.name.startswith("sphere2-in-r3"):
            if imm.name == "torus2-flat-slice":
                from .spinc import constant_field
                return constant_field(sigma, "parallel")
            raise ValueError(f"no closed-form parallel spinor for {imm.name}")
        return parallel_spinor_polar(sigma, inward=imm.name.endswith("inward"))
    n1 = imm.ambient.dim
    coeffs = rng.normal(size=(d, 3)) + 1j * rng.normal(size=(d, 3))
    freqs = rng.integers(-1, 2, size=(d, 3, n1 - 1))

    def fn(y):
        t, x = y[0], y[1:]
        out = np.empty(d, dtype=complex)
        for a in range(d):
            out[a] = (coeffs[a, 0] * (1 + 0.5 * t) * np.exp(1j * freqs[a, 0] @ x)
                      + coeffs[a, 1] * t * t * np.exp(1j * freqs[a, 1] @ x)
                      + coeffs[a, 2] * np.cos(freqs[a, 2] @ x + t))
        return out

    return SmoothSpinorField(fn, d, "generic")
