"""Verification suites shared by the command line and the acceptance tests.

Every suite takes a RunConfig-like object (attributes read with getattr) and
returns ``(checks, data)``.
"""
from __future__ import annotations

from typing import Any, Callable

import numpy as np

from . import cylinder as cy
from . import hypersurface as hs
from . import lattice as lat
from . import varbounds as vb
from .report import CheckRecord, check
from .scenarios import get_scenario
from .spinc import (SmoothSpinorField, curvature_commutator, ricci_identity_residual, spinc_jet,
                    spinor_curvature, spinor_literal)

ANCHORS = {
    "gauss": "spinorial Gauss formula for the restricted spinor",
    "dirac-gauss": "hypersurface Dirac operator versus ambient Dirac and mean curvature",
    "omega-split": "splitting of the ambient curvature form into tangential and normal parts",
    "morel": "parallel ambient spinor gives 2 ell + W = 0 and the equality case quantity",
    "cylinder-curvature": "generalized cylinder: Weingarten map, Gauss, Codazzi and Riccati relations",
    "bala": "Codazzi tensor lemma: Killing data on slices",
    "commutator": "commutator of the normal derivative with the leafwise Dirac operator",
    "killing-to-parallel": "generalized Killing spinor with Codazzi F extends to a parallel spinor",
    "ricci-identity": "Ricci identity with the line-bundle curvature term",
    "curvature-commutator": "spinor curvature equals the commutator of covariant derivatives",
    "spectrum": "Dirac spectrum of the lattice operator",
    "variation": "first variation of the Dirac form in terms of the Energy-Momentum tensor",
    "variation-operator": "derivative of the transported Dirac operator along g + t k",
    "frkim": "critical points of the Einstein-Dirac Lagrange functional",
    "bound": "eigenvalue lower bound with scalar curvature, curvature form and Energy-Momentum tensor",
    "bound-limiting": "limiting-case system for the eigenvalue bound",
}

DEFAULT_TOL = {
    "gauss": 1e-5, "dirac-gauss": 1e-5, "omega-split": 1e-5, "morel": 1e-6,
    "cylinder-curvature": 1e-5, "bala": 1e-5, "commutator": 1e-4, "killing-to-parallel": 1e-4,
    "ricci-identity": 1e-5, "curvature-commutator": 1e-5, "spectrum": 1e-10, "variation": 5e-3,
    "frkim": 1e-4, "bound": 0.0,
}

DEFAULT_TARGET = {
    "gauss": "sphere2-in-r3", "dirac-gauss": "sphere2-in-r3", "omega-split": "torus2-in-fourier-cylinder",
    "morel": "sphere2-in-r3", "cylinder-curvature": "cylinder-conformal-torus2",
    "bala": "cylinder-F-constant", "commutator": "cylinder-conformal-torus2",
    "killing-to-parallel": "cylinder-sphere-cone", "ricci-identity": "torus2-perturbed",
    "curvature-commutator": "torus2-perturbed",
}

SCENARIO_ALIASES = {"torus-magnetic": "torus2-magnetic", "torus-flat": "torus2-flat"}

VERIFY_CHECKS = tuple(DEFAULT_TARGET)


def _tol(cfg, name: str) -> float:
    t = getattr(cfg, "tol", None)
    return DEFAULT_TOL[name] if t is None else float(t)


def _target(cfg, name: str) -> str:
    return getattr(cfg, "scenario", None) or DEFAULT_TARGET[name]


def _rng(cfg) -> np.random.Generator:
    return np.random.default_rng(int(cfg.seed))


def random_literal_field(rng: np.random.Generator, n: int, d: int) -> SmoothSpinorField:
    """Seeded smooth spinor field from the literal grammar (one trig-polynomial term per slot)."""
    lit = {"components": [[{"c": [float(rng.normal()), float(rng.normal())],
                            "powers": [int(v) for v in rng.integers(0, 2, n)],
                            "freq": [float(v) for v in rng.integers(-1, 2, n)]}] for _ in range(d)]}
    return spinor_literal(lit, n, d)


def resolve_scenario(name: str, flux=None):
    name = SCENARIO_ALIASES.get(name, name)
    if flux is not None and name == "torus2-magnetic":
        return get_scenario(name, flux=flux)
    if flux not in (None, 0) and name != "torus2-magnetic":
        raise ValueError(f"scenario {name!r} does not take a flux")
    return get_scenario(name)


# ---------------------------------------------------------------- pointwise suites

def _hypersurface(cfg, name: str):
    imm = hs.get_immersion(_target(cfg, name))
    rng = _rng(cfg)
    field = hs.default_ambient_field(imm, "auto", seed=int(cfg.seed))
    pts = imm.base.sample(rng, int(cfg.samples))
    return imm, field, pts


def verify_gauss(cfg):
    imm, field, pts = _hypersurface(cfg, "gauss")
    worst = max(float(np.max(np.abs(hs.gauss_formula_residual(imm, field, u, a))))
                for u in pts for a in range(imm.base.dim))
    return [check("gauss", ANCHORS["gauss"], worst, _tol(cfg, "gauss"), pts)], {"immersion": imm.name,
                                                                               "field": field.label}


def verify_dirac_gauss(cfg):
    imm, field, pts = _hypersurface(cfg, "dirac-gauss")
    worst = max(float(np.max(np.abs(hs.dirac_gauss_residual(imm, field, u)))) for u in pts)
    return [check("dirac-gauss", ANCHORS["dirac-gauss"], worst, _tol(cfg, "dirac-gauss"), pts)], \
        {"immersion": imm.name, "field": field.label}


def verify_omega_split(cfg):
    imm, field, pts = _hypersurface(cfg, "omega-split")
    s_w = v_w = 0.0
    for u in pts:
        s, v = hs.omega_split_residuals(imm, field, u)
        s_w, v_w = max(s_w, abs(float(s))), max(v_w, float(np.max(np.abs(v))))
    tol = _tol(cfg, "omega-split")
    return [check("omega-split-scalar", ANCHORS["omega-split"], s_w, tol, pts),
            check("omega-split-spinor", ANCHORS["omega-split"], v_w, tol)], {"immersion": imm.name}


def verify_morel(cfg):
    imm, field, pts = _hypersurface(cfg, "morel")
    reps = [hs.morel_check(imm, field, u) for u in pts]
    tol = _tol(cfg, "morel")
    return [check("morel-ell", ANCHORS["morel"], max(r.ell_plus_half_w for r in reps), tol, pts),
            check("morel-equality-quantity", ANCHORS["morel"], max(abs(r.equality_quantity) for r in reps), tol),
            check("morel-eigen", ANCHORS["morel"], max(r.eigen_residual for r in reps), tol)], \
        {"immersion": imm.name, "c_n": reps[0].c_n, "mean_curvature": [r.H for r in reps]}


def _cylinder_points(cfg, cyl):
    rng = _rng(cfg)
    pts = cyl.base.sample(rng, int(cfg.samples))
    t0, t1 = cyl.t_interval
    ts = 0.8 * (t0 + (t1 - t0) * rng.random(len(pts)))
    return pts, ts


def verify_cylinder_curvature(cfg):
    cyl = cy.cylinder(_target(cfg, "cylinder-curvature"))
    pts, ts = _cylinder_points(cfg, cyl)
    worst: dict = {}
    for x, t in zip(pts, ts):
        for k, v in cy.cylinder_curvature_residuals(cyl, x, t).items():
            worst[k] = max(worst.get(k, 0.0), float(v))
    tol = _tol(cfg, "cylinder-curvature")
    samples = [np.concatenate(([t], x)) for x, t in zip(pts, ts)]
    out = [check(f"cylinder-{k}", ANCHORS["cylinder-curvature"], worst[k], tol,
                 samples if i == 0 else ()) for i, k in enumerate(sorted(worst))]
    return out, {"cylinder": cyl.name}


def verify_bala(cfg):
    name = _target(cfg, "bala")
    cyl = cy.cylinder(name)
    pts, ts = _cylinder_points(cfg, cyl)
    first = second = 0.0
    for x, t in zip(pts, ts):
        a, b = cy.bala_residuals(cyl, x, t)
        first, second = max(first, float(a)), max(second, float(b))
    tol = _tol(cfg, "bala")
    codazzi = bool(cyl.base.params.get("codazzi", True))
    out = [check("bala-first", ANCHORS["bala"], first, tol, [np.concatenate(([t], x)) for x, t in zip(pts, ts)])]
    if codazzi:
        out.append(check("bala-second", ANCHORS["bala"], second, tol))
    else:
        # F is not Codazzi: the second residual must be visibly nonzero
        out.append(check("bala-second-nonzero", ANCHORS["bala"], second, 1e-3, mode="min"))
    return out, {"cylinder": cyl.name, "codazzi": codazzi}


def _commutator_target(name: str):
    if name == "box2-connection":
        return cy.flat_box_with_field()
    return cy.cylinder(name)


def verify_commutator(cfg):
    cyl = _commutator_target(_target(cfg, "commutator"))
    rng = _rng(cfg)
    d = cyl.rep.dim
    c = rng.normal(size=(d, 2)) + 1j * rng.normal(size=(d, 2))
    field = SmoothSpinorField(lambda y: c[:, 0] * np.exp(1j * (y[1] + 2 * y[-1])) * (1 + 0.3 * y[0])
                              + c[:, 1] * np.cos(y[1] - y[0]), d, "seeded-smooth")
    pts, ts = _cylinder_points(cfg, cyl)
    worst = max(float(np.max(np.abs(cy.commutator_residual(cyl, field, x, t)))) for x, t in zip(pts, ts))
    x, t = pts[0], ts[0]
    coarse = float(np.max(np.abs(cy.commutator_residual(cyl, field, x, t, h=0.05))))
    fine = float(np.max(np.abs(cy.commutator_residual(cyl, field, x, t, h=0.025))))
    tol = _tol(cfg, "commutator")
    return [check("commutator", ANCHORS["commutator"], worst, tol,
                  [np.concatenate(([t], x)) for x, t in zip(pts, ts)]),
            check("commutator-refinement-ratio", ANCHORS["commutator"], coarse / fine, 2.0, mode="min",
                  coarse=coarse, fine=fine)], {"cylinder": cyl.name}


def verify_killing_to_parallel(cfg):
    name = _target(cfg, "killing-to-parallel")
    rng = _rng(cfg)
    if name == "box2-rank-one":
        cyl, phi = cy.rank_one_killing()
    else:
        cyl = cy.cylinder(name)
        sign = -1 if name == "cylinder-sphere-cone" else 1
        sigma = rng.normal(size=2) + 1j * rng.normal(size=2)
        phi = cy.sphere_killing_spinor(sigma / np.linalg.norm(sigma), sign)
    pts = cyl.base.sample(rng, int(cfg.samples))
    pc = cy.build_parallel_from_killing(cyl, phi, pts)
    t0, t1 = cyl.t_interval
    times = [0.6 * t0, 0.0, 0.4 * t1, 0.8 * t1]
    res = pc.residuals(pts, times)
    restr = max(float(np.max(np.abs(pc.field(np.concatenate(([0.0], x)))
                                    - hs._alpha(cyl.base.signature.r, cyl.base.signature.s, 1)
                                    .to_ambient(phi(x))))) for x in pts)
    tol = _tol(cfg, "killing-to-parallel")
    return [check("parallel-tangential", ANCHORS["killing-to-parallel"], res["tangential"], tol, pts),
            check("parallel-normal", ANCHORS["killing-to-parallel"], res["normal"], tol),
            check("restriction-at-zero", ANCHORS["killing-to-parallel"], restr, 0.0)], \
        {"cylinder": cyl.name, "killing_defect": pc.killing_defect, "codazzi_defect": pc.codazzi_defect,
         "times": times}


def _curvature_inputs(cfg, name):
    sc = resolve_scenario(_target(cfg, name))
    rng = _rng(cfg)
    field = random_literal_field(rng, sc.dim, 2 ** (sc.dim // 2))
    return sc, field, sc.sample(rng, int(cfg.samples))


def verify_ricci_identity(cfg):
    sc, field, pts = _curvature_inputs(cfg, "ricci-identity")
    worst = 0.0
    for x in pts:
        sj = spinc_jet(sc, x, curvature=True)
        for a in range(sc.dim):
            worst = max(worst, float(np.max(np.abs(ricci_identity_residual(field, sc, x, a, sj)))))
    return [check("ricci-identity", ANCHORS["ricci-identity"], worst, _tol(cfg, "ricci-identity"), pts)], \
        {"scenario": sc.name}


def verify_curvature_commutator(cfg):
    sc, field, pts = _curvature_inputs(cfg, "curvature-commutator")
    worst = 0.0
    for x in pts:
        sj = spinc_jet(sc, x, curvature=True)
        for a in range(sc.dim):
            for b in range(a + 1, sc.dim):
                r = spinor_curvature(field, sc, x, a, b, sj) - curvature_commutator(field, sc, x, a, b)
                worst = max(worst, float(np.max(np.abs(r))))
    return [check("curvature-commutator", ANCHORS["curvature-commutator"], worst,
                  _tol(cfg, "curvature-commutator"), pts)], {"scenario": sc.name}


VERIFY: dict[str, Callable] = {
    "gauss": verify_gauss, "dirac-gauss": verify_dirac_gauss, "omega-split": verify_omega_split,
    "morel": verify_morel, "cylinder-curvature": verify_cylinder_curvature, "bala": verify_bala,
    "commutator": verify_commutator, "killing-to-parallel": verify_killing_to_parallel,
    "ricci-identity": verify_ricci_identity, "curvature-commutator": verify_curvature_commutator,
}


# ---------------------------------------------------------------- lattice suites

def run_spectrum(cfg):
    sc = resolve_scenario(cfg.scenario or "torus2-flat", cfg.flux)
    N, k = int(cfg.grid or 16), int(cfg.eigs or 8)
    D = lat.assemble_dirac(sc, N)
    if N >= 16:
        res = lat.two_grid_spectrum(sc, N, k)
    else:
        res = lat.spectrum(D, k, vectors=True)
    herm = D.hermiticity_defect()
    checks = [check("hermiticity", ANCHORS["spectrum"], herm, 1e-10)]
    data: dict[str, Any] = {"scenario": sc.name, "grid": N, "solver": res.solver,
                            "eigenvalues": res.eigenvalues, "convergence": res.convergence}
    ref = sc.reference
    if "zero_modes" in ref:
        near = int(np.sum(np.abs(res.eigenvalues) <= 0.05))
        checks.append(check("zero-mode-count", ANCHORS["spectrum"], abs(near - ref["zero_modes"]), 0.0,
                            count=near, expected=ref["zero_modes"]))
        excited = res.eigenvalues[np.abs(res.eigenvalues) > 0.05]
        if excited.size:
            rel = abs(float(np.min(excited ** 2)) - ref["first_excited_sq"]) / ref["first_excited_sq"]
            checks.append(check("first-excited-level", ANCHORS["spectrum"], rel, 0.05))
        data["zero_modes"] = [float(v) for v in res.eigenvalues if abs(v) <= 0.05]
    elif sc.name.startswith("torus") and sc.name.endswith("-flat") and sc.dim == 2:
        orc = lat.fourier_oracle(sc.upper - sc.lower)
        got = np.sort(np.abs(res.eigenvalues))
        want = np.sort(np.abs(orc))[:len(got)]
        checks.append(check("fourier-oracle", ANCHORS["spectrum"], float(np.max(np.abs(got - want))), 0.02))
    if cfg.dump_eigenvectors:
        dump_eigenvectors(cfg.dump_eigenvectors, D.grid, res)
    if cfg.csv:
        write_eigenvalue_csv(cfg.csv, res)
    if cfg.dump_operator:
        D.dump(cfg.dump_operator)
    return checks, data


def write_eigenvalue_csv(path: str, res: lat.SpectrumResult) -> None:
    from .report import write_atomic
    lines = ["index,lambda,convergence"]
    conv = res.convergence if res.convergence is not None else [float("nan")] * len(res.eigenvalues)
    lines += [f"{i},{lam:.17g},{c:.17g}" for i, (lam, c) in enumerate(zip(res.eigenvalues, conv))]
    write_atomic(path, "\n".join(lines) + "\n")


def dump_eigenvectors(path: str, grid: lat.LatticeGrid, res: lat.SpectrumResult) -> None:
    from .report import write_atomic
    X = grid.coords()
    vecs = res.eigenvectors
    d = vecs.shape[0] // grid.sites
    head = ["site"] + [f"x{i}" for i in range(grid.n)]
    for j in range(vecs.shape[1]):
        head += [f"v{j}_c{a}_{part}" for a in range(d) for part in ("re", "im")]
    rows = [",".join(head)]
    for s in range(grid.sites):
        row = [str(s)] + [f"{c:.17g}" for c in X[s]]
        for j in range(vecs.shape[1]):
            for a in range(d):
                z = vecs[s * d + a, j]
                row += [f"{z.real:.17g}", f"{z.imag:.17g}"]
        rows.append(",".join(row))
    write_atomic(path, "\n".join(rows) + "\n")


def run_variation(cfg):
    sc = resolve_scenario(cfg.scenario or "torus2-flat")
    N, h = int(cfg.grid or 24), float(cfg.h or 1e-3)
    k = cfg.k or "diag-sin-x2"
    psi = cfg.psi or "plane:1,0"
    tol = _tol(cfg, "variation")
    const = float(cfg.pairing_constant if cfg.pairing_constant is not None else 1.0)
    data: dict[str, Any] = {}
    if cfg.calibrate:
        cal = vb.calibrate_pairing(N, h)
        const = float(cal["resolved"])
        data["calibration"] = cal
    run = vb.FamilyRun(sc, k, N)
    rep = vb.variation_check(sc, k, psi, N, h, pairing_constant=const, run=run)
    op = vb.dirac_variation_operator_check(sc, k, psi, N, h, run=run)
    data.update({"variation": rep.to_dict(), "operator": op})
    return [check("variation-form", ANCHORS["variation"], rep.agreement, tol, lhs=rep.lhs, rhs=rep.rhs),
            check("variation-fit-oracle", ANCHORS["variation"], abs(rep.fit_slope - rep.lhs), tol),
            check("variation-operator", ANCHORS["variation-operator"], op["residual"], tol)], data


def run_frkim(cfg):
    sc = resolve_scenario(cfg.scenario or "torus2-flat")
    lam = "auto" if cfg.lam in (None, "auto") else float(cfg.lam)
    eps = 1.0 if cfg.eps is None else float(cfg.eps)
    tol = _tol(cfg, "frkim")
    scan = vb.frkim_scan(sc, cfg.psi or "parallel", lam, eps, int(cfg.grid or 16), float(cfg.h or 1e-3),
                         tol=tol)
    checks = []
    for i, m in enumerate(scan["modes"]):
        checks.append(check(f"frkim-mode-{i}", ANCHORS["frkim"], m["agreement"], tol * m["scale"],
                            dW_dt=m["dW_dt"], pairing=m["pairing"]))
    checks.append(check("frkim-eigen", ANCHORS["frkim"], scan["modes"][0]["eigen_residual"], tol))
    return checks, {"critical": scan["critical"], "pairings_vanish": scan["pairings_vanish"],
                    "modes": scan["modes"], "constant": scan["modes"][0]["constant"]}


def run_bound(cfg):
    sc = resolve_scenario(cfg.scenario or "torus2-magnetic", cfg.flux)
    N, k = int(cfg.grid or 24), int(cfg.eigs or 8)
    reps = vb.bound_check(sc, N, k)
    checks = [check(f"bound-margin-{r.index}", ANCHORS["bound"], r.margin + r.tol_disc, 0.0, mode="min",
                    eigenvalue=r.eigenvalue, margin=r.margin, tol_disc=r.tol_disc) for r in reps]
    checks += [check(f"bound-limiting-{r.index}", ANCHORS["bound-limiting"],
                     max(r.limiting_nabla, r.limiting_omega), 0.0, asserted=False,
                     nabla=r.limiting_nabla, omega=r.limiting_omega) for r in reps]
    zero = [r.to_dict() for r in reps if abs(r.eigenvalue) <= 0.05]
    return checks, {"scenario": sc.name, "grid": N, "c_n": vb.c_n(sc.dim),
                    "pairs": [r.to_dict() for r in reps], "zero_modes": zero}


COMMANDS: dict[str, Callable] = {"spectrum": run_spectrum, "variation": run_variation,
                                 "frkim": run_frkim, "bound": run_bound}
