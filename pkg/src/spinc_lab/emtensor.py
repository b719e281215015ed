"""Energy-Momentum tensor of spinor fields, generalized Killing and Codazzi residuals."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .geometry import Scenario, covariant_derivative_endomorphism, geometry_jet
from .spinc import (SmoothSpinorField, SpincConnectionJet, covariant_derivatives, hermitian,
                    norm_sq, spinc_jet)

NORM_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class EMTensorValue:
    x: np.ndarray
    T: np.ndarray  # T_psi(e_a, e_b), unnormalized
    norm_sq: float
    ell: Optional[np.ndarray] = None  # T / |psi|^2, absent on the zero set

    @property
    def in_zero_set(self) -> bool:
        return self.ell is None

    def ell_norm_sq(self) -> Optional[float]:
        return None if self.ell is None else float(np.sum(self.ell ** 2))


def em_from_derivatives(sj: SpincConnectionJet, psi, nabla) -> np.ndarray:
    """T(e_a,e_b) = 1/2 Re<e_a.nabla_b psi + e_b.nabla_a psi, psi>."""
    rep = sj.rep
    n = sj.n
    q = np.array([[hermitian(rep, rep.gammas[a] @ nabla[b], psi).real for b in range(n)]
                  for a in range(n)])
    return 0.5 * (q + q.T)


def em_tensor(field: SmoothSpinorField, scenario: Scenario, x, *,
              sj: Optional[SpincConnectionJet] = None,
              reference_norm_sq: float = 1.0) -> EMTensorValue:
    """EM tensor at x; ``reference_norm_sq`` is the field's max |psi|^2 for the zero-set floor."""
    x = np.asarray(x, dtype=float)
    sj = sj or spinc_jet(scenario, x)
    psi = field(x)
    T = em_from_derivatives(sj, psi, covariant_derivatives(field, scenario, x, sj))
    nsq = norm_sq(sj.rep, psi)
    ell = T / nsq if abs(nsq) >= NORM_FLOOR * reference_norm_sq else None
    return EMTensorValue(x, T, nsq, ell)


def frame_image(jet, F_coords, a: int) -> np.ndarray:
    """Frame coefficients of F(e_a) for an endomorphism given in coordinates."""
    return np.linalg.solve(jet.frame, np.asarray(F_coords) @ jet.frame[:, a])


def endomorphism_in_frame(jet, F_coords) -> np.ndarray:
    """Matrix M with F(e_a) = sum_b M[b, a] e_b."""
    return np.linalg.solve(jet.frame, np.asarray(F_coords) @ jet.frame)


def killing_residual(field: SmoothSpinorField, F: Callable, scenario: Scenario, x, a: int,
                     sj: Optional[SpincConnectionJet] = None) -> np.ndarray:
    """nabla_{e_a} psi - 1/2 F(e_a).psi, with F an endomorphism field in coordinates."""
    x = np.asarray(x, dtype=float)
    sj = sj or spinc_jet(scenario, x)
    Fx = np.asarray(F(x))
    if np.max(np.abs(sj.jet.metric @ Fx - (sj.jet.metric @ Fx).T)) > 1e-10 * max(1.0, np.max(np.abs(Fx))):
        raise ValueError("F is not symmetric with respect to the metric")
    nab = covariant_derivatives(field, scenario, x, sj)
    return nab[a] - 0.5 * sj.rep.gamma_of(frame_image(sj.jet, Fx, a)) @ field(x)


def max_killing_residual(field, F, scenario, points) -> float:
    worst = 0.0
    for x in points:
        sj = spinc_jet(scenario, x)
        for a in range(scenario.dim):
            worst = max(worst, float(np.linalg.norm(killing_residual(field, F, scenario, x, a, sj))))
    return worst


def codazzi_residual(F: Callable, scenario: Scenario, x, a: int, b: int) -> np.ndarray:
    """Frame components of (nabla_{e_a} F)(e_b) - (nabla_{e_b} F)(e_a)."""
    x = np.asarray(x, dtype=float)
    jet = geometry_jet(scenario, x, curvature=False)
    nf = covariant_derivative_endomorphism(scenario.metric, F, x, scenario.bounds)  # [k, i, j]
    E = jet.frame
    v = (np.einsum("k,kij,j->i", E[:, a], nf, E[:, b])
         - np.einsum("k,kij,j->i", E[:, b], nf, E[:, a]))
    return np.linalg.solve(E, v)


def max_codazzi_residual(F, scenario, points) -> float:
    n = scenario.dim
    worst = 0.0
    for x in points:
        for a in range(n):
            for b in range(a + 1, n):
                worst = max(worst, float(np.linalg.norm(codazzi_residual(F, scenario, x, a, b))))
    return worst


def killing_em_defect(value: EMTensorValue, F_frame: np.ndarray, metric_eps) -> float:
    """|| 2 T^psi + <F(.), .> || in frame components."""
    if value.ell is None:
        return float("nan")
    gF = np.diag(metric_eps) @ F_frame
    return float(np.max(np.abs(2.0 * value.ell + 0.5 * (gF + gF.T))))


def write_em_csv(values: Iterable[EMTensorValue], path: str) -> None:
    values = list(values)
    if not values:
        raise ValueError("no EM tensor values to write")
    n = values[0].T.shape[0]
    header = [f"x{i}" for i in range(len(values[0].x))]
    header += [f"T{a}{b}" for a in range(n) for b in range(a, n)]
    header += ["norm_sq", "ell_norm_sq"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for v in values:
            row = [f"{c:.17g}" for c in v.x]
            row += [f"{v.T[a, b]:.17g}" for a in range(n) for b in range(a, n)]
            ell = v.ell_norm_sq()
            row += [f"{v.norm_sq:.17g}", "" if ell is None else f"{ell:.17g}"]
            w.writerow(row)
