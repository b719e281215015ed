"""Catalog of model manifolds, metric families and cylinder ambients."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .clifford import Signature
from .geometry import Scenario

TWO_PI = 2.0 * np.pi
POLE_CAP = 0.1


class UnknownScenarioError(KeyError):
    pass


@dataclass(frozen=True)
class FourierTerm:
    i: int
    j: int
    amp: float
    freq: tuple
    phase: float = 0.0


@dataclass(frozen=True)
class FourierTensor:
    """Symmetric tensor field sum amp*cos(freq.x + phase) in slots (i,j) and (j,i)."""

    n: int
    terms: tuple = ()
    constant: Optional[tuple] = None

    @classmethod
    def from_json(cls, n: int, spec) -> "FourierTensor":
        if isinstance(spec, dict):
            const = spec.get("constant")
            terms = spec.get("terms", [])
        else:
            const, terms = None, spec
        out = []
        for t in terms:
            unknown = set(t) - {"i", "j", "amp", "freq", "phase"}
            if unknown:
                raise ValueError(f"unknown Fourier term keys {sorted(unknown)}")
            out.append(FourierTerm(int(t["i"]), int(t["j"]), float(t["amp"]),
                                   tuple(float(v) for v in t["freq"]), float(t.get("phase", 0.0))))
        c = None if const is None else tuple(tuple(float(v) for v in row) for row in const)
        return cls(n, tuple(out), c)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k = np.zeros((self.n, self.n)) if self.constant is None else np.array(self.constant)
        for t in self.terms:
            v = t.amp * np.cos(np.dot(t.freq, x) + t.phase)
            k[t.i, t.j] += v
            if t.i != t.j:
                k[t.j, t.i] += v
        return k

    def dt(self) -> "FourierTensor":
        return self

    def to_json(self) -> dict:
        return {"constant": None if self.constant is None else [list(r) for r in self.constant],
                "terms": [{"i": t.i, "j": t.j, "amp": t.amp, "freq": list(t.freq), "phase": t.phase}
                          for t in self.terms]}


def diag_sin_k(n: int = 2, amp: float = 1.0) -> FourierTensor:
    """k = diag(amp*sin x_2, 0, ...)."""
    return FourierTensor(n, (FourierTerm(0, 0, amp, tuple([0.0, 1.0] + [0.0] * (n - 2)), -np.pi / 2),))


def family_from_endomorphism(metric_fn: Callable, F_fn: Callable) -> Callable:
    """g_t(X,Y) = g((id - tF)^2 X, Y)."""
    def fam(t, x):
        g = metric_fn(x)
        a = np.eye(g.shape[0]) - t * np.asarray(F_fn(x))
        m = g @ a @ a
        return 0.5 * (m + m.T)
    return fam


def _torus(name, n, g0=None, periods=None, desc="", **extra) -> Scenario:
    g0 = np.eye(n) if g0 is None else np.asarray(g0, dtype=float)
    periods = np.full(n, TWO_PI) if periods is None else np.asarray(periods, dtype=float)
    return Scenario(name, Signature(n, 0), lambda x: g0.copy(), np.zeros(n), periods,
                    (True,) * n, backends=("pointwise", "lattice"),
                    reference={"scalar": 0.0}, description=desc,
                    params={"metric": g0.tolist(), "periods": periods.tolist()}, **extra)


def torus_flat(n: int = 2, metric=None, periods=None, name=None) -> Scenario:
    return _torus(name or f"torus{n}-flat", n, metric, periods,
                  f"flat {n}-torus with constant metric")


def torus2_perturbed(amp: float = 0.2, k=None) -> Scenario:
    """Flat T^2 metric plus a fixed Fourier perturbation; family g + t k on top."""
    pert = FourierTensor(2, (FourierTerm(0, 0, 1.0, (0.0, 1.0), -np.pi / 2),
                             FourierTerm(0, 1, 0.5, (1.0, 1.0), 0.0),
                             FourierTerm(1, 1, 1.0, (1.0, 0.0), 0.0)))
    kf = diag_sin_k(2) if k is None else FourierTensor.from_json(2, k)

    def metric(x):
        return np.eye(2) + amp * pert(x)

    return Scenario("torus2-perturbed", Signature(2, 0), metric, np.zeros(2), np.full(2, TWO_PI),
                    (True, True), backends=("pointwise", "lattice"),
                    family=lambda t, x: metric(x) + t * kf(x),
                    description="T^2 with a curved Fourier-polynomial metric",
                    params={"amp": amp, "k": kf.to_json()})


def torus_family(n: int = 2, k=None, name=None) -> Scenario:
    """Flat torus with the linear family g + t k used by the variation runs."""
    kf = diag_sin_k(n) if k is None else FourierTensor.from_json(n, k)
    base = torus_flat(n)
    return Scenario(name or f"torus{n}-family", base.signature, base.metric_fn, base.lower,
                    base.upper, base.periodic, backends=("pointwise", "lattice"),
                    family=lambda t, x: np.eye(n) + t * kf(x), reference={"scalar": 0.0},
                    description="flat torus with the family g + t k",
                    params={"k": kf.to_json()})


def sphere2(radius: float = 1.0) -> Scenario:
    R = float(radius)

    def metric(x):
        return R * R * np.diag([1.0, np.sin(x[0]) ** 2])

    return Scenario("sphere2-unit" if R == 1.0 else f"sphere2-r{R:g}", Signature(2, 0), metric,
                    np.array([0.0, 0.0]), np.array([np.pi, TWO_PI]), (False, True),
                    reference={"scalar": 2.0 / R ** 2, "dirac_first_abs": 1.0 / R},
                    sample_margin=POLE_CAP, description="round 2-sphere, polar chart",
                    params={"radius": R})


def sphere2_stereo(radius: float = 1.0, pole: str = "north") -> Scenario:
    R = float(radius)

    def metric(x):
        return (2.0 * R / (1.0 + x @ x)) ** 2 * np.eye(2)

    return Scenario(f"sphere2-stereo-{pole}", Signature(2, 0), metric, np.full(2, -2.0),
                    np.full(2, 2.0), (False, False),
                    reference={"scalar": 2.0 / R ** 2, "dirac_first_abs": 1.0 / R},
                    sample_margin=0.05, description=f"round 2-sphere, stereographic chart from the {pole} pole",
                    params={"radius": R, "pole": pole})


def r3_euclidean() -> Scenario:
    return Scenario("r3-euclidean", Signature(3, 0), lambda x: np.eye(3), np.full(3, -3.0),
                    np.full(3, 3.0), (False,) * 3, reference={"scalar": 0.0},
                    sample_margin=0.05, description="Euclidean 3-space, Cartesian chart")


def cylinder_ambient(base: Scenario, t_interval=(-0.5, 0.5), connection: Optional[Callable] = None,
                     name: Optional[str] = None) -> Scenario:
    """Chart (t, x) of dt^2 + g_t; the connection is pulled back unless given."""
    if base.family is None:
        raise ValueError(f"{base.name} carries no metric family")
    n = base.dim
    fam = base.family

    def metric(y):
        g = np.zeros((n + 1, n + 1))
        g[0, 0] = 1.0
        g[1:, 1:] = fam(y[0], y[1:])
        return g

    if connection is None:
        def connection(y):
            return np.concatenate(([0.0], base.connection(y[1:])))

    t0, t1 = t_interval
    return Scenario(name or f"{base.name}-ambient", base.signature.raised(), metric,
                    np.concatenate(([t0], base.lower)), np.concatenate(([t1], base.upper)),
                    (False,) + tuple(base.periodic), connection_fn=connection,
                    sample_margin=base.sample_margin, description=f"dt^2 + g_t over {base.name}",
                    params={"base": base.name, "t_interval": [t0, t1]})


def _cone_base(radius: float = 1.0, sign: float = -1.0) -> Scenario:
    """Unit sphere with F = sign*id, i.e. g_t = (1 - sign t)^2 g."""
    sph = sphere2(radius)
    F = lambda x: sign * np.eye(2)
    fam = family_from_endomorphism(sph.metric_fn, F)
    return Scenario("cylinder-sphere-cone" if sign < 0 else "cylinder-sphere-cone-inward",
                    sph.signature, sph.metric_fn, sph.lower, sph.upper, sph.periodic,
                    reference=dict(sph.reference), family=fam, sample_margin=POLE_CAP,
                    description="cone over the round sphere, F = %+g id" % sign,
                    params={"radius": radius, "F": "%+g*id" % sign, "t_interval": [-0.5, 0.5],
                            "F_fn": F})


def cylinder_static(n: int = 2) -> Scenario:
    base = torus_flat(n)
    return Scenario(f"cylinder-static-torus{n}", base.signature, base.metric_fn, base.lower,
                    base.upper, base.periodic, family=lambda t, x: np.eye(n),
                    description="product cylinder over a flat torus",
                    params={"t_interval": [-0.5, 0.5]})


def cylinder_conformal(n: int = 2) -> Scenario:
    base = torus_flat(n)
    return Scenario(f"cylinder-conformal-torus{n}", base.signature, base.metric_fn, base.lower,
                    base.upper, base.periodic, family=lambda t, x: (1.0 + t) ** 2 * np.eye(n),
                    description="warped cylinder dt^2 + (1+t)^2 g_flat",
                    params={"t_interval": [-0.5, 0.5], "F_fn": lambda x: -np.eye(n)})


def cylinder_fourier(n: int = 2) -> Scenario:
    """A generic smooth family, quadratic in t with Fourier coefficients."""
    k1 = FourierTensor(n, (FourierTerm(0, 0, 0.3, (0.0, 1.0) + (0.0,) * (n - 2), 0.4),
                           FourierTerm(0, 1, 0.2, (1.0, 1.0) + (0.0,) * (n - 2), 0.0),
                           FourierTerm(1, 1, 0.25, (1.0, 0.0) + (0.0,) * (n - 2), 1.1)))
    k2 = FourierTensor(n, (FourierTerm(0, 0, 0.15, (1.0, 0.0) + (0.0,) * (n - 2), 0.0),
                           FourierTerm(1, 1, 0.1, (0.0, 2.0) + (0.0,) * (n - 2), 0.3),
                           FourierTerm(0, 1, 0.05, (1.0, -1.0) + (0.0,) * (n - 2), 0.7)))
    pert = torus2_perturbed().metric_fn if n == 2 else (lambda x: np.eye(n))

    def fam(t, x):
        return pert(x) + t * k1(x) + 0.5 * t * t * k2(x)

    return Scenario(f"cylinder-fourier-torus{n}", Signature(n, 0), pert, np.zeros(n),
                    np.full(n, TWO_PI), (True,) * n, family=fam,
                    description="generic Fourier family over a curved torus",
                    params={"t_interval": [-0.3, 0.3]})


def cylinder_from_F(name: str, F_fn: Callable, codazzi: bool, desc: str) -> Scenario:
    base = torus_flat(2)
    return Scenario(name, base.signature, base.metric_fn, base.lower, base.upper,
                    base.periodic, family=family_from_endomorphism(base.metric_fn, F_fn),
                    description=desc,
                    params={"t_interval": [-0.5, 0.5], "F_fn": F_fn, "codazzi": codazzi})


def torus_magnetic(flux: int = 3, periods=(TWO_PI, TWO_PI)) -> Scenario:
    """Magnetic T^2 with q zero modes; the line-bundle curvature is Omega = 2B dx^dy."""
    if float(flux) != int(flux):
        raise ValueError(f"flux must be an integer, got {flux}")
    q = int(flux)
    L1, L2 = (float(p) for p in periods)
    B = TWO_PI * q / (L1 * L2)
    return Scenario("torus2-magnetic", Signature(2, 0), lambda x: np.eye(2), np.zeros(2),
                    np.array([L1, L2]), (True, True),
                    connection_fn=lambda x: np.array([0.0, 2.0 * B * x[0]]), flux=q,
                    backends=("pointwise", "lattice"),
                    reference={"scalar": 0.0, "B": B, "omega": 2.0 * B, "zero_modes": abs(q),
                               "first_excited_sq": 2.0 * abs(B)},
                    description="flat T^2 with uniform U(1) flux q",
                    params={"flux": q, "periods": [L1, L2]})


def plane_magnetic(B: float = 0.7) -> Scenario:
    """Flat box with a = B x dy (Omega = B dx^dy)."""
    return Scenario("plane-magnetic", Signature(2, 0), lambda x: np.eye(2), np.full(2, -2.0),
                    np.full(2, 2.0), (False, False), connection_fn=lambda x: np.array([0.0, B * x[0]]),
                    reference={"scalar": 0.0, "omega": B}, sample_margin=0.05,
                    description="flat chart with constant two-form", params={"B": B})


def lorentz_flat(r: int, s: int, B: float = 0.0) -> Scenario:
    sig = Signature(r, s)
    g = np.diag(sig.eps)
    n = sig.n
    conn = None
    if B:
        conn = lambda x: np.concatenate(([0.0, B * x[0]], np.zeros(n - 2)))
    return Scenario(f"lorentz-{r}-{s}", sig, lambda x: g.copy(), np.full(n, -2.0), np.full(n, 2.0),
                    (False,) * n, connection_fn=conn, reference={"scalar": 0.0},
                    sample_margin=0.05, description=f"flat chart of signature ({r},{s})",
                    params={"B": B})


def lorentz_curved(r: int = 1, s: int = 1) -> Scenario:
    """Non-flat semi-Riemannian chart, conformal to the flat one."""
    sig = Signature(r, s)
    n = sig.n
    base = np.diag(sig.eps)

    def metric(x):
        return np.exp(0.3 * np.sin(x[0]) + 0.2 * np.cos(x[-1])) * base

    return Scenario(f"lorentz-{r}-{s}-curved", sig, metric, np.full(n, -2.0), np.full(n, 2.0),
                    (False,) * n, connection_fn=lambda x: np.concatenate(([0.3 * x[-1]], np.zeros(n - 1))),
                    sample_margin=0.05, description=f"conformally flat chart of signature ({r},{s})")


def _constant_F(x):
    return np.diag([0.3, -0.2])


def _noncodazzi_F(x):
    return np.diag([0.2 * np.sin(x[1]), 0.0])


_BUILDERS: dict[str, Callable[..., Scenario]] = {
    "torus1-flat": lambda **kw: torus_flat(1, **kw),
    "torus2-flat": lambda **kw: torus_flat(2, **kw),
    "torus3-flat": lambda **kw: torus_flat(3, **kw),
    "torus2-perturbed": torus2_perturbed,
    "torus2-family": lambda **kw: torus_family(2, **kw),
    "sphere2-unit": lambda **kw: sphere2(**kw),
    "sphere2-stereo-north": lambda **kw: sphere2_stereo(pole="north", **kw),
    "sphere2-stereo-south": lambda **kw: sphere2_stereo(pole="south", **kw),
    "r3-euclidean": r3_euclidean,
    "r3-polar-outward": lambda: cylinder_ambient(_cone_base(1.0, -1.0), name="r3-polar-outward"),
    "r3-polar-inward": lambda: cylinder_ambient(_cone_base(1.0, 1.0), name="r3-polar-inward"),
    "torus2-magnetic": torus_magnetic,
    "plane-magnetic": plane_magnetic,
    "cylinder-static-torus2": lambda: cylinder_static(2),
    "cylinder-conformal-torus2": lambda: cylinder_conformal(2),
    "cylinder-conformal-torus3": lambda: cylinder_conformal(3),
    "cylinder-fourier-torus2": lambda: cylinder_fourier(2),
    "cylinder-sphere-cone": lambda: _cone_base(1.0, -1.0),
    "cylinder-sphere-cone-inward": lambda: _cone_base(1.0, 1.0),
    "cylinder-F-constant": lambda: cylinder_from_F("cylinder-F-constant", _constant_F, True,
                                                   "flat T^2 with constant F = diag(0.3,-0.2)"),
    "cylinder-F-noncodazzi": lambda: cylinder_from_F("cylinder-F-noncodazzi", _noncodazzi_F, False,
                                                     "flat T^2 with F = diag(0.2 sin x2, 0)"),
    "lorentz-1-1": lambda **kw: lorentz_flat(1, 1, **kw),
    "lorentz-1-2": lambda **kw: lorentz_flat(1, 2, **kw),
    "lorentz-1-1-curved": lambda: lorentz_curved(1, 1),
}


def scenario_names() -> list[str]:
    return sorted(_BUILDERS)


def get_scenario(name: str, **params) -> Scenario:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownScenarioError(f"unknown scenario {name!r}") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for scenario {name!r}: {exc}") from None


def scenario_catalog() -> list[Scenario]:
    return [get_scenario(n) for n in scenario_names()]


def describe(sc: Scenario) -> dict:
    return {"name": sc.name, "dim": sc.dim, "signature": [sc.signature.r, sc.signature.s],
            "backends": list(sc.backends), "family": sc.family is not None,
            "reference": sorted(sc.reference), "description": sc.description}
