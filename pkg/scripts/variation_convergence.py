"""Grid convergence of the metric-variation checks.

Runs the form-level and operator-level variation residuals over a list of
grid sizes for both stencil orders and prints successive ratios.  With the
second-order stencil the operator residual ratio under doubling should be
close to 4.

    python scripts/variation_convergence.py --grids 12 24 --orders 2 4
"""
import argparse
import json
from dataclasses import asdict, dataclass, field

from spinc_lab import varbounds as vb
from spinc_lab.scenarios import get_scenario


@dataclass
class ConvergenceConfig:
    scenario: str = "torus2-perturbed"
    k: str = "diag-sin-x2"
    psi: str = "eigen:2"
    h: float = 1e-3
    grids: list = field(default_factory=lambda: [12, 16, 24, 32])
    orders: list = field(default_factory=lambda: [2, 4])


def run(cfg: ConvergenceConfig) -> list[dict]:
    sc = get_scenario(cfg.scenario)
    out = []
    for order in cfg.orders:
        for N in cfg.grids:
            fam = vb.FamilyRun(sc, cfg.k, N, order=order)
            form = vb.variation_check(sc, cfg.k, cfg.psi, N, cfg.h, run=fam)
            op = vb.dirac_variation_operator_check(sc, cfg.k, cfg.psi, N, cfg.h, run=fam)
            out.append({"order": order, "grid": N, "form": form.agreement, "operator": op["residual"],
                        "lhs": form.lhs, "rhs": form.rhs})
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    d = ConvergenceConfig()
    ap.add_argument("--scenario", default=d.scenario)
    ap.add_argument("--k", default=d.k)
    ap.add_argument("--psi", default=d.psi)
    ap.add_argument("--h", type=float, default=d.h)
    ap.add_argument("--grids", type=int, nargs="+", default=d.grids)
    ap.add_argument("--orders", type=int, nargs="+", default=d.orders)
    ap.add_argument("--json", action="store_true", help="print raw rows as JSON")
    args = vars(ap.parse_args())
    as_json = args.pop("json")
    cfg = ConvergenceConfig(**args)
    rows = run(cfg)
    if as_json:
        print(json.dumps({"config": asdict(cfg), "rows": rows}, indent=2))
        return
    prev = {}
    print(f"{'order':>5s} {'N':>4s} {'form':>11s} {'operator':>11s} {'op ratio':>9s}")
    for r in rows:
        p = prev.get(r["order"])
        ratio = f"{p / r['operator']:9.2f}" if p else " " * 9
        print(f"{r['order']:5d} {r['grid']:4d} {r['form']:11.3e} {r['operator']:11.3e} {ratio}")
        prev[r["order"]] = r["operator"]


if __name__ == "__main__":
    main()
