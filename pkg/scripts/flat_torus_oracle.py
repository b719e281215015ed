"""Flat-torus spectrum against the Fourier oracle, with the error ratio under doubling.

    python scripts/flat_torus_oracle.py --grids 8 16 32 64
"""
import argparse
from dataclasses import dataclass, field

import numpy as np

from spinc_lab import lattice as lat
from spinc_lab.scenarios import get_scenario


@dataclass
class OracleConfig:
    grids: list = field(default_factory=lambda: [8, 16, 32, 64])
    count: int = 8
    stabilizer: str = "wilson"


def run(cfg: OracleConfig) -> list[tuple[int, float]]:
    sc = get_scenario("torus2-flat")
    want = np.sort(np.abs(lat.fourier_oracle(sc.upper - sc.lower)))[:cfg.count]
    out = []
    for N in cfg.grids:
        ev = lat.spectrum(lat.assemble_dirac(sc, N, stabilizer=cfg.stabilizer), cfg.count).eigenvalues
        out.append((N, float(np.max(np.abs(np.sort(np.abs(ev)) - want)))))
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grids", type=int, nargs="+", default=OracleConfig().grids)
    ap.add_argument("--count", type=int, default=8)
    ap.add_argument("--stabilizer", default="wilson", choices=["wilson", "plain-wilson", "quartic", "none"])
    a = ap.parse_args()
    rows = run(OracleConfig(a.grids, a.count, a.stabilizer))
    prev = None
    for N, err in rows:
        tail = f"  ratio {prev / err:.2f}" if prev else ""
        print(f"N={N:4d}  max error {err:.3e}{tail}")
        prev = err


if __name__ == "__main__":
    main()
