"""Gradient energies before and after rearrangement as the grid is refined.

Prints a CSV: operator, function, phi, n, E(Tf), E(f), deficit, tolerance.
For KSchwarz the energy integrand is h_{-K}(grad f); otherwise |grad f|.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass

from rearrangelab import convex as CV
from rearrangelab import gridfn as G
from rearrangelab import rearrange as R
from rearrangelab import young as Y
from rearrangelab.grid import Grid
from rearrangelab.scenario import battery_recipes
from rearrangelab.verify import energy_tolerance


@dataclass
class Config:
    sizes: tuple = (64, 128, 256)
    functions: tuple = ("cone_off", "tent_square", "tent_hexagon", "bump", "two_bumps")
    phis: tuple = ("p1", "p2")


PHIS = {"p1": Y.Power(1), "p2": Y.Power(2), "p4": Y.Power(4), "sqrt_shift": Y.SqrtShift()}


def operators():
    yield "sym_decreasing", R.SymDecreasing(), None
    for name, K in (("square", CV.square_of_area(3.141592653589793)),
                    ("hexagon", CV.hexagon_of_area(3.141592653589793))):
        yield f"k_schwarz_{name}", R.KSchwarz(K), K


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=list(Config.sizes))
    ap.add_argument("--functions", nargs="+", default=list(Config.functions))
    ap.add_argument("--phis", nargs="+", default=list(Config.phis), choices=sorted(PHIS))
    args = ap.parse_args(argv)
    cfg = Config(tuple(args.sizes), tuple(args.functions), tuple(args.phis))
    battery = battery_recipes()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["operator", "function", "phi", "n", "E_Tf", "E_f", "deficit", "tolerance"])
    for op_name, T, K in operators():
        for fn in cfg.functions:
            for n in cfg.sizes:
                f = battery[fn](Grid.from_extent(4 / n, 2.0))
                Tf = T.apply(f)
                for pn in cfg.phis:
                    phi = PHIS[pn]
                    et, ef = G.gradient_energy(Tf, phi, K), G.gradient_energy(f, phi, K)
                    w.writerow([op_name, fn, pn, n, f"{et:.6f}", f"{ef:.6f}", f"{et - ef:.6f}",
                                f"{energy_tolerance(f, phi, None):.6f}"])


if __name__ == "__main__":
    main()
