"""Recompute the frozen calibration constants.

Prints the Bott pairings that fix ``c_1`` and ``c_2``, the rank-one Green
projection pairing that fixes ``c_0``, and the orientation sign of the
half-line index.  Run with ``python scripts/calibrate.py``.
"""
import numpy as np

from bdm import cyclic, graph, halfline as hl
from bdm.grid import HalfLineGrid
from bdm.symbols import moebius, winding_number


def bott(k, n):
    e = cyclic.bott_projection(k, n)
    chain = cyclic.CyclicChain.elementary([e.shifted(0.5)] + [e] * (2 * k))
    return cyclic.fiber_pairing(chain)


def main():
    for k, n in ((1, 800), (2, 32)):
        raw = bott(k, n)
        c = 1 / raw
        q = c * (1j) ** k
        print(f"k={k}: raw pairing {raw:.6f}, c_k = {c:.6f} = {q.real:+.4f} * i^-{k}"
              f"  (frozen {cyclic.CHERN_RATIONAL[k]:+g})")
    grid = HalfLineGrid(256, 20.0)
    phi = np.sqrt(2.0) * np.exp(-grid.nodes)
    g = grid.h * np.outer(phi, phi)
    tr = np.trace(g).real
    print(f"rank-one Green projection: tr' = {tr:.6f}, c_0 = -i / tr' = {-1j / tr:.6f}")
    grid = HalfLineGrid(512, 40.0)
    a = hl.wiener_hopf(moebius(1), grid).matrix
    print(f"sigma = {graph.halfline_svd_index(a, grid) // winding_number(moebius(1)):+d}")


if __name__ == "__main__":
    main()
