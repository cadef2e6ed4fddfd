"""Boundary operators on the half-line: feed a windowed pulse in as Dirichlet
data and as Neumann data, then read the traces back at x = 0.

    python3 demos/boundary_traces.py
"""
import numpy as np

from kdvb_lab.linear import BoundaryData, boundary_dirichlet, boundary_neumann, trace_extract
from kdvb_lab.numerics import Grid1D


def main():
    T = 4.0
    for n in (257, 513, 1025):
        tg, sg = Grid1D(0, T, n), Grid1D(0, 10, n)
        pulse = np.exp(-8 * (tg.points - 2) ** 2)
        u_d = boundary_dirichlet(BoundaryData.dirichlet(tg, pulse), sg)
        u_n = boundary_neumann(BoundaryData.neumann(tg, pulse), sg)
        err_d = np.abs(trace_extract(u_d)[0] - pulse).max()
        err_n = np.abs(trace_extract(u_n)[1] - pulse).max()
        print(f"n = {n:5d}  |u(0) - h| = {err_d:.2e}  |u_x(0) - g| = {err_n:.2e}")


if __name__ == "__main__":
    main()
