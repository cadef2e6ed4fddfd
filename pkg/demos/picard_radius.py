"""Picard iteration for the nonlinear problem: find the amplitude beyond which
the iteration stops contracting, then show residual histories on either side.

    python3 demos/picard_radius.py
"""
import numpy as np

from kdvb_lab.linear import BoundaryData
from kdvb_lab.nonlinear import IbvpProblem, contraction_radius, solve_fixed_point
from kdvb_lab.numerics import Grid1D

sg, tg = Grid1D(0, 20, 129), Grid1D(0, 1, 17)
shape = np.exp(-(sg.points - 5) ** 2)
zero = BoundaryData(tg, np.zeros(tg.n_points), np.zeros(tg.n_points))

radius = contraction_radius(shape, sg, tg, fine_steps=64)
print(f"contraction radius ~ {radius:.3g}")
for scale in (0.25, 0.5, 1.0, 4.0):
    rep = solve_fixed_point(IbvpProblem(scale * radius * shape, sg, zero, fine_steps=64), max_iter=30)
    h = np.asarray(rep.residual_history)
    print(f"A = {scale * radius:8.3g}  converged={rep.converged!s:5}  iterations={rep.iterations:2d}  "
          f"last ratio={h[-1] / h[-2] if h.size > 1 else 0:.3f}")
