"""Periodic observability ratio ||c||^2 / int_0^T int_{-l}^{l} |u|^2 at
L = pi, l = pi/2, T = 4. The worst random ratio and the top single mode both
grow with the number of retained modes.

    python3 demos/observability_growth.py
"""
import numpy as np

from kdvb_lab.periodic import ModeCoeffs, ingham_params, observability_ratio, ratio_ensemble

L, l, T = np.pi, np.pi / 2, 4.0
gamma, t_min = ingham_params(L)
print(f"gap {gamma:.3g}, minimal time {t_min:.3g}, T = {T}")
for n in (4, 8, 16, 32):
    worst = ratio_ensemble(L, l, T, n, draws=100).max()
    top = observability_ratio(ModeCoeffs.single(n, n), L, l, T)
    print(f"n_max = {n:3d}  worst of 100 draws {worst:9.2f}   top mode alone {top:9.1f}")
