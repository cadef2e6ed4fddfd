"""Steer one Gaussian profile to another on (0, 20) with a control that acts
only inside (tau, T - tau), and print the stage norms over time.

    python3 demos/steering.py
"""
import numpy as np

from kdvb_lab.control import SteeringPlan, steer_pipeline

plan = SteeringPlan(lambda x: np.exp(-(x - 7) ** 2), lambda x: np.exp(-(x - 12) ** 2 / 10))
res = steer_pipeline(plan)
print(f"error at t = 0: {res.error_initial:.2e}   weighted error at t = T: {res.error_final:.2e}")
print(f"{'t':>6} {'|nu1|':>9} {'|nu2|':>9} {'|omega|':>9} {'|nu|':>9}")
for j in range(0, plan.nt, 8):
    norms = [np.linalg.norm(a[:, j]) for a in (res.nu1, res.nu2, res.omega, res.nu)]
    print(f"{plan.t[j]:6.3f} " + " ".join(f"{v:9.4f}" for v in norms))
