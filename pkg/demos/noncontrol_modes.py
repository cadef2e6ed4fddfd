"""Exponentially growing mode family w = e^{-lam t} e^{a x} sin(b x) and the
ratio of its interior size to its boundary trace.

    python3 demos/noncontrol_modes.py
"""
from kdvb_lab.control import mode_construct, noncontrol_scan

a_values = [0.5, 0.2, 0.1, 0.05, 0.02, 0.005, 1e-4]
print(f"{'a':>8} {'b':>10} {'lambda':>10} {'N/D (X=20)':>12} {'N/D (X=80)':>12}")
for r20, r80 in zip(noncontrol_scan(a_values, X=20.0), noncontrol_scan(a_values, X=80.0)):
    m = mode_construct(r20.a)
    print(f"{r20.a:8.4g} {m.b:10.6f} {m.lam:10.4g} {r20.ratio:12.4g} {r80.ratio:12.4g}")
