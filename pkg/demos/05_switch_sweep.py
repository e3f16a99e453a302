"""How an incomplete polarization rotation in the switch eats into the key rate."""

import math

import numpy as np

from timebin_qudits import HardwareParams, build_report, confusion_matrix_analytic

print("dphi/pi   QBER      rate")
for frac in np.linspace(0.5, 1.0, 11):
    hw = HardwareParams(delta_phi=frac * math.pi)
    tables = {(b, b): confusion_matrix_analytic(b, b, hw) for b in (0, 1)}
    report = build_report(tables)
    print(f"{frac:7.2f}  {report.qber:7.4f}  {report.rate:7.4f}")
