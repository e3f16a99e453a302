"""Compare element-by-element propagation with the full transfer matrix.

The oracle builds each element as a dense matrix over every mode the chain
can reach and multiplies them, never touching the propagation code.
"""

import math

import numpy as np

from timebin_qudits import HardwareParams, PhotonicState, build_measurement_chain, full_matrix, propagate

rng = np.random.default_rng(1)
for label, hw in (("ideal", HardwareParams()), ("weak switch", HardwareParams(delta_phi=0.8 * math.pi))):
    for d in (4, 8):
        for basis in (0, 1):
            a = build_measurement_chain(d, basis, hw)
            cm = full_matrix(a)
            worst = 0.0
            for _ in range(100):
                v = rng.normal(size=d) + 1j * rng.normal(size=d)
                s = PhotonicState.from_vector(a.grid, a.input_modes(), v / np.linalg.norm(v))
                diff = propagate(s, a) - cm.apply(s)
                worst = max(worst, max((abs(x) for x in diff.amplitudes.values()), default=0.0))
            print(f"{label:12s} d={d} basis={basis}: {len(cm.basis):4d} modes, "
                  f"max deviation {worst:.1e}, unitarity error {cm.unitarity_error():.1e}")
