"""Prepare every four-dimensional basis state and check it against its target.

Each preparation stage is a half-wave plate, a 45-degree birefringent delay
and a polarizer.  Only one polarization survives each polarizer, so a
quarter of the input pulses make it through for d = 4.
"""

import numpy as np

from timebin_qudits import PreparationSetting, inner_product, prepare_state, reference_state

for basis, name in ((0, "time bin"), (1, "superposition")):
    print(f"{name} basis")
    for index in range(4):
        setting = PreparationSetting.for_state(4, basis, index)
        state = prepare_state(setting)
        fidelity = abs(inner_product(reference_state(4, basis, index), state.normalized())) ** 2
        amps = np.round(state.normalized().vector(sorted(state.modes)), 3)
        print(f"  |{index}>  HWP {setting.hwp_angles_deg}  amplitudes {amps}  "
              f"efficiency {state.norm_squared():.3f}  fidelity {fidelity:.12f}")
