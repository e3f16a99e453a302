"""Where each basis state ends up after the measurement cascade.

The switch stages convert a picosecond-scale time-bin pattern into a
nanosecond-scale arrival time, so a single slow detector can tell the four
outcomes apart.  Try d = 8 to see a third stage added.
"""

import sys

from timebin_qudits import build_measurement_chain, routing_table

d = int(sys.argv[1]) if len(sys.argv) > 1 else 4
for basis in (0, 1):
    apparatus = build_measurement_chain(d, basis)
    print(f"basis {basis}: {len(apparatus.elements)} elements")
    for window in routing_table(apparatus):
        print(f"  outcome {window.outcome} -> {window.center_ps / 1000:.1f} ns "
              f"(window {window.start_ps / 1000:.1f} to {window.stop_ps / 1000:.1f} ns)")
