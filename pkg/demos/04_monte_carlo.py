"""Weak coherent pulses through the full apparatus, then the key-rate estimate.

Photon-number statistics, coupling losses and detector jitter reduce the
click rate but not the in-window fidelities.  Dark counts do.
"""

from timebin_qudits import NoiseModel, build_report, run_experiment
from timebin_qudits.analysis import probabilities

for dark in (0.0, 2e6):
    noise = NoiseModel(mu=0.14, dark_count_rate_hz=dark)
    counts = run_experiment(4, noise=noise, shots=100_000, seed=7)
    report = build_report(counts)
    print(f"dark count rate {dark:.0e} Hz: QBER {100 * report.qber:.3f} %, rate {report.rate:.4f} bits")
    print("  matched-basis probabilities (superposition)")
    for row in probabilities(counts[(1, 1)]):
        print("   ", " ".join(f"{p:.4f}" for p in row))
