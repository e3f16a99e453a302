"""Time-bin qudit preparation and measurement with ultrafast polarization switching."""

from .analysis import build_report, key_rate_threshold, qber, secret_key_rate, shannon_entropy_d
from .chain import (
    HardwareParams,
    PreparationSetting,
    build_measurement_chain,
    hadamard_state,
    mub_state,
    prepare_state,
    propagate,
    reference_state,
    routing_table,
)
from .errors import QuditSimError
from .hilbert import ModeLabel, PhotonicState, Polarization, TimeGrid, inner_product, make_basis_state
from .montecarlo import NoiseModel, run_experiment
from .oracle import confusion_matrix_analytic, full_matrix

__version__ = "0.1.0"
