"""BER of uplink massive MIMO with few-bit ADCs and zero-forcing detection."""

__version__ = "0.1.0"

from qmimo.analytics import (  # noqa: E402
    BerQuery,
    ber_degradation,
    ber_floor,
    ber_mqam_full,
    ber_mqam_twoterm,
    gamma_q0,
    snr_for_ber,
)
from qmimo.harness import SimConfig, emit_csv, read_csv, run_ber_sweep  # noqa: E402
from qmimo.quantizer import aqnm_params, design_lloyd_max, design_uniform  # noqa: E402

__all__ = [
    "BerQuery",
    "SimConfig",
    "aqnm_params",
    "ber_degradation",
    "ber_floor",
    "ber_mqam_full",
    "ber_mqam_twoterm",
    "design_lloyd_max",
    "design_uniform",
    "emit_csv",
    "gamma_q0",
    "read_csv",
    "run_ber_sweep",
    "snr_for_ber",
]
