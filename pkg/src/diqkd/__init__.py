"""Device-independent QKD against collective attacks.

Key rates from an observed CHSH value and QBER, Eve's optimal attack,
numerical checks of each reduction step of the security argument, and a
seeded Monte Carlo simulation of the protocol.
"""
from ._backend import BACKEND
from .attack import AttackSpec, build_optimal_attack, holevo_exact, verify_saturation
from .bounds import (
    TSIRELSON,
    KeyRateReport,
    ObservedStatistics,
    chi_lambda_upper,
    critical_qber,
    dw_rate,
    holevo_bound,
    s_lambda,
    standard_holevo_bound,
)
from .qmat import BellDiagonalSpectrum, PlanarMeasurement
from .simproto import ProtocolConfig, oracle_step3_sweep, run_protocol

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AttackSpec",
    "BellDiagonalSpectrum",
    "KeyRateReport",
    "ObservedStatistics",
    "PlanarMeasurement",
    "ProtocolConfig",
    "TSIRELSON",
    "build_optimal_attack",
    "chi_lambda_upper",
    "critical_qber",
    "dw_rate",
    "holevo_bound",
    "holevo_exact",
    "oracle_step3_sweep",
    "run_protocol",
    "s_lambda",
    "standard_holevo_bound",
    "verify_saturation",
]
