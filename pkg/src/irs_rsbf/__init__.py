"""Robust secure beamforming for IRS-aided mmWave MISO links with
imperfectly known eavesdropper channels."""

__version__ = "0.1.0"

from .baselines import average_scheme, mrt_scheme, perfect_csi_scheme
from .channel import (ChannelRealization, SampleBank, SystemConfig, UncertaintySet,
                      build_sample_bank, build_uncertainty, draw_channel)
from .evaluation import EvaluationReport, monte_carlo, rate, secrecy_rates, worst_case_asr
from .rsbf import BeamformingSolution, solve, solve_colluding, solve_noncolluding

__all__ = [
    "BeamformingSolution", "ChannelRealization", "EvaluationReport", "SampleBank", "SystemConfig",
    "UncertaintySet", "average_scheme", "build_sample_bank", "build_uncertainty", "draw_channel",
    "monte_carlo", "mrt_scheme", "perfect_csi_scheme", "rate", "secrecy_rates", "solve",
    "solve_colluding", "solve_noncolluding", "worst_case_asr",
]
