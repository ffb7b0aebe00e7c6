"""Outage and ergodic-rate analysis of OMA and NOMA over pinching-antenna links.

Closed forms live in :mod:`.downlink` and :mod:`.uplink`, the Monte Carlo oracle
in :mod:`.montecarlo`, and figure sweeps in :mod:`.sweep`.
"""
from .model import (
    DEFAULT_GEOMETRY,
    GainDistribution,
    NomaPowerAllocation,
    RateTargets,
    SnrGrid,
    SystemGeometry,
    db_to_linear,
)
from .quadrature import ChebyshevRule, integrate_adaptive, integrate_cg
from .downlink import (
    DownlinkNomaConfig,
    DownlinkOmaConfig,
    compare_oma_noma_dl,
    dl_noma_er_asymptotic,
    dl_noma_er_bounds,
    dl_noma_op,
    dl_noma_zero_op_snr,
    dl_oma_er,
    dl_oma_er_asymptotic,
    dl_oma_op,
    dl_oma_zero_op_snr,
)
from .uplink import (
    UplinkNomaRegime,
    UplinkNomaTwoUserConfig,
    ul_noma2_er_asymptotic,
    ul_noma2_er_user1,
    ul_noma2_er_user2,
    ul_noma2_op_asymptotic,
    ul_noma2_op_user1,
    ul_noma2_op_user2,
    ul_oma_er,
    ul_oma_op,
)
from .montecarlo import Estimate, SimConfig, simulate, simulate_er, simulate_op

__all__ = [name for name in dir() if not name.startswith("_")]
