"""Uplink OMA and two-user uplink NOMA outage probability and ergodic rate.

In uplink NOMA the base station decodes the stronger user (U2) first, so U2
sees U1 as interference while U1, decoded last, is interference free:

    R1 = log2(1 + rho * y1),    R2 = log2(1 + y2 / (y1 + 1/rho)),    y1 <= y2.

The closed forms below split the outage integrals according to which of
``y1`` and ``omega2 = (y1 + 1/rho)(2**R2 - 1)`` bounds the inner integral; the
switch-over gain ``c`` depends on whether ``R2`` is below, at, or above
1 bit/s/Hz.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .downlink import DownlinkOmaConfig, dl_oma_er, dl_oma_er_asymptotic, dl_oma_op
from .model import GainDistribution, SystemGeometry
from .quadrature import ChebyshevRule, integrate_adaptive, integrate_cg

log = logging.getLogger(__name__)

LN2 = math.log(2.0)
CLAMP_WARN = 1e-4


# -- OMA -----------------------------------------------------------------------

def ul_oma_op(geometry: SystemGeometry, M: int, target: float, rho_u: float) -> float:
    """Uplink TDMA outage; identical to the downlink with the user SNR substituted."""
    return dl_oma_op(DownlinkOmaConfig(geometry, M, target, rho_u))


def ul_oma_er(geometry: SystemGeometry, M: int, rho_u: float) -> float:
    # the target does not enter the ergodic rate
    return dl_oma_er(DownlinkOmaConfig(geometry, M, 1.0, rho_u))


def ul_oma_er_asymptotic(geometry: SystemGeometry, M: int, rho_u: float) -> float:
    return dl_oma_er_asymptotic(DownlinkOmaConfig(geometry, M, 1.0, rho_u))


# -- two-user NOMA -------------------------------------------------------------

class UplinkNomaRegime(enum.Enum):
    BELOW_ONE = "below-one"
    AT_ONE = "at-one"
    ABOVE_ONE = "above-one"

    @classmethod
    def classify(cls, target2: float) -> "UplinkNomaRegime":
        level = 2.0**target2
        if level < 2.0:
            return cls.BELOW_ONE
        if level == 2.0:
            return cls.AT_ONE
        return cls.ABOVE_ONE


@dataclass(frozen=True)
class UplinkNomaTwoUserConfig:
    geometry: SystemGeometry
    targets: tuple[float, float]
    rho_u: float
    rule: ChebyshevRule = field(default_factory=ChebyshevRule)

    def __post_init__(self):
        if len(self.targets) != 2:
            raise ValueError("two-user uplink NOMA needs exactly two target rates")
        if any(not t > 0 for t in self.targets):
            raise ValueError("target rates must be positive")
        if not self.rho_u > 0:
            raise ValueError("transmit SNR must be positive")

    @property
    def tau1(self) -> float:
        return math.expm1(self.targets[0] * LN2)

    @property
    def tau2(self) -> float:
        return math.expm1(self.targets[1] * LN2)

    @property
    def omega1(self) -> float:
        """Smallest U1 gain meeting its own target."""
        return self.tau1 / self.rho_u

    @property
    def regime(self) -> UplinkNomaRegime:
        return UplinkNomaRegime.classify(self.targets[1])

    @property
    def c(self) -> Optional[float]:
        """Gain where ``omega2(y1) == y1``; negative above one bit/s/Hz, undefined at one."""
        denom = 2.0 - 2.0 ** self.targets[1]
        if denom == 0.0:
            return None
        return self.tau2 / (self.rho_u * denom)

    def omega2(self, y1):
        return (y1 + 1.0 / self.rho_u) * self.tau2

    @property
    def kink(self) -> float:
        """U1 gain beyond which ``omega2 >= b`` and the inner integrand vanishes."""
        return self.geometry.b / self.tau2 - 1.0 / self.rho_u

    def replace(self, **changes) -> "UplinkNomaTwoUserConfig":
        from dataclasses import replace

        return replace(self, **changes)


def _norm(g: SystemGeometry) -> float:
    # 4 eta / D^2 = 1 / (1/a - 1/b): the joint ordered density in units of 1/y^2
    return 4.0 * g.eta / g.room_side**2


def _inner_ratio(cfg: UplinkNomaTwoUserConfig, x, omega2):
    """``sqrt(eta/min(omega2, b) - d^2) / (x^2 sqrt(eta/x - d^2))``."""
    g = cfg.geometry
    top = np.sqrt(np.clip(g.eta / np.minimum(omega2, g.b) - g.z_min, 0.0, None))
    return top / (x * x * np.sqrt(g.eta / x - g.z_min))


def _cg_term(cfg: UplinkNomaTwoUserConfig, lo: float, hi: float, omega2_fn, kink: float) -> float:
    # the integrand is identically zero past the kink, so the rule only spans the support
    hi = min(hi, kink)
    if not hi > lo:
        return 0.0
    g = cfg.geometry
    return _norm(g) * integrate_cg(cfg.rule, lambda x: _inner_ratio(cfg, x, omega2_fn(x)), lo, hi)


def _closed_term(g: SystemGeometry, lo: float, hi: float) -> float:
    if not hi > lo:
        return 0.0
    return _norm(g) * (1.0 / lo - 1.0 / hi)


class UplinkOpTerms(NamedTuple):
    I1: float = 0.0
    I2: float = 0.0
    I3: float = 0.0
    I4: float = 0.0
    I5: float = 0.0
    I6: float = 0.0
    I7: float = 0.0
    I8: float = 0.0


def ul_noma2_op_terms(cfg: UplinkNomaTwoUserConfig) -> UplinkOpTerms:
    """The I-terms entering both users' outage probabilities for the active regime."""
    g = cfg.geometry
    a, b = g.a, g.b
    w1 = cfg.omega1
    c = cfg.c
    regime = cfg.regime
    kink = cfg.kink
    lo1 = max(w1, a)
    terms = {}
    if regime is UplinkNomaRegime.BELOW_ONE:
        # y1 >= c: the inner lower limit is y1 itself; y1 < c: it is omega2
        if c < b:
            terms["I1"] = _closed_term(g, max(w1, c, a), b)
        if c > lo1:
            terms["I2"] = _cg_term(cfg, lo1, min(b, c), cfg.omega2, kink)
        if c > a:
            top = min(b, c)
            terms["I6"] = _closed_term(g, a, top) - _cg_term(cfg, a, top, cfg.omega2, kink)
    elif regime is UplinkNomaRegime.AT_ONE:
        terms["I3"] = _cg_term(cfg, lo1, b, cfg.omega2, kink)
        terms["I7"] = 1.0 - _cg_term(cfg, a, b, cfg.omega2, kink)
    else:
        # c < 0 here, so the y1-bounded branch (I4) is empty and max(a, c) = a
        if c > lo1:
            terms["I4"] = _closed_term(g, lo1, min(b, c))
        if c < b:
            terms["I5"] = _cg_term(cfg, max(w1, c, a), b, cfg.omega2, kink)
            lo = max(a, c)
            terms["I8"] = _closed_term(g, lo, b) - _cg_term(cfg, lo, b, cfg.omega2, kink)
    return UplinkOpTerms(**terms)


def _clamp(value: float, what: str) -> float:
    clamped = min(1.0, max(0.0, value))
    excursion = abs(clamped - value)
    if excursion > CLAMP_WARN:
        log.warning("%s clamped by %.3g (quadrature error too large?)", what, excursion)
    elif excursion:
        log.debug("%s clamped by %.3g", what, excursion)
    return clamped


def ul_noma2_op_user1(cfg: UplinkNomaTwoUserConfig) -> float:
    """Outage of the weak user: both ``R1 >= target1`` and ``R2 >= target2`` are required."""
    if cfg.omega1 >= cfg.geometry.b:
        return 1.0
    t = ul_noma2_op_terms(cfg)
    regime = cfg.regime
    if regime is UplinkNomaRegime.BELOW_ONE:
        value = 1.0 - (t.I1 + t.I2)
    elif regime is UplinkNomaRegime.AT_ONE:
        value = 1.0 - t.I3
    else:
        value = 1.0 - (t.I4 + t.I5)
    return _clamp(value, "U1 outage")


def ul_noma2_op_user2(cfg: UplinkNomaTwoUserConfig) -> float:
    """Outage of the strong user, decoded first: ``R2 < target2``."""
    t = ul_noma2_op_terms(cfg)
    regime = cfg.regime
    if regime is UplinkNomaRegime.BELOW_ONE:
        value = t.I6
    elif regime is UplinkNomaRegime.AT_ONE:
        value = t.I7
    else:
        value = t.I8
    return _clamp(value, "U2 outage")


def i9(cfg: UplinkNomaTwoUserConfig) -> float:
    """Probability that U2 meets a target above 1 bit/s/Hz as ``rho -> inf``."""
    g = cfg.geometry
    omega2 = lambda x: x * cfg.tau2  # noqa: E731
    return _cg_term(cfg, g.a, g.b, omega2, g.b / cfg.tau2)


class UplinkOpAsymptote(NamedTuple):
    value: float
    regime: UplinkNomaRegime
    decay_exponent: Optional[float]
    zero_threshold: Optional[float]


def ul_noma2_zero_op_snr(geometry: SystemGeometry, target2: float) -> float:
    """SNR beyond which both outages vanish when ``target2 < 1`` (given U1's own target is met)."""
    if UplinkNomaRegime.classify(target2) is not UplinkNomaRegime.BELOW_ONE:
        return math.inf
    tau2 = math.expm1(target2 * LN2)
    return tau2 / (geometry.a * (2.0 - 2.0**target2))


def ul_noma2_op_asymptotic(cfg: UplinkNomaTwoUserConfig) -> UplinkOpAsymptote:
    """Common high-SNR outage of both users."""
    g = cfg.geometry
    regime = cfg.regime
    if regime is UplinkNomaRegime.BELOW_ONE:
        return UplinkOpAsymptote(0.0, regime, None, ul_noma2_zero_op_snr(g, cfg.targets[1]))
    if regime is UplinkNomaRegime.AT_ONE:
        D, d = g.room_side, g.height
        rho = cfg.rho_u
        value = 2.0 * d**4 / (D * D * g.eta) * math.log(rho) / rho
        return UplinkOpAsymptote(value, regime, -1.0, None)
    return UplinkOpAsymptote(1.0 - i9(cfg), regime, 0.0, None)


# -- two-user NOMA ergodic rate --------------------------------------------------

def G(x: float, rho: float) -> float:
    """Antiderivative helper: ``int ln(1 + rho y) / y^2 dy = -G(y)``."""
    return math.log1p(rho * x) / x - rho * math.log(x) + rho * math.log1p(rho * x)


def _minus_G_difference(a: float, b: float, rho: float) -> float:
    # -(G(b) - G(a)) regrouped so the rho*ln terms do not cancel at high SNR
    return (
        math.log1p(rho * a) / a
        - math.log1p(rho * b) / b
        - rho * (math.log1p(1.0 / (rho * b)) - math.log1p(1.0 / (rho * a)))
    )


def ul_noma2_er_user1(cfg: UplinkNomaTwoUserConfig) -> float:
    g = cfg.geometry
    return _norm(g) / LN2 * _minus_G_difference(g.a, g.b, cfg.rho_u)


def xi2(geometry: SystemGeometry, x, rho: float):
    """Inner expectation ``int_x^b ln(1 + y2/(x + 1/rho)) dF(y2)`` in closed form."""
    g = geometry
    D, d = g.room_side, g.height
    x = np.asarray(x, dtype=float)
    s = x + 1.0 / rho
    T = np.sqrt(np.clip(g.eta / x - g.z_min, 0.0, None))
    q = np.sqrt(g.eta / s + g.z_min)
    out = (
        (2.0 / D) * np.log1p(x / s) * T
        + (4.0 / D) * q * np.arctan(T / q)
        - (4.0 * d / D) * np.arctan(T / d)
    )
    return out if out.ndim else float(out)


def xi4(geometry: SystemGeometry, x):
    """High-SNR limit of :func:`xi2`."""
    g = geometry
    D, d = g.room_side, g.height
    x = np.asarray(x, dtype=float)
    T = np.sqrt(np.clip(g.eta / x - g.z_min, 0.0, None))
    q = np.sqrt(g.eta / x + g.z_min)
    out = (2.0 * LN2 / D) * T + (4.0 / D) * q * np.arctan(T / q) - (4.0 * d / D) * np.arctan(T / d)
    return out if out.ndim else float(out)


def ul_noma2_er_user2(cfg: UplinkNomaTwoUserConfig) -> float:
    g = cfg.geometry
    dist = GainDistribution(g)
    H1 = lambda x: dist.pdf(x) * xi2(g, x, cfg.rho_u)  # noqa: E731
    return 2.0 / LN2 * integrate_cg(cfg.rule, H1, g.a, g.b)


class UplinkErAsymptote(NamedTuple):
    user1: float
    user2: float


def delta2(geometry: SystemGeometry) -> float:
    a, b = geometry.a, geometry.b
    return math.log(a) / a - math.log(b) / b + 1.0 / a - 1.0 / b


def ul_noma2_er_asymptotic(cfg: UplinkNomaTwoUserConfig) -> UplinkErAsymptote:
    g = cfg.geometry
    a, b = g.a, g.b
    user1 = _norm(g) / LN2 * ((1.0 / a - 1.0 / b) * math.log(cfg.rho_u) + delta2(g))
    dist = GainDistribution(g)
    H2 = lambda x: dist.pdf(x) * xi4(g, x)  # noqa: E731
    user2 = 2.0 / LN2 * integrate_cg(cfg.rule, H2, a, b)
    return UplinkErAsymptote(user1, user2)


def ul_noma2_er_slope_user1(geometry: SystemGeometry) -> float:
    """High-SNR slope of U1's ergodic rate, ``(4 eta / D^2)(1/a - 1/b)``; identically 1."""
    return _norm(geometry) * (1.0 / geometry.a - 1.0 / geometry.b)


# -- adaptive references ---------------------------------------------------------
# Evaluated in the normalised distance variable t = sqrt(eta/y - d^2), under which
# a single gain is uniform: F(y) = 1 - 2t/D.  Independent of the closed forms above.

def _gain_of_t(g: SystemGeometry, t):
    return g.eta / (t * t + g.z_min)


def _t_of_gain(g: SystemGeometry, y: float) -> float:
    y = min(max(y, g.a), g.b)
    return math.sqrt(max(g.eta / y - g.z_min, 0.0))


def ul_noma2_op_reference(cfg: UplinkNomaTwoUserConfig, tol: float = 1e-13) -> tuple[float, float]:
    """Both outage probabilities by adaptive quadrature of the defining integrals."""
    g = cfg.geometry
    D = g.room_side
    half = D / 2.0
    breaks = [_t_of_gain(g, cfg.kink)]
    if cfg.c is not None:
        breaks.append(_t_of_gain(g, cfg.c))

    def t_inner(t1: float) -> float:
        # t-coordinate of the inner lower limit max(y1, omega2), capped at b
        y1 = _gain_of_t(g, t1)
        lower = max(y1, cfg.omega2(y1))
        return _t_of_gain(g, lower)

    t_w1 = _t_of_gain(g, cfg.omega1) if cfg.omega1 > g.a else half
    success = 0.0
    if cfg.omega1 < g.b:
        success = (8.0 / D**2) * integrate_adaptive(
            t_inner, 0.0, t_w1, tol=tol, rel_tol=1e-12, points=breaks
        )
    p1 = 1.0 - success
    # U2 outage: y1 <= y2 < omega2, i.e. t-gap t1 - t2 where both lie in range
    gap = lambda t1: max(t1 - t_inner(t1), 0.0)  # noqa: E731
    p2 = (8.0 / D**2) * integrate_adaptive(gap, 0.0, half, tol=tol, rel_tol=1e-12, points=breaks)
    return min(max(p1, 0.0), 1.0), min(max(p2, 0.0), 1.0)


def ul_noma2_er_user2_reference(cfg: UplinkNomaTwoUserConfig, tol: float = 1e-12) -> float:
    """Nested adaptive quadrature of ``E[log2(1 + y2/(y1 + 1/rho))]`` over ordered gains."""
    g = cfg.geometry
    D = g.room_side
    eps = 1.0 / cfg.rho_u

    def inner(t1: float) -> float:
        s = _gain_of_t(g, t1) + eps
        return integrate_adaptive(
            lambda t2: math.log1p(_gain_of_t(g, t2) / s), 0.0, t1, tol=tol * 1e-2, rel_tol=1e-12
        )

    return 2.0 / LN2 * (2.0 / D) ** 2 * integrate_adaptive(inner, 0.0, D / 2.0, tol=tol, rel_tol=1e-11)
