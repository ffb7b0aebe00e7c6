"""Downlink outage probability and ergodic rate, OMA (TDMA) and power-domain NOMA."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import (
    GainDistribution,
    NomaPowerAllocation,
    RateTargets,
    SystemGeometry,
    distance_sq_cdf,
    order_stat_cdf,
)

LN2 = math.log(2.0)


# -- OMA -----------------------------------------------------------------------

@dataclass(frozen=True)
class DownlinkOmaConfig:
    geometry: SystemGeometry
    M: int
    target: float
    rho: float

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("user count must be at least 1")
        if not self.target > 0:
            raise ValueError("target rate must be positive")
        if not self.rho > 0:
            raise ValueError("transmit SNR must be positive")

    @property
    def beta(self) -> float:
        """Largest squared distance that still meets the target."""
        return self.geometry.eta * self.rho / math.expm1(self.M * self.target * LN2)


def dl_oma_op(cfg: DownlinkOmaConfig) -> float:
    beta = cfg.beta
    g = cfg.geometry
    if beta < g.z_min:
        return 1.0
    if beta >= g.z_max:
        return 0.0
    return 1.0 - distance_sq_cdf(g, beta)


def dl_oma_zero_op_snr(geometry: SystemGeometry, M: int, target: float) -> float:
    """Smallest transmit SNR (linear) at which the OMA outage probability is zero."""
    return geometry.z_max * math.expm1(M * target * LN2) / geometry.eta


class OmaRateTerms(NamedTuple):
    lambda1: float
    lambda2: float
    gamma1: float


def dl_oma_er_terms(cfg: DownlinkOmaConfig) -> OmaRateTerms:
    g = cfg.geometry
    D, d = g.room_side, g.height
    snr = g.eta * cfg.rho
    lambda1 = math.log1p(snr / g.z_max) / LN2
    r = math.sqrt(g.z_min + snr)
    bracket = r * math.atan(D / (2.0 * r)) - d * math.atan(D / (2.0 * d))
    lambda2 = 4.0 / (D * LN2) * bracket
    gamma1 = 2.0 / snr * bracket
    return OmaRateTerms(lambda1, lambda2, gamma1)


def dl_oma_er(cfg: DownlinkOmaConfig) -> float:
    t = dl_oma_er_terms(cfg)
    return (t.lambda1 + t.lambda2) / cfg.M


def dl_oma_er_asymptotic(cfg: DownlinkOmaConfig) -> float:
    """High-SNR asymptote: the arctan term of the exact rate replaced by its limit ``D/2``."""
    g = cfg.geometry
    D, d = g.room_side, g.height
    lambda1 = math.log1p(g.eta * cfg.rho / g.z_max) / LN2
    lambda2_inf = 4.0 / (D * LN2) * (D / 2.0 - d * math.atan(D / (2.0 * d)))
    return (lambda1 + lambda2_inf) / cfg.M


# -- NOMA ----------------------------------------------------------------------

@dataclass(frozen=True)
class DownlinkNomaConfig:
    geometry: SystemGeometry
    alloc: NomaPowerAllocation
    targets: RateTargets
    rho: float

    def __post_init__(self):
        if len(self.targets) != len(self.alloc):
            raise ValueError(
                f"{len(self.targets)} target rates for {len(self.alloc)} power coefficients"
            )
        if not self.rho > 0:
            raise ValueError("transmit SNR must be positive")

    @property
    def M(self) -> int:
        return len(self.alloc)

    def margin(self, k: int) -> float:
        """``alpha_k / (2**R_k - 1) - sum_{j>k} alpha_j``; user k is decodable iff positive."""
        tau = math.expm1(self.targets[k - 1] * LN2)
        return self.alloc.alphas[k - 1] / tau - self.alloc.tail(k)

    def feasible(self, k: int) -> bool:
        return self.margin(k) > 0

    def gamma(self, k: int) -> float:
        margin = self.margin(k)
        return self.M / margin if margin > 0 else math.inf

    def epsilon(self, k: int) -> float:
        return self.gamma(k) / self.rho

    def lam(self, m: int) -> float:
        """Gain threshold below which user m is in outage."""
        return max(self.epsilon(k) for k in range(1, m + 1))

    def feasibility(self) -> tuple[bool, ...]:
        """Per-user check that the target is below the high-SNR rate ceiling."""
        return tuple(self.feasible(k) for k in range(1, self.M + 1))


def _check_user(M: int, m: int):
    if not (1 <= m <= M):
        raise IndexError(f"user index m={m} outside 1..{M}")


def dl_noma_op(cfg: DownlinkNomaConfig, m: int) -> float:
    _check_user(cfg.M, m)
    lam = cfg.lam(m)
    g = cfg.geometry
    if lam < g.a:
        return 0.0
    if lam >= g.b:
        return 1.0
    F = GainDistribution(g).cdf(lam)
    return float(order_stat_cdf(F, cfg.M, m))


def dl_noma_zero_op_snr(cfg: DownlinkNomaConfig, m: int) -> float:
    """Smallest SNR at which user m has zero outage; ``inf`` if some user k <= m is infeasible."""
    _check_user(cfg.M, m)
    g = cfg.geometry
    return g.z_max / g.eta * max(cfg.gamma(k) for k in range(1, m + 1))


def xi_k(D: float, zeta: float, n: int) -> float:
    """``int_0^{D/2} t**n / (t**2 + zeta**2) dt`` for a nonnegative integer ``n``."""
    if n < 0 or int(n) != n:
        raise ValueError("exponent must be a nonnegative integer")
    if not zeta > 0:
        raise ValueError("zeta must be positive")
    h = D / 2.0
    if h < 0.5 * zeta:
        # the parity closed forms cancel catastrophically once zeta >> D/2
        return _xi_series(h, zeta, n)
    l, odd = divmod(n, 2)
    if not odd:
        head = math.fsum(
            (-1) ** r * zeta ** (2 * r) * h ** (2 * (l - r) - 1) / (2 * (l - r) - 1)
            for r in range(l)
        )
        return head + (-1) ** l * zeta ** (2 * l - 1) * math.atan(h / zeta)
    head = math.fsum(
        (-1) ** r * zeta ** (2 * r) * h ** (2 * (l - r)) / (2 * (l - r)) for r in range(l)
    )
    return head + (-1) ** l * zeta ** (2 * l) / 2.0 * math.log1p(h * h / (zeta * zeta))


def _xi_series(h: float, zeta: float, n: int) -> float:
    # 1/(t^2 + z^2) = sum_j (-1)^j t^(2j) / z^(2j+2), |t| < z
    q = (h / zeta) ** 2
    terms = []
    power = h ** (n + 1) / zeta**2
    for j in range(200):
        term = (-1) ** j * power / (n + 2 * j + 1)
        terms.append(term)
        if abs(term) < 1e-18 * abs(terms[0]):
            break
        power *= q
    return math.fsum(terms)


class ErBounds(NamedTuple):
    lower: float
    upper: float


class _BoundTerms(NamedTuple):
    lambda3: float
    lambda4: float
    gamma2: float
    gamma3: float
    zeta: float


def _bound_terms(cfg: DownlinkNomaConfig, m: int) -> _BoundTerms:
    g = cfg.geometry
    D, d, eta = g.room_side, g.height, g.eta
    M = cfg.M
    alpha_m = cfg.alloc.alphas[m - 1]
    tail = cfg.alloc.tail(m)
    choose = math.comb(M - 1, m - 1)
    scale = (2.0 / D) ** (M - m + 1)
    lambda3 = eta * cfg.rho * alpha_m * choose * scale
    lambda4 = M / eta * choose * scale
    zeta = math.sqrt(d * d + eta * cfg.rho * tail / M)
    h = D / 2.0
    gamma2_terms, gamma3_terms = [], []
    for k in range(m):
        c = math.comb(m - 1, k) * (-2.0 / D) ** k
        n = M - m + k
        gamma2_terms.append(c * xi_k(D, zeta, n))
        gamma3_terms.append(c * (h ** (n + 3) / (n + 3) + h ** (n + 1) * d * d / (n + 1)))
    return _BoundTerms(lambda3, lambda4, math.fsum(gamma2_terms), math.fsum(gamma3_terms), zeta)


def dl_noma_er_bounds(cfg: DownlinkNomaConfig, m: int) -> ErBounds:
    """Jensen upper/lower bounds on the ergodic rate of user m."""
    _check_user(cfg.M, m)
    t = _bound_terms(cfg, m)
    alpha_m = cfg.alloc.alphas[m - 1]
    tail = cfg.alloc.tail(m)
    upper = math.log1p(t.lambda3 * t.gamma2) / LN2
    lower = math.log1p(cfg.rho * alpha_m / (cfg.rho * tail + cfg.M * t.lambda4 * t.gamma3)) / LN2
    return ErBounds(lower, upper)


def lambda5(M: int, m: int) -> float:
    return M * math.comb(M - 1, m - 1) * math.fsum(
        math.comb(m - 1, k) * (-1) ** k / (M - m + k + 1) for k in range(m)
    )


def dl_noma_er_asymptotic(cfg: DownlinkNomaConfig, m: int) -> ErBounds:
    """High-SNR bound asymptotes: rho-dependent for m == M, constant ceilings otherwise."""
    _check_user(cfg.M, m)
    alpha_m = cfg.alloc.alphas[m - 1]
    if m == cfg.M:
        t = _bound_terms(cfg, m)
        upper = math.log1p(t.lambda3 * t.gamma2) / LN2
        lower = math.log1p(cfg.rho * alpha_m / (cfg.M * t.lambda4 * t.gamma3)) / LN2
        return ErBounds(lower, upper)
    tail = cfg.alloc.tail(m)
    upper = math.log1p(alpha_m * lambda5(cfg.M, m) / tail) / LN2
    lower = math.log1p(alpha_m / tail) / LN2
    return ErBounds(lower, upper)


# -- OMA versus NOMA -----------------------------------------------------------

class DownlinkComparison(NamedTuple):
    case: str
    rho_oma: float
    rho_noma: tuple[float, ...]
    noma_better: tuple[bool, ...]


def compare_oma_noma_dl(cfg: DownlinkNomaConfig, oma_target: float) -> DownlinkComparison:
    """Classify by zero-outage SNR thresholds.

    ``case1``: OMA reaches zero outage before every NOMA user.  ``case2``: at
    least the first NOMA user gets there no later than OMA.  Infeasible NOMA
    targets yield ``perpetual-outage``; a single user gives ``identical``.
    """
    g = cfg.geometry
    rho_oma = dl_oma_zero_op_snr(g, cfg.M, oma_target)
    rho_noma = tuple(dl_noma_zero_op_snr(cfg, m) for m in range(1, cfg.M + 1))
    better = tuple(rho_oma >= r for r in rho_noma)
    if not all(cfg.feasibility()):
        return DownlinkComparison("perpetual-outage", rho_oma, rho_noma, better)
    if cfg.M == 1:
        return DownlinkComparison("identical", rho_oma, rho_noma, better)
    if rho_oma < min(rho_noma):
        case = "case1"
    elif rho_oma >= max(rho_noma):
        raise RuntimeError(
            f"OMA threshold {rho_oma!r} dominates every NOMA threshold {rho_noma!r}; "
            "this configuration should be unreachable for feasible targets"
        )
    else:
        case = "case2"
    return DownlinkComparison(case, rho_oma, rho_noma, better)
