"""System geometry, channel statistics and shared parameter types.

A single waveguide runs along the room centreline at height ``d``; each pinching
antenna sits directly above its user's x-coordinate, so the squared link
distance is ``Z = y**2 + d**2`` with the lateral offset ``y ~ U[-D/2, D/2]``.
The channel gain is ``Y = eta / Z``.

All distribution functions accept scalars or numpy arrays and broadcast.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SPEED_OF_LIGHT = 3e8


@dataclass(frozen=True)
class SystemGeometry:
    """Room side ``D``, waveguide height ``d`` and carrier frequency ``fc``."""

    room_side: float = 20.0
    height: float = 5.0
    carrier_freq: float = 10e9
    lightspeed: float = SPEED_OF_LIGHT

    def __post_init__(self):
        for name in ("room_side", "height", "carrier_freq", "lightspeed"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def eta(self) -> float:
        return eta(self)

    @property
    def z_min(self) -> float:
        """Smallest squared distance, ``d**2``."""
        return self.height**2

    @property
    def z_max(self) -> float:
        """Largest squared distance, ``d**2 + D**2/4``."""
        return self.height**2 + self.room_side**2 / 4.0

    @property
    def a(self) -> float:
        """Lower end of the channel-gain support."""
        return self.eta / self.z_max

    @property
    def b(self) -> float:
        """Upper end of the channel-gain support."""
        return self.eta / self.z_min

    def replace(self, **changes) -> "SystemGeometry":
        from dataclasses import replace

        return replace(self, **changes)


DEFAULT_GEOMETRY = SystemGeometry()


def eta(geometry: SystemGeometry) -> float:
    """Free-space path-loss constant ``c**2 / (16 pi**2 fc**2)`` in m**2."""
    return geometry.lightspeed**2 / (16.0 * math.pi**2 * geometry.carrier_freq**2)


@dataclass(frozen=True)
class NomaPowerAllocation:
    alphas: tuple[float, ...]

    def __post_init__(self):
        alphas = tuple(float(x) for x in self.alphas)
        object.__setattr__(self, "alphas", alphas)
        if not alphas:
            raise ValueError("power allocation needs at least one coefficient")
        if alphas[-1] <= 0:
            raise ValueError("power coefficients must be positive")
        if any(x <= y for x, y in zip(alphas, alphas[1:])):
            raise ValueError(f"power coefficients must be strictly decreasing: {alphas}")
        if abs(math.fsum(alphas) - 1.0) > 1e-12:
            raise ValueError(f"power coefficients must sum to 1, got {math.fsum(alphas)!r}")

    def __len__(self) -> int:
        return len(self.alphas)

    def tail(self, m: int) -> float:
        """Sum of the coefficients of users ``m+1..M`` (1-based ``m``)."""
        return math.fsum(self.alphas[m:])


@dataclass(frozen=True)
class RateTargets:
    """Per-user target rates as spectral efficiencies (bits/s/Hz)."""

    targets: tuple[float, ...]
    bandwidth: float = 1e6

    def __post_init__(self):
        targets = tuple(float(x) for x in self.targets)
        object.__setattr__(self, "targets", targets)
        if not targets:
            raise ValueError("need at least one target rate")
        if any(not (t > 0 and math.isfinite(t)) for t in targets):
            raise ValueError(f"target rates must be positive and finite: {targets}")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")

    @classmethod
    def from_mbps(cls, mbps: Sequence[float], bandwidth: float = 1e6) -> "RateTargets":
        return cls(tuple(r * 1e6 / bandwidth for r in mbps), bandwidth)

    @classmethod
    def uniform(cls, target: float, count: int, bandwidth: float = 1e6) -> "RateTargets":
        return cls((target,) * count, bandwidth)

    def __len__(self) -> int:
        return len(self.targets)

    def __getitem__(self, i):
        return self.targets[i]


@dataclass(frozen=True)
class SnrGrid:
    points_db: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        pts = tuple(float(x) for x in self.points_db)
        object.__setattr__(self, "points_db", pts)
        if any(x >= y for x, y in zip(pts, pts[1:])):
            raise ValueError("SNR grid must be strictly increasing")

    @classmethod
    def linspace(cls, start_db: float, stop_db: float, num: int) -> "SnrGrid":
        return cls(tuple(np.linspace(start_db, stop_db, num)))

    @property
    def db(self) -> np.ndarray:
        return np.asarray(self.points_db, dtype=float)

    @property
    def linear(self) -> np.ndarray:
        return db_to_linear(self.db)

    def __len__(self) -> int:
        return len(self.points_db)


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def _out(values, like):
    if np.ndim(like) == 0:
        return float(values)
    return values


# -- squared distance Z = |psi_pin - psi|^2 -----------------------------------

def distance_sq_pdf(geometry: SystemGeometry, z):
    """Density of the squared PA-user distance.

    Returns ``+inf`` at the singular lower edge ``z == d**2``.
    """
    z_arr = np.asarray(z, dtype=float)
    D, d2 = geometry.room_side, geometry.z_min
    out = np.zeros(z_arr.shape)
    inside = (z_arr >= d2) & (z_arr < geometry.z_max)
    with np.errstate(divide="ignore"):
        out[inside] = 1.0 / (D * np.sqrt(z_arr[inside] - d2))
    return _out(out, z)


def distance_sq_cdf(geometry: SystemGeometry, z):
    z_arr = np.asarray(z, dtype=float)
    D, d2 = geometry.room_side, geometry.z_min
    shifted = np.clip(z_arr - d2, 0.0, None)
    out = np.where(z_arr < geometry.z_max, 2.0 * np.sqrt(shifted) / D, 1.0)
    out = np.where(z_arr < d2, 0.0, out)
    return _out(np.clip(out, 0.0, 1.0), z)


# -- channel gain Y = eta / Z -------------------------------------------------

@dataclass(frozen=True)
class GainDistribution:
    """Distribution of ``|h|**2`` for a uniformly placed user."""

    geometry: SystemGeometry = DEFAULT_GEOMETRY

    @property
    def a(self) -> float:
        return self.geometry.a

    @property
    def b(self) -> float:
        return self.geometry.b

    def pdf(self, y):
        return gain_pdf(self, y)

    def cdf(self, y):
        return gain_cdf(self, y)

    def sf(self, y):
        """Survival function ``1 - F(y) = (2/D) sqrt(eta/y - d**2)`` without cancellation."""
        y_arr = np.asarray(y, dtype=float)
        g = self.geometry
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = np.clip(g.eta / y_arr - g.z_min, 0.0, None)
            out = 2.0 * np.sqrt(inner) / g.room_side
        out = np.where(y_arr < g.a, 1.0, np.where(y_arr >= g.b, 0.0, out))
        return _out(np.clip(out, 0.0, 1.0), y)


def gain_pdf(dist: GainDistribution, y):
    """Density of the channel gain; zero outside ``[a, b)``."""
    g = dist.geometry
    y_arr = np.asarray(y, dtype=float)
    out = np.zeros(y_arr.shape)
    inside = (y_arr >= g.a) & (y_arr < g.b)
    yi = y_arr[inside]
    out[inside] = g.eta / (g.room_side * yi**2 * np.sqrt(g.eta / yi - g.z_min))
    return _out(out, y)


def gain_cdf(dist: GainDistribution, y):
    return _out(1.0 - np.asarray(dist.sf(y)), y)


# -- order statistics ---------------------------------------------------------

def _check_index(M: int, m: int):
    if not (1 <= m <= M):
        raise IndexError(f"user index m={m} outside 1..{M}")


def ordered_gain_pdf(dist: GainDistribution, M: int, m: int, y):
    """Density of the m-th smallest of ``M`` iid gains."""
    _check_index(M, m)
    F = np.asarray(dist.cdf(y))
    coeff = math.factorial(M) / (math.factorial(m - 1) * math.factorial(M - m))
    out = coeff * np.asarray(dist.pdf(y)) * F ** (m - 1) * (1.0 - F) ** (M - m)
    return _out(out, y)


def ordered_gain_cdf(dist: GainDistribution, M: int, m: int, y):
    _check_index(M, m)
    return _out(order_stat_cdf(dist.cdf(y), M, m), y)


def order_stat_cdf(F, M: int, m: int):
    """``P(m-th smallest of M <= x)`` given the parent CDF value ``F = F(x)``."""
    _check_index(M, m)
    F = np.asarray(F, dtype=float)
    total = np.zeros(F.shape)
    for j in range(m, M + 1):
        total = total + math.comb(M, j) * F**j * (1.0 - F) ** (M - j)
    return np.clip(total, 0.0, 1.0)
