"""Transition rates between the two ground hyperfine levels.

Sunlight drives |1> <-> |2> through absorption on both D lines followed by
spontaneous decay; a weak resonant probe adds a 1 -> 2 rate. Stimulated
emission is neglected throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import CONST
from .errors import DegenerateRatesError, DomainError


@dataclass(frozen=True)
class ProbeConfig:
    photons_per_window: float = 0.0
    window: float = 1e-2  # s
    eta_qj: float = 8.5e-3

    def __post_init__(self):
        if self.photons_per_window < 0:
            raise DomainError("photons_per_window must be >= 0")
        if not 0 < self.eta_qj <= 1:
            raise DomainError("eta_qj must lie in (0, 1]")
        if not self.window > 0:
            raise DomainError("window must be positive")


@dataclass(frozen=True)
class RateSet:
    """Rates in s^-1. ``r0`` is None when the sun rates come from a fit."""

    sun_12: float
    sun_21: float
    probe_12: float = 0.0
    r0: float | None = None
    sun_power: float = 0.0  # W

    def __post_init__(self):
        for name in ("sun_12", "sun_21", "probe_12"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be finite and >= 0")
        if self.r0 is not None and not self.r0 >= 0:
            raise DomainError("r0 must be >= 0")

    @property
    def up(self):
        """Total 1 -> 2 rate."""
        return self.sun_12 + self.probe_12

    @property
    def down(self):
        return self.sun_21

    def with_probe(self, probe_12):
        return RateSet(self.sun_12, self.sun_21, probe_12, self.r0, self.sun_power)


def scaling_rate(sun_power, kappa, geom, species):
    """Scaling rate R0 (s^-1) linear in total sun power and in-band fraction."""
    if sun_power < 0 or kappa < 0:
        raise DomainError("sun_power and kappa must be non-negative")
    w0 = species.omega0
    return 2 * math.pi * CONST.c**2 / (CONST.hbar * w0**3 * geom.w_at**2) * kappa * sun_power


def sun_rates(r0, species):
    """(1 -> 2, 2 -> 1) sunlight rates for scaling rate ``r0``."""
    if r0 < 0:
        raise DomainError("r0 must be >= 0")
    F1, F2 = species.ground_F[:2]
    return r0 * float(species.transfer_sum(F1, F2)), r0 * float(species.transfer_sum(F2, F1))


def probe_rate(cfg):
    return cfg.eta_qj * cfg.photons_per_window / cfg.window


def theoretical_rates(sun_power, kappa, geom, species, probe=None):
    r0 = scaling_rate(sun_power, kappa, geom, species)
    s12, s21 = sun_rates(r0, species)
    p12 = probe_rate(probe) if probe is not None else 0.0
    return RateSet(s12, s21, p12, r0, sun_power)


def saturation_rate_per_power(kappa, geom, species):
    """b_th = (R_12 + R_21) / P_sun in s^-1 W^-1."""
    s12, s21 = sun_rates(scaling_rate(1.0, kappa, geom, species), species)
    return s12 + s21


def saturated_population(rates):
    total = rates.up + rates.down
    if total <= 0:
        raise DegenerateRatesError("all rates are zero; no steady state")
    return rates.up / total


# -- fitted-parameter model --------------------------------------------------


@dataclass(frozen=True)
class SunModel:
    """Maps a sun power to (R_12, R_21).

    ``fitted``: two-parameter saturation form, split so that the steady state
    equals ``n2_sat``. ``theoretical``: Einstein-rate chain through ``kappa``.
    """

    mode: str = "fitted"
    n2_sat: float = 0.66
    b: float = 9e9  # s^-1 W^-1
    kappa: float = 3.7e-8
    geom: object = None
    species: object = None

    def __post_init__(self):
        if self.mode not in ("fitted", "theoretical"):
            raise DomainError(f"unknown sun model mode {self.mode!r}")
        if self.mode == "fitted" and not (0 < self.n2_sat <= 1 and self.b >= 0):
            raise DomainError("fitted mode needs 0 < n2_sat <= 1 and b >= 0")

    @classmethod
    def fitted(cls, n2_sat=0.66, b=9e9):
        return cls("fitted", n2_sat=n2_sat, b=b)

    @classmethod
    def theoretical(cls, kappa=3.7e-8, geom=None, species=None):
        from .atomdata import builtin_species
        from .spectra import FocusGeometry

        return cls("theoretical", kappa=kappa, geom=geom or FocusGeometry(), species=species or builtin_species())

    def rates(self, sun_power, probe_12=0.0):
        if sun_power < 0:
            raise DomainError("sun_power must be >= 0")
        if self.mode == "fitted":
            total = self.b * sun_power
            return RateSet(self.n2_sat * total, (1 - self.n2_sat) * total, probe_12, None, sun_power)
        rs = theoretical_rates(sun_power, self.kappa, self.geom, self.species)
        return rs.with_probe(probe_12)
