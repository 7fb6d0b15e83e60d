"""Physical constants (CODATA values via :mod:`scipy.constants`)."""

from __future__ import annotations

from dataclasses import dataclass

import scipy.constants as _sc


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = _sc.c
    hbar: float = _sc.hbar
    h: float = _sc.h
    kB: float = _sc.k
    eps0: float = _sc.epsilon_0

    def __post_init__(self):
        for name in ("c", "hbar", "h", "kB", "eps0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


CONST = PhysicalConstants()

# atomic units used by the polarizability tables
BOHR_RADIUS = _sc.physical_constants["Bohr radius"][0]
ELEMENTARY_CHARGE = _sc.e
HARTREE = _sc.physical_constants["Hartree energy"][0]
AU_DIPOLE = ELEMENTARY_CHARGE * BOHR_RADIUS  # C m
AU_POLARIZABILITY = AU_DIPOLE**2 / HARTREE  # C^2 m^2 / J

AU_METRES = _sc.astronomical_unit
SUN_RADIUS = 6.957e8  # m, IAU nominal
SUN_SOLID_ANGLE = _sc.pi * (SUN_RADIUS / AU_METRES) ** 2  # sr, seen from 1 AU
