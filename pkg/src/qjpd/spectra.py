"""Solar / blackbody spectral radiance, in-band fraction and focusing geometry.

Wavelengths inside :class:`SolarSpectrum` are in nm and radiances in
W m^-2 nm^-1, matching how lab spectra are usually recorded. Everything
else in the package is SI.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from .constants import CONST, SUN_SOLID_ANGLE
from .errors import DegenerateSpectrumError, DomainError, SpectrumParseError

ANALYTIC = "analytic-planck"
MEASURED = "measured-samples"

# Lab spectrum support after the fibre link
DEFAULT_BAND_NM = (600.0, 1100.0)
SUN_TEMPERATURE = 5800.0


def planck_energy_density(omega, T):
    """Blackbody spectral energy density per unit angular frequency.

    Parameters
    ----------
    omega : float or array_like
        Angular frequency in rad/s (``>= 0``).
    T : float
        Temperature in K (``> 0``).

    Returns
    -------
    float or ndarray
        rho(omega) in J s m^-3. The omega -> 0 limit is returned as 0.
    """
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise DomainError("omega must be finite and non-negative")
    if not (math.isfinite(T) and T > 0):
        raise DomainError("temperature must be finite and positive")
    x = CONST.hbar * w / (CONST.kB * T)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        rho = CONST.hbar / (math.pi**2 * CONST.c**3) * w**3 / np.expm1(x)
    rho = np.where(w == 0, 0.0, rho)
    return float(rho) if rho.ndim == 0 else rho


def planck_radiance(lam_m, T):
    """Spectral radiance B_lambda in W m^-2 sr^-1 m^-1 for wavelength(s) in metres."""
    lam = np.asarray(lam_m, dtype=float)
    x = CONST.h * CONST.c / (lam * CONST.kB * T)
    with np.errstate(over="ignore", divide="ignore"):
        b = 2 * CONST.h * CONST.c**2 / lam**5 / np.expm1(x)
    b = np.where(lam > 0, b, 0.0)
    return float(b) if b.ndim == 0 else b


def irradiance_from_energy_density(lam_m, T, solid_angle=SUN_SOLID_ANGLE):
    """Spectral irradiance (W m^-2 nm^-1) from a source of given solid angle.

    Goes through rho(omega): the flux per unit omega from a patch of solid
    angle ``solid_angle`` is ``c rho Omega / 4 pi``, then converted per nm.
    """
    omega = 2 * math.pi * CONST.c / lam_m
    per_omega = CONST.c * planck_energy_density(omega, T) * solid_angle / (4 * math.pi)
    return per_omega * 2 * math.pi * CONST.c / lam_m**2 * 1e-9


@dataclass(frozen=True)
class SolarSpectrum:
    """Spectral radiance model, either analytic Planck or sampled.

    Use :meth:`planck` or :meth:`from_samples` rather than the constructor.
    """

    kind: str
    temperature: float | None = SUN_TEMPERATURE
    band: tuple[float, float] | None = None
    wavelengths_nm: np.ndarray | None = field(default=None, repr=False, compare=False)
    radiance_samples: np.ndarray | None = field(default=None, repr=False, compare=False)
    total_power_scale: float | None = None

    def __post_init__(self):
        if self.kind == ANALYTIC:
            if not (self.temperature and self.temperature > 0):
                raise DomainError("analytic spectrum needs a positive temperature")
        elif self.kind == MEASURED:
            lam, rad = self.wavelengths_nm, self.radiance_samples
            if lam is None or rad is None or len(lam) != len(rad) or len(lam) < 2:
                raise DomainError("measured spectrum needs >= 2 paired samples")
            if np.any(np.diff(lam) <= 0):
                raise DomainError("sample wavelengths must be strictly increasing")
            if np.any(rad < 0) or not np.all(np.isfinite(rad)):
                raise DomainError("radiance samples must be finite and non-negative")
        else:
            raise DomainError(f"unknown spectrum kind {self.kind!r}")
        if self.band is not None:
            lo, hi = self.band
            if not (0 < lo < hi):
                raise DomainError("band must satisfy 0 < lambda_min < lambda_max")
        if self.total_power_scale is not None and self.total_power_scale < 0:
            raise DomainError("total_power_scale must be non-negative")

    @classmethod
    def planck(cls, temperature=SUN_TEMPERATURE, band=DEFAULT_BAND_NM, total_power_scale=None):
        """Sun as a blackbody seen from 1 AU, optionally hard-windowed to ``band`` (nm)."""
        band = None if band is None else (float(band[0]), float(band[1]))
        return cls(ANALYTIC, float(temperature), band, total_power_scale=total_power_scale)

    @classmethod
    def from_samples(cls, wavelengths_nm, radiance, band=None, total_power_scale=None):
        lam = np.array(wavelengths_nm, dtype=float)
        rad = np.array(radiance, dtype=float)
        lam.setflags(write=False)
        rad.setflags(write=False)
        return cls(MEASURED, None, band, lam, rad, total_power_scale)

    @property
    def support(self):
        """(lambda_min, lambda_max) in nm outside which the radiance is zero."""
        if self.kind == MEASURED:
            lo, hi = float(self.wavelengths_nm[0]), float(self.wavelengths_nm[-1])
        else:
            lo, hi = 0.0, math.inf
        if self.band is not None:
            lo, hi = max(lo, self.band[0]), min(hi, self.band[1])
        return lo, hi

    def radiance(self, lam_nm):
        """Spectral radiance (W m^-2 nm^-1) at wavelength(s) in nm; zero outside support."""
        lam = np.asarray(lam_nm, dtype=float)
        if self.kind == ANALYTIC:
            out = SUN_SOLID_ANGLE * planck_radiance(lam * 1e-9, self.temperature) * 1e-9
        else:
            out = np.interp(lam, self.wavelengths_nm, self.radiance_samples, left=0.0, right=0.0)
        if self.band is not None:
            out = np.where((lam >= self.band[0]) & (lam <= self.band[1]), out, 0.0)
        out = np.asarray(out, dtype=float)
        return float(out) if out.ndim == 0 else out

    def integrated_radiance(self):
        """Integral of the radiance over its support (W m^-2)."""
        if self.kind == MEASURED:
            lam, rad = self.wavelengths_nm, self.radiance_samples
            if self.band is not None:
                lo, hi = self.support
                inner = (lam > lo) & (lam < hi)
                lam = np.concatenate([[lo], lam[inner], [hi]])
                rad = self.radiance(lam)
            return float(np.trapezoid(rad, lam))
        lo, hi = self.support
        peak_nm = 2.897771955e6 / self.temperature
        f = lambda x: self.radiance(x)
        if math.isinf(hi):
            # split at the Wien peak; the tail is integrated to infinity
            a = integrate.quad(f, max(lo, 1.0), peak_nm, limit=200, epsrel=1e-10)[0]
            b = integrate.quad(f, peak_nm, math.inf, limit=200, epsrel=1e-10)[0]
            tiny = integrate.quad(f, lo, 1.0)[0] if lo < 1.0 else 0.0
            return a + b + tiny
        pts = [peak_nm] if lo < peak_nm < hi else None
        return integrate.quad(f, lo, hi, points=pts, limit=200, epsrel=1e-10)[0]

    def mean_wavelength_nm(self):
        """Photon-number weighted mean wavelength: int B lam / int B (nm)."""
        lo, hi = self.support
        if self.kind == MEASURED:
            return float(np.trapezoid(self.radiance_samples * self.wavelengths_nm, self.wavelengths_nm)
                         / np.trapezoid(self.radiance_samples, self.wavelengths_nm))
        hi = min(hi, 200.0 * 2.897771955e6 / self.temperature)
        num = integrate.quad(lambda x: x * self.radiance(x), lo, hi, limit=200)[0]
        den = integrate.quad(self.radiance, lo, hi, limit=200)[0]
        return num / den


def in_band_fraction(spectrum, lambda0, linewidth):
    """Fraction kappa of the total power within one linewidth at ``lambda0``.

    Parameters
    ----------
    spectrum : SolarSpectrum
    lambda0 : float
        Line centre in metres.
    linewidth : float
        Width in Hz; converted with d_lambda = lambda0^2 d_nu / c.
    """
    if not linewidth > 0:
        raise DomainError("linewidth must be positive")
    lam_nm = lambda0 * 1e9
    lo, hi = spectrum.support
    if not (lo <= lam_nm <= hi):
        raise DomainError(f"lambda0 = {lam_nm:g} nm outside spectrum support [{lo:g}, {hi:g}] nm")
    dlam_nm = lambda0**2 * linewidth / CONST.c * 1e9
    total = spectrum.integrated_radiance()
    if not total > 0:
        raise DegenerateSpectrumError("spectrum integrates to zero")
    return spectrum.radiance(lam_nm) * dlam_nm / total


@dataclass(frozen=True)
class FocusGeometry:
    """Gaussian focusing of the fibre output onto the atom (all lengths in m)."""

    w_at: float = 1.3e-6
    f_L: float = 8e-3
    lambda0: float = 780e-9

    def __post_init__(self):
        if not (self.w_at > 0 and self.f_L > 0 and self.lambda0 > 0):
            raise DomainError("geometry fields must be strictly positive")
        if not self.w_in > self.w_at:
            raise DomainError("input waist must exceed the focused waist")

    @property
    def w_in(self):
        return self.lambda0 * self.f_L / (math.pi * self.w_at)


def radiance_at_focus(B_in, geom=FocusGeometry()):
    """Radiance at the atom from radiance at the lens input (same units)."""
    if np.any(np.asarray(B_in) < 0):
        raise DomainError("radiance must be non-negative")
    return (geom.w_in / geom.w_at) ** 2 * B_in


def photon_flux(power, lam):
    """Photons per second carried by ``power`` (W) at wavelength ``lam`` (m)."""
    if np.any(np.asarray(power) < 0):
        raise DomainError("power must be non-negative")
    return power * lam / (CONST.h * CONST.c)


def read_spectrum_csv(source, band=None, total_power_scale=None):
    """Parse ``wavelength_nm,radiance_W_per_m2_nm`` CSV (header row required).

    ``source`` is a path or an open text stream.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            return read_spectrum_csv(fh, band, total_power_scale)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise SpectrumParseError("empty file", line=1) from None
    cols = [h.strip() for h in header]
    if cols != ["wavelength_nm", "radiance_W_per_m2_nm"]:
        raise SpectrumParseError(
            f"expected header 'wavelength_nm,radiance_W_per_m2_nm', got {','.join(cols)!r}", line=1
        )
    lam, rad = [], []
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise SpectrumParseError(f"expected 2 columns, got {len(row)}", line=lineno)
        try:
            x, y = float(row[0]), float(row[1])
        except ValueError:
            raise SpectrumParseError(f"non-numeric value in {row!r}", line=lineno) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise SpectrumParseError("non-finite value", line=lineno)
        if y < 0:
            raise SpectrumParseError("negative radiance", line=lineno)
        if lam and x <= lam[-1]:
            raise SpectrumParseError("wavelengths must be strictly increasing", line=lineno)
        lam.append(x)
        rad.append(y)
    if len(lam) < 2:
        raise SpectrumParseError("need at least two samples")
    return SolarSpectrum.from_samples(lam, rad, band=band, total_power_scale=total_power_scale)


def write_spectrum_csv(spectrum, dest):
    if spectrum.kind != MEASURED:
        raise DomainError("only sampled spectra can be written")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["wavelength_nm", "radiance_W_per_m2_nm"])
    for x, y in zip(spectrum.wavelengths_nm, spectrum.radiance_samples):
        w.writerow([repr(float(x)), repr(float(y))])
    Path(dest).write_text(buf.getvalue(), encoding="utf-8")
