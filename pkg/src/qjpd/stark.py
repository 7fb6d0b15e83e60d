"""AC Stark shifts from broadband thermal light.

The shift of a level is minus the thermal-spectrum-weighted integral of its
dynamic polarizability, divided by 4 eps0. Polarizabilities are
sums over dipole partners with linewidth-regularised denominators; the
angular weight of each partner is computed directly from 3j/6j symbols for
the chosen hyperfine sublevel and polarization.

The near-resonant Lorentzian-dispersion piece of each term is integrated in
closed form; the smooth remainder goes on a log-frequency Simpson grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq
from sympy import Rational
from sympy.physics.wigner import wigner_3j, wigner_6j

from .constants import AU_DIPOLE, CONST
from .errors import DomainError, IntegrationError

LINEAR = "linear"
ISOTROPIC = "isotropic"
FULL = "full-spectrum"

# Planck weight below this fraction of its peak is dropped from the domain
PLANCK_TRUNCATION = 1e-12


@dataclass(frozen=True)
class Transition:
    partner: str
    partner_J: Fraction
    wavelength: float  # m
    reduced_dipole_au: float
    linewidth: float  # rad/s
    partner_above: bool

    @property
    def omega(self):
        """Signed transition angular frequency (negative for decay partners)."""
        w = 2 * math.pi * CONST.c / self.wavelength
        return w if self.partner_above else -w


@dataclass(frozen=True)
class PolarizabilityModel:
    """Polarizability of one sublevel |J, F, m_F>.

    ``F=None`` means fine-structure level |J, m_J=m_F> without hyperfine
    coupling.
    """

    state_label: str
    J: Fraction
    transitions: tuple[Transition, ...]
    F: Fraction | None = None
    m_F: Fraction = Fraction(0)
    nuclear_spin: Fraction = Fraction(0)
    polarization: str = LINEAR

    def __post_init__(self):
        if self.polarization not in (LINEAR, ISOTROPIC):
            raise DomainError(f"unknown polarization {self.polarization!r}")
        for tr in self.transitions:
            if not (tr.wavelength > 0 and tr.linewidth > 0):
                raise DomainError(f"transition to {tr.partner}: wavelength and linewidth must be positive")
        F = self.J if self.F is None else self.F
        if abs(self.m_F) > F:
            raise DomainError(f"|m_F| = {abs(self.m_F)} exceeds F = {F}")


@dataclass(frozen=True)
class ShiftResult:
    shift_per_power: float  # rad/s per W (energy shift / hbar)
    state_label: str
    scenario: str
    total_power: float = 1.0

    @property
    def shift_hz_per_uw(self):
        return self.shift_per_power / (2 * math.pi) * 1e-6

    @property
    def shift(self):
        """Total shift in rad/s at ``total_power``."""
        return self.shift_per_power * self.total_power

    def to_dict(self):
        return {"state": self.state_label, "scenario": self.scenario, "shift_hz_per_uw": self.shift_hz_per_uw}


def _R(x):
    x = Fraction(x)
    return Rational(x.numerator, x.denominator)


@lru_cache(maxsize=None)
def angular_weight(J, F, m, I, Jp, q):
    """sum over |F'' m''> in J' of |<(J I) F m| d_q |(J' I) F'' m''>|^2 / |<J||d||J'>|^2."""
    J, F, m, I, Jp = map(_R, (J, F, m, I, Jp))
    total = Rational(0)
    Fpp = abs(Jp - I)
    while Fpp <= Jp + I:
        six = wigner_6j(J, F, I, Fpp, Jp, 1)
        if six != 0:
            mpp = m - q
            if abs(mpp) <= Fpp:
                three = wigner_3j(F, 1, Fpp, -m, q, mpp)
                total += (2 * F + 1) * (2 * Fpp + 1) * six**2 * three**2
        Fpp += 1
    return float(total)


def model_weights(model):
    F = model.J if model.F is None else model.F
    I = 0 if model.F is None else model.nuclear_spin
    qs = (0,) if model.polarization == LINEAR else (-1, 0, 1)
    return np.array(
        [np.mean([angular_weight(model.J, F, model.m_F, I, tr.partner_J, q) for q in qs]) for tr in model.transitions]
    )


def _coefficients(model):
    g = model_weights(model)
    d2 = np.array([(tr.reduced_dipole_au * AU_DIPOLE) ** 2 for tr in model.transitions])
    wk = np.array([tr.omega for tr in model.transitions])
    gam = np.array([tr.linewidth for tr in model.transitions])
    return wk, 2 * g * d2 / CONST.hbar, gam


def _dispersion(x, gamma):
    return x / (x * x + 0.25 * gamma * gamma)


def dynamic_polarizability(model, omega):
    """alpha(omega) in C^2 m^2 / J (SI) for the model's sublevel and polarization."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise DomainError("omega must be >= 0")
    wk, ck, gam = _coefficients(model)
    wv = w[..., None]
    a = ck * 0.5 * (_dispersion(wk - wv, gam) + _dispersion(wk + wv, gam))
    out = a.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def polarizability_model(species, term, F=None, m_F=0, polarization=LINEAR):
    """Collect every tabulated dipole partner of ``term`` into a model."""
    J = species.J(term)
    trs = []
    for t in species.polarizability_transitions:
        if t.lower == term:
            trs.append(Transition(t.upper, species.J(t.upper), t.wavelength, t.reduced_dipole_au, t.linewidth, True))
        elif t.upper == term:
            trs.append(Transition(t.lower, species.J(t.lower), t.wavelength, t.reduced_dipole_au, t.linewidth, False))
    if not trs:
        raise DomainError(f"no polarizability transitions for {term!r}")
    label = term if F is None else f"{term} F={F} mF={m_F}"
    return PolarizabilityModel(
        label, J, tuple(trs), None if F is None else Fraction(F), Fraction(m_F), species.nuclear_spin, polarization
    )


def _planck_shape(w, T):
    x = CONST.hbar * w / (CONST.kB * T)
    with np.errstate(over="ignore"):
        return w**3 / np.expm1(x)


def planck_domain(T, truncation=PLANCK_TRUNCATION):
    """Angular-frequency interval where the Planck weight exceeds ``truncation`` x peak."""
    g = lambda x: x**3 / math.expm1(x)
    peak = g(2.821439372122079)
    f = lambda x: math.log(g(x)) - math.log(truncation * peak)
    x_lo = brentq(f, 1e-12, 2.82)
    x_hi = brentq(f, 2.83, 200.0)
    scale = CONST.kB * T / CONST.hbar
    return x_lo * scale, x_hi * scale


def _scenario(polarization, cutoff):
    parts = []
    if polarization == ISOTROPIC:
        parts.append(ISOTROPIC)
    if cutoff is not None:
        parts.append(f"cutoff({cutoff * 1e9:g}nm)")
    return ",".join(parts) or FULL


def _shift_integral(model, T, lo, hi, top, n_grid):
    """int_lo^top rho_shape(w) alpha(w) dw / int_lo^hi rho_shape(w) dw."""
    wk, ck, gam = _coefficients(model)
    u = np.linspace(math.log(lo), math.log(hi), n_grid)
    w = np.exp(u)
    norm = simpson(_planck_shape(w, T) * w, x=u)

    uu = np.linspace(math.log(lo), math.log(top), n_grid)
    ww = np.exp(uu)
    rho = _planck_shape(ww, T) / norm
    f = rho * dynamic_polarizability(model, ww)
    analytic = 0.0
    for W_signed, c, g in zip(wk, ck, gam):
        W = abs(W_signed)
        sgn = 1.0 if W_signed > 0 else -1.0
        rho_W = _planck_shape(W, T) / norm
        f -= rho_W * c * sgn * 0.5 * _dispersion(W - ww, g)
        quarter = 0.25 * g * g
        analytic += rho_W * c * sgn * 0.25 * math.log(((W - lo) ** 2 + quarter) / ((W - top) ** 2 + quarter))
    return simpson(f * ww, x=uu) + analytic


def bbr_shift(model, T=5800.0, total_power=1e-6, waist=1.3e-6, lambda_min_cutoff=None,
              n_grid=2**15 + 1, rtol=1e-3):
    """Light shift of ``model``'s sublevel in a focused thermal beam.

    The spectrum is normalised so the full blackbody carries ``total_power``
    through a Gaussian waist ``waist``. With ``lambda_min_cutoff`` (m) only
    wavelengths above the cutoff are kept, without renormalising.
    The grid result is compared with a half-resolution grid; disagreement
    beyond ``rtol`` raises :class:`IntegrationError`.
    """
    if not T > 0:
        raise DomainError("T must be positive")
    if total_power < 0:
        raise DomainError("total_power must be >= 0")
    if not waist > 0:
        raise DomainError("waist must be positive")
    lo, hi = planck_domain(T)
    top = hi
    if lambda_min_cutoff is not None:
        if not lambda_min_cutoff > 0:
            raise DomainError("cutoff wavelength must be positive")
        top = min(hi, 2 * math.pi * CONST.c / lambda_min_cutoff)
        if top <= lo:
            raise DomainError("cutoff removes the whole spectrum")
    fine = _shift_integral(model, T, lo, hi, top, n_grid)
    coarse = _shift_integral(model, T, lo, hi, top, n_grid // 2 + 1)
    err = abs(fine - coarse) / max(abs(fine), 1e-300)
    if err > rtol:
        raise IntegrationError(f"light-shift quadrature not converged (relative change {err:.2e})", err)
    u_per_watt = 2.0 / (math.pi * waist**2 * CONST.c)  # J/m^3 per W of beam power
    energy_per_watt = -u_per_watt * fine / (4 * CONST.eps0)
    return ShiftResult(energy_per_watt / CONST.hbar, model.state_label, _scenario(model.polarization, lambda_min_cutoff),
                       total_power)


def differential_shift(ground, excited):
    """Shift of the optical transition: excited minus ground."""
    if ground.scenario != excited.scenario:
        raise DomainError(f"scenario mismatch: {ground.scenario!r} vs {excited.scenario!r}")
    return ShiftResult(excited.shift_per_power - ground.shift_per_power,
                       f"{excited.state_label} - {ground.state_label}", ground.scenario, ground.total_power)


def standard_scenarios(species, T=5800.0, waist=1.3e-6, cutoff=800e-9, ground=("5S1/2", 1, 0),
                       excited=("5P3/2", 2, 0)):
    """Ground, excited and differential shifts for full, cutoff and isotropic cases."""
    g_lin = polarizability_model(species, *ground, polarization=LINEAR)
    e_lin = polarizability_model(species, *excited, polarization=LINEAR)
    g_iso = polarizability_model(species, *ground, polarization=ISOTROPIC)
    e_iso = polarizability_model(species, *excited, polarization=ISOTROPIC)
    g = bbr_shift(g_lin, T, waist=waist)
    e = bbr_shift(e_lin, T, waist=waist)
    gi = bbr_shift(g_iso, T, waist=waist)
    ei = bbr_shift(e_iso, T, waist=waist)
    return {
        "ground": g,
        "excited": e,
        "differential": differential_shift(g, e),
        "ground_cutoff": bbr_shift(g_lin, T, waist=waist, lambda_min_cutoff=cutoff),
        "excited_isotropic": ei,
        "differential_isotropic": differential_shift(gi, ei),
    }
