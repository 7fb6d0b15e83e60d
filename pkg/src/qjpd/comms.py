"""Detection figures of merit: SNR, free-space link budget, binary channel capacity."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .constants import CONST
from .dynamics import n2_closed_form
from .errors import DomainError
from .rates import SunModel

INFINITE_SNR = math.inf
_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class DetectionScenario:
    n_sig: float
    n_bg: float
    eta_sig: float
    eta_bg: float

    def __post_init__(self):
        if self.n_sig < 0 or self.n_bg < 0:
            raise DomainError("photon counts must be >= 0")
        for e in (self.eta_sig, self.eta_bg):
            if not 0 <= e <= 1:
                raise DomainError("efficiencies must lie in [0, 1]")


@dataclass(frozen=True)
class FilterDetector:
    """Narrow-band filter in front of a broadband photon counter."""

    t_max: float = 0.7
    enbw: float = 1e9  # Hz
    eta_det: float = 1.0

    def __post_init__(self):
        if not 0 < self.t_max <= 1:
            raise DomainError("t_max must lie in (0, 1]")
        if not self.enbw > 0:
            raise DomainError("enbw must be positive")
        if not 0 < self.eta_det <= 1:
            raise DomainError("eta_det must lie in (0, 1]")

    @property
    def eta_sig(self):
        return self.t_max * self.eta_det

    def eta_bg(self, kappa_filter):
        """Background efficiency given the in-band fraction over the ENBW."""
        return kappa_filter * self.t_max * self.eta_det

    def kappa(self, spectrum, lambda0):
        from .spectra import in_band_fraction

        return in_band_fraction(spectrum, lambda0, self.enbw)


@dataclass(frozen=True)
class LinkBudget:
    a_t: float = 5e-4  # m^2
    a_r: float = 0.8  # m^2
    distance: float = 1.495978707e11  # m
    wavelength: float = 780e-9  # m
    tx_power: float = 1.0  # W

    def __post_init__(self):
        for name in ("a_t", "a_r", "distance", "wavelength", "tx_power"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")


@dataclass(frozen=True)
class BinaryChannel:
    p_s: float
    p_b: float
    q_opt: float
    capacity: float


def snr(sc):
    """Signal-to-noise ratio; ``INFINITE_SNR`` when no background is seen."""
    num = sc.n_sig * sc.eta_sig
    den = sc.n_bg * sc.eta_bg
    if den == 0:
        if num == 0:
            raise DomainError("SNR undefined with neither signal nor background")
        return INFINITE_SNR
    return num / den


def qjpd_background_efficiency(kappa, eta_qj, species):
    """Background sensitivity of the atom: kappa * eta_qj * (total 1->2 / probe share)."""
    if kappa < 0 or not 0 <= eta_qj <= 1:
        raise DomainError("kappa must be >= 0 and eta_qj in [0, 1]")
    F1, F2 = species.ground_F[:2]
    ratio = species.transfer_sum(F1, F2) / species.probe_transfer()
    return float(ratio) * kappa * eta_qj


def background_photons(power, window, spectrum):
    """Photons in ``window`` from broadband ``power`` at the spectrum's mean wavelength."""
    lam = spectrum.mean_wavelength_nm() * 1e-9
    return power * window * lam / (CONST.h * CONST.c)


def _fresnel_ok(lb):
    d_max = 2 * math.sqrt(max(lb.a_t, lb.a_r) / math.pi)
    return lb.distance >= 2 * d_max**2 / lb.wavelength


def link_efficiency(lb):
    """Far-field aperture-to-aperture efficiency A_T A_R / (lambda L)^2."""
    if not _fresnel_ok(lb):
        raise DomainError("link is not in the far field (L < 2 D^2 / lambda)")
    eta = lb.a_t * lb.a_r / (lb.wavelength * lb.distance) ** 2
    if eta >= 1:
        raise DomainError("far-field formula gives efficiency >= 1")
    return eta


def received_photons(tx_power, eta_link, wavelength, window):
    return tx_power * eta_link * window * wavelength / (CONST.h * CONST.c)


# -- channel capacity ---------------------------------------------------------


def _h2(p):
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


def mutual_information(q, p_s, p_b):
    """I(X;Y) in bits for P(x=1)=q, P(y=1|x=1)=p_s, P(y=1|x=0)=p_b."""
    return _h2(q * p_s + (1 - q) * p_b) - q * _h2(p_s) - (1 - q) * _h2(p_b)


def capacity(p_s, p_b, tol=1e-9):
    """Maximise the mutual information over q by golden-section search."""
    for p in (p_s, p_b):
        if not 0 <= p <= 1:
            raise DomainError("probabilities must lie in [0, 1]")
    if p_s == p_b:
        return BinaryChannel(p_s, p_b, 0.5, 0.0)
    f = lambda q: mutual_information(q, p_s, p_b)
    a, b = 0.0, 1.0
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    q = 0.5 * (a + b)
    cap = min(max(f(q), 0.0), 1.0)
    return BinaryChannel(p_s, p_b, q, cap)


def channel_probabilities(n_probe, sun_power, params=None, window=1e-2, eta_qj=8.5e-3):
    """(p_s, p_b): |2> population after ``window`` with and without the probe."""
    if n_probe < 0 or sun_power < 0 or not window > 0:
        raise DomainError("n_probe, sun_power must be >= 0 and window > 0")
    params = params or SunModel.fitted()
    bg = params.rates(sun_power)
    sig = bg.with_probe(eta_qj * n_probe / window)
    return n2_closed_form(sig, window).n2, n2_closed_form(bg, window).n2


def capacity_map(photon_grid, sun_power_grid, params=None, window=1e-2, eta_qj=8.5e-3):
    """Capacity (bits/use) on a (photons x sun power) grid; rows follow photons."""
    photons = np.asarray(photon_grid, dtype=float)
    powers = np.asarray(sun_power_grid, dtype=float)
    for g in (photons, powers):
        if g.size == 0 or np.any(np.diff(g) <= 0):
            raise DomainError("grids must be non-empty and strictly ascending")
    out = np.empty((photons.size, powers.size))
    for i, n in enumerate(photons):
        for j, p in enumerate(powers):
            out[i, j] = capacity(*channel_probabilities(n, p, params, window, eta_qj)).capacity
    return out


def capacity_map_csv(photon_grid, sun_power_grid, values):
    """First row: sun power axis in nW; first column: probe photons per window."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["photons\\sun_nW"] + [f"{p * 1e9:.6g}" for p in sun_power_grid])
    for n, row in zip(photon_grid, values):
        w.writerow([f"{n:.6g}"] + [f"{v:.6g}" for v in row])
    return buf.getvalue()


def read_capacity_map_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    powers = np.array([float(x) for x in rows[0][1:]]) * 1e-9
    photons = np.array([float(r[0]) for r in rows[1:]])
    values = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
    return photons, powers, values
