"""Command-line interface: ``qjpd <command> [options]``.

Every command builds all of its outputs in memory and only then writes them,
each through a temporary file and an atomic rename, so a failing run leaves
no partial files behind. JSON is written with sorted keys.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, comms, dynamics, fit, rates, stark
from .atomdata import resolve_species
from .errors import ConfigError, DegenerateRatesError, QJPDError
from .spectra import (
    DEFAULT_BAND_NM,
    SUN_TEMPERATURE,
    FocusGeometry,
    SolarSpectrum,
    in_band_fraction,
    read_spectrum_csv,
)

LAB_KAPPA = 3.7e-8
NW = 1e-9


@dataclass
class RunConfig:
    species_name: str = "rubidium-87"
    spectrum_source: dict = field(default_factory=lambda: {"kind": "planck", "temperature_K": SUN_TEMPERATURE,
                                                            "band_nm": list(DEFAULT_BAND_NM)})
    geometry: FocusGeometry = field(default_factory=FocusGeometry)
    probe: rates.ProbeConfig = field(default_factory=rates.ProbeConfig)
    kappa: float | None = LAB_KAPPA  # None: derive from the spectrum
    seed: int = 0
    output_dir: Path = Path(".")

    def species(self):
        try:
            return resolve_species(self.species_name)
        except KeyError as e:
            raise ConfigError(str(e.args[0]) if e.args else str(e)) from None

    def spectrum(self):
        src = self.spectrum_source
        if src.get("kind") == "planck":
            band = src.get("band_nm")
            return SolarSpectrum.planck(float(src.get("temperature_K", SUN_TEMPERATURE)),
                                        tuple(band) if band is not None else None)
        if src.get("kind") == "file":
            path = Path(src["path"])
            if not path.is_file():
                raise ConfigError(f"spectrum file {path} does not exist")
            band = src.get("band_nm")
            return read_spectrum_csv(path, tuple(band) if band is not None else None)
        raise ConfigError(f"spectrum kind must be 'planck' or 'file', got {src.get('kind')!r}")

    def resolved_kappa(self, species):
        if self.kappa is not None:
            return self.kappa
        line = species.line(species.probe[0])
        return in_band_fraction(self.spectrum(), species.lambda0, line.natural_linewidth / (2 * math.pi))


_CONFIG_KEYS = {"species", "spectrum", "geometry", "probe", "kappa", "seed", "output_dir"}


def _parse_spectrum_arg(text):
    """``planck``, ``planck:T``, ``planck:T:lo:hi`` or a CSV path."""
    if text.startswith("planck"):
        parts = text.split(":")
        try:
            T = float(parts[1]) if len(parts) > 1 else SUN_TEMPERATURE
            band = [float(parts[2]), float(parts[3])] if len(parts) > 3 else list(DEFAULT_BAND_NM)
        except (ValueError, IndexError):
            raise ConfigError(f"bad spectrum spec {text!r}; use planck[:T[:lo_nm:hi_nm]] or a CSV path") from None
        return {"kind": "planck", "temperature_K": T, "band_nm": band}
    return {"kind": "file", "path": text}


def load_config(args):
    cfg = RunConfig()
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        unknown = set(doc) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}; allowed {sorted(_CONFIG_KEYS)}")
        try:
            if "species" in doc:
                cfg.species_name = str(doc["species"])
            if "spectrum" in doc:
                s = doc["spectrum"]
                cfg.spectrum_source = _parse_spectrum_arg(s) if isinstance(s, str) else dict(s)
            if "geometry" in doc:
                g = doc["geometry"]
                cfg.geometry = FocusGeometry(float(g.get("w_at_m", 1.3e-6)), float(g.get("f_L_m", 8e-3)),
                                             float(g.get("lambda0_m", 780e-9)))
            if "probe" in doc:
                p = doc["probe"]
                cfg.probe = rates.ProbeConfig(float(p.get("photons_per_window", 0.0)), float(p.get("window_s", 1e-2)),
                                              float(p.get("eta_qj", 8.5e-3)))
            if "kappa" in doc:
                cfg.kappa = None if doc["kappa"] in (None, "spectrum") else float(doc["kappa"])
            if "seed" in doc:
                cfg.seed = int(doc["seed"])
            if "output_dir" in doc:
                cfg.output_dir = Path(doc["output_dir"])
        except (TypeError, ValueError, AttributeError) as e:
            raise ConfigError(f"{path}: {e}") from None
    if args.species:
        cfg.species_name = args.species
    if args.spectrum:
        cfg.spectrum_source = _parse_spectrum_arg(args.spectrum)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.output_dir = Path(args.out)
    if not 0 <= cfg.seed <= dynamics.MAX_SEED:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg.kappa is not None and cfg.kappa < 0:
        raise ConfigError("kappa must be >= 0")
    return cfg


# -- output helpers -----------------------------------------------------------


def _json_text(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write_outputs(out_dir, files):
    """Atomically write ``{name: text}`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise ConfigError(f"output directory {out_dir} is not writable")
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, out_dir / name))
        for tmp, dest in staged:
            os.replace(tmp, dest)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
    return [out_dir / n for n in files]


def _floats(text):
    """Comma list ``1,2,5`` or range ``start:stop:count`` (inclusive linspace)."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            return [float(v) for v in np.linspace(float(a), float(b), int(n))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list or start:stop:count, got {text!r}") from None


def _sun_model(name, cfg, species):
    if name == "fitted":
        return rates.SunModel.fitted()
    return rates.SunModel.theoretical(cfg.resolved_kappa(species), cfg.geometry, species)


# -- commands -----------------------------------------------------------------


def rateset_to_dict(rs):
    return {
        "r0_per_s": rs.r0,
        "sun_12_per_s": rs.sun_12,
        "sun_21_per_s": rs.sun_21,
        "probe_12_per_s": rs.probe_12,
        "sun_power_W": rs.sun_power,
    }


def rateset_from_dict(doc):
    return rates.RateSet(doc["sun_12_per_s"], doc["sun_21_per_s"], doc["probe_12_per_s"], doc["r0_per_s"],
                         doc["sun_power_W"])


def cmd_rates(args, cfg):
    species = cfg.species()
    kappa = cfg.resolved_kappa(species)
    probe = cfg.probe if args.photons is None else rates.ProbeConfig(args.photons, cfg.probe.window, cfg.probe.eta_qj)
    rs = rates.theoretical_rates(args.sun_nW * NW, kappa, cfg.geometry, species, probe)
    doc = {"rates": rateset_to_dict(rs), "kappa": kappa,
           "b_th_per_nW_per_s": rates.saturation_rate_per_power(kappa, cfg.geometry, species) * NW,
           "r0_per_nW_per_s": rates.scaling_rate(NW, kappa, cfg.geometry, species),
           "species": species.name}
    try:
        doc["saturated_population"] = rates.saturated_population(rs)
    except DegenerateRatesError:
        doc["saturated_population"] = None
        doc["warning"] = "all rates are zero: no steady state (degenerate saturation)"
        print("warning: all rates are zero; saturated population undefined", file=sys.stderr)
    print(f"R0 = {rs.r0:.6g} s^-1, R12 = {rs.sun_12:.6g}, R21 = {rs.sun_21:.6g}, probe = {rs.probe_12:.6g} s^-1")
    print(f"b_th = {doc['b_th_per_nW_per_s']:.4g} s^-1 nW^-1")
    return {"rates.json": _json_text(doc)}


def cmd_dynamics(args, cfg):
    species = cfg.species()
    model = _sun_model(args.model, cfg, species)
    probe = rates.ProbeConfig(args.photons, cfg.probe.window, cfg.probe.eta_qj)
    rs = model.rates(args.sun_nW * NW, rates.probe_rate(probe))
    lines = ["time_ms,n2_closed_form,n2_ode"]
    for t in np.linspace(0.0, args.t_max_ms * 1e-3, args.points):
        cf = dynamics.n2_closed_form(rs, float(t)).n2
        ode = dynamics.n2_ode(rs, float(t)).n2
        lines.append(f"{t * 1e3:.6g},{cf:.12g},{ode:.12g}")
    return {"dynamics.csv": "\n".join(lines) + "\n"}


def _tag(x):
    return f"{x:g}".replace(".", "p")


def cmd_montecarlo(args, cfg):
    species = cfg.species()
    model = _sun_model(args.model, cfg, species)
    t = args.exposure_ms * 1e-3
    if args.trials < 1:
        raise ConfigError("trials must be >= 1")
    files = {}
    ests = []
    index = 0
    for n_ph in args.photons:
        rows = ["sun_power_nW,exposure_ms,p2,stderr"]
        probe = rates.ProbeConfig(n_ph, cfg.probe.window, cfg.probe.eta_qj)
        for P in args.sun_nW:
            rs = model.rates(P * NW, rates.probe_rate(probe))
            batch = dynamics.simulate_batch(rs, t, args.trials, cfg.seed, tuple(args.readout_errors),
                                            first_trial=index * args.trials, workers=args.workers)
            index += 1
            est = dynamics.estimate(batch)
            entry = {"sun_power_nW": P, "photons_per_window": n_ph, "exposure_ms": args.exposure_ms,
                     "p2_hat": est.p2_hat, "stderr": est.stderr, "trials": est.trials, "seed": cfg.seed,
                     "first_trial": batch.first_trial,
                     "n2_closed_form": dynamics.n2_closed_form(rs, t).n2}
            if est.trials == 1:
                entry["stderr_undefined"] = True
            ests.append(entry)
            if est.stderr > 0:  # fit input rejects zero-stderr points
                rows.append(f"{P!r},{args.exposure_ms!r},{est.p2_hat!r},{est.stderr!r}")
            files[f"shots_sun{_tag(P)}nW_ph{_tag(n_ph)}.csv"] = dynamics.shots_to_csv(batch.records())
        # one saturation dataset per probe level
        files[f"estimates_ph{_tag(n_ph)}.csv"] = "\n".join(rows) + "\n"
    files["estimates.json"] = _json_text({"model": args.model, "estimates": ests})
    print(f"{len(ests)} conditions x {args.trials} trials")
    return files


def cmd_stark(args, cfg):
    species = cfg.species()
    line_name, F_i, F_e = species.probe
    probe_line = species.line(line_name)
    ground = (probe_line.lower_term, F_i, 0)
    excited = (probe_line.upper_term, F_e, 0)
    res = stark.standard_scenarios(species, args.temperature, args.waist_um * 1e-6, args.cutoff_nm * 1e-9,
                                   ground, excited)
    out = {k: v.to_dict() for k, v in res.items()}
    for k, v in res.items():
        print(f"{k:24s} {v.shift_hz_per_uw:+9.2f} Hz/uW")
    return {"stark.json": _json_text({"temperature_K": args.temperature, "waist_um": args.waist_um,
                                      "shifts": out})}


def _snr_value(x):
    return "inf" if math.isinf(x) else x


def cmd_snr(args, cfg):
    species = cfg.species()
    kappa = cfg.resolved_kappa(species)
    eta = cfg.probe.eta_qj
    q = comms.DetectionScenario(args.n_sig, args.n_bg, eta, comms.qjpd_background_efficiency(kappa, eta, species))
    det = comms.FilterDetector(args.t_max, args.enbw, args.eta_det)
    f = comms.DetectionScenario(args.n_sig, args.n_bg, det.eta_sig, det.eta_bg(args.kappa_filter))
    s_q, s_f = comms.snr(q), comms.snr(f)
    print(f"SNR qjpd = {s_q:.4g}, filtered = {s_f:.4g}")
    return {"snr.json": _json_text({"qjpd": {"snr": _snr_value(s_q), "eta_sig": q.eta_sig, "eta_bg": q.eta_bg},
                                    "filtered": {"snr": _snr_value(s_f), "eta_sig": f.eta_sig, "eta_bg": f.eta_bg},
                                    "n_sig": args.n_sig, "n_bg": args.n_bg, "kappa": kappa})}


def cmd_capacity(args, cfg):
    species = cfg.species()
    model = _sun_model(args.model, cfg, species)
    powers = [p * NW for p in args.sun_nW]
    vals = comms.capacity_map(args.photons, powers, model, cfg.probe.window, cfg.probe.eta_qj)
    return {"capacity.csv": comms.capacity_map_csv(args.photons, powers, vals)}


def cmd_link(args, cfg):
    lb = comms.LinkBudget(args.a_t, args.a_r, args.distance, args.wavelength_nm * 1e-9, args.tx_power)
    eta = comms.link_efficiency(lb)
    win = cfg.probe.window
    doc = {"eta_link": eta,
           "photons_per_window": comms.received_photons(lb.tx_power, eta, lb.wavelength, win),
           "photons_per_window_at_eta_1e-14": comms.received_photons(lb.tx_power, 1e-14, lb.wavelength, win),
           "window_s": win}
    print(f"eta_link = {eta:.3g}, photons/window = {doc['photons_per_window']:.4g}")
    return {"link.json": _json_text(doc)}


def cmd_fit(args, cfg):
    files = {}
    if args.data:
        path = Path(args.data)
        if not path.is_file():
            raise ConfigError(f"dataset {path} does not exist")
        data = fit.read_dataset_csv(path.read_text(encoding="utf-8"), path.stem)
    else:
        truth = rates.SunModel.fitted(args.true_n2sat, args.true_b * 1e9)
        t = args.exposure_ms * 1e-3
        conds, ests = [], []
        for i, P in enumerate(args.sun_nW):
            batch = dynamics.simulate_batch(truth.rates(P * NW), t, args.trials, cfg.seed, first_trial=i * args.trials)
            conds.append((P * NW, t))
            ests.append(dynamics.estimate(batch))
        data = fit.dataset_from_estimates(conds, ests, "synthetic")
        files["dataset.csv"] = fit.write_dataset_csv(data)
    params = fit.fit_saturation(data)
    rep = params.to_report()
    print(f"n2_sat = {rep['n2_sat']:.4f} +- {rep['stderr_n2sat']:.4f}, "
          f"b = {rep['b_per_nW_per_s']:.3f} +- {rep['stderr_b']:.3f} s^-1 nW^-1")
    files["fit_report.json"] = fit.report_json(params)
    return files


# -- parser -------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="64-bit seed (overrides config)")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("--species", help="builtin species name or species JSON path")
    common.add_argument("--spectrum", help="planck[:T[:lo_nm:hi_nm]] or spectrum CSV path")

    p = argparse.ArgumentParser(prog="qjpd", description="Quantum-jump photodetector model.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("rates", parents=[common], help="transition rates for a sun power")
    s.add_argument("--sun-nW", type=float, default=1.0)
    s.add_argument("--photons", type=float, help="probe photons per window (overrides config)")
    s.set_defaults(func=cmd_rates)

    s = sub.add_parser("dynamics", parents=[common], help="N2(t) closed form and ODE")
    s.add_argument("--sun-nW", type=float, default=1.0)
    s.add_argument("--photons", type=float, default=0.0)
    s.add_argument("--t-max-ms", type=float, default=50.0)
    s.add_argument("--points", type=int, default=51)
    s.add_argument("--model", choices=("fitted", "theoretical"), default="fitted")
    s.set_defaults(func=cmd_dynamics)

    s = sub.add_parser("montecarlo", parents=[common], help="shot-level experiment emulation")
    s.add_argument("--sun-nW", type=_floats, default=_floats("0:50:11"))
    s.add_argument("--photons", type=_floats, default=[0.0, 49.0, 295.0])
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--exposure-ms", type=float, default=10.0)
    s.add_argument("--readout-errors", type=float, nargs=2, default=(0.0, 0.0), metavar=("EPS12", "EPS21"))
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--model", choices=("fitted", "theoretical"), default="fitted")
    s.set_defaults(func=cmd_montecarlo)

    s = sub.add_parser("stark", parents=[common], help="light shifts from focused thermal light")
    s.add_argument("--temperature", type=float, default=SUN_TEMPERATURE)
    s.add_argument("--waist-um", type=float, default=1.3)
    s.add_argument("--cutoff-nm", type=float, default=800.0)
    s.set_defaults(func=cmd_stark)

    s = sub.add_parser("snr", parents=[common], help="SNR of the atom vs a filtered detector")
    s.add_argument("--n-sig", type=float, default=400.0)
    s.add_argument("--n-bg", type=float, default=5e7)
    s.add_argument("--kappa-filter", type=float, default=6e-6)
    s.add_argument("--t-max", type=float, default=0.7)
    s.add_argument("--enbw", type=float, default=1e9, help="Hz")
    s.add_argument("--eta-det", type=float, default=1.0)
    s.set_defaults(func=cmd_snr)

    s = sub.add_parser("capacity", parents=[common], help="binary channel capacity map")
    s.add_argument("--photons", type=_floats, default=_floats("0:300:31"))
    s.add_argument("--sun-nW", type=_floats, default=_floats("0:10:21"))
    s.add_argument("--model", choices=("fitted", "theoretical"), default="fitted")
    s.set_defaults(func=cmd_capacity)

    s = sub.add_parser("link", parents=[common], help="free-space link budget")
    s.add_argument("--a-t", type=float, default=5e-4, help="m^2")
    s.add_argument("--a-r", type=float, default=0.8, help="m^2")
    s.add_argument("--distance", type=float, default=1.495978707e11, help="m")
    s.add_argument("--wavelength-nm", type=float, default=780.0)
    s.add_argument("--tx-power", type=float, default=1.0, help="W")
    s.set_defaults(func=cmd_link)

    s = sub.add_parser("fit", parents=[common], help="fit a saturation dataset")
    s.add_argument("--data", help="dataset CSV; omit to fit a generated synthetic dataset")
    s.add_argument("--sun-nW", type=_floats, default=_floats("0:50:8"))
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--exposure-ms", type=float, default=10.0)
    s.add_argument("--true-n2sat", type=float, default=0.66)
    s.add_argument("--true-b", type=float, default=9.0, help="s^-1 nW^-1")
    s.set_defaults(func=cmd_fit)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        files = args.func(args, cfg)
        for path in _write_outputs(cfg.output_dir, files):
            print(f"wrote {path}", file=sys.stderr)
    except ConfigError as e:
        print(f"qjpd {args.command}: configuration error: {e}", file=sys.stderr)
        return 2
    except (QJPDError, ValueError, KeyError, TypeError, OSError) as e:
        print(f"qjpd {args.command}: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
