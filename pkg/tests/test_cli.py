import json

import pytest

from qjpd.cli import main, rateset_from_dict
from qjpd.comms import read_capacity_map_csv


def run(tmp_path, *argv, sub="out"):
    out = tmp_path / sub
    code = main([*argv, "--out", str(out)])
    return code, out


def test_rates_default(tmp_path, capsys):
    code, out = run(tmp_path, "rates", "--sun-nW", "1")
    assert code == 0
    doc = json.loads((out / "rates.json").read_text())
    assert doc["b_th_per_nW_per_s"] == pytest.approx(15.3, rel=0.10)
    assert doc["saturated_population"] == pytest.approx(0.625)
    assert "b_th" in capsys.readouterr().out


def test_rates_round_trip_and_zero(tmp_path, capsys):
    code, out = run(tmp_path, "rates", "--sun-nW", "2", "--photons", "49")
    doc = json.loads((out / "rates.json").read_text())
    rs = rateset_from_dict(doc["rates"])
    assert rs.probe_12 == pytest.approx(41.65)
    again = json.loads(json.dumps(doc["rates"]))
    assert rateset_from_dict(again) == rs
    code, out = run(tmp_path, "rates", "--sun-nW", "0", sub="zero")
    doc = json.loads((out / "rates.json").read_text())
    assert code == 0 and doc["saturated_population"] is None and "degenerate" in doc["warning"]
    assert all(v == 0 for k, v in doc["rates"].items())
    assert "warning" in capsys.readouterr().err


def test_dynamics(tmp_path):
    code, out = run(tmp_path, "dynamics", "--sun-nW", "10", "--points", "11", "--t-max-ms", "10")
    rows = (out / "dynamics.csv").read_text().splitlines()
    assert code == 0 and rows[0] == "time_ms,n2_closed_form,n2_ode"
    t, cf, ode = map(float, rows[-1].split(","))
    assert t == 10 and cf == pytest.approx(0.392, abs=5e-4) and abs(cf - ode) < 1e-9


def test_montecarlo_ordering_and_files(tmp_path):
    code, out = run(tmp_path, "montecarlo", "--sun-nW", "0:50:6", "--photons", "0,49,295", "--seed", "42")
    assert code == 0
    doc = json.loads((out / "estimates.json").read_text())
    est = {(e["photons_per_window"], e["sun_power_nW"]): e for e in doc["estimates"]}
    powers = sorted({p for _, p in est})
    for P in powers:
        assert est[(0, P)]["n2_closed_form"] < est[(49, P)]["n2_closed_form"] < est[(295, P)]["n2_closed_form"]
        assert est[(295, P)]["p2_hat"] > est[(0, P)]["p2_hat"]
        assert est[(0, P)]["seed"] == 42 and est[(0, P)]["trials"] == 200
    mean = lambda n: sum(est[(n, P)]["p2_hat"] for P in powers)
    assert mean(0) < mean(49) < mean(295)
    assert (out / "shots_sun10nW_ph49.csv").read_text().startswith("trial,end_state,readout,jump_count\n")
    assert (out / "estimates_ph49.csv").read_text().startswith("sun_power_nW,exposure_ms,p2,stderr\n")


def test_montecarlo_estimates_feed_fit(tmp_path):
    code, out = run(tmp_path, "montecarlo", "--sun-nW", "0,5,20,50", "--photons", "0", "--trials", "2000")
    assert code == 0
    rows = (out / "estimates_ph0.csv").read_text().splitlines()[1:]
    assert len(rows) == 3 and all(float(r.split(",")[3]) > 0 for r in rows)
    code, fo = run(tmp_path, "fit", "--data", str(out / "estimates_ph0.csv"), sub="fit")
    assert (fo / "fit_report.json").exists()
    assert code == 0


def test_montecarlo_single_trial_flagged(tmp_path):
    code, out = run(tmp_path, "montecarlo", "--sun-nW", "10", "--photons", "0", "--trials", "1")
    doc = json.loads((out / "estimates.json").read_text())
    assert code == 0
    assert doc["estimates"][0]["stderr"] == 0 and doc["estimates"][0]["stderr_undefined"] is True


def _snapshot(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


@pytest.mark.parametrize("argv", [
    ["montecarlo", "--sun-nW", "0,5,20", "--photons", "0,150", "--trials", "300"],
    ["fit", "--trials", "200"],
    ["capacity", "--photons", "0:300:7", "--sun-nW", "0:5:6"],
    ["rates"], ["snr"], ["link"], ["dynamics", "--points", "5"],
])
def test_idempotent_outputs(tmp_path, argv):
    assert main([*argv, "--seed", "7", "--out", str(tmp_path / "a")]) == 0
    assert main([*argv, "--seed", "7", "--out", str(tmp_path / "b")]) == 0
    assert _snapshot(tmp_path / "a") == _snapshot(tmp_path / "b")


def test_montecarlo_parallel_identical(tmp_path):
    base = ["montecarlo", "--sun-nW", "0,5,20", "--photons", "0,150", "--trials", "2000", "--seed", "3"]
    assert main([*base, "--out", str(tmp_path / "a")]) == 0
    assert main([*base, "--workers", "4", "--out", str(tmp_path / "b")]) == 0
    assert _snapshot(tmp_path / "a") == _snapshot(tmp_path / "b")


def test_capacity_cell(tmp_path):
    code, out = run(tmp_path, "capacity", "--photons", "0,150,300", "--sun-nW", "0,1,2")
    ph, pw, vals = read_capacity_map_csv((out / "capacity.csv").read_text())
    assert code == 0
    assert 0.3 < vals[1, 1] < 0.6


def test_snr(tmp_path):
    code, out = run(tmp_path, "snr")
    doc = json.loads((out / "snr.json").read_text())
    assert doc["qjpd"]["snr"] == pytest.approx(81, rel=0.01)
    assert doc["filtered"]["snr"] == pytest.approx(1.333, rel=1e-3)


def test_snr_infinite_is_distinguished(tmp_path):
    code, out = run(tmp_path, "snr", "--n-bg", "0")
    assert json.loads((out / "snr.json").read_text())["qjpd"]["snr"] == "inf"


def test_link(tmp_path):
    code, out = run(tmp_path, "link")
    doc = json.loads((out / "link.json").read_text())
    assert 1e-14 / 3 < doc["eta_link"] < 3e-14
    assert doc["photons_per_window_at_eta_1e-14"] == pytest.approx(390, rel=0.01)


def test_stark(tmp_path):
    code, out = run(tmp_path, "stark")
    doc = json.loads((out / "stark.json").read_text())["shifts"]
    assert code == 0
    assert doc["ground"]["shift_hz_per_uw"] < 0 < doc["excited"]["shift_hz_per_uw"]


def test_fit_synthetic_and_from_file(tmp_path):
    code, out = run(tmp_path, "fit", "--seed", "1")
    rep = json.loads((out / "fit_report.json").read_text())
    assert code == 0
    assert abs(rep["n2_sat"] - 0.66) < 3 * rep["stderr_n2sat"]
    assert abs(rep["b_per_nW_per_s"] - 9) < 3 * rep["stderr_b"]
    code, out2 = run(tmp_path, "fit", "--data", str(out / "dataset.csv"), sub="refit")
    refit = json.loads((out2 / "fit_report.json").read_text())
    assert refit == pytest.approx(rep, rel=1e-12)


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"species": "rubidium-87", "kappa": "spectrum", "seed": 5,
                               "probe": {"photons_per_window": 295}, "output_dir": str(tmp_path / "cfgout")}))
    assert main(["rates", "--config", str(cfg)]) == 0
    doc = json.loads((tmp_path / "cfgout" / "rates.json").read_text())
    assert doc["kappa"] == pytest.approx(3.7e-8, rel=0.3) and doc["kappa"] != 3.7e-8
    assert doc["rates"]["probe_12_per_s"] == pytest.approx(250.75)


def test_spectrum_file_flag(tmp_path):
    from qjpd.spectra import SolarSpectrum, write_spectrum_csv
    import numpy as np

    lam = np.linspace(600, 1100, 201)
    path = tmp_path / "sun.csv"
    write_spectrum_csv(SolarSpectrum.from_samples(lam, SolarSpectrum.planck().radiance(lam)), path)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kappa": None}))
    code, out = run(tmp_path, "rates", "--config", str(cfg), "--spectrum", str(path))
    assert code == 0
    assert json.loads((out / "rates.json").read_text())["kappa"] == pytest.approx(2.77e-8, rel=0.01)


@pytest.mark.parametrize("content,argv", [
    ("{not json", []),
    (json.dumps({"bogus": 1}), []),
    (json.dumps({"species": "unobtainium"}), []),
    (json.dumps({"spectrum": {"kind": "file", "path": "/no/such.csv"}, "kappa": None}), []),
    (json.dumps({"geometry": {"w_at_m": -1}}), []),
    (json.dumps({}), ["--seed", "-4"]),
])
def test_invalid_config_writes_nothing(tmp_path, content, argv, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(content)
    out = tmp_path / "never"
    code = main(["rates", "--config", str(cfg), "--out", str(out), *argv])
    assert code != 0
    assert not out.exists() or not any(out.iterdir())
    assert "error" in capsys.readouterr().err


def test_missing_config_and_module_errors(tmp_path):
    assert main(["rates", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 2
    assert main(["link", "--distance", "1", "--out", str(tmp_path / "o2")]) == 1
    assert not (tmp_path / "o2").exists() or not any((tmp_path / "o2").iterdir())
