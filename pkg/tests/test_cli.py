import math
import subprocess
import sys

import numpy as np
import pytest

from pulsed_cascade import PulseParams, SystemParams, build_cascaded, map_grid
from pulsed_cascade.cli import main
from pulsed_cascade.correlations import same_time_g2_trace
from pulsed_cascade.csvio import read_csv


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def table(path):
    header, cols, rows = read_csv(path)
    return header, [dict(zip(cols, r)) for r in rows]


def test_rabi_rows_and_short_pulse_visibility(tmp_path):
    assert run(tmp_path, "rabi", "--emitter", "source", "--length", "1e-3", "--areas", "0:3pi:0.1pi") == 0
    _, rows = table(tmp_path / "rabi_curves.csv")
    assert len(rows) == 31 * 1
    _, vis = table(tmp_path / "visibility.csv")
    assert vis[0]["visibility"] == pytest.approx(1.0, abs=1e-3)


def test_rabi_default_areas_row_count(tmp_path):
    assert run(tmp_path, "rabi", "--length", "0.5", "--emitter", "source", "--emitter", "target") == 0
    _, rows = table(tmp_path / "rabi_curves.csv")
    assert len(rows) == 61 * 2
    assert not (tmp_path / "extinction.csv").exists()


def test_rabi_extinction_table(tmp_path):
    args = ["rabi", "--length", "0.2:1.0:0.2", "--areas", "0:3pi:0.1pi", "--emitter", "source"]
    assert run(tmp_path, *args) == 0
    _, fit = table(tmp_path / "extinction.csv")
    assert fit[0]["emitter"] == "source" and fit[0]["n_points"] == 5
    assert 1.5 < fit[0]["beta"] < 2.3


@pytest.fixture(scope="module")
def spectrum_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("spectrum")
    assert main(["spectrum", "--areas", "pi", "--out", str(out)]) == 0
    return out


def test_spectrum_sum_rule_and_dip(spectrum_run):
    _, rows = table(spectrum_run / "linewidth.csv")
    assert all(r["sum_rule_error"] < 0.01 for r in rows)
    by = {r["emitter"]: r for r in rows}
    assert by["flux"]["central_dip"] == "True"
    _, spec = table(spectrum_run / "spectra.csv")
    assert {r["emitter"] for r in spec} == {"source", "target", "flux"}
    assert max(abs(r["omega"]) for r in spec) <= 10.0


def test_target_line_below_natural_width(spectrum_run):
    _, rows = table(spectrum_run / "linewidth.csv")
    by = {r["emitter"]: r["fwhm"] for r in rows}
    assert by["target"] < 1.0


def test_source_line_broader_than_natural_width(spectrum_run):
    _, rows = table(spectrum_run / "linewidth.csv")
    by = {r["emitter"]: r["fwhm"] for r in rows}
    assert by["target"] < 1.0 < by["source"]


@pytest.fixture(scope="module")
def occupation_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("occupation")
    assert main(["occupation", "--areas", "pi", "--out", str(out)]) == 0
    _, rows = table(out / "occupation_0.csv")
    return {k: np.array([r[k] for r in rows]) for k in rows[0]}


def test_occupation_flux_dip(occupation_run):
    t, f = occupation_run["t"], occupation_run["n_flux"]
    window = (t >= 1) & (t <= 3)
    k = np.flatnonzero(window)[np.argmin(f[window])]
    assert f[k - 1] > f[k] < f[k + 1]
    assert np.max(f[k:]) > f[k] and np.argmax(f[k:]) > 0


def test_occupation_flux_below_source_during_peak(occupation_run):
    t = occupation_run["t"]
    peak = t < 1.0
    assert np.all(occupation_run["n_flux"][peak] <= occupation_run["n_source"][peak] + 1e-15)


def test_occupation_target_later_and_slower(occupation_run):
    t, s, x = occupation_run["t"], occupation_run["n_source"], occupation_run["n_target"]
    assert t[np.argmax(x)] > t[np.argmax(s)]
    late = (t > 6) & (t < 8)
    rate = lambda n: -np.polyfit(t[late], np.log(n[late]), 1)[0]  # noqa: E731
    assert rate(x) < rate(s)


def test_g2_rows_and_crossing(tmp_path):
    assert run(tmp_path, "g2", "--areas", "1.75pi:2.25pi:0.125pi") == 0
    _, rows = table(tmp_path / "g2.csv")
    assert len(rows) == 5 * 3
    g = {(round(r["area"] / math.pi, 3), r["emitter"]): r["g2_zero"] for r in rows}
    assert g[(2.0, "flux")] < g[(2.0, "source")]
    assert g[(2.0, "source")] > 1


def test_hom_at_pi(tmp_path):
    assert run(tmp_path, "hom", "--areas", "pi") == 0
    _, rows = table(tmp_path / "hom.csv")
    by = {r["emitter"]: r for r in rows}
    for w, expected in (("source", 0.91), ("flux", 0.75), ("target", 0.95)):
        assert by[w]["hom_visibility"] == pytest.approx(expected, abs=0.05)
        assert by[w]["clipped"] == "False"


def test_g2map_diagonal_matches_same_time_trace(tmp_path):
    assert run(tmp_path, "g2map", "--set", "grid.map_points=121", "--emitter", "flux") == 0
    _, rows = table(tmp_path / "same_time.csv")
    diag = np.array([r["G2_flux_tt"] for r in rows])
    sp = SystemParams()
    p = PulseParams(area=math.pi, fwhm=1.0)
    trace = same_time_g2_trace(build_cascaded(sp), p, map_grid(p, sp, n_points=121))
    assert np.array_equal(diag, trace.values)
    _, m = table(tmp_path / "g2map_flux.csv")
    assert len(m) == 121 * 121
    _, fit = table(tmp_path / "stimulated_decay.csv")
    assert fit[0]["decay_rate"] == pytest.approx(2.0, rel=0.03)


def test_sweep_command(tmp_path):
    args = ["sweep", "--set", "sweep.areas=pi,2pi", "--set", "sweep.outputs=intensity", "--length", "0.5"]
    assert run(tmp_path, *args) == 0
    header, rows = table(tmp_path / "sweep.csv")
    assert len(rows) == 2 * 3
    assert header["command"] == "sweep"


def test_sweep_with_failed_records_exits_nonzero(tmp_path):
    args = ["sweep", "--set", "sweep.areas=pi", "--set", "sweep.outputs=visibility"]
    assert run(tmp_path, *args) == 1
    _, rows = table(tmp_path / "sweep.csv")
    assert any(r["error"] for r in rows)


def test_headers_readme_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(out, "g2", "--areas", "pi", "--set", "grid.map_points=101") == 0
    assert (a / "g2.csv").read_bytes() == (b / "g2.csv").read_bytes()
    text = (a / "g2.csv").read_text().splitlines()
    assert text[0].startswith("# ")
    assert "# grid.map_points = 101" in text
    assert [line for line in text if not line.startswith("#")][0] == "area,emitter,g2_zero"
    assert "g2.csv" in (a / "README.md").read_text()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[system]\nchi2 = 0.25\n[grid]\nmap_points = 81\n")
    assert main(["g2", "--config", str(cfg), "--chi2", "0.3", "--areas", "pi", "--out", str(tmp_path)]) == 0
    header, _ = table(tmp_path / "g2.csv")
    assert header["system.chi2"] == "0.3" and header["grid.map_points"] == "81"


@pytest.mark.parametrize(
    "args",
    [
        ["g2", "--set", "bogus.key=1"],
        ["g2", "--areas", "not-a-number"],
        ["g2", "--tol", "1"],
        ["occupation", "--emitter", "source"],
        ["g2", "--config", "/nonexistent/run.cfg"],
        ["g2", "--set", "no-dot"],
    ],
)
def test_config_errors_exit_2(tmp_path, args):
    assert main([*args, "--out", str(tmp_path)]) == 2


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["g2", "--areas", "pi", "--out", str(blocker / "sub")]) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "pulsed_cascade.cli", "--help"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0 and "g2map" in proc.stdout
