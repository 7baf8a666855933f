import numpy as np
import pytest

from pulsed_cascade import PulseParams, SystemParams, build_cascaded, emission_grid, evolve, integrate_intensity
from pulsed_cascade import operators as ops
from pulsed_cascade.csvio import read_csv
from pulsed_cascade.observables import local_extrema
from pulsed_cascade.sweeps import SweepError, SweepSpec, _partition, evaluate_point, run_sweep, write_sweep

SP = SystemParams()


def test_single_point_equals_direct_call():
    spec = SweepSpec(SP, areas=[np.pi], lengths=[0.5], chi2_values=[0.5], outputs={"intensity"})
    res = run_sweep(spec)
    p = PulseParams(area=np.pi, fwhm=0.5)
    traj = evolve(ops.ground_state(), build_cascaded(SP), p, emission_grid(p, SP))
    for w in ("source", "target", "flux"):
        assert res.value(np.pi, 0.5, 0.5, w, "intensity") == integrate_intensity(traj, w)


def test_worker_count_does_not_change_results(tmp_path):
    spec = SweepSpec(
        SP,
        areas=[0.5 * np.pi, np.pi, 2 * np.pi],
        lengths=[0.25, 0.5],
        chi2_values=[0.25, 0.5],
        outputs={"intensity", "g2zero", "visibility"},
        map_points=81,
        map_t_after=8.0,
    )
    one = run_sweep(spec, 1)
    many = run_sweep(spec, 3)
    assert one.records.keys() == many.records.keys()
    for k in one.records:
        assert one.records[k] == many.records[k]
    a = write_sweep(one, tmp_path / "a").read_bytes()
    b = write_sweep(many, tmp_path / "b").read_bytes()
    assert a == b


def test_area_theorem_sweep():
    areas = np.linspace(0, 4 * np.pi, 41)
    spec = SweepSpec(SP, areas=areas, lengths=[1e-3], chi2_values=[0.5], outputs={"intensity"}, emitters=("source",))
    res = run_sweep(spec)
    y = np.array([res.value(a, 1e-3, 0.5, "source", "intensity") for a in spec.areas])
    a = np.array(spec.areas)
    assert [a[k] / np.pi for k in local_extrema(a, y, "max")] == pytest.approx([1.0, 3.0])
    assert [a[k] / np.pi for k in local_extrema(a, y, "min")] == pytest.approx([2.0])


def test_failures_are_isolated(monkeypatch):
    import pulsed_cascade.sweeps as sweeps

    real = sweeps.evaluate_point

    def flaky(spec, chi2, length, area):
        if area > 3:
            raise ValueError("boom")
        return real(spec, chi2, length, area)

    monkeypatch.setattr(sweeps, "evaluate_point", flaky)
    spec = SweepSpec(SP, areas=[1.0, 4.0], lengths=[0.5], chi2_values=[0.5], outputs={"intensity"})
    res = run_sweep(spec)
    assert isinstance(res.value(4.0, 0.5, 0.5, "flux", "intensity"), SweepError)
    assert res.value(1.0, 0.5, 0.5, "flux", "intensity") > 0
    assert len(res.errors()) == 3


def test_heavy_artifacts_written_by_handle(tmp_path):
    spec = SweepSpec(
        SP, areas=[np.pi], lengths=[1.0], chi2_values=[0.5], outputs={"spectrum", "occupation"}, emitters=("target",)
    )
    path = write_sweep(run_sweep(spec), tmp_path, header=[("engine", "test")])
    header, cols, rows = read_csv(path)
    assert cols == ["area", "length", "chi2", "emitter", "observable", "value", "handle", "error"]
    assert header["engine"] == "test" and "sweep.tol" in header
    handles = [r[6] for r in rows if r[6]]
    assert len(handles) == 2
    for h in handles:
        _, c, data = read_csv(tmp_path / h)
        assert len(data) > 100 and len(c) == 2
    fwhm = [r[5] for r in rows if r[4] == "fwhm"][0]
    assert fwhm < 1.0


def test_evaluate_point_hom_records():
    spec = SweepSpec(SP, areas=[np.pi], lengths=[0.25], chi2_values=[0.5], outputs={"hom"}, map_points=201)
    out = evaluate_point(spec, 0.5, 0.25, np.pi)
    assert set(out) == {(w, o) for w in ("source", "target", "flux") for o in ("hom", "hom_visibility")}


def test_provenance_echo():
    spec = SweepSpec(SP, areas=[1.0], lengths=[1.0], chi2_values=[0.3], outputs={"intensity"})
    echo = spec.echo()
    assert echo["chi2_values"] == [0.3] and echo["base.gamma_sigma"] == 1.0 and "engine_version" in echo


@pytest.mark.parametrize(
    "kw",
    [
        {"areas": []},
        {"areas": [-1.0]},
        {"lengths": [0.0]},
        {"chi2_values": [1.5]},
        {"outputs": {"bogus"}},
        {"outputs": set()},
    ],
)
def test_spec_validation(kw):
    base = dict(base=SP, areas=[1.0], lengths=[1.0], chi2_values=[0.5], outputs={"intensity"})
    base.update(kw)
    with pytest.raises(ValueError):
        SweepSpec(**base)


def test_partition_is_contiguous_and_complete():
    items = list(range(10))
    for n in (1, 3, 4, 20):
        chunks = _partition(items, n)
        assert [x for c in chunks for x in c] == items
