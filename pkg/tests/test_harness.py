import json

import numpy as np
import pytest
from scipy.stats import binomtest

from twowayrelay import harness
from twowayrelay.channel import SystemConfig, draw_channels, stream
from twowayrelay.errors import ContractViolation, DegenerateChannelError
from twowayrelay.harness import (Algorithm, SimulationConfig, curves_to_csv, curves_to_json, draw_trial_channel,
                                 map_ebn0_to_powers, parse_algorithms, resolve_workers, run_trial, sweep,
                                 wilson_interval)


@pytest.mark.parametrize("k,n", [(0, 100), (3, 1000), (500, 1000), (1000, 1000), (7, 40_000_000)])
def test_wilson_matches_scipy(k, n):
    ref = binomtest(k, n).proportion_ci(confidence_level=0.95, method="wilson")
    np.testing.assert_allclose(wilson_interval(k, n), (ref.low, ref.high), rtol=1e-9, atol=1e-15)


def test_power_mapping():
    p = map_ebn0_to_powers(10.0, SystemConfig(n_c=3))
    assert p["p_t1"] == pytest.approx(40.0)
    assert p["p_relay"] == pytest.approx(40.0)
    assert p["p_r"] == pytest.approx(120.0)


def test_algorithm_parsing():
    algos = parse_algorithms("proposed, baseline:5,baseline")
    assert [a.label for a in algos] == ["proposed", "baseline:5", "baseline:10"]
    for bad in ("", "foo", "baseline:x", "baseline:0"):
        with pytest.raises(ContractViolation):
            parse_algorithms(bad)


def test_simulation_config_validation():
    with pytest.raises(ContractViolation):
        SimulationConfig(base=SystemConfig(), symbols_per_trial=3)
    with pytest.raises(ContractViolation):
        SimulationConfig(base=SystemConfig(), trials=0)


def test_zero_relay_is_coin_flip():
    r = run_trial(SystemConfig(), 10.0, Algorithm("proposed"), 0, 0, 20_000, zero_relay=True)
    assert r.bits == 80_000
    assert abs(r.bit_errors / r.bits - 0.5) < 0.01


def test_trial_is_reproducible():
    a = run_trial(SystemConfig(), 4.0, Algorithm("proposed"), 3, 11, 2000)
    b = run_trial(SystemConfig(), 4.0, Algorithm("proposed"), 3, 11, 2000)
    assert a == b


def test_ber_falls_with_snr():
    cfg = SystemConfig()
    errs = [sum(run_trial(cfg, e, Algorithm("proposed"), t, 0, 2000).bit_errors for t in range(10)) for e in (0, 10)]
    assert errs[1] < errs[0]


def test_redraw_on_degenerate(monkeypatch):
    calls = []

    def flaky(ch):
        calls.append(1)
        if len(calls) < 3:
            raise DegenerateChannelError("forced")

    monkeypatch.setattr(harness, "check_channel", flaky)
    ch, redraws = draw_trial_channel(SystemConfig(), 0, 0)
    assert redraws == 2
    ref = draw_channels(SystemConfig(), stream(0, 0, "H", 2), stream(0, 0, "G", 2))
    np.testing.assert_array_equal(ch.H1, ref.H1)


def test_redraw_limit(monkeypatch):
    def never(ch):
        raise DegenerateChannelError("forced")

    monkeypatch.setattr(harness, "check_channel", never)
    with pytest.raises(DegenerateChannelError, match="consecutive"):
        draw_trial_channel(SystemConfig(), 0, 0)


def test_workers_env_cap(monkeypatch):
    monkeypatch.setenv("TWR_THREADS", "2")
    assert resolve_workers(8) == 2
    monkeypatch.setenv("TWR_THREADS", "junk")
    assert resolve_workers(3) == 3


@pytest.fixture(scope="module")
def small_sweep():
    sim = SimulationConfig(base=SystemConfig(), ebn0_grid_db=(0.0, 6.0), trials=3, symbols_per_trial=500,
                           algorithms=tuple(parse_algorithms("proposed,baseline:2")))
    return sim, sweep(sim)


def test_sweep_shapes(small_sweep):
    sim, curves = small_sweep
    assert [c.algorithm for c in curves] == ["proposed", "baseline:2"]
    for c in curves:
        assert [p.ebn0_db for p in c.points] == [0.0, 6.0]
        assert all(p.bits == 3 * 4 * 500 for p in c.points)


def test_sweep_is_paired_with_trials(small_sweep):
    # the curve is the sum of independent per-trial runs
    sim, curves = small_sweep
    errs = sum(run_trial(sim.base, 6.0, Algorithm("baseline", 2), t, 0, 500).bit_errors for t in range(3))
    assert curves[1].points[1].bit_errors == errs


def test_csv_embeds_config(small_sweep):
    sim, curves = small_sweep
    text = curves_to_csv(curves, sim.to_dict())
    lines = text.splitlines()
    assert lines[0].startswith("# config: ")
    assert json.loads(lines[0][len("# config: "):]) == sim.to_dict()
    assert lines[1] == "# seed: 0"
    assert lines[3] == ",".join(harness.CSV_COLUMNS)
    assert len(lines) == 4 + 4


def test_json_output(small_sweep):
    sim, curves = small_sweep
    doc = json.loads(curves_to_json(curves, sim.to_dict()))
    assert doc["config"] == sim.to_dict()
    assert doc["curves"][0]["points"][0]["bits"] == 6000
