import json
import math

import numpy as np
import pytest

import granular_bath as gb


def small_sim(**extra):
    sim = {"alpha": 0.9, "N": 3000, "bath": {"theta0": 1.0, "e": 0.5}, "seed": 4, "tEnd": 4.0,
           "windowSnapshots": 2, "averageSnapshots": 2}
    sim.update(extra)
    return sim


def test_theta_sharp_and_bound():
    assert gb.theta_sharp(1.0, 0.5) == pytest.approx(0.6, rel=1e-12)
    eta = math.sqrt(2.0) * 0.4769362762044699
    assert gb.gap_lower_bound(1.0) == pytest.approx(eta * 2 / (4 * math.sqrt(5)), rel=1e-12)


def test_kernel_detailed_balance():
    th = gb.theta_sharp(1.0, 0.5)
    m = lambda v: math.exp(-sum(x * x for x in v) / (2 * th))
    v, w = (0.3, -1.0, 0.5), (1.2, 0.4, -0.7)
    lhs = gb.kernel_k(v, w, 1.0, 0.5) * m(w)
    rhs = gb.kernel_k(w, v, 1.0, 0.5) * m(v)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert gb.sigma((0, 0, 0)) == pytest.approx(math.sqrt(8 / math.pi), rel=1e-12)


def test_steps_are_deterministic():
    a = gb.steps(small_sim(), 5)
    b = gb.steps(small_sim(workers=3), 5)
    assert a.shape == (3000, 3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, gb.steps(small_sim(seed=5), 5))


def test_simulate_and_diagnostics():
    out = gb.simulate(small_sim())
    v = out["velocities"]
    assert v.shape[1] == 3
    assert out["temperature"] > 0.3
    table = gb.moments(v, [0.0, 1.0])
    entries = {float(e["p"]): e for e in table["moments"]}
    assert entries[0.0]["value"] == pytest.approx(1.0, rel=1e-12)
    assert entries[1.0]["value"] == pytest.approx(3 * out["temperature"], rel=0.05)
    assert gb.l1_distance(v, v, 50, 5.0) == 0.0


def test_spectral_gap_above_bound():
    res = gb.spectral_gap(0.5, n=80)
    assert res["null_count"] == 1
    assert res["gap"] >= res["bound"]
    assert abs(res["eigenvalues"][0]) < 1e-8


def test_povzner_coefficients():
    g, gp = gb.gamma_alpha_p(2.0, 1.0)
    assert g == pytest.approx(2.0 / 3.0, abs=1e-8)
    assert gp == 1.0


def test_run_experiment_and_errors(tmp_path):
    rep = gb.run_experiment({"scenario": "verify-kernel", "sim": small_sim(), "outputDir": str(tmp_path)})
    ids = {c["id"] for c in rep["checks"]}
    assert {"2", "3", "7"} <= ids
    on_disk = json.loads((tmp_path / "report.json").read_text())
    assert on_disk["configHash"] == rep["configHash"]
    with pytest.raises(ValueError):
        gb.run_experiment({"scenario": "verify-kernel", "unknown": 1})
    with pytest.raises(ValueError):
        gb.simulate({"alpha": 2.0})
