import numpy as np
import pytest

from matcharc.engine import CircuitConfig, run_trajectory
from matcharc.stats import (EnsembleSeries, aggregate, fit_exponent,
                            fit_log_prefactor, fit_size_scaling,
                            page_deviation, scaling_collapse)


def _records(n_rec=10):
    cfg = CircuitConfig(n=8, depth=12, p=0.2)
    return [run_trajectory(cfg, 123, i) for i in range(n_rec)]


def test_aggregate_and_merge_exact():
    recs = _records(10)
    whole = aggregate(recs)
    left = aggregate(recs[:3])
    right = aggregate(recs[3:])
    merged = left.merge(right)
    assert merged.count == whole.count == 10
    assert np.array_equal(merged.sum_s, whole.sum_s)
    assert np.array_equal(merged.sumsq_s, whole.sumsq_s)
    assert np.array_equal(merged.sum_nng, whole.sum_nng)


def test_merge_rejects_mismatched_fingerprint():
    recs = _records(2)
    series = aggregate(recs[:1])
    other = EnsembleSeries("different", series.times, series.cuts)
    with pytest.raises(ValueError):
        series.merge(other)


def test_moments():
    recs = _records(8)
    s = aggregate(recs)
    stack = np.stack([r.entropies for r in recs]).astype(float)
    assert np.allclose(s.mean, stack.mean(axis=0))
    assert np.allclose(s.std, stack.std(axis=0))


def test_fit_exponent_recovers_power_law():
    t = np.arange(10, 200)
    v = 3.0 * t ** 0.5
    a, err = fit_exponent(t, v, (10, 199))
    assert a == pytest.approx(0.5, abs=1e-9)
    rng = np.random.default_rng(0)
    noisy = v * np.exp(0.02 * rng.standard_normal(len(v)))
    a, err = fit_exponent(t, noisy, (10, 199), errs=0.02 * noisy)
    assert a == pytest.approx(0.5, abs=0.02)
    assert 0 < err < 0.05


def test_fit_exponent_window_guard():
    with pytest.raises(ValueError):
        fit_exponent([1, 2, 3], [1, 2, 3], (1, 3))


def test_fit_log_prefactor():
    ns = np.array([32, 64, 128, 256, 512])
    s = 0.7 * np.log(ns) + 1.3
    out = fit_log_prefactor(ns, s)
    assert out["slope"] == pytest.approx(0.7, abs=1e-9)
    assert out["c_eff"] == pytest.approx(2.1, abs=1e-8)


def test_page_deviation_rate():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    ref = 20.0
    delta_true = 3.0 * np.exp(-0.4 * x)
    s = ref - delta_true
    delta, a, a_err, mono = page_deviation(x / 5, s, ref, x)
    assert np.allclose(delta, delta_true)
    assert a == pytest.approx(0.4, abs=1e-9)
    assert mono


def test_scaling_collapse_planted():
    """Synthetic family S = a ln N + F[(p-pc) N^(1/nu)] is recovered."""
    rng = np.random.default_rng(3)
    pc0, nu0, a0 = 0.30, 1.3, 0.55
    F = lambda x: 2.0 / (1.0 + np.exp(1.5 * x))
    ps, ns, ss, errs = [], [], [], []
    for n in (32, 64, 128, 256):
        for p in np.linspace(0.2, 0.4, 9):
            x = (p - pc0) * n ** (1 / nu0)
            e = 0.01
            ps.append(p)
            ns.append(n)
            ss.append(a0 * np.log(n) + F(x) + e * rng.standard_normal())
            errs.append(e)
    res = scaling_collapse(ps, ns, ss, errs,
                           pc_grid=np.arange(0.22, 0.385, 0.005),
                           nu_grid=np.arange(0.8, 2.05, 0.05),
                           n_boot=20, seed=0)
    assert res.pc == pytest.approx(pc0, abs=0.01)
    assert res.nu == pytest.approx(nu0, abs=0.25)
    assert res.a == pytest.approx(a0, abs=0.1)
    assert res.locally_optimal


def test_scaling_collapse_needs_enough_data():
    with pytest.raises(ValueError):
        scaling_collapse([0.1] * 4, [8, 16, 32, 64], [1, 2, 3, 4],
                         [0.1] * 4, np.linspace(0, 1, 5),
                         np.linspace(1, 2, 5))


def test_fit_size_scaling():
    ns = np.array([32, 64, 128, 256, 512, 1024, 2048, 4096])
    s = 0.25 * ns * np.log(ns)
    a, _ = fit_size_scaling(ns, s, log_corrected=True)
    assert a == pytest.approx(1.0, abs=1e-9)
    a, _ = fit_size_scaling(ns, 3 * ns ** 0.6)
    assert a == pytest.approx(0.6, abs=1e-9)
