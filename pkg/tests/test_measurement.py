import numpy as np
import pytest

from homodyne_cm.gaussian import TwoModeGaussianState, displace, two_mode_squeezed_state, vacuum_state
from homodyne_cm.measurement import (
    Dataset,
    HomodyneConfig,
    QuadratureRecord,
    exact_moment_set,
    run_schedule,
    sample_quadrature,
)
from homodyne_cm.optics import measurement_schedule, quadrature_vector

TMSS = two_mode_squeezed_state(0.5)
XA = quadrature_vector("a", "x")


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(samples_per_quadrature=0),
            dict(samples_per_quadrature=10, efficiency=0.0),
            dict(samples_per_quadrature=10, efficiency=1.2),
            dict(samples_per_quadrature=10, seed=-1),
            dict(samples_per_quadrature=10, seed=2**64),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            HomodyneConfig(**kwargs)


class TestSampleQuadrature:
    def test_vacuum_mean(self):
        x = sample_quadrature(vacuum_state(), XA, HomodyneConfig(100_000, seed=42))
        assert abs(x.mean()) < 5 * np.sqrt(0.5 / 1e5)

    def test_vacuum_is_loss_fixed_point(self):
        n = 200_000
        x = sample_quadrature(vacuum_state(), quadrature_vector("c", "y"), HomodyneConfig(n, 0.5, 3))
        assert abs(x.var() - 0.5) < 5 * 0.5 * np.sqrt(2 / n)

    def test_tmss_variance(self):
        n = 1_000_000
        x = sample_quadrature(TMSS, XA, HomodyneConfig(n, seed=11))
        true = np.cosh(1) / 2
        assert abs(x.var() - true) < 5 * true * np.sqrt(2 / n)

    @pytest.mark.parametrize("eta", [0.25, 0.5, 0.9])
    def test_loss_model(self, eta):
        n = 200_000
        v = quadrature_vector("e", "y")
        x = sample_quadrature(TMSS, v, HomodyneConfig(n, eta, 5))
        true = eta * v @ TMSS.cov @ v + (1 - eta) / 2
        assert abs(x.var() - true) < 5 * true * np.sqrt(2 / n)

    def test_loss_scales_mean(self):
        state = displace(vacuum_state(), [2, 0, 0, 0])
        x = sample_quadrature(state, XA, HomodyneConfig(100_000, 0.64, 1))
        assert abs(x.mean() - 0.8 * 2) < 5 * np.sqrt(0.5 / 1e5)

    def test_deterministic(self):
        cfg = HomodyneConfig(1000, seed=9)
        assert np.array_equal(sample_quadrature(TMSS, XA, cfg, 3), sample_quadrature(TMSS, XA, cfg, 3))
        assert not np.array_equal(sample_quadrature(TMSS, XA, cfg, 3), sample_quadrature(TMSS, XA, cfg, 4))

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            sample_quadrature(vacuum_state(), [1, 1, 0, 0], HomodyneConfig(10))

    def test_rejects_corrupt_covariance(self):
        # bypass validation to emulate a corrupted state object
        state = TwoModeGaussianState(np.zeros(4), 0.5 * np.eye(4))
        object.__setattr__(state, "cov", -np.eye(4))
        with pytest.raises(ValueError, match="non-positive"):
            sample_quadrature(state, XA, HomodyneConfig(10))

    def test_convergence_rate(self):
        ns = np.array([1_000, 10_000, 100_000])
        v = quadrature_vector("c", "x")
        mean_true, var_true = 0.0, v @ TMSS.cov @ v
        mean_err, var_err = np.zeros(3), np.zeros(3)
        for seed in range(50):
            for k, n in enumerate(ns):
                x = sample_quadrature(TMSS, v, HomodyneConfig(int(n), seed=seed))
                mean_err[k] += abs(x.mean() - mean_true) / 50
                var_err[k] += abs(x.var() - var_true) / 50
        for err in (mean_err, var_err):
            slope = np.polyfit(np.log(ns), np.log(err), 1)[0]
            assert -0.6 <= slope <= -0.4


class TestRunSchedule:
    def test_cardinality(self):
        ds = run_schedule(vacuum_state(), measurement_schedule(False), HomodyneConfig(1000))
        assert len(ds.records) == 14
        assert all(r.samples.size == 1000 for r in ds.records)
        assert ds.is_complete()

    def test_deterministic(self):
        cfg = HomodyneConfig(500, seed=123)
        a = run_schedule(TMSS, measurement_schedule(True), cfg)
        b = run_schedule(TMSS, measurement_schedule(True), cfg)
        assert a == b
        assert all(x.samples.tobytes() == y.samples.tobytes() for x, y in zip(a.records, b.records))

    def test_workers_do_not_change_output(self):
        cfg = HomodyneConfig(2000, seed=77)
        assert run_schedule(TMSS, None, cfg, workers=1) == run_schedule(TMSS, None, cfg, workers=4)

    def test_substreams_uncorrelated(self):
        n = 20_000
        ds = run_schedule(vacuum_state(), measurement_schedule(True), HomodyneConfig(n, seed=5))
        x = np.array([r.samples for r in ds.records])
        corr = np.corrcoef(x)
        off = corr[~np.eye(len(x), dtype=bool)]
        assert np.max(np.abs(off)) < 5 / np.sqrt(n)

    def test_rejects_bad_schedule(self):
        with pytest.raises(ValueError, match="schedule"):
            run_schedule(vacuum_state(), measurement_schedule(False)[:-1], HomodyneConfig(10))

    def test_records_immutable(self):
        ds = run_schedule(vacuum_state(), None, HomodyneConfig(10))
        with pytest.raises(ValueError):
            ds.records[0].samples[0] = 1.0

    def test_duplicate_tokens_rejected(self):
        rec = QuadratureRecord("a", "x", np.zeros(3))
        with pytest.raises(ValueError, match="duplicate"):
            Dataset((rec, rec), HomodyneConfig(3))

    def test_nonfinite_samples_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            QuadratureRecord("a", "x", [0.0, np.inf])


class TestExactMomentSet:
    def test_vacuum(self):
        ms = exact_moment_set(vacuum_state())
        assert all(v == (0.0, 0.0) for v in ms.first.values())
        assert all(v[0] == pytest.approx(0.5, abs=1e-15) and v[1] == 0 for v in ms.second.values())
        assert len(ms.second) == 14 and set(ms.first) == {"a:x", "a:y", "b:x", "b:y"}

    def test_tmss(self):
        ms = exact_moment_set(TMSS)
        assert ms.second["c:x"][0] == pytest.approx(1.35914, abs=1e-5)
        assert ms.second["d:x"][0] == pytest.approx(0.18394, abs=1e-5)
        cov = TMSS.cov
        assert ms.second["c:x"][0] == pytest.approx(0.5 * (cov[0, 0] + cov[2, 2]) + cov[0, 2], abs=1e-14)

    def test_displaced(self):
        ms = exact_moment_set(displace(vacuum_state(), [1, 0, 0, 0]))
        assert ms.first["a:x"][0] == 1.0
        assert ms.second["a:x"][0] == pytest.approx(1.5, abs=1e-15)

    def test_f_entries(self):
        assert exact_moment_set(TMSS, measurement_schedule(True)).has_f()
