import math

import numpy as np
import pytest

from jointarray.crb import crb_for_arrays, snr_to_sigma2
from jointarray.estimator import (GridMle, GridResolutionWarning, MleConfig,
                                  check_grid_resolution, mle_estimate, mle_objective,
                                  wrap_error)
from jointarray.experiments import preset
from jointarray.geometry import SensorArray
from jointarray.signal import complex_noise, noiseless_response, optimal_waveform, synthesize

GEOMETRIES = {name: (preset(name).tx, preset(name).rx)
              for name in ("fig3a", "fig3b", "fig3c", "fig3d")}


def A(*p):
    return SensorArray(p)


class TestConfig:
    def test_defaults(self):
        cfg = MleConfig()
        assert cfg.grid_points == 4096 and cfg.refinement == "parabolic"
        assert cfg.full_circle
        assert cfg.grid()[0] == -math.pi and cfg.grid()[2048] == 0.0

    @pytest.mark.parametrize("kw", [dict(grid_points=8), dict(refinement="cubic"),
                                    dict(search_interval=(1.0, 1.0)),
                                    dict(search_interval=(-4.0, 0.0))])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            MleConfig(**kw)


@pytest.mark.parametrize("est, true, err", [
    (0.1, 0.0, 0.1), (-math.pi + 0.01, math.pi - 0.01, 0.02), (1.3, 1.3, 0.0)])
def test_wrap_error(est, true, err):
    assert wrap_error(est, true) == pytest.approx(err, abs=1e-12)


class TestObjective:
    def test_noiseless_peak_value(self):
        tx, rx = GEOMETRIES["fig3a"]
        rng = np.random.default_rng(0)
        s = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        gamma, w = 0.5 + 0.5j, 0.4
        m = synthesize(tx, rx, s, w, gamma, 0.0, 0)
        at = np.exp(1j * np.array(tx.positions) * w)
        expected = abs(gamma) ** 2 * np.linalg.norm(s @ at) ** 2 * len(rx) ** 2
        assert mle_objective(m, tx, rx, s, w) == pytest.approx(expected, rel=1e-12)

    def test_zero_measurement(self):
        tx, rx = GEOMETRIES["fig3a"]
        s = optimal_waveform(tx, 0.0)
        vals = mle_objective(np.zeros(24), tx, rx, s, np.linspace(-3, 3, 7))
        assert np.all(vals == 0)

    def test_global_phase_invariance(self):
        tx, rx = GEOMETRIES["fig3c"]
        s = optimal_waveform(tx, 0.2)
        y = synthesize(tx, rx, s, 0.2, 1.0, 0.5, 9).y
        grid = np.linspace(-3, 3, 50)
        np.testing.assert_allclose(mle_objective(y, tx, rx, s, grid),
                                   mle_objective(y * np.exp(1.234j), tx, rx, s, grid),
                                   rtol=1e-12)

    def test_transmit_null_gives_zero(self):
        tx = A(0, 1)
        s = optimal_waveform(tx, 0.0, 1)   # null at omega = pi
        assert mle_objective(np.ones(2), tx, A(0, 1), s, math.pi) == 0.0


class TestEstimate:
    def test_noiseless_zero(self):
        tx, rx = GEOMETRIES["fig3a"]
        s = optimal_waveform(tx, 0.0)
        y = synthesize(tx, rx, s, 0.0, 1.0, 0.0, 0)
        assert abs(mle_estimate(y, tx, rx, s)) < 2 * math.pi / 4096

    def test_noiseless_off_zero_ula(self):
        tx, rx = GEOMETRIES["fig3c"]
        s = optimal_waveform(tx, 1.0)
        y = synthesize(tx, rx, s, 1.0, 1.0, 0.0, 0)
        assert abs(mle_estimate(y, tx, rx, s) - 1.0) < 2 * math.pi / 4096

    @pytest.mark.parametrize("name", ["fig3a", "fig3b", "fig3c"])
    def test_noiseless_recovery(self, name):
        tx, rx = GEOMETRIES[name]
        for w in np.random.default_rng(11).uniform(-math.pi, math.pi, 16):
            s = optimal_waveform(tx, w)
            est = mle_estimate(noiseless_response(tx, rx, s, w), tx, rx, s)
            assert abs(wrap_error(est, w)) < 2 * math.pi / 4096

    def test_mimo_needs_restricted_interval(self):
        tx, rx = GEOMETRIES["fig3d"]
        aliased = 0
        for w in np.random.default_rng(12).uniform(-2.3, 2.3, 16):
            s = optimal_waveform(tx, w)
            y = noiseless_response(tx, rx, s, w)
            full = mle_estimate(y, tx, rx, s)
            aliased += abs(wrap_error(full, w)) > 0.1
            cfg = MleConfig(search_interval=(w - math.pi / 4, w + math.pi / 4))
            local = mle_estimate(y, tx, rx, s, cfg)
            assert abs(local - w) < 2 * math.pi / 4096
        # grating lobes of the dilated receive ULA are exact copies of the main lobe
        assert aliased > 0

    def test_refinement_beats_raw_grid(self):
        tx, rx = GEOMETRIES["fig3a"]
        s = optimal_waveform(tx, 0.0)
        raw = GridMle(tx, rx, s, MleConfig(grid_points=256, refinement="none"))
        ref = GridMle(tx, rx, s, MleConfig(grid_points=256))
        assert ref.quantization_mse(0.0) < raw.quantization_mse(0.0) / 10

    def test_deterministic_and_batch_consistent(self):
        tx, rx = GEOMETRIES["fig3b"]
        s = optimal_waveform(tx, 0.0)
        mle = GridMle(tx, rx, s)
        ys = noiseless_response(tx, rx, s, 0.0) + complex_noise(
            np.random.default_rng(2), (20, 24), 0.1)
        batch = mle.estimate_batch(ys)
        single = np.array([mle.estimate(y) for y in ys])
        assert batch.tobytes() == mle.estimate_batch(ys).tobytes()
        np.testing.assert_allclose(batch, single, atol=1e-12)

    def test_tie_breaks_to_smallest_angle(self):
        # y = 0 makes every candidate tie
        tx, rx = GEOMETRIES["fig3a"]
        s = optimal_waveform(tx, 0.0)
        cfg = MleConfig(refinement="none")
        assert mle_estimate(np.zeros(24), tx, rx, s, cfg) == -math.pi


def test_true_angle_dominates_far_grid_points():
    tx, rx = GEOMETRIES["fig3a"]
    s = optimal_waveform(tx, 0.0)
    mle = GridMle(tx, rx, s)
    beamwidth = 2 * math.pi / (rx.aperture() + 1)
    ys = noiseless_response(tx, rx, s, 0.0) + complex_noise(
        np.random.default_rng(5), (1000, 24), snr_to_sigma2(20))
    spec = mle.spectrum(ys)
    far = np.abs(mle.grid) > beamwidth
    at_truth = np.abs(ys.conj() @ mle.weights[:, 2048]) ** 2
    wins = np.all(spec[:, far] < at_truth[:, None], axis=1)
    assert wins.mean() >= 0.99


def test_grid_resolution_warning():
    tx, rx = GEOMETRIES["fig3a"]
    s = optimal_waveform(tx, 0.0)
    coarse = GridMle(tx, rx, s, MleConfig(grid_points=16, refinement="none"))
    crb = crb_for_arrays(tx, rx, sigma2=snr_to_sigma2(20)).value
    with pytest.warns(GridResolutionWarning):
        check_grid_resolution(coarse, 0.0, crb)
    fine = GridMle(tx, rx, s)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_grid_resolution(fine, 0.0, crb) < 0.1 * crb
