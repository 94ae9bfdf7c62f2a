import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsexcorr import (
    AnchorSet,
    ChannelProfile,
    ChirpSpec,
    GeometryError,
    gen_linear_chirp,
    multilaterate,
    simulate_localization_round,
    xcorr_range,
)
from sparsexcorr.detect import DetectorConfig


def _ranges(anchors, beacon):
    return tuple(math.hypot(ax - beacon[0], ay - beacon[1]) for ax, ay in anchors)


FIVE_ANCHORS = ((0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0), (5.0, 7.0))


class TestMultilaterate:
    def test_exact_ranges_recover_position(self):
        beacon = (3.2, 4.7)
        pos, residual = multilaterate(AnchorSet(FIVE_ANCHORS, _ranges(FIVE_ANCHORS, beacon)))
        assert np.allclose(pos, beacon, atol=1e-6)
        assert residual < 1e-9

    def test_collinear_anchors_rejected(self):
        anchors = ((0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0))
        with pytest.raises(GeometryError):
            multilaterate(AnchorSet(anchors, (1.0, 1.0, 1.0, 1.0)))

    def test_too_few_anchors(self):
        with pytest.raises(GeometryError):
            AnchorSet(((0, 0), (1, 0)), (1.0, 1.0))

    def test_noisy_ranges_median_error(self):
        rng = np.random.default_rng(0)
        errors = []
        for _ in range(500):
            beacon = rng.uniform(1, 9, size=2)
            ranges = np.array(_ranges(FIVE_ANCHORS, beacon))
            ranges = np.maximum(ranges + rng.normal(0, 0.02, ranges.size), 0.0)
            pos, _ = multilaterate(AnchorSet(FIVE_ANCHORS, tuple(ranges)))
            errors.append(np.linalg.norm(pos - beacon))
        assert np.median(errors) < 0.10

    def test_beacon_at_anchor(self):
        beacon = FIVE_ANCHORS[2]
        pos, _ = multilaterate(AnchorSet(FIVE_ANCHORS, _ranges(FIVE_ANCHORS, beacon)))
        assert np.allclose(pos, beacon, atol=1e-6)

    def test_error_monotone_in_range_noise(self):
        rng = np.random.default_rng(1)
        medians = []
        for sigma in (0.0, 0.05, 0.2):
            errs = []
            for _ in range(300):
                beacon = rng.uniform(2, 8, size=2)
                ranges = np.array(_ranges(FIVE_ANCHORS, beacon))
                ranges = np.maximum(ranges + rng.normal(0, sigma, ranges.size), 0.0)
                pos, _ = multilaterate(AnchorSet(FIVE_ANCHORS, tuple(ranges)))
                errs.append(np.linalg.norm(pos - beacon))
            medians.append(np.median(errs))
        assert medians[0] <= medians[1] <= medians[2]


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=-math.pi, max_value=math.pi),
       st.floats(min_value=-50, max_value=50),
       st.floats(min_value=-50, max_value=50))
def test_rigid_transform_equivariance(theta, tx, ty):
    beacon = np.array([3.0, 2.0])
    rot = np.array([[math.cos(theta), -math.sin(theta)],
                    [math.sin(theta), math.cos(theta)]])
    anchors = np.array(FIVE_ANCHORS)
    pos, _ = multilaterate(AnchorSet(tuple(map(tuple, anchors)),
                                     _ranges(anchors, beacon)))
    moved = anchors @ rot.T + [tx, ty]
    beacon_moved = rot @ beacon + [tx, ty]
    pos_moved, _ = multilaterate(AnchorSet(tuple(map(tuple, moved)),
                                           _ranges(moved, beacon_moved)))
    assert np.allclose(pos_moved, rot @ pos + [tx, ty], atol=1e-7)


def _xcorr_ranger(p, v_s=343.0):
    det = DetectorConfig(sigma=3.0)

    def ranger(trace):
        est = xcorr_range(p, trace, det, v_s)
        return est.range_m if est.valid else None

    return ranger


class TestLocalizationRound:
    def _run(self, loss_rate, seed, snr_db=None):
        p = gen_linear_chirp(ChirpSpec(3000, 7000, 0.01, 15000))
        anchors = [(3.0, -2.0), (4.0, 0.0), (5.5, 2.0), (6.0, -1.0), (7.0, 1.0)]
        beacon = (0.0, 0.0)

        def channel(delay, noise_seed):
            return ChannelProfile(paths=((delay, 1.0),),
                                  snr_db=snr_db if snr_db is not None else math.inf,
                                  noise_seed=noise_seed)

        return simulate_localization_round(
            beacon, anchors, p, _xcorr_ranger(p), 0.04, 343.0, channel,
            loss_rate=loss_rate, seed=seed)

    def test_zero_loss_noiseless_quantization_bound(self):
        # sample quantization at 15 kHz propagates to < 3 cm position error
        result = self._run(0.0, seed=3)
        assert not result.failed
        assert result.error_m < 0.03

    def test_moderate_loss_mostly_survives(self):
        outcomes = [self._run(0.2, seed=s) for s in range(30)]
        ok = sum(1 for r in outcomes if not r.failed)
        assert ok >= 24  # binomial survival of >= 3 of 5 anchors

    def test_heavy_loss_can_fail_round(self):
        outcomes = [self._run(0.8, seed=s) for s in range(20)]
        assert any(r.failed for r in outcomes)
