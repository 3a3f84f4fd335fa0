import numpy as np
import pytest

from licar.errors import BadBox
from licar.tracker.kalman import KalmanState, kf_init, kf_predict, kf_update


def test_init_example():
    s = kf_init((1, 1, 2, 2))
    assert s.mean.tolist() == [2, 2, 2, 2, 0, 0, 0, 0]
    # position std 2 * h / 20, velocity std 10 * h / 160 with h = 2
    assert np.allclose(np.diag(s.covariance), [0.04] * 4 + [0.015625] * 4)
    assert np.count_nonzero(s.covariance - np.diag(np.diag(s.covariance))) == 0
    assert s.tlwh == (1, 1, 2, 2)


@pytest.mark.parametrize("bbox", [(0, 0, 0, 5), (0, 0, 5, -1)])
def test_bad_boxes(bbox):
    with pytest.raises(BadBox):
        kf_init(bbox)
    with pytest.raises(BadBox):
        kf_update(kf_init((0, 0, 5, 5)), bbox)


def test_predict_moves_by_velocity_and_grows_uncertainty():
    s = kf_init((0, 0, 10, 20))
    s = KalmanState(s.mean + np.array([0, 0, 0, 0, 2, 0, 0, 0]), s.covariance)
    p = kf_predict(s)
    assert p.mean[0] == pytest.approx(s.mean[0] + 2)
    assert np.trace(p.covariance) > np.trace(s.covariance)
    assert p.is_spd()


def test_zero_innovation_keeps_mean_and_shrinks_covariance():
    s = kf_predict(kf_init((10, 10, 8, 16)))
    u = kf_update(s, s.tlwh)
    assert np.allclose(u.mean, s.mean)
    assert np.trace(u.covariance) < np.trace(s.covariance)
    assert np.allclose(u.covariance, u.covariance.T, atol=0)


def scalar_filter(z_seq, x0, h_seq_init):
    """Independent 1D position/velocity filters, one per box coordinate.

    The noise scale is the current height estimate, tracked alongside.
    """
    h = h_seq_init
    xs = [[x0[k], 0.0] for k in range(4)]
    ps = [[[(2 * h / 20) ** 2, 0.0], [0.0, (10 * h / 160) ** 2]] for _ in range(4)]
    for z in z_seq:
        q_pos, q_vel = (xs[3][0] / 20) ** 2, (xs[3][0] / 160) ** 2
        for k in range(4):
            x, v = xs[k]
            (a, b), (_, d) = ps[k]
            xs[k] = [x + v, v]
            ps[k] = [[a + 2 * b + d + q_pos, b + d], [b + d, d + q_vel]]
        r = (xs[3][0] / 20) ** 2
        for k in range(4):
            x, v = xs[k]
            (a, b), (_, d) = ps[k]
            s = a + r
            k0, k1 = a / s, b / s
            innov = z[k] - x
            xs[k] = [x + k0 * innov, v + k1 * innov]
            ps[k] = [[a - k0 * a, b - k0 * b], [b - k0 * b, d - k1 * b]]
    return xs, ps


def test_matches_scalar_reference(rng):
    box = np.array([100.0, 50.0, 30.0, 12.0])
    state = kf_init(tuple(box))
    zs = []
    for t in range(30):
        meas = box + np.array([1.5 * t, 0.2 * t, 0, 0]) + rng.normal(0, 0.5, 4)
        meas[2:] = np.abs(meas[2:])
        zs.append(meas)
        state = kf_update(kf_predict(state), tuple(meas))
    centres = [np.array([z[0] + z[2] / 2, z[1] + z[3] / 2, z[2], z[3]]) for z in zs]
    x0 = np.array([box[0] + box[2] / 2, box[1] + box[3] / 2, box[2], box[3]])
    xs, ps = scalar_filter(centres, x0, box[3])
    for k in range(4):
        assert state.mean[k] == pytest.approx(xs[k][0], rel=1e-9, abs=1e-9)
        assert state.mean[4 + k] == pytest.approx(xs[k][1], rel=1e-9, abs=1e-9)
        assert state.covariance[k, k] == pytest.approx(ps[k][0][0], rel=1e-9)
        assert state.covariance[k, 4 + k] == pytest.approx(ps[k][0][1], rel=1e-9)
        assert state.covariance[4 + k, 4 + k] == pytest.approx(ps[k][1][1], rel=1e-9)


def test_constant_velocity_is_learned():
    state = kf_init((0, 40, 20, 10))
    for t in range(1, 60):
        state = kf_update(kf_predict(state), (3.0 * t, 40, 20, 10))
    assert state.mean[4] == pytest.approx(3.0, abs=1e-2)
    assert kf_predict(state).mean[0] == pytest.approx(3.0 * 60 + 10, abs=0.05)


def test_size_is_clamped_positive():
    state = kf_init((0, 0, 2, 2))
    state = KalmanState(state.mean + np.array([0, 0, 0, 0, 0, 0, -5, 0]), state.covariance)
    state = kf_update(kf_predict(state), (0, 0, 1e-6, 2))
    assert state.mean[2] >= 1e-3
