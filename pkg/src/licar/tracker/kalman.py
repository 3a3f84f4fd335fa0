"""Constant-velocity Kalman filter over ``(cx, cy, w, h)`` box parameters.

Noise standard deviations scale with the box height: 1/20 of it for
positions and measurements, 1/160 for velocities.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..boxes import tlwh_to_center
from ..errors import BadBox, NumericalFailure

STD_POSITION = 1.0 / 20
STD_VELOCITY = 1.0 / 160
MIN_SIZE = 1e-3
NDIM = 4

TRANSITION = np.eye(2 * NDIM)
TRANSITION[:NDIM, NDIM:] = np.eye(NDIM)
OBSERVATION = np.eye(NDIM, 2 * NDIM)


@dataclass(frozen=True, eq=False)
class KalmanState:
    mean: np.ndarray  # (8,) cx, cy, w, h and their per-frame velocities
    covariance: np.ndarray  # (8, 8)

    @property
    def tlwh(self):
        cx, cy, w, h = self.mean[:4]
        return (float(cx - w / 2), float(cy - h / 2), float(w), float(h))

    def is_spd(self, tol: float = 1e-9) -> bool:
        p = self.covariance
        if not np.allclose(p, p.T, atol=tol, rtol=0):
            return False
        try:
            np.linalg.cholesky(p)
        except np.linalg.LinAlgError:
            return False
        return True


def kf_init(bbox) -> KalmanState:
    if len(bbox) != 4 or bbox[2] <= 0 or bbox[3] <= 0:
        raise BadBox(f"bbox {bbox} must have positive width and height")
    meas = tlwh_to_center(bbox)
    mean = np.concatenate([meas, np.zeros(NDIM)])
    h = meas[3]
    std = np.array([2 * STD_POSITION * h] * NDIM + [10 * STD_VELOCITY * h] * NDIM)
    return KalmanState(mean, np.diag(std**2))


def kf_predict(state: KalmanState) -> KalmanState:
    h = state.mean[3]
    std = np.array([STD_POSITION * h] * NDIM + [STD_VELOCITY * h] * NDIM)
    mean = TRANSITION @ state.mean
    cov = TRANSITION @ state.covariance @ TRANSITION.T + np.diag(std**2)
    return KalmanState(mean, 0.5 * (cov + cov.T))


def kf_update(state: KalmanState, bbox) -> KalmanState:
    if bbox[2] <= 0 or bbox[3] <= 0:
        raise BadBox(f"bbox {bbox} must have positive width and height")
    return _update(state, tlwh_to_center(bbox))


def kf_update_center(state: KalmanState, measurement) -> KalmanState:
    """Update from a measurement already in ``(cx, cy, w, h)`` form."""
    return _update(state, np.asarray(measurement, dtype=np.float64))


def _update(state: KalmanState, z: np.ndarray) -> KalmanState:
    r = (STD_POSITION * state.mean[3]) ** 2
    p = state.covariance
    s = OBSERVATION @ p @ OBSERVATION.T + r * np.eye(NDIM)
    try:
        chol = scipy.linalg.cho_factor(s, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"innovation covariance not positive definite: {exc}") from None
    pht = p @ OBSERVATION.T
    gain = scipy.linalg.cho_solve(chol, pht.T).T
    mean = state.mean + gain @ (z - OBSERVATION @ state.mean)
    cov = p - gain @ s @ gain.T
    cov = 0.5 * (cov + cov.T)
    mean[2:4] = np.maximum(mean[2:4], MIN_SIZE)
    return KalmanState(mean, cov)
