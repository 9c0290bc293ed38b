"""The two recursive attitude estimators under comparison.

Additive EKF (AEKF)
    The state is the raw 4-component quaternion with a 4x4 covariance.
    Prediction propagates the quaternion through the exact kinematic step
    and the covariance through the first-order transition
    ``F = I + 0.5 * Omega(omega) * dt``. The update treats the measured
    quaternion as a direct observation (H = I), adds the Kalman correction
    componentwise, and renormalizes the result by brute force.

Multiplicative EKF (MEKF)
    The reference quaternion is propagated exactly and is always unit; the
    filter estimates a 6-component error state (Rodrigues-parameter
    attitude error stacked with gyro bias error) with a 6x6 covariance.
    The attitude error coordinate is ``a = 2 * q_vec / q_scalar`` of the
    error quaternion, so the reset quaternion ``(a; 2) / sqrt(4 + |a|^2)``
    inverts it exactly and a near-perfect measurement pulls the reference
    all the way onto the measured attitude. Bias states are carried so the
    covariance has the standard 6x6 shape, but the bias estimate is frozen
    at zero and never fed back.

Both updates sign-align the measured quaternion against the current
estimate before forming a residual, which makes the filters insensitive
to the q/-q double cover. Covariances are re-symmetrized after every
propagation and update.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .attitude import (
    cross_matrix,
    integrate_quat,
    quat_conjugate,
    quat_mul,
    quat_normalize,
    xi_matrix,
)
from .errors import GibbsSingularity, InvalidInput
from .numerics import solve, symmetrize

_I3 = np.eye(3)
_I4 = np.eye(4)


@dataclass(frozen=True)
class NoiseParams:
    """Process and measurement noise configuration.

    Args:
        sigma_v: gyro rate white-noise density [rad/s/sqrt(Hz)]; the
            attitude covariance grows by sigma_v^2 * dt per step.
        sigma_u: gyro bias random-walk density [rad/s^(3/2)]; zero freezes
            the bias blocks entirely.
        r3: 3x3 measurement covariance for the MEKF attitude-error update.
        r4: 4x4 measurement covariance for the AEKF quaternion update.
        aekf_q_flat: when True the AEKF process noise is the flat diagonal
            sigma_v^2 * dt * I4 (tuning-parity fallback); when False it is
            mapped through the kinematics operator,
            sigma_v^2 * dt * 0.25 * Xi(q) Xi(q)^T.
    """

    sigma_v: float = 0.0
    sigma_u: float = 0.0
    r3: Optional[np.ndarray] = None
    r4: Optional[np.ndarray] = None
    aekf_q_flat: bool = False

    def __post_init__(self):
        if self.sigma_v < 0.0 or self.sigma_u < 0.0:
            raise InvalidInput("noise densities must be nonnegative")


@dataclass
class AekfState:
    """Quaternion state and 4x4 covariance."""

    q: np.ndarray
    p: np.ndarray


@dataclass
class MekfState:
    """Unit reference quaternion, 6-vector error state (zero after resets), 6x6 covariance."""

    q_ref: np.ndarray
    dx: np.ndarray = field(default_factory=lambda: np.zeros(6))
    p: np.ndarray = field(default_factory=lambda: np.zeros((6, 6)))


def aekf_init(q0, p0) -> AekfState:
    return AekfState(q=np.asarray(q0, dtype=float).copy(), p=np.asarray(p0, dtype=float).copy())


def mekf_init(q0, p0) -> MekfState:
    return MekfState(
        q_ref=np.asarray(q0, dtype=float).copy(),
        dx=np.zeros(6),
        p=np.asarray(p0, dtype=float).copy(),
    )


@lru_cache(maxsize=64)
def _aekf_flat_q(sigma_v: float, dt: float) -> np.ndarray:
    q = (sigma_v * sigma_v * dt) * np.eye(4)
    q.setflags(write=False)
    return q


def aekf_predict(s: AekfState, omega, dt: float, noise: NoiseParams) -> AekfState:
    """Propagate the AEKF through one gyro interval.

    The quaternion advances by the exact kinematic step and is
    renormalized; the covariance advances through the first-order
    transition ``F = I + 0.5 * Omega(omega) * dt`` of the kinematic
    equation plus gyro process noise.
    """
    if dt <= 0.0:
        raise InvalidInput("dt must be positive")
    q_new = quat_normalize(integrate_quat(s.q, omega, dt))
    h = 0.5 * dt
    wx, wy, wz = (h * float(omega[0]), h * float(omega[1]), h * float(omega[2]))
    f = np.array(
        [
            [1.0, -wz, wy, wx],
            [wz, 1.0, -wx, wy],
            [-wy, wx, 1.0, wz],
            [-wx, -wy, -wz, 1.0],
        ]
    )
    qscale = noise.sigma_v * noise.sigma_v * dt
    if qscale > 0.0:
        if noise.aekf_q_flat:
            qmat = _aekf_flat_q(noise.sigma_v, dt)
        else:
            xi = xi_matrix(s.q)
            qmat = (0.25 * qscale) * (xi @ xi.T)
        p_new = symmetrize(f @ s.p @ f.T + qmat)
    else:
        p_new = symmetrize(f @ s.p @ f.T)
    return AekfState(q=q_new, p=p_new)


def aekf_update(s: AekfState, q_meas, r4) -> AekfState:
    """Fuse a measured quaternion with H = I and renormalize the result.

    The measurement is sign-aligned to the current estimate first, so q
    and -q measurements produce identical updates. Raises NumericalFailure
    (from the innovation solve) when S = P + R is singular.
    """
    q_meas = np.asarray(q_meas, dtype=float)
    if float(np.dot(q_meas, s.q)) < 0.0:
        q_meas = -q_meas
    y = q_meas - s.q
    innov = s.p + np.asarray(r4, dtype=float)
    # K = P S^-1; with S symmetric this is solve(S, P)^T
    k = solve(innov, s.p).T
    q_new = quat_normalize(s.q + k @ y)
    p_new = symmetrize((_I4 - k) @ s.p)
    return AekfState(q=q_new, p=p_new)


def mekf_build_matrices(noise: NoiseParams, omega, dt: float):
    """Continuous-time error-state matrices (F, G, Q, H) for one step.

    F couples the attitude error to itself through the angular-rate cross
    matrix and to the bias error through -I; the bias error is a random
    walk. Q carries the standard white-noise/random-walk discretization;
    H observes the attitude error only.
    """
    if dt <= 0.0:
        raise InvalidInput("dt must be positive")
    sv2 = noise.sigma_v * noise.sigma_v
    su2 = noise.sigma_u * noise.sigma_u
    f = np.zeros((6, 6))
    f[:3, :3] = -cross_matrix(omega)
    f[:3, 3:] = -_I3
    g = np.zeros((6, 6))
    g[:3, :3] = -_I3
    g[3:, 3:] = _I3
    q = np.zeros((6, 6))
    q[:3, :3] = (sv2 * dt + su2 * dt**3 / 3.0) * _I3
    q[:3, 3:] = -(0.5 * su2 * dt * dt) * _I3
    q[3:, :3] = -(0.5 * su2 * dt * dt) * _I3
    q[3:, 3:] = (su2 * dt) * _I3
    h = np.zeros((3, 6))
    h[:, :3] = _I3
    return f, g, q, h


@lru_cache(maxsize=64)
def _mekf_gqg(sigma_v: float, sigma_u: float, dt: float) -> np.ndarray:
    """G Q G^T for one step; constant given the noise densities and dt."""
    sv2 = sigma_v * sigma_v
    su2 = sigma_u * sigma_u
    out = np.zeros((6, 6))
    out[:3, :3] = (sv2 * dt + su2 * dt**3 / 3.0) * _I3
    out[:3, 3:] = (0.5 * su2 * dt * dt) * _I3
    out[3:, :3] = (0.5 * su2 * dt * dt) * _I3
    out[3:, 3:] = (su2 * dt) * _I3
    out.setflags(write=False)
    return out


def mekf_predict(s: MekfState, omega, dt: float, noise: NoiseParams) -> MekfState:
    """Propagate the MEKF reference and error covariance through one gyro interval.

    The covariance transition is the first-order discretization
    ``Phi = I + F dt`` of the continuous error dynamics from
    :func:`mekf_build_matrices`; Phi and G Q G^T are assembled directly
    here, which is algebraically identical and avoids rebuilding the
    block matrices every gyro step.
    """
    if dt <= 0.0:
        raise InvalidInput("dt must be positive")
    q_ref = integrate_quat(s.q_ref, omega, dt)
    wx, wy, wz = (dt * float(omega[0]), dt * float(omega[1]), dt * float(omega[2]))
    phi = np.array(
        [
            [1.0, wz, -wy, -dt, 0.0, 0.0],
            [-wz, 1.0, wx, 0.0, -dt, 0.0],
            [wy, -wx, 1.0, 0.0, 0.0, -dt],
            [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ]
    )
    p_new = symmetrize(phi @ s.p @ phi.T + _mekf_gqg(noise.sigma_v, noise.sigma_u, dt))
    return MekfState(q_ref=q_ref, dx=s.dx.copy(), p=p_new)


def mekf_update(s: MekfState, q_meas, r3) -> MekfState:
    """Fuse a measured quaternion multiplicatively, then reset.

    The innovation is the Rodrigues-parameter coordinate of the error
    quaternion ``q_meas * q_ref^-1`` (sign-aligned so the scalar part is
    positive). The a-posteriori error state folds into the reference via
    ``normalize((dx_att; 2)) * q_ref`` and the error state resets to zero.
    Raises GibbsSingularity for a 180-degree innovation and
    NumericalFailure when the innovation covariance is singular.
    """
    q_meas = np.asarray(q_meas, dtype=float)
    q_err = quat_mul(q_meas, quat_conjugate(s.q_ref))
    if q_err[3] < 0.0:
        q_err = -q_err
    if q_err[3] <= 1e-9:
        raise GibbsSingularity("innovation rotation is at 180 degrees")
    a_g = 2.0 * q_err[:3] / q_err[3]
    innov = s.p[:3, :3] + np.asarray(r3, dtype=float)
    # K = P H^T S^-1 is 6x3; H = [I 0] picks the attitude columns of P
    k = solve(innov, s.p[:3, :]).T
    dx = k @ a_g
    dq = quat_normalize(np.array([dx[0], dx[1], dx[2], 2.0]))
    q_ref = quat_normalize(quat_mul(dq, s.q_ref))
    p_new = symmetrize(s.p - k @ s.p[:3, :])
    return MekfState(q_ref=q_ref, dx=np.zeros(6), p=p_new)
