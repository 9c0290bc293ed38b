"""Single-frame attitude solutions.

Two solvers for the orthogonal-matrix least-squares problem
``min sum_i a_i ||b_i - A r_i||^2`` over matched unit-vector pairs:

* :func:`triad` builds the attitude deterministically from exactly two
  pairs, honoring the first (most trusted) pair exactly.
* :func:`davenport_solve` is the q-method: the optimal quaternion is the
  eigenvector belonging to the largest eigenvalue of the 4x4 Davenport
  matrix assembled from the attitude profile matrix ``B``.

The Davenport matrix here is laid out vector-first to match the package
quaternion convention: ``K = [[S - tr(B) I, z], [z^T, tr(B)]]`` with
``S = B + B^T`` and ``z = sum a_i (b_i x r_i)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .attitude import quat_to_matrix
from .errors import DegenerateGeometry, InvalidInput, NumericalFailure, UnderdeterminedAttitude
from .numerics import jacobi_eigen_sym

_COLLINEAR_EPS = 1e-8
_EIG_GAP_REL = 1e-9


@dataclass(frozen=True)
class AttitudeProfileMatrix:
    """B = sum a_i b_i r_i^T plus the total weight that built it."""

    b: np.ndarray
    total_weight: float


@dataclass(frozen=True)
class DavenportMatrix:
    """Symmetric 4x4 K whose top eigenvector is the optimal quaternion."""

    k: np.ndarray


@dataclass(frozen=True)
class WahbaSolution:
    q: np.ndarray
    lambda_max: float
    loss: float


def _unit(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = math.sqrt(float(v @ v))
    if n < 1e-12:
        raise InvalidInput(f"{name} must be a nonzero vector")
    return v / n


def triad(r1, r2, b1, b2) -> np.ndarray:
    """Attitude matrix from two matched pairs, exact on the first pair.

    Builds orthonormal triads ``v`` from the reference pair and ``w`` from
    the body pair (first vector, normalized cross product, completing
    cross product) and returns ``A = W V^T`` so that ``A @ r1 == b1``.
    Raises DegenerateGeometry when either pair is collinear.
    """
    r1 = _unit(r1, "r1")
    r2 = _unit(r2, "r2")
    b1 = _unit(b1, "b1")
    b2 = _unit(b2, "b2")
    rc = np.cross(r1, r2)
    bc = np.cross(b1, b2)
    rn = math.sqrt(float(rc @ rc))
    bn = math.sqrt(float(bc @ bc))
    if rn <= _COLLINEAR_EPS or bn <= _COLLINEAR_EPS:
        raise DegenerateGeometry("vector pair is collinear")
    v2 = rc / rn
    w2 = bc / bn
    v = np.column_stack([r1, v2, np.cross(r1, v2)])
    w = np.column_stack([b1, w2, np.cross(b1, w2)])
    return w @ v.T


def build_profile(obs) -> AttitudeProfileMatrix:
    """Accumulate the attitude profile matrix from weighted observations."""
    if len(obs) == 0:
        raise InvalidInput("observation list is empty")
    b = np.zeros((3, 3))
    total = 0.0
    for o in obs:
        if o.weight <= 0.0:
            raise InvalidInput("observation weights must be positive")
        b += o.weight * np.outer(o.b, o.r)
        total += o.weight
    return AttitudeProfileMatrix(b=b, total_weight=total)


def davenport_matrix(profile: AttitudeProfileMatrix, obs) -> DavenportMatrix:
    """Assemble K from the profile matrix, cross-checking the z vector.

    ``z`` is computed both from the skew part of B and as the weighted sum
    of cross products; the two must agree to 1e-12 (relative to the total
    weight) or the profile does not belong to these observations.
    """
    b = profile.b
    z_skew = np.array([b[1, 2] - b[2, 1], b[2, 0] - b[0, 2], b[0, 1] - b[1, 0]])
    z_cross = np.zeros(3)
    for o in obs:
        z_cross += o.weight * np.cross(o.b, o.r)
    scale = max(1.0, profile.total_weight)
    if float(np.max(np.abs(z_skew - z_cross))) > 1e-12 * scale:
        raise NumericalFailure("z-vector formulas disagree; profile does not match observations")
    tr = float(np.trace(b))
    s = b + b.T
    k = np.empty((4, 4))
    k[:3, :3] = s - tr * np.eye(3)
    k[:3, 3] = z_skew
    k[3, :3] = z_skew
    k[3, 3] = tr
    return DavenportMatrix(k=k)


def wahba_loss(a, obs) -> float:
    """Weighted squared-residual cost sum a_i ||b_i - A r_i||^2."""
    a = np.asarray(a, dtype=float)
    total = 0.0
    for o in obs:
        d = o.b - a @ o.r
        total += o.weight * float(d @ d)
    return total


def davenport_solve(obs) -> WahbaSolution:
    """Optimal quaternion for a weighted observation set (q-method).

    The eigenvector of K with the largest eigenvalue is the attitude
    estimate; its scalar part is forced nonnegative. Raises
    UnderdeterminedAttitude for fewer than two observations or when the
    top eigenvalue is nearly degenerate (collinear geometry).
    """
    if len(obs) < 2:
        raise UnderdeterminedAttitude("at least two observations are required")
    profile = build_profile(obs)
    k = davenport_matrix(profile, obs)
    evals, evecs = jacobi_eigen_sym(k.k)
    if evals[0] - evals[1] < _EIG_GAP_REL * profile.total_weight:
        raise UnderdeterminedAttitude(
            f"degenerate eigenvalue gap {evals[0] - evals[1]:.3e}: geometry underdetermined"
        )
    q = evecs[0].copy()
    if q[3] < 0.0:
        q = -q
    loss = wahba_loss(quat_to_matrix(q), obs)
    return WahbaSolution(q=q, lambda_max=float(evals[0]), loss=loss)
