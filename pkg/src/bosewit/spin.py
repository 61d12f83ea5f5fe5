"""Schwinger spin operators, spin moments and principal spin frames.

S_x = (b†a + a†b)/2, S_y = (b†a − a†b)/2i, S_z = (b†b − a†a)/2.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm, logm

from .errors import NumericalValidationError, UsageError
from .fock import (
    FockSpace,
    ModeOperator,
    State,
    StateVector,
    monomial,
    number_op,
    sector_space,
)

AXES = ("x", "y", "z")
DEGENERACY_GAP = 1e-9
UNIT_TOL = 1e-12


class SpinOperators(NamedTuple):
    x: ModeOperator
    y: ModeOperator
    z: ModeOperator


def schwinger_ops(space: FockSpace) -> SpinOperators:
    raise_ = monomial(space, b_dag=1, a=1)  # b†a, raises S_z by one
    lower = monomial(space, a_dag=1, b=1)
    sz = (monomial(space, b_dag=1, b=1) - monomial(space, a_dag=1, a=1)) / 2
    return SpinOperators(
        ModeOperator(space, (raise_.matrix + lower.matrix) / 2, "S_x"),
        ModeOperator(space, (raise_.matrix - lower.matrix) / 2j, "S_y"),
        ModeOperator(space, sz.matrix, "S_z"),
    )


def rotated_spin_op(space: FockSpace, direction) -> ModeOperator:
    """n·S for a unit vector n."""
    n = np.asarray(direction, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > UNIT_TOL:
        raise UsageError(f"direction must be a unit 3-vector, got {direction!r}")
    ops = schwinger_ops(space)
    mat = n[0] * ops.x.matrix + n[1] * ops.y.matrix + n[2] * ops.z.matrix
    return ModeOperator(space, mat, f"n·S{tuple(np.round(n, 6))}")


@dataclass(frozen=True, eq=False)
class SpinMoments:
    """Means, symmetrised covariance ½<{S_i,S_j}> − <S_i><S_j>, and <N>."""

    means: np.ndarray
    covariance: np.ndarray
    mean_number: float

    def __post_init__(self):
        means = np.array(self.means, dtype=float).reshape(3)
        cov = np.array(self.covariance, dtype=float).reshape(3, 3)
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > 1e-10 * scale:
            raise NumericalValidationError("spin covariance is not symmetric")
        if np.min(np.diag(cov)) < -1e-10 * scale:
            raise NumericalValidationError("spin covariance has a negative variance")
        cov = 0.5 * (cov + cov.T)
        np.fill_diagonal(cov, np.clip(np.diag(cov), 0.0, None))
        for arr in (means, cov):
            arr.flags.writeable = False
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "mean_number", float(self.mean_number))

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.covariance).copy()

    def variance_along(self, direction) -> float:
        n = np.asarray(direction, dtype=float)
        return float(n @ self.covariance @ n)

    def mean_along(self, direction) -> float:
        return float(np.asarray(direction, dtype=float) @ self.means)

    def rotated(self, rotation) -> SpinMoments:
        """Moments of the components J_i = Σ_j R_ij S_j."""
        r = np.asarray(rotation, dtype=float)
        return SpinMoments(r @ self.means, r @ self.covariance @ r.T, self.mean_number)

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "covariance": self.covariance.tolist(),
            "mean_number": self.mean_number,
        }


def _moments_from_images(psi: np.ndarray, images: list[np.ndarray], mean_number: float) -> SpinMoments:
    means = np.array([np.vdot(psi, v).real for v in images])
    second = np.array([[np.vdot(u, v).real for v in images] for u in images])
    return SpinMoments(means, second - np.outer(means, means), mean_number)


def spin_moments(state: State) -> SpinMoments:
    """Spin moments from dense Schwinger operators on the state's space."""
    ops = schwinger_ops(state.space)
    n_op = number_op(state.space)
    if isinstance(state, StateVector):
        psi = state.amplitudes
        images = [op.matrix @ psi for op in ops]
        mean_n = float(np.vdot(psi, n_op.matrix @ psi).real)
        return _moments_from_images(psi, images, mean_n)
    rho = state.matrix
    rho_s = [rho @ op.matrix for op in ops]
    means = np.array([np.trace(m).real for m in rho_s])
    second = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            # Re Tr(rho S_i S_j) equals the symmetrised ½Tr(rho {S_i, S_j})
            second[i, j] = np.einsum("ij,ji->", rho_s[i], ops[j].matrix).real
    mean_n = float(np.einsum("ij,ji->", rho, n_op.matrix).real)
    return SpinMoments(means, second - np.outer(means, means), mean_n)


def _sector_images(n: int, amps: np.ndarray) -> list[np.ndarray]:
    """S_x, S_y, S_z applied to a sector vector via the tridiagonal ladder action."""
    m = np.arange(n + 1) - n / 2
    up = np.sqrt((n / 2 - m[:-1]) * (n / 2 + m[:-1] + 1))  # <m+1|S+|m>
    raised = np.zeros_like(amps)
    raised[1:] = up * amps[:-1]
    lowered = np.zeros_like(amps)
    lowered[:-1] = up * amps[1:]
    return [(raised + lowered) / 2, (raised - lowered) / 2j, m * amps]


def sector_spin_moments(state: StateVector) -> SpinMoments:
    """Fast O(N) spin moments for a pure state confined to one total-number sector."""
    n, amps = state.sector_amplitudes()
    return _moments_from_images(amps, _sector_images(n, amps), float(n))


def casimir(state: State) -> float:
    """<S_x² + S_y² + S_z²>."""
    mom = spin_moments(state)
    return float(np.sum(mom.variances) + mom.means @ mom.means)


@dataclass(frozen=True, eq=False)
class PrincipalFrame:
    """Rows of `rotation` are the principal axes, ordered by ascending variance."""

    rotation: np.ndarray
    principal_variances: np.ndarray
    principal_means: np.ndarray

    def moments(self, moments: SpinMoments) -> SpinMoments:
        return moments.rotated(self.rotation)

    def to_dict(self) -> dict:
        return {
            "rotation": self.rotation.tolist(),
            "principal_variances": self.principal_variances.tolist(),
            "principal_means": self.principal_means.tolist(),
        }


def _degenerate_groups(values: np.ndarray, gap: float) -> list[list[int]]:
    groups = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] < gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def principal_frame(moments: SpinMoments) -> PrincipalFrame:
    """Eigen-rotation of the spin covariance.

    Degenerate eigenspaces (gap < 1e-9) are spanned by the projections of the
    lab axes x, y, z taken in that order, which makes the output deterministic
    and returns the identity for diagonal input.  Each axis is signed so its
    largest component is positive, then the last axis is flipped if needed to
    keep det R = +1.
    """
    cov = moments.covariance
    values, vecs = np.linalg.eigh(cov)
    axes: list[np.ndarray] = []
    for group in _degenerate_groups(values, DEGENERACY_GAP):
        basis = vecs[:, group]
        proj = basis @ basis.T
        chosen: list[np.ndarray] = []
        for e in np.eye(3):
            if len(chosen) == len(group):
                break
            v = proj @ e
            for c in chosen:
                v = v - (c @ v) * c
            if np.linalg.norm(v) > 1e-3:
                chosen.append(v / np.linalg.norm(v))
        axes.extend(chosen)
    rot = np.array(axes)
    for i in range(3):
        if rot[i, np.argmax(np.abs(rot[i]))] < 0:
            rot[i] = -rot[i]
    if np.linalg.det(rot) < 0:
        rot[2] = -rot[2]
    variances = np.array([r @ cov @ r for r in rot])
    return PrincipalFrame(rot, variances, rot @ moments.means)


def relative_phase_axes(theta_p: float) -> np.ndarray:
    """Rows J_x = S_z, J_y = sinθ S_x + cosθ S_y, J_z = −cosθ S_x + sinθ S_y."""
    s, c = np.sin(theta_p), np.cos(theta_p)
    return np.array([[0.0, 0.0, 1.0], [s, c, 0.0], [-c, s, 0.0]])


def cd_mode_matrix(theta_p: float) -> np.ndarray:
    """M with (a†, b†)ᵀ = M (c†, d†)ᵀ.

    The phases are chosen so that (d†d − c†c)/2 equals J_z and
    (d†c + c†d)/2 equals J_x = S_z of `relative_phase_axes`.
    """
    u = -np.exp(0.5j * theta_p) / np.sqrt(2)
    v = -np.exp(-0.5j * theta_p) / np.sqrt(2)
    return np.array([[u, -u], [v, v]])


def _mode_generator(n: int, log_m: np.ndarray) -> np.ndarray:
    """Sector matrix of Σ_ik L_ik x_k† x_i for two modes x_0 = a, x_1 = b."""
    space = sector_space(n)
    g = np.zeros((n + 1, n + 1), dtype=complex)
    for i, lower in enumerate(({"a": 1}, {"b": 1})):
        for k, upper in enumerate(({"a_dag": 1}, {"b_dag": 1})):
            if log_m[i, k] != 0:
                g += log_m[i, k] * monomial(space, **upper, **lower).matrix
    return g


def cd_mode_transform(state: StateVector, theta_p: float) -> StateVector:
    """Re-express a fixed-N state in the C,D occupation basis.

    The returned vector lives on the sector space; its entry at n_d = N/2 + l
    is the amplitude of |N/2−l>_C |N/2+l>_D.  The basis change is the
    exponential of the one-body generator built from log M.
    """
    n, amps = state.sector_amplitudes()
    gen = _mode_generator(n, logm(cd_mode_matrix(theta_p)))
    out = expm(gen) @ amps
    return StateVector(sector_space(n), out / np.linalg.norm(out))
