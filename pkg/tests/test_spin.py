import math
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosewit.errors import NumericalValidationError, UsageError
from bosewit.fock import DensityOperator, StateVector, build_space, sector_space, variance
from bosewit.spin import (
    SpinMoments,
    casimir,
    cd_mode_matrix,
    cd_mode_transform,
    principal_frame,
    relative_phase_axes,
    rotated_spin_op,
    schwinger_ops,
    sector_spin_moments,
    spin_moments,
)
from bosewit.states import (
    RelativePhaseSpec,
    coherent_product,
    css_state,
    noon_state,
    one_axis_twist,
    relative_phase_state,
    required_n_max,
)

from .oracles import RELATIVE_PHASE_N10_P2, RELATIVE_PHASE_P0


def _random_sector_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    return StateVector.normalized(sector_space(n), v)


def _rotation(seed):
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    return q if np.linalg.det(q) > 0 else -q


class TestOperators:
    @pytest.mark.parametrize("space", [build_space(6), sector_space(9)], ids=["full", "sector"])
    def test_commutators(self, space):
        x, y, z = (op.matrix for op in schwinger_ops(space))
        for p, q, r in ((x, y, z), (y, z, x), (z, x, y)):
            assert np.max(np.abs(p @ q - q @ p - 1j * r)) < 1e-10

    def test_hermitian(self):
        for op in schwinger_ops(build_space(5)):
            assert op.is_hermitian()

    @pytest.mark.parametrize("n", [1, 2, 5, 12])
    def test_casimir_on_sector(self, n):
        x, y, z = (op.matrix for op in schwinger_ops(sector_space(n)))
        c = x @ x + y @ y + z @ z
        assert np.allclose(c, n / 2 * (n / 2 + 1) * np.eye(n + 1), atol=1e-10)

    def test_rotated_op(self):
        space = build_space(3)
        ops = schwinger_ops(space)
        n = np.array([0.6, 0.0, 0.8])
        assert np.allclose(rotated_spin_op(space, n).matrix, 0.6 * ops.x.matrix + 0.8 * ops.z.matrix)
        with pytest.raises(UsageError):
            rotated_spin_op(space, [1, 1, 0])


class TestMoments:
    @pytest.mark.parametrize("n", sorted(RELATIVE_PHASE_P0))
    def test_relative_phase_against_oracle(self, n):
        mean_x, var_x, var_y, var_z = RELATIVE_PHASE_P0[n]
        m = sector_spin_moments(relative_phase_state(n))
        assert m.means == pytest.approx([mean_x, 0.0, 0.0], abs=1e-9 * n)
        assert m.variances == pytest.approx([var_x, var_y, var_z], rel=1e-10)

    def test_relative_phase_with_phase(self):
        mx, my, vx, vy = RELATIVE_PHASE_N10_P2
        m = sector_spin_moments(relative_phase_state(10, 2))
        assert m.means[:2] == pytest.approx([mx, my], rel=1e-12)
        assert m.variances[:2] == pytest.approx([vx, vy], rel=1e-12)

    @pytest.mark.parametrize("n", [2, 4, 10, 20])
    def test_var_sz_closed_form(self, n):
        m = sector_spin_moments(relative_phase_state(n))
        assert m.variances[2] == pytest.approx((n / 2) * (n / 2 + 1) / 3, rel=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 25), st.integers(0, 10_000))
    def test_dense_and_sector_paths_agree(self, n, seed):
        psi = _random_sector_state(n, seed)
        fast, dense = sector_spin_moments(psi), spin_moments(psi)
        assert np.allclose(fast.means, dense.means, atol=1e-10)
        assert np.allclose(fast.covariance, dense.covariance, atol=1e-10)
        assert fast.mean_number == n and dense.mean_number == pytest.approx(n, rel=1e-12)

    def test_pure_and_density_agree(self):
        psi = css_state(5, 1.0, 0.3, build_space(7))
        a, b = spin_moments(psi), spin_moments(psi.density())
        assert np.allclose(a.means, b.means) and np.allclose(a.covariance, b.covariance)

    def test_covariance_matches_operator_variance(self):
        psi = one_axis_twist(css_state(6, math.pi / 2), 0.2)
        m = spin_moments(psi)
        n = np.array([1.0, 2.0, -0.5]) / math.sqrt(5.25)
        assert m.variance_along(n) == pytest.approx(variance(rotated_spin_op(psi.space, n), psi), abs=1e-12)

    def test_css_moments(self):
        n, theta, phi = 8, 1.2, 0.5
        m = sector_spin_moments(css_state(n, theta, phi))
        # S_y = (b†a − a†b)/2i puts a phase e^{iφ} on b at azimuth −φ
        direction = np.array([math.sin(theta) * math.cos(phi), -math.sin(theta) * math.sin(phi), -math.cos(theta)])
        assert m.means == pytest.approx(n / 2 * direction, abs=1e-12)
        assert m.variance_along(direction) == pytest.approx(0.0, abs=1e-12)

    def test_coherent_product_moments(self):
        alpha, beta = 1.0, 1.0
        rho = coherent_product(build_space(required_n_max(2.0)), alpha, beta)
        m = spin_moments(rho)
        assert m.means == pytest.approx([1.0, 0.0, 0.0], abs=1e-9)
        assert m.variances == pytest.approx([0.5, 0.5, 0.5], abs=1e-9)
        assert m.mean_number == pytest.approx(2.0, abs=1e-9)

    @pytest.mark.parametrize("state", [noon_state(None, 5), relative_phase_state(8), css_state(7, 0.4)])
    def test_casimir_expectation(self, state):
        n = state.sector()
        assert casimir(state) == pytest.approx(n / 2 * (n / 2 + 1), rel=1e-12)

    def test_moments_validation(self):
        with pytest.raises(NumericalValidationError):
            SpinMoments(np.zeros(3), np.diag([1.0, -1.0, 0.0]), 1.0)
        with pytest.raises(NumericalValidationError):
            SpinMoments(np.zeros(3), np.array([[1, 0.5, 0], [0, 1, 0], [0, 0, 1.0]]), 1.0)

    def test_sector_path_requires_single_sector(self):
        space = build_space(2)
        psi = StateVector.normalized(space, np.ones(space.dim))
        with pytest.raises(UsageError):
            sector_spin_moments(psi)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.0, 1.0))
    def test_variance_concave_over_mixtures(self, seed, w):
        space = build_space(4)
        rng = np.random.default_rng(seed)
        states = []
        for _ in range(2):
            v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
            states.append(StateVector.normalized(space, v).density())
        mix = DensityOperator(space, w * states[0].matrix + (1 - w) * states[1].matrix)
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        lhs = spin_moments(mix).variance_along(n)
        rhs = w * spin_moments(states[0]).variance_along(n) + (1 - w) * spin_moments(states[1]).variance_along(n)
        assert lhs >= rhs - 1e-10


class TestPrincipalFrame:
    def test_identity_for_diagonal_covariance(self):
        pf = principal_frame(SpinMoments(np.zeros(3), np.diag([1.0, 1.0, 1.0]), 2.0))
        assert np.allclose(pf.rotation, np.eye(3))
        pf = principal_frame(SpinMoments(np.zeros(3), np.diag([0.5, 0.5, 0.0]), 2.0))
        assert np.allclose(pf.rotation, [[0, 0, 1], [1, 0, 0], [0, 1, 0]])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 15), st.integers(0, 10_000))
    def test_frame_diagonalises_and_preserves_trace(self, n, seed):
        m = sector_spin_moments(_random_sector_state(n, seed))
        pf = principal_frame(m)
        r = pf.rotation
        assert np.allclose(r @ r.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(r) == pytest.approx(1.0)
        cov = pf.moments(m).covariance
        assert np.allclose(cov, np.diag(pf.principal_variances), atol=1e-10)
        assert np.all(np.diff(pf.principal_variances) >= -1e-12)
        assert np.trace(cov) == pytest.approx(np.trace(m.covariance), abs=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000), st.integers(0, 10_000))
    def test_principal_variances_rotation_invariant(self, seed, rot_seed):
        m = sector_spin_moments(_random_sector_state(6, seed))
        rotated = m.rotated(_rotation(rot_seed))
        a, b = principal_frame(m), principal_frame(rotated)
        assert np.allclose(a.principal_variances, b.principal_variances, atol=1e-10)
        assert np.allclose(np.sort(np.abs(a.principal_means)), np.sort(np.abs(b.principal_means)), atol=1e-10)

    @pytest.mark.parametrize("n,p", [(10, 0), (20, 3), (50, -7)])
    def test_relative_phase_axes_diagonalise(self, n, p):
        m = sector_spin_moments(relative_phase_state(n, p))
        j = m.rotated(relative_phase_axes(RelativePhaseSpec(n, p).theta))
        off = j.covariance - np.diag(j.variances)
        assert np.max(np.abs(off)) < 1e-9
        assert j.means[:2] == pytest.approx([0.0, 0.0], abs=1e-9)
        assert j.means[2] < 0
        # principal axes coincide with J_y, J_z, J_x in ascending variance
        pf = principal_frame(m)
        expected = relative_phase_axes(RelativePhaseSpec(n, p).theta)[[1, 2, 0]]
        assert np.allclose(np.abs(pf.rotation @ expected.T), np.eye(3), atol=1e-8)


def _expand_in_new_modes(psi, m):
    """Oracle: substitute (a†, b†) = M (c†, d†) in Σ ψ(n_a, n_b) a†^n_a b†^n_b/√(n_a! n_b!)."""
    n, amps = psi.sector_amplitudes()
    out = defaultdict(complex)
    for nb in range(n + 1):
        na = n - nb
        poly = {(0, 0): 1.0 + 0j}
        for row, power in ((0, na), (1, nb)):
            for _ in range(power):
                nxt = defaultdict(complex)
                for (pc, pd), coef in poly.items():
                    nxt[(pc + 1, pd)] += coef * m[row, 0]
                    nxt[(pc, pd + 1)] += coef * m[row, 1]
                poly = nxt
        scale = amps[nb] / math.sqrt(math.factorial(na) * math.factorial(nb))
        for (pc, pd), coef in poly.items():
            out[pd] += scale * coef * math.sqrt(math.factorial(pc) * math.factorial(pd))
    return np.array([out[nd] for nd in range(n + 1)])


class TestNewModes:
    def test_mode_matrix_unitary(self):
        m = cd_mode_matrix(0.7)
        assert np.allclose(m @ m.conj().T, np.eye(2))

    @pytest.mark.parametrize("n,p", [(2, 0), (4, 1), (6, -2)])
    def test_transform_matches_polynomial_expansion(self, n, p):
        theta = RelativePhaseSpec(n, p).theta
        psi = relative_phase_state(n, p)
        expected = _expand_in_new_modes(psi, cd_mode_matrix(theta))
        got = cd_mode_transform(psi, theta).amplitudes
        assert np.allclose(got, expected, atol=1e-12)

    @pytest.mark.parametrize("n,p", [(10, 0), (16, 3), (30, -4)])
    def test_new_mode_number_difference_is_jz(self, n, p):
        theta = RelativePhaseSpec(n, p).theta
        psi = relative_phase_state(n, p)
        amps = cd_mode_transform(psi, theta).amplitudes
        l = np.arange(n + 1) - n / 2
        w = np.abs(amps) ** 2
        j = sector_spin_moments(psi).rotated(relative_phase_axes(theta))
        assert w @ l == pytest.approx(j.means[2], abs=1e-9)
        assert w @ l**2 - (w @ l) ** 2 == pytest.approx(j.variances[2], rel=1e-9)
        # several l values are occupied: entangled in the new modes
        assert np.count_nonzero(w > 1e-6) > 1
