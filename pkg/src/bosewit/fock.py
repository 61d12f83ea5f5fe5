"""Truncated two-mode Fock space, operators and expectation values.

Basis states |n_a, n_b> are ordered sector-major: all states with total
number n = n_a + n_b = n_min come first, then n_min + 1, and so on up to
n_max.  Inside a sector n_b ascends from 0 to n.  A space with
n_min == n_max is a single fixed-N sector, which is how large-N pure states
are handled cheaply.

Operator images that leave the truncated space are dropped, never wrapped.
"""
from __future__ import annotations

from dataclasses import InitVar, dataclass
from enum import Enum
from functools import cached_property
from typing import Union

import numpy as np

from .errors import ConfigurationError, NumericalValidationError, UsageError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
IMAG_TOL = 1e-10
NORM_TOL = 1e-12

MAX_N_MAX = 4000
# dense dim x dim complex matrices above this size cost > 70 MB each
DENSE_DIM_LIMIT = 2100


class Mode(str, Enum):
    A = "A"
    B = "B"


def _mode(mode) -> Mode:
    try:
        return Mode(str(mode.value if isinstance(mode, Mode) else mode).upper())
    except ValueError:
        raise UsageError(f"mode must be 'A' or 'B', got {mode!r}") from None


def _tri(n: int) -> int:
    return n * (n + 1) // 2


@dataclass(frozen=True)
class FockSpace:
    """Two-mode occupation basis with total number in [n_min, n_max]."""

    n_max: int
    n_min: int = 0

    def __post_init__(self):
        for name in ("n_max", "n_min"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ConfigurationError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if not 0 <= self.n_min <= self.n_max <= MAX_N_MAX:
            raise ConfigurationError(
                f"need 0 <= n_min <= n_max <= {MAX_N_MAX}, "
                f"got n_min={self.n_min}, n_max={self.n_max}"
            )

    @property
    def dim(self) -> int:
        return _tri(self.n_max + 1) - _tri(self.n_min)

    @property
    def is_sector(self) -> bool:
        return self.n_min == self.n_max

    @property
    def sectors(self) -> range:
        return range(self.n_min, self.n_max + 1)

    @cached_property
    def occupations(self) -> np.ndarray:
        """(dim, 2) integer array of (n_a, n_b) per basis index."""
        out = np.empty((self.dim, 2), dtype=np.int64)
        for n in self.sectors:
            sl = self.sector_slice(n)
            n_b = np.arange(n + 1)
            out[sl, 0] = n - n_b
            out[sl, 1] = n_b
        out.flags.writeable = False
        return out

    @cached_property
    def totals(self) -> np.ndarray:
        t = self.occupations.sum(axis=1)
        t.flags.writeable = False
        return t

    def contains(self, n_a: int, n_b: int) -> bool:
        return n_a >= 0 and n_b >= 0 and self.n_min <= n_a + n_b <= self.n_max

    def index_of(self, n_a: int, n_b: int) -> int:
        if not self.contains(n_a, n_b):
            raise UsageError(f"occupation ({n_a}, {n_b}) is outside {self}")
        return _tri(n_a + n_b) - _tri(self.n_min) + n_b

    def indices(self, n_a: np.ndarray, n_b: np.ndarray) -> np.ndarray:
        """Vectorised index_of; -1 where the occupation is outside the space."""
        n_a = np.asarray(n_a, dtype=np.int64)
        n_b = np.asarray(n_b, dtype=np.int64)
        n = n_a + n_b
        ok = (n_a >= 0) & (n_b >= 0) & (n >= self.n_min) & (n <= self.n_max)
        idx = n * (n + 1) // 2 - _tri(self.n_min) + n_b
        return np.where(ok, idx, -1)

    def occupations_of(self, i: int) -> tuple[int, int]:
        if not 0 <= i < self.dim:
            raise UsageError(f"index {i} out of range for dim {self.dim}")
        n_a, n_b = self.occupations[i]
        return int(n_a), int(n_b)

    def sector_slice(self, n: int) -> slice:
        if not self.n_min <= n <= self.n_max:
            raise UsageError(f"sector N={n} not in [{self.n_min}, {self.n_max}]")
        start = _tri(n) - _tri(self.n_min)
        return slice(start, start + n + 1)

    def require_dense(self) -> None:
        if self.dim > DENSE_DIM_LIMIT:
            raise ConfigurationError(
                f"dense operators on dim={self.dim} exceed the limit {DENSE_DIM_LIMIT}; "
                "use a fixed-N sector space or the sector fast path"
            )


def build_space(n_max: int) -> FockSpace:
    return FockSpace(n_max)


def sector_space(n: int) -> FockSpace:
    """Space holding only the total-number-n sector (dimension n + 1)."""
    return FockSpace(n, n_min=n)


def _check_same_space(s1: FockSpace, s2: FockSpace) -> None:
    if s1 != s2:
        raise UsageError(f"space mismatch: {s1} vs {s2}")


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def check_density_matrix(matrix: np.ndarray, what: str = "density matrix") -> None:
    """Raise NumericalValidationError unless matrix is Hermitian, unit trace and PSD."""
    herm = np.max(np.abs(matrix - matrix.conj().T)) if matrix.size else 0.0
    if herm > HERMITIAN_TOL:
        raise NumericalValidationError(f"{what} not Hermitian (deviation {herm:.3e})")
    tr = np.trace(matrix)
    if abs(tr - 1.0) > TRACE_TOL:
        raise NumericalValidationError(f"{what} trace {tr.real:.15g} differs from 1")
    lo = np.linalg.eigvalsh(matrix)[0]
    if lo < -PSD_TOL:
        raise NumericalValidationError(f"{what} not PSD (min eigenvalue {lo:.3e})")


@dataclass(frozen=True, eq=False)
class StateVector:
    space: FockSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (self.space.dim,):
            raise UsageError(f"expected {self.space.dim} amplitudes, got {amps.shape[0]}")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise NumericalValidationError(f"state not normalised (|psi|^2 = {norm2:.15g})")
        object.__setattr__(self, "amplitudes", _readonly(amps))

    @classmethod
    def normalized(cls, space: FockSpace, amplitudes) -> StateVector:
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise UsageError("cannot normalise the zero vector")
        return cls(space, amps / norm)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, n_a: int, n_b: int) -> complex:
        return complex(self.amplitudes[self.space.index_of(n_a, n_b)])

    def density(self) -> DensityOperator:
        psi = self.amplitudes
        return DensityOperator(self.space, np.outer(psi, psi.conj()), validate=False)

    def sector(self) -> int | None:
        """Total number N if all weight sits in one sector, else None."""
        weights = np.bincount(self.space.totals, weights=np.abs(self.amplitudes) ** 2)
        occupied = np.flatnonzero(weights > 1e-24)
        return int(occupied[0]) if occupied.size == 1 else None

    def sector_amplitudes(self) -> tuple[int, np.ndarray]:
        """(N, amplitudes indexed by n_b) for a single-sector state."""
        n = self.sector()
        if n is None:
            raise UsageError("state is not confined to a single total-number sector")
        return n, self.amplitudes[self.space.sector_slice(n)].copy()

    def embed(self, space: FockSpace) -> StateVector:
        """Re-express the state in another space; fails if weight would be lost."""
        occ = self.space.occupations
        target = space.indices(occ[:, 0], occ[:, 1])
        lost = np.abs(self.amplitudes[target < 0]) ** 2
        if lost.sum() > 1e-24:
            raise ConfigurationError(f"embedding into {space} drops weight {lost.sum():.3e}")
        amps = np.zeros(space.dim, dtype=complex)
        keep = target >= 0
        amps[target[keep]] = self.amplitudes[keep]
        return StateVector(space, amps)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    space: FockSpace
    matrix: np.ndarray
    truncation_weight: float = 0.0
    validate: InitVar[bool] = True

    def __post_init__(self, validate):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise UsageError(f"matrix shape {m.shape} does not match dim {self.space.dim}")
        if validate:
            check_density_matrix(m)
        object.__setattr__(self, "matrix", _readonly(m))

    def purity(self) -> float:
        return float(np.einsum("ij,ji->", self.matrix, self.matrix).real)


@dataclass(frozen=True, eq=False)
class SingleModeDensity:
    """Density matrix of one mode over occupations 0..max_occupation."""

    matrix: np.ndarray
    validate: InitVar[bool] = True

    def __post_init__(self, validate):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise UsageError(f"single-mode density must be square, got shape {m.shape}")
        if validate:
            check_density_matrix(m, "single-mode density")
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def max_occupation(self) -> int:
        return self.matrix.shape[0] - 1

    @classmethod
    def from_probabilities(cls, probs) -> SingleModeDensity:
        return cls(np.diag(np.asarray(probs, dtype=float)))

    @classmethod
    def from_amplitudes(cls, amps) -> SingleModeDensity:
        v = np.asarray(amps, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))


State = Union[StateVector, DensityOperator]


@dataclass(frozen=True, eq=False)
class ModeOperator:
    space: FockSpace
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise UsageError(f"operator shape {m.shape} does not match dim {self.space.dim}")
        object.__setattr__(self, "matrix", _readonly(m))

    def adjoint(self) -> ModeOperator:
        return ModeOperator(self.space, self.matrix.conj().T, f"({self.label})†")

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.matrix), initial=0.0)))
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= tol * scale)

    def apply(self, state: StateVector) -> np.ndarray:
        """Unnormalised image vector of a pure state."""
        _check_same_space(self.space, state.space)
        return self.matrix @ state.amplitudes

    def __matmul__(self, other: ModeOperator) -> ModeOperator:
        return compose(self, other)

    def __add__(self, other: ModeOperator) -> ModeOperator:
        return add(self, other)

    def __sub__(self, other: ModeOperator) -> ModeOperator:
        return add(self, scale(other, -1.0))

    def __neg__(self) -> ModeOperator:
        return scale(self, -1.0)

    def __mul__(self, c) -> ModeOperator:
        return scale(self, c)

    __rmul__ = __mul__

    def __truediv__(self, c) -> ModeOperator:
        return scale(self, 1.0 / c)


def adjoint(op: ModeOperator) -> ModeOperator:
    return op.adjoint()


def compose(op1: ModeOperator, op2: ModeOperator) -> ModeOperator:
    """Matrix product op1 · op2 (op2 acts first); intermediate images are truncated."""
    _check_same_space(op1.space, op2.space)
    return ModeOperator(op1.space, op1.matrix @ op2.matrix, f"{op1.label}{op2.label}")


def add(op1: ModeOperator, op2: ModeOperator) -> ModeOperator:
    _check_same_space(op1.space, op2.space)
    return ModeOperator(op1.space, op1.matrix + op2.matrix, f"{op1.label}+{op2.label}")


def scale(op: ModeOperator, c) -> ModeOperator:
    return ModeOperator(op.space, c * op.matrix, f"{c}*{op.label}")


def _ladder_coefficients(n: np.ndarray, lower: int, raise_: int) -> np.ndarray:
    """sqrt coefficient of (x†)^raise_ x^lower on |n>, zero where n < lower."""
    coef = np.ones(n.shape, dtype=float)
    for i in range(lower):
        coef *= np.sqrt(np.clip(n - i, 0, None))
    base = n - lower
    for i in range(1, raise_ + 1):
        coef *= np.sqrt(np.clip(base + i, 0, None))
    return coef


def monomial(
    space: FockSpace, a_dag: int = 0, a: int = 0, b_dag: int = 0, b: int = 0, label: str | None = None
) -> ModeOperator:
    """Normal-ordered (a†)^a_dag a^a (b†)^b_dag b^b with exact matrix elements.

    Matrix elements come from the closed-form ladder coefficients, so only the
    final image is subject to truncation; composing truncated single ladder
    operators would also lose intermediate states outside the space.
    """
    if min(a_dag, a, b_dag, b) < 0:
        raise UsageError("monomial powers must be non-negative")
    space.require_dense()
    occ = space.occupations
    n_a, n_b = occ[:, 0], occ[:, 1]
    coef = _ladder_coefficients(n_a, a, a_dag) * _ladder_coefficients(n_b, b, b_dag)
    target = space.indices(n_a - a + a_dag, n_b - b + b_dag)
    keep = (target >= 0) & (coef != 0)
    mat = np.zeros((space.dim, space.dim), dtype=complex)
    mat[target[keep], np.flatnonzero(keep)] = coef[keep]
    if label is None:
        parts = [
            f"{name}^{p}" if p > 1 else name
            for name, p in (("a†", a_dag), ("a", a), ("b†", b_dag), ("b", b))
            if p
        ]
        label = "".join(parts) or "1"
    return ModeOperator(space, mat, label)


def annihilator(space: FockSpace, mode) -> ModeOperator:
    return monomial(space, a=1) if _mode(mode) is Mode.A else monomial(space, b=1)


def creator(space: FockSpace, mode) -> ModeOperator:
    return monomial(space, a_dag=1) if _mode(mode) is Mode.A else monomial(space, b_dag=1)


def number_op(space: FockSpace, mode=None) -> ModeOperator:
    """N_a, N_b, or the total number operator when mode is None."""
    space.require_dense()
    occ = space.occupations
    if mode is None:
        diag, label = occ.sum(axis=1), "N"
    else:
        m = _mode(mode)
        diag, label = (occ[:, 0], "N_a") if m is Mode.A else (occ[:, 1], "N_b")
    return ModeOperator(space, np.diag(diag.astype(complex)), label)


def identity(space: FockSpace) -> ModeOperator:
    space.require_dense()
    return ModeOperator(space, np.eye(space.dim, dtype=complex), "1")


def expectation(op: ModeOperator, state: State) -> complex:
    """Tr(rho op) for a density operator, <psi|op|psi> for a pure state."""
    _check_same_space(op.space, state.space)
    if isinstance(state, StateVector):
        psi = state.amplitudes
        return complex(np.vdot(psi, op.matrix @ psi))
    return complex(np.einsum("ij,ji->", state.matrix, op.matrix))


def expect_real(op: ModeOperator, state: State) -> float:
    """Real expectation of a Hermitian operator; the tiny imaginary part is clipped."""
    value = expectation(op, state)
    scale_ = max(1.0, abs(value))
    if abs(value.imag) > IMAG_TOL * scale_:
        raise NumericalValidationError(
            f"expectation of {op.label or 'operator'} has imaginary part {value.imag:.3e}"
        )
    return value.real


def variance(op: ModeOperator, state: State) -> float:
    """<op²> − <op>² for a Hermitian operator, clipped at zero."""
    _check_same_space(op.space, state.space)
    if not op.is_hermitian():
        raise UsageError(f"variance needs a Hermitian operator ({op.label!r} is not)")
    mean = expect_real(op, state)
    if isinstance(state, StateVector):
        v = op.matrix @ state.amplitudes
        second = float(np.vdot(v, v).real)
    else:
        m = op.matrix
        second = float(np.einsum("ij,jk,ki->", state.matrix, m, m).real)
    var = second - mean * mean
    if var < -PSD_TOL * max(1.0, second):
        raise NumericalValidationError(f"negative variance {var:.3e}")
    return max(var, 0.0)


def as_density(state: State) -> DensityOperator:
    return state.density() if isinstance(state, StateVector) else state


def partial_trace(state: State, keep) -> SingleModeDensity:
    """Reduced density matrix of mode `keep` over occupations 0..n_max."""
    keep = _mode(keep)
    space = state.space
    size = space.n_max + 1
    occ = space.occupations
    kept_col, traced_col = (0, 1) if keep is Mode.A else (1, 0)
    if isinstance(state, StateVector):
        grid = np.zeros((size, size), dtype=complex)
        grid[occ[:, kept_col], occ[:, traced_col]] = state.amplitudes
        reduced = grid @ grid.conj().T
    else:
        reduced = np.zeros((size, size), dtype=complex)
        rho = state.matrix
        for t in range(size):
            idx = np.flatnonzero(occ[:, traced_col] == t)
            if idx.size == 0:
                continue
            kept = occ[idx, kept_col]
            reduced[np.ix_(kept, kept)] += rho[np.ix_(idx, idx)]
    reduced = 0.5 * (reduced + reduced.conj().T)
    return SingleModeDensity(reduced, validate=False)


def embed_product(
    rho_a: SingleModeDensity, rho_b: SingleModeDensity, space: FockSpace
) -> tuple[np.ndarray, float]:
    """rho_a ⊗ rho_b in the two-mode basis and the diagonal weight dropped by truncation."""
    occ = space.occupations
    da, db = rho_a.matrix.shape[0], rho_b.matrix.shape[0]
    valid = np.flatnonzero((occ[:, 0] < da) & (occ[:, 1] < db))
    na, nb = occ[valid, 0], occ[valid, 1]
    mat = np.zeros((space.dim, space.dim), dtype=complex)
    mat[np.ix_(valid, valid)] = rho_a.matrix[np.ix_(na, na)] * rho_b.matrix[np.ix_(nb, nb)]
    kept = float(np.trace(mat).real)
    return mat, max(0.0, 1.0 - kept)


def monomial_expectation(state: State, a_dag: int = 0, a: int = 0, b_dag: int = 0, b: int = 0) -> complex:
    """<(a†)^a_dag a^a (b†)^b_dag b^b> without forming a dense operator."""
    if min(a_dag, a, b_dag, b) < 0:
        raise UsageError("monomial powers must be non-negative")
    space = state.space
    occ = space.occupations
    n_a, n_b = occ[:, 0], occ[:, 1]
    coef = _ladder_coefficients(n_a, a, a_dag) * _ladder_coefficients(n_b, b, b_dag)
    target = space.indices(n_a - a + a_dag, n_b - b + b_dag)
    src = np.flatnonzero((target >= 0) & (coef != 0))
    tgt = target[src]
    if isinstance(state, StateVector):
        psi = state.amplitudes
        return complex(np.sum(psi[tgt].conj() * coef[src] * psi[src]))
    # Tr(rho X) with X[tgt, src] = coef
    return complex(np.sum(state.matrix[src, tgt] * coef[src]))
