"""State constructors, separable ensembles and particle-number SSR tools."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import binom, poisson

from .errors import ConfigurationError, UsageError
from .fock import (
    DensityOperator,
    FockSpace,
    SingleModeDensity,
    State,
    StateVector,
    as_density,
    embed_product,
    sector_space,
)

SSR_TOL = 1e-10
TRUNCATION_TOL = 1e-12
WEIGHT_TOL = 1e-12


class SSRMode(str, Enum):
    LOCAL = "local_ssr"
    UNRESTRICTED = "unrestricted"

    @classmethod
    def parse(cls, value) -> SSRMode:
        aliases = {"local": cls.LOCAL, "none": cls.UNRESTRICTED}
        if isinstance(value, cls):
            return value
        if value in aliases:
            return aliases[value]
        try:
            return cls(value)
        except ValueError:
            raise UsageError(f"unknown ssr mode {value!r}") from None


class SSRCheck(NamedTuple):
    compliant: bool
    residual: float


@dataclass(frozen=True)
class RelativePhaseSpec:
    N: int
    p: int = 0

    def __post_init__(self):
        if self.N <= 0 or self.N % 2:
            raise UsageError(f"relative phase state needs an even positive N, got {self.N}")
        if abs(self.p) > self.N // 2:
            raise UsageError(f"p must lie in [-N/2, N/2], got p={self.p} for N={self.N}")

    @property
    def theta(self) -> float:
        return self.p * 2.0 * np.pi / (self.N + 1)


@dataclass(frozen=True, eq=False)
class SeparableEnsemble:
    """Weighted list of (P_R, rho_A, rho_B) product terms."""

    terms: tuple[tuple[float, SingleModeDensity, SingleModeDensity], ...]
    ssr_mode: SSRMode = SSRMode.LOCAL

    def __post_init__(self):
        terms = tuple((float(w), ra, rb) for w, ra, rb in self.terms)
        if not terms:
            raise UsageError("separable ensemble needs at least one term")
        weights = np.array([w for w, _, _ in terms])
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise UsageError(f"weights must be non-negative and sum to 1 (sum={weights.sum():.15g})")
        mode = SSRMode.parse(self.ssr_mode)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "ssr_mode", mode)
        if mode is SSRMode.LOCAL:
            for r, (_, ra, rb) in enumerate(terms):
                for name, rho in (("A", ra), ("B", rb)):
                    check = local_ssr_check(rho)
                    if not check.compliant:
                        raise UsageError(
                            f"term {r} factor {name} violates the local SSR "
                            f"(off-diagonal {check.residual:.3e})"
                        )

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _, _ in self.terms])


def _space_or_sector(space: FockSpace | None, n: int) -> FockSpace:
    space = sector_space(n) if space is None else space
    if not space.n_min <= n <= space.n_max:
        raise ConfigurationError(f"N={n} does not fit in {space}")
    return space


def _sector_state(space: FockSpace, n: int, amps: np.ndarray) -> StateVector:
    full = np.zeros(space.dim, dtype=complex)
    full[space.sector_slice(n)] = amps
    return StateVector.normalized(space, full)


def fock_state(space: FockSpace, n_a: int, n_b: int) -> StateVector:
    amps = np.zeros(space.dim, dtype=complex)
    if not space.contains(n_a, n_b):
        raise UsageError(f"occupation ({n_a}, {n_b}) overflows {space}")
    amps[space.index_of(n_a, n_b)] = 1.0
    return StateVector(space, amps)


def noon_state(space: FockSpace | None, N: int) -> StateVector:
    """(|N,0> + |0,N>)/√2."""
    if N < 1:
        raise UsageError("NOON state needs N >= 1")
    space = _space_or_sector(space, N)
    amps = np.zeros(N + 1, dtype=complex)
    amps[0] = amps[N] = 1.0
    return _sector_state(space, N, amps)


def relative_phase_state(N: int, p: int = 0, space: FockSpace | None = None) -> StateVector:
    """Equal-weight superposition Σ_k e^{ikθ_p}|N/2−k, N/2+k>/√(N+1).

    Defaults to the fixed-N sector space so that N in the thousands stays cheap.
    """
    spec = RelativePhaseSpec(N, p)
    space = _space_or_sector(space, N)
    k = np.arange(N + 1) - N // 2  # index is n_b = N/2 + k
    amps = np.exp(1j * k * spec.theta) / np.sqrt(N + 1)
    return _sector_state(space, N, amps)


def css_state(N: int, theta: float, phi: float = 0.0, space: FockSpace | None = None) -> StateVector:
    """Coherent spin state (cos(θ/2) a† + e^{iφ} sin(θ/2) b†)^N |0,0>/√N!."""
    if N < 0:
        raise UsageError("N must be non-negative")
    space = _space_or_sector(space, N)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    j = np.arange(N + 1)  # number of bosons in mode B
    mags = np.sqrt(binom.pmf(j, N, s * s))
    signs = np.sign(c) ** (N - j) * np.sign(s) ** j
    amps = mags * signs * np.exp(1j * j * phi)
    return _sector_state(space, N, amps)


def one_axis_twist(state: StateVector, chi_t: float) -> StateVector:
    """Apply exp(−i χt S_z²) to a fixed-N state."""
    n, amps = state.sector_amplitudes()
    k = np.arange(n + 1) - n / 2
    return _sector_state(state.space, n, amps * np.exp(-1j * chi_t * k * k))


def truncated_poisson_tail(mean: float, n_max: int) -> float:
    return float(poisson.sf(n_max, mean))


def required_n_max(mean: float, tol: float = TRUNCATION_TOL) -> int:
    n = int(np.ceil(mean))
    while truncated_poisson_tail(mean, n) >= tol:
        n += 1
    return n


def coherent_amplitudes(alpha: complex, max_n: int) -> np.ndarray:
    """Glauber |α> amplitudes over 0..max_n (unnormalised after truncation)."""
    n = np.arange(max_n + 1)
    mags = np.sqrt(poisson.pmf(n, abs(alpha) ** 2)) if alpha != 0 else (n == 0).astype(float)
    return mags * np.exp(1j * n * np.angle(alpha))


def coherent_product(space: FockSpace, alpha: complex, beta: complex) -> DensityOperator:
    """Projector onto |α>⊗|β>, truncated to the space and renormalised.

    The total number is Poisson with mean |α|²+|β|², so the discarded weight
    is its tail above n_max; it is stored as ``truncation_weight``.
    """
    if space.n_min != 0:
        raise ConfigurationError("coherent products need a space starting at N=0")
    mean = abs(alpha) ** 2 + abs(beta) ** 2
    tail = truncated_poisson_tail(mean, space.n_max)
    if tail >= TRUNCATION_TOL:
        raise ConfigurationError(
            f"truncation weight {tail:.3e} too large at n_max={space.n_max}; "
            f"use n_max >= {required_n_max(mean)}"
        )
    occ = space.occupations
    ca = coherent_amplitudes(alpha, space.n_max)
    cb = coherent_amplitudes(beta, space.n_max)
    psi = StateVector.normalized(space, ca[occ[:, 0]] * cb[occ[:, 1]])
    return DensityOperator(space, psi.density().matrix, truncation_weight=tail, validate=False)


def assemble_separable(ensemble: SeparableEnsemble, space: FockSpace) -> DensityOperator:
    """Σ_R P_R ρ_R^A ⊗ ρ_R^B in the two-mode basis."""
    total = np.zeros((space.dim, space.dim), dtype=complex)
    dropped = 0.0
    for w, ra, rb in ensemble.terms:
        mat, lost = embed_product(ra, rb, space)
        total += w * mat
        dropped += w * lost
    if dropped >= TRUNCATION_TOL:
        raise ConfigurationError(
            f"separable ensemble loses weight {dropped:.3e} outside n_max={space.n_max}"
        )
    total = 0.5 * (total + total.conj().T)
    total /= np.trace(total).real
    return DensityOperator(space, total, truncation_weight=dropped)


def global_ssr_check(state: State, tol: float = SSR_TOL) -> SSRCheck:
    """Largest coherence between different total-number sectors."""
    totals = state.space.totals
    if isinstance(state, StateVector):
        mags = np.abs(state.amplitudes)
        per_sector = np.zeros(state.space.n_max + 1)
        np.maximum.at(per_sector, totals, mags)
        top = np.sort(per_sector)[::-1]
        residual = float(top[0] * top[1]) if top.size > 1 else 0.0
    else:
        cross = totals[:, None] != totals[None, :]
        residual = float(np.max(np.abs(state.matrix[cross]), initial=0.0))
    return SSRCheck(residual <= tol, residual)


def local_ssr_check(rho: SingleModeDensity, tol: float = SSR_TOL) -> SSRCheck:
    """Largest off-diagonal element in the number basis."""
    m = rho.matrix
    off = m - np.diag(np.diag(m))
    residual = float(np.max(np.abs(off), initial=0.0))
    return SSRCheck(residual <= tol, residual)


def ssr_dephase_global(state: State) -> DensityOperator:
    """Remove coherences between different total-number sectors."""
    rho = as_density(state)
    totals = rho.space.totals
    mask = totals[:, None] == totals[None, :]
    return DensityOperator(rho.space, np.where(mask, rho.matrix, 0.0), validate=False)


def ssr_dephase_local(state: State) -> DensityOperator:
    """Keep only the occupation-basis diagonal (no coherence between (n_a, n_b) pairs)."""
    rho = as_density(state)
    return DensityOperator(rho.space, np.diag(np.diag(rho.matrix)), validate=False)


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_local_ssr_density(max_n: int, rng_seed) -> SingleModeDensity:
    """Diagonal single-mode density with Dirichlet(1, ..., 1) occupation probabilities."""
    rng = _rng(rng_seed)
    return SingleModeDensity.from_probabilities(rng.dirichlet(np.ones(max_n + 1)))


def random_unrestricted_density(max_n: int, rng_seed) -> SingleModeDensity:
    """Haar-random pure single-mode state; generically coherent across occupations."""
    rng = _rng(rng_seed)
    v = rng.normal(size=max_n + 1) + 1j * rng.normal(size=max_n + 1)
    return SingleModeDensity.from_amplitudes(v)


def random_separable(
    space: FockSpace, terms: int, rng_seed, ssr_mode=SSRMode.LOCAL, max_n: int | None = None
) -> SeparableEnsemble:
    """Random ensemble with `terms` product terms and Dirichlet weights.

    Single-mode factors live on occupations 0..max_n (default n_max // 2) so
    that every product fits inside the space without truncation.
    """
    if terms < 1:
        raise UsageError("terms must be >= 1")
    mode = SSRMode.parse(ssr_mode)
    max_n = space.n_max // 2 if max_n is None else max_n
    if max_n > space.n_max:
        raise UsageError(f"max_n={max_n} exceeds n_max={space.n_max}")
    rng = _rng(rng_seed)
    weights = rng.dirichlet(np.ones(terms))
    draw = random_local_ssr_density if mode is SSRMode.LOCAL else random_unrestricted_density
    factors = [(draw(max_n, rng), draw(max_n, rng)) for _ in range(terms)]
    weights = weights / weights.sum()
    return SeparableEnsemble(
        tuple((w, ra, rb) for w, (ra, rb) in zip(weights, factors)), mode
    )


def mixture(states: Sequence[State], weights: Sequence[float]) -> DensityOperator:
    """Convex combination of states on a common space."""
    if len(states) != len(weights) or not states:
        raise UsageError("need matching non-empty states and weights")
    space = states[0].space
    total = np.zeros((space.dim, space.dim), dtype=complex)
    for s, w in zip(states, weights):
        if s.space != space:
            raise UsageError("all states in a mixture must share a space")
        total += w * as_density(s).matrix
    return DensityOperator(space, total)
