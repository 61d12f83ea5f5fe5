"""k two-mode sites holding exactly one boson each.

Each site is a qubit with basis {|1,0>, |0,1>} = {|a>, |b>}, so the
one-boson-per-site sector of k sites is 2^k dimensional and the collective
Schwinger operators are sums of single-site spin-½ operators.  Site index 0
is the most significant bit of the basis index.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, UsageError
from .fock import check_density_matrix
from .spin import SpinMoments
from .witnesses import TOL, WitnessResult, sorensen_xi2

MAX_SITES = 12

# b†a on the site basis (|a>, |b>) moves |a> to |b>
_RAISE = np.array([[0, 0], [1, 0]], dtype=complex)
SITE_SX = (_RAISE + _RAISE.conj().T) / 2
SITE_SY = (_RAISE - _RAISE.conj().T) / 2j
SITE_SZ = np.diag([-0.5, 0.5]).astype(complex)
SITE_OPS = (SITE_SX, SITE_SY, SITE_SZ)


def _check_sites(k: int) -> None:
    if not 1 <= k <= MAX_SITES:
        raise ConfigurationError(f"number of sites must be in 1..{MAX_SITES}, got {k}")


@dataclass(frozen=True, eq=False)
class SiteState:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise UsageError(f"site state must be 2x2, got {m.shape}")
        check_density_matrix(m, "site state")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def pure(cls, amp_a: complex, amp_b: complex) -> SiteState:
        v = np.array([amp_a, amp_b], dtype=complex)
        v /= np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    def means(self) -> np.ndarray:
        return np.array([np.trace(self.matrix @ op).real for op in SITE_OPS])


class CollectiveSpin(NamedTuple):
    x: sp.csr_matrix
    y: sp.csr_matrix
    z: sp.csr_matrix


def _embed(op: np.ndarray, site: int, k: int) -> sp.csr_matrix:
    left = sp.identity(2**site, format="csr")
    right = sp.identity(2 ** (k - site - 1), format="csr")
    return sp.kron(sp.kron(left, sp.csr_matrix(op)), right, format="csr")


@lru_cache(maxsize=None)
def collective_spin_ops(k: int) -> CollectiveSpin:
    """S_γ = Σ_k s_γ^(k) as sparse 2^k × 2^k matrices."""
    _check_sites(k)
    return CollectiveSpin(*(sum(_embed(op, s, k) for s in range(k)).tocsr() for op in SITE_OPS))


class MultiSiteState:
    """A pure vector, a density matrix, or a separable mixture of site products.

    Separable mixtures keep their terms, so moments are computed from the
    single-site factors without building 2^k × 2^k matrices.
    """

    def __init__(self, k: int, *, vector=None, matrix=None, terms=None):
        _check_sites(k)
        self.k = k
        given = [x is not None for x in (vector, matrix, terms)]
        if sum(given) != 1:
            raise UsageError("give exactly one of vector, matrix, terms")
        self.vector = self.matrix = self.terms = None
        if vector is not None:
            v = np.asarray(vector, dtype=complex).reshape(-1)
            if v.shape != (2**k,):
                raise UsageError(f"vector must have length {2**k}")
            if abs(np.vdot(v, v).real - 1.0) > 1e-12:
                raise UsageError("vector must be normalised")
            self.vector = v
        elif matrix is not None:
            m = np.asarray(matrix, dtype=complex)
            if m.shape != (2**k, 2**k):
                raise UsageError(f"matrix must be {2**k} x {2**k}")
            check_density_matrix(m)
            self.matrix = m
        else:
            terms = [(float(w), tuple(sites)) for w, sites in terms]
            weights = np.array([w for w, _ in terms])
            if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
                raise UsageError("mixture weights must be non-negative and sum to 1")
            for _, sites in terms:
                if len(sites) != k:
                    raise UsageError(f"each product term needs {k} site states, got {len(sites)}")
            self.terms = terms

    @property
    def dim(self) -> int:
        return 2**self.k

    def to_density(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        if self.vector is not None:
            return np.outer(self.vector, self.vector.conj())
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for w, sites in self.terms:
            out += w * reduce(np.kron, [s.matrix for s in sites])
        return out

    def moments(self) -> SpinMoments:
        if self.terms is not None:
            return _product_mixture_moments(self.terms, self.k)
        ops = collective_spin_ops(self.k)
        if self.vector is not None:
            psi = self.vector
            images = [op @ psi for op in ops]
            means = np.array([np.vdot(psi, v).real for v in images])
            second = np.array([[np.vdot(u, v).real for v in images] for u in images])
        else:
            rho = self.matrix
            rho_s = [np.asarray(rho @ op) for op in ops]
            means = np.array([np.trace(m).real for m in rho_s])
            # Re Tr(rho S_i S_j) = Re Σ (S_j ∘ (rho S_i)ᵀ)
            second = np.array([[ops[j].multiply(rho_s[i].T).sum().real for j in range(3)] for i in range(3)])
        return SpinMoments(means, second - np.outer(means, means), float(self.k))


def _product_mixture_moments(terms, k: int) -> SpinMoments:
    """Moments of Σ_R P_R ⊗_k ρ_R^k from single-site expectations.

    For one product term <S_i S_j> = Σ_k <s_i s_j>_k + Σ_{k≠l} <s_i>_k <s_j>_l.
    """
    means = np.zeros(3)
    second = np.zeros((3, 3))
    for w, sites in terms:
        site_means = np.array([s.means() for s in sites])  # (k, 3)
        local = np.zeros((3, 3))
        for s in sites:
            for i in range(3):
                for j in range(3):
                    sym = SITE_OPS[i] @ SITE_OPS[j] + SITE_OPS[j] @ SITE_OPS[i]
                    local[i, j] += 0.5 * np.trace(s.matrix @ sym).real
        total = site_means.sum(axis=0)
        cross = np.outer(total, total) - site_means.T @ site_means
        means += w * total
        second += w * (local + cross)
    return SpinMoments(means, second - np.outer(means, means), float(k))


def product_state(sites: Sequence[SiteState]) -> MultiSiteState:
    return MultiSiteState(len(sites), terms=[(1.0, tuple(sites))])


def mix(terms: Sequence[tuple[float, Sequence[SiteState]]]) -> MultiSiteState:
    terms = list(terms)
    if not terms:
        raise UsageError("mixture needs at least one term")
    return MultiSiteState(len(terms[0][1]), terms=terms)


def product_vector(amps: Sequence[Sequence[complex]]) -> MultiSiteState:
    """Pure product of per-site amplitude pairs (amp_a, amp_b)."""
    vecs = [np.asarray(a, dtype=complex) / np.linalg.norm(a) for a in amps]
    return MultiSiteState(len(vecs), vector=reduce(np.kron, vecs))


def css_multisite(k: int, theta: float = np.pi / 2, phi: float = 0.0) -> MultiSiteState:
    """All sites in cos(θ/2)|a> + e^{iφ} sin(θ/2)|b>."""
    site = (np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2))
    return product_vector([site] * k)


def _pure_vector(state: MultiSiteState) -> np.ndarray:
    if state.vector is not None:
        return state.vector
    if state.terms is not None and len(state.terms) == 1:
        sites = state.terms[0][1]
        vecs = []
        for s in sites:
            w, v = np.linalg.eigh(s.matrix)
            if w[-1] < 1 - 1e-10:
                raise UsageError("one-axis twisting needs a pure input state")
            vecs.append(v[:, -1])
        return reduce(np.kron, vecs)
    raise UsageError("one-axis twisting needs a pure input state")


def one_axis_twist_multisite(state: MultiSiteState, chi_t: float) -> MultiSiteState:
    """exp(−i χt S_z²) applied to a pure state; S_z is diagonal in the site basis."""
    psi = _pure_vector(state)
    sz = collective_spin_ops(state.k).z.diagonal().real
    return MultiSiteState(state.k, vector=np.exp(-1j * chi_t * sz * sz) * psi)


def xi2_multisite(state: MultiSiteState, frame="lab", tol: float = TOL) -> WitnessResult:
    """Sørensen ξ² with N = k, in the lab frame or the optimised frame."""
    return sorensen_xi2(state.moments(), frame, tol)


def random_site_state(rng: np.random.Generator, pure: bool = False) -> SiteState:
    """Random site state: Haar pure, or ρ = G G†/Tr(G G†) with a complex Ginibre G."""
    if pure:
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        return SiteState.pure(*v)
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return SiteState(rho / np.trace(rho).real)


def _aligned_sites(k: int, rng: np.random.Generator, jitter: float) -> list[SiteState]:
    base = rng.normal(size=2) + 1j * rng.normal(size=2)
    base /= np.linalg.norm(base)
    return [SiteState.pure(*(base + jitter * (rng.normal(size=2) + 1j * rng.normal(size=2)))) for _ in range(k)]


TERM_KINDS = ("mixed", "pure", "aligned")


def random_separable_multisite(k: int, terms: int, rng_seed, jitter: float = 0.05) -> MultiSiteState:
    """Mixture of site products; each term's kind is drawn from ``TERM_KINDS``.

    ``aligned`` terms put every site near one common random pure state, so they
    sit at or just above ξ² = 1 and probe the bound hardest.
    """
    rng = np.random.default_rng(rng_seed)
    weights = rng.dirichlet(np.ones(terms))
    weights /= weights.sum()
    out = []
    for w in weights:
        kind = TERM_KINDS[int(rng.integers(len(TERM_KINDS)))]
        if kind == "aligned":
            sites = _aligned_sites(k, rng, jitter)
        else:
            sites = [random_site_state(rng, kind == "pure") for _ in range(k)]
        out.append((w, sites))
    return mix(out)
