"""Entanglement tests for two-mode boson states and the combined report.

Every test compares a value against a threshold.  A test fires (verdict
``entangled``) only when its strict inequality holds by more than the
tolerance, so boundary states such as coherent products, which saturate the
variance-sum bound, come out ``not_detected``.

Tests evaluated in a rotated spin frame (principal or optimised frames) refer
to the pair of modes that the rotation defines, not to the original A, B.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Union

import numpy as np
from scipy.linalg import eig

from .errors import ConfigurationError, UsageError
from .fock import Mode, State, StateVector, monomial_expectation, partial_trace
from .spin import (
    AXES,
    PrincipalFrame,
    SpinMoments,
    principal_frame,
    sector_spin_moments,
    spin_moments,
)
from .states import SSR_TOL, global_ssr_check, local_ssr_check

TOL = 1e-10
ORTHO_TOL = 1e-10


class Verdict(str, Enum):
    ENTANGLED = "entangled"
    NOT_DETECTED = "not_detected"
    UNDEFINED = "undefined"


@dataclass(frozen=True)
class WitnessResult:
    name: str
    value: float | None
    threshold: float
    verdict: Verdict
    margin: float | None
    note: str = ""

    @property
    def entangled(self) -> bool:
        return self.verdict is Verdict.ENTANGLED

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "threshold": self.threshold,
            "verdict": self.verdict.value,
            "margin": self.margin,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> WitnessResult:
        return cls(d["name"], d["value"], d["threshold"], Verdict(d["verdict"]), d["margin"], d.get("note", ""))


def _below(name: str, value: float, threshold: float, tol: float = TOL, note: str = "") -> WitnessResult:
    """Fires when value < threshold − tol."""
    margin = value - threshold
    verdict = Verdict.ENTANGLED if margin < -tol else Verdict.NOT_DETECTED
    return WitnessResult(name, float(value), float(threshold), verdict, float(margin), note)


def _above(name: str, value: float, threshold: float, tol: float = TOL, note: str = "") -> WitnessResult:
    """Fires when value > threshold + tol."""
    margin = value - threshold
    verdict = Verdict.ENTANGLED if margin > tol else Verdict.NOT_DETECTED
    return WitnessResult(name, float(value), float(threshold), verdict, float(margin), note)


Source = Union[SpinMoments, State]


def moments_of(source: Source) -> SpinMoments:
    """Spin moments of a state, using the O(N) path for pure fixed-N sector spaces."""
    if isinstance(source, SpinMoments):
        return source
    if isinstance(source, StateVector) and source.space.is_sector:
        return sector_spin_moments(source)
    return spin_moments(source)


def _axis(spec) -> tuple[str, np.ndarray]:
    if isinstance(spec, str):
        if spec not in AXES:
            raise UsageError(f"axis must be one of {AXES} or a unit vector, got {spec!r}")
        return spec, np.eye(3)[AXES.index(spec)]
    v = np.asarray(spec, dtype=float)
    if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise UsageError(f"axis must be a unit 3-vector, got {spec!r}")
    return "n" + np.array2string(v, precision=4, separator=","), v


def _squeezing(moments: SpinMoments, n: np.ndarray, m: np.ndarray, name: str, tol: float) -> WitnessResult:
    value = moments.variance_along(n)
    threshold = 0.5 * abs(moments.mean_along(m))
    return _below(name, value, threshold, tol)


def spin_squeezing_test(source: Source, pair=("x", "z"), tol: float = TOL) -> WitnessResult:
    """Var(n·S) < ½|<m·S>| for perpendicular n (squeezed) and m (mean).

    ``pair="principal"`` evaluates every ordered pair of principal components
    and returns the strongest (most negative margin) result.
    """
    moments = moments_of(source)
    if isinstance(pair, str) and pair == "principal":
        return principal_squeezing_test(moments, tol)
    (n_label, n), (m_label, m) = _axis(pair[0]), _axis(pair[1])
    if abs(n @ m) > ORTHO_TOL:
        raise UsageError(f"squeezing test needs perpendicular axes, got n·m = {n @ m:.3e}")
    return _squeezing(moments, n, m, f"spin_squeezing[{n_label}|{m_label}]", tol)


def lab_squeezing_tests(source: Source, tol: float = TOL) -> list[WitnessResult]:
    """All six ordered pairs of distinct lab axes."""
    moments = moments_of(source)
    return [spin_squeezing_test(moments, (i, k), tol) for i in AXES for k in AXES if i != k]


def principal_squeezing_test(source: Source, tol: float = TOL) -> WitnessResult:
    moments = moments_of(source)
    frame = principal_frame(moments)
    results = [
        _squeezing(moments, frame.rotation[i], frame.rotation[k], f"spin_squeezing[principal:p{i}|p{k}]", tol)
        for i in range(3)
        for k in range(3)
        if i != k
    ]
    return min(results, key=lambda r: r.margin)


def _hillery_pair(moments: SpinMoments, frame) -> tuple[str, np.ndarray, np.ndarray]:
    if isinstance(frame, str):
        if frame == "lab":
            return "lab", np.eye(3)[0], np.eye(3)[1]
        pf = principal_frame(moments)
        if frame == "principal":
            # drop the principal axis carrying the mean spin; with no mean, the noisiest axis
            means = np.abs(pf.principal_means)
            scale = max(1.0, moments.mean_number)
            drop = int(np.argmax(means)) if means.max() > TOL * scale else 2
            keep = [i for i in range(3) if i != drop]
            return "principal", pf.rotation[keep[0]], pf.rotation[keep[1]]
        if frame == "min_variance":
            return "min_variance", pf.rotation[0], pf.rotation[1]
        raise UsageError(f"unknown frame {frame!r}")
    (l1, u), (l2, v) = _axis(frame[0]), _axis(frame[1])
    if abs(u @ v) > ORTHO_TOL:
        raise UsageError("variance-sum test needs perpendicular axes")
    return f"{l1},{l2}", u, v


def hillery_variance_test(source: Source, frame="lab", tol: float = TOL) -> WitnessResult:
    """Var(S_u) + Var(S_v) < ½<N> for a perpendicular pair (lab x, y by default)."""
    moments = moments_of(source)
    label, u, v = _hillery_pair(moments, frame)
    value = moments.variance_along(u) + moments.variance_along(v)
    return _below(f"hillery_variance[{label}]", value, 0.5 * moments.mean_number, tol)


def variance_sum_bound(source: Source) -> dict:
    """Informational: Var(S_x) + Var(S_y) versus |<S_z>|.  Never a verdict."""
    moments = moments_of(source)
    value = moments.covariance[0, 0] + moments.covariance[1, 1]
    bound = abs(moments.means[2])
    return {"name": "variance_sum_vs_abs_Sz", "value": value, "bound": bound, "margin": value - bound}


def correlation_moment(state: State, m: int, n: int) -> complex:
    """<a^m (b†)^n>."""
    return monomial_expectation(state, a=m, b_dag=n)


def _check_powers(state: State, m: int, n: int) -> None:
    if m < 1 or n < 1:
        raise UsageError("correlation tests need m, n >= 1")
    if m + n > state.space.n_max:
        raise ConfigurationError(f"powers m+n={m + n} exceed n_max={state.space.n_max}")


def hillery_correlation_test(state: State, m: int = 1, n: int = 1, tol: float = TOL) -> WitnessResult:
    """|<a^m (b†)^n>|² > <(a†)^m a^m (b†)^n b^n>."""
    _check_powers(state, m, n)
    value = abs(correlation_moment(state, m, n)) ** 2
    threshold = monomial_expectation(state, a_dag=m, a=m, b_dag=n, b=n).real
    return _above(f"hillery_correlation[m={m},n={n}]", value, threshold, tol)


def ssr_correlation_test(state: State, m: int = 1, n: int = 1, threshold: float = SSR_TOL) -> WitnessResult:
    """|<a^m (b†)^n>|² > 0, with the tolerance as threshold.

    Moments are exact for any powers, so unlike the Hillery test there is no
    m + n <= n_max requirement; out-of-space powers simply give zero.
    """
    if m < 1 or n < 1:
        raise UsageError("correlation tests need m, n >= 1")
    value = abs(correlation_moment(state, m, n)) ** 2
    return _above(f"ssr_correlation[m={m},n={n}]", value, threshold, tol=0.0)


def optimal_xi2_frame(moments: SpinMoments) -> np.ndarray | None:
    """Rotation whose z row minimises N Var(S_z')/(<S_x'>² + <S_y'>²).

    The ratio of the quadratic forms zᵀCz and zᵀ(|m|² − m mᵀ)z is minimised by
    the smallest finite generalised eigenvalue.  Returns None without a mean spin.
    """
    m = moments.means
    m2 = float(m @ m)
    if m2 < TOL * max(1.0, moments.mean_number ** 2):
        return None
    denom = m2 * np.eye(3) - np.outer(m, m)
    vals, vecs = eig(moments.covariance, denom)
    finite = [i for i in range(3) if np.isfinite(vals[i]) and abs(vals[i].imag) < 1e-9 and vals[i].real > -1e-12]
    if not finite:
        return None
    best = min(finite, key=lambda i: vals[i].real)
    z = np.real(vecs[:, best])
    z /= np.linalg.norm(z)
    x = m - (m @ z) * z
    x /= np.linalg.norm(x)
    return np.array([x, np.cross(z, x), z])


def sorensen_xi2(source: Source, frame="lab", tol: float = TOL) -> WitnessResult:
    """ξ² = N Var(S_z)/(<S_x>² + <S_y>²) < 1, with N = <N>.

    ``frame`` is ``"lab"``, ``"optimal"`` or an explicit rotation matrix.
    The verdict is ``undefined`` when the transverse mean vanishes.
    """
    moments = moments_of(source)
    label = "lab"
    if isinstance(frame, str) and frame == "optimal":
        rot = optimal_xi2_frame(moments)
        label = "optimal"
        if rot is not None:
            moments = moments.rotated(rot)
    elif not isinstance(frame, str):
        moments = moments.rotated(frame)
        label = "rotated"
    elif frame != "lab":
        raise UsageError(f"unknown frame {frame!r}")
    n = moments.mean_number
    denom = moments.means[0] ** 2 + moments.means[1] ** 2
    name = f"sorensen_xi2[{label}]"
    if denom < 1e-10 * max(1.0, n * n):
        return WitnessResult(name, None, 1.0, Verdict.UNDEFINED, None, "transverse mean spin vanishes")
    value = n * moments.covariance[2, 2] / denom
    return _below(name, value, 1.0, tol)


ALL_TESTS = (
    "spin_squeezing_lab",
    "spin_squeezing_principal",
    "hillery_variance_lab",
    "hillery_variance_principal",
    "hillery_correlation",
    "ssr_correlation",
    "sorensen_xi2",
)


@dataclass
class ReportConfig:
    enabled: tuple[str, ...] = ALL_TESTS
    max_power: int = 2
    tolerance: float = TOL

    def __post_init__(self):
        self.enabled = tuple(self.enabled)
        unknown = set(self.enabled) - set(ALL_TESTS)
        if unknown:
            raise UsageError(f"unknown tests: {sorted(unknown)}")
        if self.max_power < 1:
            raise UsageError("max_power must be >= 1")

    def to_dict(self) -> dict:
        return {"enabled": list(self.enabled), "max_power": self.max_power, "tolerance": self.tolerance}


@dataclass
class WitnessReport:
    results: list[WitnessResult]
    moments: SpinMoments
    frame: PrincipalFrame
    ssr: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> WitnessResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def names(self) -> list[str]:
        return [r.name for r in self.results]

    def any_entangled(self) -> bool:
        return any(r.entangled for r in self.results)

    def to_dict(self) -> dict:
        return {
            "results": [r.to_dict() for r in self.results],
            "moments": self.moments.to_dict(),
            "principal_frame": self.frame.to_dict(),
            "ssr": self.ssr,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> WitnessReport:
        mom = d["moments"]
        pf = d["principal_frame"]
        return cls(
            [WitnessResult.from_dict(r) for r in d["results"]],
            SpinMoments(np.array(mom["means"]), np.array(mom["covariance"]), mom["mean_number"]),
            PrincipalFrame(
                np.array(pf["rotation"]), np.array(pf["principal_variances"]), np.array(pf["principal_means"])
            ),
            d.get("ssr", {}),
            d.get("diagnostics", {}),
        )


def ssr_flags(state: State) -> dict:
    g = global_ssr_check(state)
    flags = {"global": {"compliant": g.compliant, "residual": g.residual}}
    for mode in (Mode.A, Mode.B):
        loc = local_ssr_check(partial_trace(state, mode))
        flags[f"reduced_{mode.value}_local"] = {"compliant": loc.compliant, "residual": loc.residual}
    return flags


def _powers(state: State, max_power: int) -> Iterable[tuple[int, int]]:
    for m in range(1, max_power + 1):
        for n in range(1, max_power + 1):
            if m + n <= state.space.n_max:
                yield m, n


def full_report(state: State, config: ReportConfig | None = None) -> WitnessReport:
    config = config or ReportConfig()
    tol = config.tolerance
    moments = moments_of(state)
    frame = principal_frame(moments)
    on = set(config.enabled)
    results: list[WitnessResult] = []
    if "spin_squeezing_lab" in on:
        results += lab_squeezing_tests(moments, tol)
    if "spin_squeezing_principal" in on:
        results.append(principal_squeezing_test(moments, tol))
    if "hillery_variance_lab" in on:
        results.append(hillery_variance_test(moments, "lab", tol))
    if "hillery_variance_principal" in on:
        results.append(hillery_variance_test(moments, "principal", tol))
    if "hillery_correlation" in on:
        results += [hillery_correlation_test(state, m, n, tol) for m, n in _powers(state, config.max_power)]
    if "ssr_correlation" in on:
        results += [ssr_correlation_test(state, m, n) for m, n in _powers(state, config.max_power)]
    if "sorensen_xi2" in on:
        note = "two-mode input: xi^2 < 1 is a witness only for one-boson-per-site multi-site states"
        for frame_name in ("lab", "optimal"):
            r = sorensen_xi2(moments, frame_name, tol)
            results.append(replace(r, note="; ".join(x for x in (r.note, note) if x)))
    diagnostics = {
        "variance_sum_bound": variance_sum_bound(moments),
        "threshold_order": {
            "half_abs_Sz": 0.5 * abs(moments.means[2]),
            "half_mean_N": 0.5 * moments.mean_number,
        },
    }
    if not math.isclose(0.0, getattr(state, "truncation_weight", 0.0)):
        diagnostics["truncation_weight"] = state.truncation_weight
    return WitnessReport(results, moments, frame, ssr_flags(state), diagnostics)
