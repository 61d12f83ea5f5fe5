"""Acceptance suite.  Each test carries a ``criterion`` mark; the conftest
prints one PASS/FAIL line per criterion at the end of the run."""
import math
import time

import numpy as np
import pytest

from bosewit.cli import separable_campaign, sorensen_campaign
from bosewit.fock import build_space, sector_space
from bosewit.multisite import css_multisite, one_axis_twist_multisite, xi2_multisite
from bosewit.spin import casimir, principal_frame, relative_phase_axes, schwinger_ops, sector_spin_moments, spin_moments
from bosewit.states import (
    assemble_separable,
    coherent_product,
    css_state,
    fock_state,
    mixture,
    noon_state,
    one_axis_twist,
    random_separable,
    relative_phase_state,
    required_n_max,
    ssr_dephase_global,
    ssr_dephase_local,
)
from bosewit.witnesses import (
    Verdict,
    full_report,
    hillery_variance_test,
    lab_squeezing_tests,
    principal_squeezing_test,
    sorensen_xi2,
    ssr_correlation_test,
)

criterion = pytest.mark.criterion
QUIET = {Verdict.NOT_DETECTED, Verdict.UNDEFINED}


@criterion("AC1", "relative phase moments: exact Var(J_x), dense vs sector paths")
def test_ac1_relative_phase_exact_moments():
    start = time.perf_counter()
    for n in (2, 4, 20, 100):
        exact = (n / 2) * (n / 2 + 1) / 3
        psi = relative_phase_state(n)
        fast = sector_spin_moments(psi).rotated(relative_phase_axes(0.0))
        assert fast.variances[0] == pytest.approx(exact, rel=1e-8)
        if n <= 20:
            dense = spin_moments(psi.embed(build_space(n))).rotated(relative_phase_axes(0.0))
            assert dense.variances[0] == pytest.approx(exact, rel=1e-8)
            assert np.max(np.abs(dense.covariance - fast.covariance)) <= 1e-10
            assert np.max(np.abs(dense.means - fast.means)) <= 1e-10
    assert time.perf_counter() - start < 5


@criterion("AC2", "relative phase asymptotics at N = 1000 and N = 200")
def test_ac2_relative_phase_asymptotics():
    start = time.perf_counter()
    n = 1000
    m = sector_spin_moments(relative_phase_state(n))
    j = m.rotated(relative_phase_axes(0.0))
    assert abs(j.means[2] / n / (-math.pi / 8) - 1) < 0.01
    assert abs(j.variances[0] / n**2 / (1 / 12) - 1) < 0.02
    target = 1 / 6 - math.pi**2 / 64
    assert abs((m.variances[0] + m.variances[1]) / n**2 / target - 1) < 0.02
    small = principal_frame(sector_spin_moments(relative_phase_state(200))).principal_variances[0]
    assert abs(small / (0.25 + math.log(200) / 8) - 1) < 0.15
    assert time.perf_counter() - start < 30


@criterion("AC3", "relative phase N = 100: principal squeezing detects, Hillery variance fails")
def test_ac3_witness_contrast():
    psi = relative_phase_state(100)
    assert principal_squeezing_test(psi).verdict is Verdict.ENTANGLED
    for frame in ("lab", "principal"):
        assert hillery_variance_test(psi, frame).verdict is Verdict.NOT_DETECTED
    r = hillery_variance_test(psi, "principal")
    assert r.value / r.threshold >= 10


@criterion("AC4", "soundness: 1000 local-SSR separable states")
def test_ac4_local_ssr_soundness():
    start = time.perf_counter()
    summary = separable_campaign(n_max=6, terms=8, samples=1000, seed=20240601, ssr="local", max_power=2)
    checks = summary["checks"]
    assert checks["spin_squeezing_pairs"]["min_slack"] >= -1e-10
    assert checks["spin_squeezing_principal"]["min_slack"] >= -1e-10
    assert checks["ssr_correlation"]["min_slack"] >= -1e-10
    assert checks["transverse_mean"]["min_slack"] >= -1e-10
    assert summary["pass"] is True
    assert time.perf_counter() - start < 60


@criterion("AC5", "soundness: 1000 unrestricted separable states, coherent product saturation")
def test_ac5_unrestricted_soundness():
    start = time.perf_counter()
    summary = separable_campaign(n_max=6, terms=8, samples=1000, seed=20240602, ssr="none", max_power=2)
    assert summary["checks"]["hillery_variance"]["min_slack"] >= -1e-10
    assert summary["checks"]["hillery_correlation"]["min_slack"] >= -1e-10
    assert summary["pass"] is True
    rho = coherent_product(build_space(required_n_max(2.0)), 1.0, 1.0)
    r = hillery_variance_test(rho)
    assert abs(r.value - r.threshold) <= 1e-9
    assert r.verdict is Verdict.NOT_DETECTED
    assert time.perf_counter() - start < 60


@criterion("AC6", "NOON(6): no squeezing, zero low-order correlations, dephased mixture")
def test_ac6_noon():
    space = build_space(6)
    psi = noon_state(space, 6)
    for m in (1, 2):
        for n in (1, 2):
            r = ssr_correlation_test(psi, m, n)
            assert r.value == 0.0 and r.verdict is Verdict.NOT_DETECTED
    assert all(r.verdict is Verdict.NOT_DETECTED for r in lab_squeezing_tests(psi))
    assert principal_squeezing_test(psi).verdict is Verdict.NOT_DETECTED
    dephased = ssr_dephase_local(psi)
    explicit = mixture([fock_state(space, 6, 0), fock_state(space, 0, 6)], [0.5, 0.5])
    assert np.max(np.abs(dephased.matrix - explicit.matrix)) <= 1e-12
    report = full_report(dephased)
    assert {r.verdict for r in report.results} <= QUIET


@criterion("AC7", "multi-site xi^2: separable bound, CSS, twisted, undefined case")
def test_ac7_sorensen():
    summary = sorensen_campaign(8, 0.1, 500, seed=20240603)
    assert summary["separable"]["min_xi2_lab"] >= 1 - 1e-10
    assert summary["separable"]["min_xi2_optimal"] >= 1 - 1e-10
    assert summary["pass"] is True
    assert abs(xi2_multisite(css_multisite(8)).value - 1) <= 1e-10
    twisted = xi2_multisite(one_axis_twist_multisite(css_multisite(10), 0.1), "optimal")
    assert twisted.value < 1 and twisted.verdict is Verdict.ENTANGLED
    space = build_space(6)
    rho = assemble_separable(random_separable(space, 5, 7, "local"), space)
    assert sorensen_xi2(rho).verdict is Verdict.UNDEFINED


def _catalog():
    cat = {
        "fock": fock_state(build_space(6), 2, 3),
        "noon": noon_state(build_space(6), 5),
        "relative_phase": relative_phase_state(6, 2, build_space(6)),
        "css": css_state(6, 1.2, 0.4, build_space(6)),
        "twisted": one_axis_twist(css_state(6, math.pi / 2, 0.0, build_space(6)), 0.3),
        "coherent": coherent_product(build_space(required_n_max(1.2)), 0.8, 0.6j),
    }
    space = build_space(6)
    cat["separable_local"] = assemble_separable(random_separable(space, 4, 1, "local"), space)
    cat["separable_unrestricted"] = assemble_separable(random_separable(space, 4, 2, "none"), space)
    cat["dephased"] = ssr_dephase_local(cat["twisted"])
    return cat


@criterion("AC8", "structural invariants across the state catalog")
def test_ac8_structural_invariants():
    start = time.perf_counter()
    for n in range(1, 13):
        x, y, z = (op.matrix for op in schwinger_ops(sector_space(n)))
        assert np.max(np.abs(x @ y - y @ x - 1j * z)) <= 1e-10
        assert np.max(np.abs(y @ z - z @ y - 1j * x)) <= 1e-10
        assert np.max(np.abs(z @ x - x @ z - 1j * y)) <= 1e-10
        c = x @ x + y @ y + z @ z
        assert np.max(np.abs(c - n / 2 * (n / 2 + 1) * np.eye(n + 1))) <= 1e-10

    cat = _catalog()
    for name, state in cat.items():
        sector = state.sector() if hasattr(state, "sector") else None
        if sector is not None:
            assert casimir(state) == pytest.approx(sector / 2 * (sector / 2 + 1), abs=1e-10), name
        for dephase in (ssr_dephase_local, ssr_dephase_global):
            once = dephase(state)
            assert np.max(np.abs(dephase(once).matrix - once.matrix)) <= 1e-12, name
        m = spin_moments(state)
        pf = principal_frame(m)
        assert abs(np.sum(pf.principal_variances) - np.trace(m.covariance)) <= 1e-10, name

    rng = np.random.default_rng(8)
    names = sorted(k for k, v in cat.items() if v.space == build_space(6))
    for _ in range(30):
        i, k = rng.choice(len(names), 2, replace=False)
        w = rng.random()
        a, b = cat[names[i]], cat[names[k]]
        mix = mixture([a, b], [w, 1 - w])
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        lhs = spin_moments(mix).variance_along(axis)
        rhs = w * spin_moments(a).variance_along(axis) + (1 - w) * spin_moments(b).variance_along(axis)
        assert lhs >= rhs - 1e-10
    assert time.perf_counter() - start < 30
