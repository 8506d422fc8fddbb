import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

import gradcert as gc
from gradcert.errors import ArgumentError, BreakdownError

EUC = gc.euclidean()
STOP = gc.StopRule(res_tol=1e-10, max_iter=400)


def antieigenvalue(m, M):
    return 2.0 * math.sqrt(m * M) / (m + M)


def certified_run(problem, family, vartheta=1.0, stop=STOP, sigma=1.0):
    method = gc.MethodSpec(family, vartheta)
    bounds = problem.certified_bounds.bound_data(method, sigma)
    a = gc.norm(EUC, problem.f(problem.x0))
    cert = gc.certify(bounds, sigma, a)
    trace = gc.solve(problem, method, EUC, stop,
                     certificate=cert if cert.feasible else None,
                     bounds=bounds if cert.feasible else None)
    return trace, cert, bounds


# --- step directions -----------------------------------------------------------

def test_step_direction_min_residual_hand_value():
    p = gc.linear_spd(1, 4, 2)
    x = np.array([1.0, 1.0])
    lam, direction = gc.step_direction(gc.MethodSpec(gc.MIN_RESIDUAL), EUC, p, x, p.f(x))
    assert lam == pytest.approx(65.0 / 257.0, rel=1e-15)
    np.testing.assert_allclose(direction, [1.0, 4.0])


def test_step_direction_steepest_descent_hand_value():
    p = gc.linear_spd(1, 4, 2)
    x = np.array([1.0, 1.0])
    lam, _ = gc.step_direction(gc.MethodSpec(gc.STEEPEST_DESCENT), EUC, p, x, p.f(x))
    assert lam == pytest.approx(17.0 / 65.0, rel=1e-15)


def test_step_direction_identity_jacobian_gives_unit_step():
    p = gc.identity(4)
    x = np.array([0.3, -1.0, 2.0, 0.1])
    fx = p.f(x)
    for fam in gc.HILBERT_FAMILIES:
        lam, direction = gc.step_direction(gc.MethodSpec(fam, 1.0), EUC, p, x, fx)
        assert lam == pytest.approx(1.0, rel=1e-14)
        np.testing.assert_allclose(direction, fx, rtol=1e-14)


def test_min_residual_step_minimizes_residual_of_linearization():
    rng = np.random.default_rng(5)
    for _ in range(20):
        dim = rng.integers(2, 5)
        A = rng.standard_normal((dim, dim))
        A = A @ A.T + dim * np.eye(dim)  # SPD, comfortably positive
        p = gc.Problem(name="t", dim=int(dim), f=lambda x, A=A: A @ x,
                       jacobian=lambda x, A=A: A.copy(),
                       x0=np.ones(dim), R=100.0)
        x = rng.standard_normal(dim)
        fx = p.f(x)
        lam, _ = gc.step_direction(gc.MethodSpec(gc.MIN_RESIDUAL), EUC, p, x, fx)
        w = A @ fx
        res = minimize_scalar(lambda t: float(np.linalg.norm(fx - t * w)),
                              bounds=(-1.0, 2.0), method="bounded",
                              options={"xatol": 1e-13})
        assert lam == pytest.approx(res.x, abs=1e-8)
        # the step value is optimal within tolerance of the scan
        assert float(np.linalg.norm(fx - lam * w)) <= res.fun + 1e-10


def test_step_direction_breakdown_on_indefinite():
    p = gc.indefinite2d()
    x = np.array([1.0, 1.0])  # (fx, A fx) = 0 exactly
    with pytest.raises(BreakdownError):
        gc.step_direction(gc.MethodSpec(gc.STEEPEST_DESCENT), EUC, p, x, p.f(x))


def test_step_direction_negative_step_is_breakdown():
    p = gc.indefinite2d()
    x = np.array([0.5, 1.0])  # pairing 0.25 - 1 < 0
    with pytest.raises(BreakdownError):
        gc.step_direction(gc.MethodSpec(gc.MIN_RESIDUAL), EUC, p, x, p.f(x))


def test_method_spec_validation():
    with pytest.raises(ArgumentError):
        gc.MethodSpec("nonsense")
    with pytest.raises(ArgumentError):
        gc.MethodSpec(gc.ALTMAN_STEEPEST_DESCENT, vartheta=2.5)
    sp4 = gc.sequence_p(4)
    for fam in (gc.MIN_ERROR, gc.MIN_CO_ERROR, gc.ALTMAN_MIN_ERROR):
        with pytest.raises(ArgumentError):
            gc.MethodSpec(fam).check_space(sp4)
    with pytest.raises(ArgumentError):
        gc.MethodSpec(gc.MIN_RESIDUAL).check_space(sp4)
    gc.MethodSpec(gc.BANACH_MIN_RESIDUAL).check_space(sp4)
    gc.MethodSpec(gc.MIN_ERROR).check_space(gc.sequence_p(2))  # p=2 degenerates


# --- solve -----------------------------------------------------------------------

def test_identity_solved_in_one_step_every_family():
    p = gc.identity(3)
    for fam in gc.HILBERT_FAMILIES:
        trace = gc.solve(p, gc.MethodSpec(fam, 1.0), EUC, gc.StopRule(1e-12, 50))
        assert trace.termination == "converged"
        assert trace.n_steps == 1
        assert trace.final.res_norm <= 1e-13 * np.linalg.norm(p.known_solution)


@settings(max_examples=60, deadline=None)
@given(dim=st.integers(1, 8), seed=st.integers(0, 10**6))
def test_one_step_exactness_random_targets(dim, seed):
    rng = np.random.default_rng(seed)
    b = rng.uniform(0.1, 2.0, dim) * rng.choice([-1.0, 1.0], dim)
    p = gc.identity(dim, b=b)
    trace = gc.solve(p, gc.MethodSpec(gc.MIN_RESIDUAL), EUC, gc.StopRule(1e-12, 10))
    assert trace.n_steps == 1
    assert trace.final.res_norm <= 1e-13 * np.linalg.norm(b)


def test_contraction_ratio_bounds_diag14():
    p = gc.linear_spd(1, 4, 2)
    nu = antieigenvalue(1, 4)
    for fam, bound in ((gc.MIN_RESIDUAL, math.sqrt(1 - nu**2)),
                       (gc.STEEPEST_DESCENT, math.sqrt(1 / nu**2 - 1))):
        trace = gc.solve(p, gc.MethodSpec(fam), EUC, STOP)
        assert trace.termination == "converged"
        rs = trace.res_norms
        ratios = [rs[i + 1] / rs[i] for i in range(len(rs) - 1)]
        assert max(ratios) <= bound + 1e-9


def test_banach_p2_trace_matches_hilbert():
    p = gc.linear_spd(1, 4, 2)
    tr_h = gc.solve(p, gc.MethodSpec(gc.MIN_RESIDUAL), EUC, STOP)
    tr_b = gc.solve(p, gc.MethodSpec(gc.BANACH_MIN_RESIDUAL), gc.sequence_p(2), STOP)
    assert tr_h.n_steps == tr_b.n_steps
    for a, b in zip(tr_h.iterates, tr_b.iterates):
        np.testing.assert_allclose(a, b, atol=1e-12)
    for ra, rb in zip(tr_h.res_norms, tr_b.res_norms):
        assert ra == pytest.approx(rb, abs=1e-12)


def test_solve_breakdown_termination():
    trace = gc.solve(gc.indefinite2d(), gc.MethodSpec(gc.STEEPEST_DESCENT), EUC, STOP)
    assert trace.termination == "breakdown"


def test_solve_max_iter_termination():
    p = gc.linear_spd(1, 4, 2)
    trace = gc.solve(p, gc.MethodSpec(gc.MIN_RESIDUAL), EUC, gc.StopRule(1e-10, 2))
    assert trace.termination == "max_iter"
    assert trace.n_steps == 2


def test_solve_requires_cert_and_bounds_together():
    p = gc.linear_spd(1, 4, 2)
    method = gc.MethodSpec(gc.MIN_RESIDUAL)
    bounds = p.certified_bounds.bound_data(method, 1.0)
    cert = gc.certify(bounds, 1.0, gc.norm(EUC, p.f(p.x0)))
    with pytest.raises(ArgumentError):
        gc.solve(p, method, EUC, STOP, certificate=cert)


def test_certified_trace_columns():
    p = gc.linear_spd(1, 4, 2)
    trace, cert, bounds = certified_run(p, gc.MIN_RESIDUAL)
    assert cert.feasible and trace.termination == "converged"
    assert trace.certified_r == cert.r
    # residual majorant column dominates the observed residuals
    for s in trace.steps:
        assert s.res_norm <= s.bound_dn * (1.0 + 1e-9)
        assert s.dist_from_center <= cert.r * (1.0 + 1e-9)
    # residuals are nonincreasing under a feasible certificate
    rs = trace.res_norms
    assert all(b <= a * (1 + 1e-12) for a, b in zip(rs, rs[1:]))
    # error is dominated by the a posteriori column (Newton reference)
    x_star = gc.newton_solve(p, res_tol=1e-13)
    for s in trace.steps:
        assert np.linalg.norm(s.x - x_star) <= s.apost_bound + 1e-8


# --- relaxation verifier ----------------------------------------------------------

def test_verify_relaxation_zero_violations_linear():
    p = gc.linear_spd(1, 4, 2)
    for fam in (gc.MIN_RESIDUAL, gc.STEEPEST_DESCENT, gc.MIN_CO_ERROR):
        trace, cert, bounds = certified_run(p, fam)
        assert cert.feasible, fam
        report = gc.verify_relaxation(trace, cert, bounds, tol=1e-9)
        assert report.ok
        assert report.checked_steps == trace.n_steps


def test_verify_relaxation_single_step_identity():
    trace, cert, bounds = certified_run(gc.identity(3), gc.STEEPEST_DESCENT)
    report = gc.verify_relaxation(trace, cert, bounds)
    assert report.ok
    assert trace.final.res_norm <= 1e-13


def test_verify_relaxation_flags_understated_mu():
    # start on the worst two-cycle of diag(1, 4): residual ratio is exactly
    # 3/5 every step, so a claimed contraction factor 0.3 must be violated
    p = gc.linear_spd(1, 4, 2, x0=[1.6, 0.2])
    bad = gc.BoundData(lam=1.0, theta=1.0, omega=gc.LipschitzModulus(0.0),
                       R=p.R, mu=0.3)
    a = gc.norm(EUC, p.f(p.x0))
    cert = gc.certify(bad, 1.0, a)
    assert cert.feasible  # feasible w.r.t. the (wrong) bounds
    trace = gc.solve(p, gc.MethodSpec(gc.MIN_RESIDUAL), EUC, STOP, cert, bad)
    report = gc.verify_relaxation(trace, cert, bad, tol=1e-9)
    assert not report.ok
    assert any(v.kind == "residual" for v in report.violations)


def test_verify_relaxation_metadata_mismatch():
    p = gc.linear_spd(1, 4, 2)
    trace, cert, bounds = certified_run(p, gc.MIN_RESIDUAL)
    other = gc.MajorantCertificate(
        r=cert.r, a=cert.a * 2, sigma=cert.sigma, phi_star=None,
        w_of_a=cert.w_of_a, condition_value=cert.condition_value,
        feasible=True, velo_bound=cert.velo_bound, linear_rate=cert.linear_rate)
    with pytest.raises(ArgumentError):
        gc.verify_relaxation(trace, other, bounds)


def test_verify_relaxation_requires_feasible():
    p = gc.quad2d()
    method = gc.MethodSpec(gc.MIN_RESIDUAL)
    bounds = p.certified_bounds.bound_data(method, 1.0)
    cert = gc.certify(bounds, 1.0, gc.norm(EUC, p.f(p.x0)))
    trace = gc.solve(p, method, EUC, STOP)
    if not cert.feasible:
        with pytest.raises(ArgumentError):
            gc.verify_relaxation(trace, cert, bounds)


# --- empirical rates ----------------------------------------------------------------

def test_empirical_rates_one_step_exact():
    p = gc.identity(3)
    trace = gc.solve(p, gc.MethodSpec(gc.MIN_RESIDUAL), EUC, gc.StopRule(1e-12, 10))
    velo, lexp = gc.empirical_rates(trace, p.known_solution)
    assert velo == 0.0
    assert lexp == 0.0


def test_empirical_rates_bounded_by_theory_diag14():
    p = gc.linear_spd(1, 4, 2)
    nu = antieigenvalue(1, 4)
    tr_sd = gc.solve(p, gc.MethodSpec(gc.STEEPEST_DESCENT), EUC, STOP)
    velo, _ = gc.empirical_rates(tr_sd, p.known_solution)
    assert velo <= math.sqrt(1 / nu**2 - 1) + 1e-6
    tr_mr = gc.solve(p, gc.MethodSpec(gc.MIN_RESIDUAL), EUC, STOP)
    _, lexp = gc.empirical_rates(tr_mr, p.known_solution)
    assert lexp <= math.sqrt(1 - nu**2) + 1e-6


def test_empirical_rates_needs_steps():
    p = gc.linear_spd(1, 4, 2)
    trace = gc.IterationTrace(steps=[gc.TraceStep(0, p.x0, 1.0)], termination="max_iter",
                              problem_name="t", family=gc.MIN_RESIDUAL,
                              space=EUC, x0=p.x0)
    with pytest.raises(ArgumentError):
        gc.empirical_rates(trace, p.known_solution)
