"""The generic residual-driven iteration and its step-size families.

Every method here advances by ``x_{n+1} = x_n - Lambda(x_n, f(x_n)) * T(x_n) f(x_n)``
with T either the identity or the Jacobian transpose, and Lambda one of the
classical scalar step rules (minimal residuals, minimal co-errors, steepest
descent and its relaxed variant, minimal errors and its relaxed variant)
or their semiscalar analogues for l_p geometry.

``solve`` records a full per-step trace; ``verify_relaxation`` replays a
trace against a majorant certificate and reports every violated per-step
inequality, which is the runtime check that the supplied bound functions
were actually valid for the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import majorant
from .errors import ArgumentError, BreakdownError
from .spaces import EUCLIDEAN, SpaceGeometry, norm, semiscalar

MIN_RESIDUAL = "min_residual"
MIN_CO_ERROR = "min_co_error"
STEEPEST_DESCENT = "steepest_descent"
ALTMAN_STEEPEST_DESCENT = "altman_steepest_descent"
MIN_ERROR = "min_error"
ALTMAN_MIN_ERROR = "altman_min_error"
BANACH_MIN_RESIDUAL = "banach_min_residual"
BANACH_STEEPEST_DESCENT = "banach_steepest_descent"
BANACH_ALTMAN_STEEPEST_DESCENT = "banach_altman_steepest_descent"

HILBERT_FAMILIES = (
    MIN_RESIDUAL, MIN_CO_ERROR, STEEPEST_DESCENT,
    ALTMAN_STEEPEST_DESCENT, MIN_ERROR, ALTMAN_MIN_ERROR,
)
BANACH_FAMILIES = (
    BANACH_MIN_RESIDUAL, BANACH_STEEPEST_DESCENT, BANACH_ALTMAN_STEEPEST_DESCENT,
)
ALL_FAMILIES = HILBERT_FAMILIES + BANACH_FAMILIES

_ADJOINT_FAMILIES = frozenset({MIN_CO_ERROR, MIN_ERROR, ALTMAN_MIN_ERROR})
_MIN_QUADRATIC_FAMILIES = frozenset({MIN_RESIDUAL, MIN_CO_ERROR, BANACH_MIN_RESIDUAL})
_EPS_BREAKDOWN = 1e-14


@dataclass(frozen=True)
class MethodSpec:
    """A step family plus the relaxation parameter of the Altman variants."""

    family: str
    vartheta: float = 1.0

    def __post_init__(self):
        if self.family not in ALL_FAMILIES:
            raise ArgumentError(f"unknown method family {self.family!r}")
        if not (0.0 < self.vartheta <= 2.0):
            raise ArgumentError(f"vartheta must lie in (0, 2], got {self.vartheta}")

    @property
    def uses_adjoint(self) -> bool:
        return self.family in _ADJOINT_FAMILIES

    @property
    def mu_family(self) -> str:
        """Which contraction-factor formula applies: 'min' or 'altman'."""
        return "min" if self.family in _MIN_QUADRATIC_FAMILIES else "altman"

    @property
    def effective_vartheta(self) -> float:
        # steepest descent and minimal errors are the vartheta = 1 cases
        if self.family in (ALTMAN_STEEPEST_DESCENT, ALTMAN_MIN_ERROR,
                           BANACH_ALTMAN_STEEPEST_DESCENT):
            return self.vartheta
        return 1.0

    def check_space(self, space: SpaceGeometry) -> None:
        """Reject incompatible geometry as a typed configuration error.

        Adjoint-based families need the inner product to transpose against,
        and the inner-product step formulas presuppose the Euclidean norm,
        so only the semiscalar families may run in l_p with p > 2.
        """
        if space.kind == EUCLIDEAN or space.p == 2.0:
            return
        if self.uses_adjoint:
            raise ArgumentError(
                f"{self.family} uses the adjoint and is not defined outside "
                "Euclidean geometry")
        if self.family in HILBERT_FAMILIES:
            raise ArgumentError(
                f"{self.family} presupposes Euclidean geometry; use the "
                "banach_* analogue for sequence_p spaces")


def step_direction(method: MethodSpec, space: SpaceGeometry, problem,
                   x: np.ndarray, fx: np.ndarray) -> tuple[float, np.ndarray]:
    """Step scalar Lambda(x, fx) and direction T(x) fx for one update.

    Raises BreakdownError when the step denominator falls below 1e-14 of
    its natural scale, or when the computed step scalar is negative; both
    signal failure of the positive-pairing assumption rather than a bug.
    """
    method.check_space(space)
    J = np.asarray(problem.jacobian(x), dtype=float)
    fam = method.family
    th = method.effective_vartheta

    if fam in (MIN_RESIDUAL, STEEPEST_DESCENT, ALTMAN_STEEPEST_DESCENT):
        w = J @ fx
        pairing = float(fx @ w)
        if fam == MIN_RESIDUAL:
            num, den = pairing, float(w @ w)
        else:
            num, den = float(fx @ fx), th * pairing
        scale = float(np.linalg.norm(fx) * np.linalg.norm(w))
        direction = fx
    elif fam == MIN_CO_ERROR:
        u = J.T @ fx
        w = J @ u
        num, den = float(u @ u), float(w @ w)
        scale = float(np.linalg.norm(u) * np.linalg.norm(w))
        direction = u
    elif fam in (MIN_ERROR, ALTMAN_MIN_ERROR):
        u = J.T @ fx
        num, den = float(fx @ fx), th * float(u @ u)
        scale = float(np.linalg.norm(fx) * np.linalg.norm(u))
        direction = u
    elif fam == BANACH_MIN_RESIDUAL:
        w = J @ fx
        num = semiscalar(space, fx, w)
        den = space.sigma * norm(space, w) ** 2
        scale = norm(space, fx) * norm(space, w)
        direction = fx
    else:  # banach steepest descent, plain or relaxed
        w = J @ fx
        num = norm(space, fx) ** 2
        den = th * semiscalar(space, fx, w)
        scale = norm(space, fx) * norm(space, w)
        direction = fx

    if not (den > _EPS_BREAKDOWN * scale):
        raise BreakdownError(
            f"{fam}: step denominator {den:.3e} below breakdown threshold "
            f"(scale {scale:.3e}); positive-pairing assumption fails here")
    lam = num / den
    if lam < 0.0:
        raise BreakdownError(f"{fam}: negative step size {lam:.3e}")
    return lam, direction


@dataclass(frozen=True)
class StopRule:
    res_tol: float
    max_iter: int

    def __post_init__(self):
        if not (self.res_tol > 0.0):
            raise ArgumentError("res_tol must be positive")
        if self.max_iter < 1:
            raise ArgumentError("max_iter must be >= 1")


@dataclass
class TraceStep:
    n: int
    x: np.ndarray
    res_norm: float
    lambda_: float = math.nan
    step_norm: float = math.nan
    dist_from_center: float = 0.0
    bound_dn: float = math.nan
    apost_bound: float = math.nan


@dataclass
class IterationTrace:
    """Immutable-after-production record of one solver run."""

    steps: list[TraceStep]
    termination: str
    problem_name: str
    family: str
    space: SpaceGeometry
    x0: np.ndarray
    certified_r: float | None = None

    @property
    def sigma(self) -> float:
        return self.space.sigma

    @property
    def n_steps(self) -> int:
        return len(self.steps) - 1

    @property
    def res_norms(self) -> list[float]:
        return [s.res_norm for s in self.steps]

    @property
    def iterates(self) -> list[np.ndarray]:
        return [s.x for s in self.steps]

    @property
    def final(self) -> TraceStep:
        return self.steps[-1]


def solve(problem, method: MethodSpec, space: SpaceGeometry, stop: StopRule,
          certificate: majorant.MajorantCertificate | None = None,
          bounds: majorant.BoundData | None = None) -> IterationTrace:
    """Run the iteration until convergence, iteration cap, ball exit or breakdown.

    Stopping checks run in that fixed order each sweep so traces are
    reproducible.  With a certificate attached the ball radius is the
    certified r and every row also carries the running residual majorant
    d^(n)(r, a) and the a posteriori error bound at the observed residual.
    """
    if (certificate is None) != (bounds is None):
        raise ArgumentError("certificate and bounds must be supplied together")
    method.check_space(space)
    x = np.array(problem.x0, dtype=float)
    x0 = x.copy()
    radius = certificate.r if certificate is not None else problem.R
    sigma = space.sigma
    bound_dn = certificate.a if certificate is not None else math.nan

    steps: list[TraceStep] = []
    termination = "max_iter"
    for n in range(stop.max_iter + 1):
        fx = np.asarray(problem.f(x), dtype=float)
        if not np.all(np.isfinite(fx)):
            termination = "breakdown"
            break
        res = norm(space, fx)
        dist = norm(space, x - x0)
        apost = math.nan
        if certificate is not None:
            try:
                apost = majorant.aposteriori_bound(certificate, bounds, res)
            except Exception:
                apost = math.nan
        steps.append(TraceStep(n=n, x=x.copy(), res_norm=res,
                               dist_from_center=dist, bound_dn=bound_dn,
                               apost_bound=apost))
        if res <= stop.res_tol:
            termination = "converged"
            break
        if n == stop.max_iter:
            termination = "max_iter"
            break
        if dist > radius:
            termination = "left_ball"
            break
        try:
            lam, direction = step_direction(method, space, problem, x, fx)
        except BreakdownError:
            termination = "breakdown"
            break
        x_next = x - lam * direction
        if not np.all(np.isfinite(x_next)):
            termination = "breakdown"
            break
        steps[-1].lambda_ = lam
        steps[-1].step_norm = norm(space, x_next - x)
        x = x_next
        if certificate is not None:
            bound_dn = majorant.relax(bounds, sigma, certificate.r, bound_dn)

    if not steps:  # f(x0) was non-finite
        steps.append(TraceStep(n=0, x=x0.copy(), res_norm=math.nan))
    return IterationTrace(steps=steps, termination=termination,
                          problem_name=getattr(problem, "name", "?"),
                          family=method.family, space=space, x0=x0,
                          certified_r=None if certificate is None else certificate.r)


@dataclass(frozen=True)
class Violation:
    step: int
    kind: str  # "residual" | "step" | "ball"
    observed: float
    allowed: float


@dataclass
class VerificationReport:
    violations: list[Violation] = field(default_factory=list)
    checked_steps: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_relaxation(trace: IterationTrace, cert: majorant.MajorantCertificate,
                      bounds: majorant.BoundData, tol: float = 1e-9) -> VerificationReport:
    """Check every recorded step against the certificate's per-step bounds.

    Asserts, for each executed step, that the residual norm contracted at
    least as fast as the relaxation map predicts, that the step length was
    within lam*theta times the residual, and that every iterate stayed in
    the certified ball.  An empty violation list means the bound functions
    were valid along this trajectory.
    """
    if not cert.feasible:
        raise ArgumentError("verification requires a feasible certificate")
    if trace.sigma != cert.sigma:
        raise ArgumentError(
            f"trace sigma {trace.sigma} does not match certificate sigma {cert.sigma}")
    a0 = trace.steps[0].res_norm
    if abs(a0 - cert.a) > 1e-9 * max(1.0, abs(cert.a)):
        raise ArgumentError(
            f"trace initial residual {a0:.12g} does not match certificate a={cert.a:.12g}")
    r = cert.r
    sigma = cert.sigma
    lt = bounds.lam_at(r) * bounds.theta_at(r)
    report = VerificationReport()
    for i, step in enumerate(trace.steps):
        if step.dist_from_center > r * (1.0 + tol):
            report.violations.append(
                Violation(step.n, "ball", step.dist_from_center, r))
        if math.isnan(step.lambda_) or i + 1 >= len(trace.steps):
            continue
        res_next = trace.steps[i + 1].res_norm
        allowed = majorant.relax(bounds, sigma, r, step.res_norm)
        if res_next > allowed * (1.0 + tol):
            report.violations.append(
                Violation(step.n, "residual", res_next, allowed))
        step_allowed = lt * step.res_norm
        if step.step_norm > step_allowed * (1.0 + tol):
            report.violations.append(
                Violation(step.n, "step", step.step_norm, step_allowed))
        report.checked_steps += 1
    return report


def empirical_rates(trace: IterationTrace, x_star) -> tuple[float, float]:
    """Observed rate statistics against a reference solution.

    Returns the worst per-step error contraction ratio and the N-th root of
    the last error still clearly above rounding level.  Exact hits of the
    reference solution truncate the sequence; immediate exact convergence
    reports (0, 0).
    """
    xs = trace.iterates
    if len(xs) < 2:
        raise ArgumentError("need at least one executed step")
    space = trace.space
    ref = np.asarray(x_star, dtype=float)
    errs = [norm(space, x - ref) for x in xs]
    cut = next((i for i, e in enumerate(errs) if e == 0.0), len(errs) - 1)
    errs = errs[: cut + 1]
    ratios = [errs[i + 1] / errs[i] for i in range(len(errs) - 1) if errs[i] > 0.0]
    velo = max(ratios) if ratios else 0.0
    floor = 100.0 * np.finfo(float).eps * errs[0]
    last = max((i for i, e in enumerate(errs) if e > floor), default=0)
    lexp = errs[last] ** (1.0 / last) if last >= 1 else 0.0
    return velo, lexp
