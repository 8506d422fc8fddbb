"""Sampling-based estimation of the scalar bound functions.

The acuteness constant and step-size bound are defined as an inf/sup over
all ball points and unit directions; exact global optimization is out of
reach for a general nonlinear Jacobian, so these routines evaluate a
deterministic seeded sample (axes and diagonal directions are always
included so the classical extremizers of diagonal operators are hit
exactly) with optional local polishing.  The results are therefore
one-sided estimates: nu_tilde is an upper estimate of the true infimum
and lambda_tilde / the Lipschitz constant are lower estimates of the true
suprema.  Reports must label them as such; the relaxation verifier is the
backstop that catches an understated bound at run time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, AssumptionError
from .majorant import BoundData, LipschitzModulus
from .methods import MethodSpec
from .spaces import EUCLIDEAN, SpaceGeometry, norm, norm_rows, semiscalar_rows


@dataclass(frozen=True)
class SamplePlan:
    """Seeded sampling budget: ball points, directions per point, polishing."""

    seed: int = 0
    n_points: int = 32
    n_dirs: int = 64
    refine: bool = True

    def __post_init__(self):
        if self.n_points < 1 or self.n_dirs < 1:
            raise ArgumentError("n_points and n_dirs must be >= 1")


def _ball_points(center: np.ndarray, r: float, n: int, rng, space) -> np.ndarray:
    pts = [center.copy()]
    dim = len(center)
    if r > 0.0:
        eye = np.eye(dim)
        for i in range(dim):
            pts.append(center + r * eye[i])
            pts.append(center - r * eye[i])
        G = rng.standard_normal((n, dim))
        lens = norm_rows(space, G)
        keep = lens > 0
        G = G[keep] / lens[keep, None]
        rho = r * rng.random(len(G)) ** (1.0 / dim)
        pts.extend(center + rho[:, None] * G)
    return np.asarray(pts)


def _direction_set(dim: int, n: int, rng, space) -> np.ndarray:
    dirs = [np.eye(dim)[i] for i in range(dim)]
    if 2 <= dim <= 12:
        eye = np.eye(dim)
        for i in range(dim):
            for j in range(i + 1, dim):
                dirs.append(eye[i] + eye[j])
                dirs.append(eye[i] - eye[j])
    if dim == 2:
        ang = np.linspace(0.0, np.pi, max(8, n), endpoint=False)
        dirs.extend(np.stack([np.cos(ang), np.sin(ang)], axis=1))
    else:
        G = rng.standard_normal((n, dim))
        dirs.extend(G[np.linalg.norm(G, axis=1) > 0])
    H = np.asarray(dirs)
    return H / norm_rows(space, H)[:, None]


def _operator(problem, method: MethodSpec, x: np.ndarray) -> np.ndarray:
    J = np.asarray(problem.jacobian(x), dtype=float)
    return J @ J.T if method.uses_adjoint else J


def _acute_ratios(space, H: np.ndarray, B: np.ndarray) -> np.ndarray:
    W = H @ B.T
    nh = norm_rows(space, H)
    nw = norm_rows(space, W)
    num = semiscalar_rows(space, H, W)
    den = nh * nw
    # a vanishing image direction means the acuteness property fails outright
    return np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)


def _project_ball(space, center, r, x):
    d = x - center
    nd = norm(space, d)
    if nd > r:
        return center + d * (r / nd) if r > 0 else center.copy()
    return x


def _polish(objective, space, center, r, x, h, minimize: bool, iters: int = 40):
    """Projected coordinate descent over (ball point, unit direction)."""
    best = objective(x, h)
    step = 0.25
    for _ in range(iters):
        improved = False
        for j in range(len(h)):
            for s in (step, -step):
                hc = h.copy()
                hc[j] += s
                nh = norm(space, hc)
                if nh == 0.0:
                    continue
                hc /= nh
                v = objective(x, hc)
                if (v < best) if minimize else (v > best):
                    best, h, improved = v, hc, True
        if r > 0.0:
            for j in range(len(x)):
                for s in (step * r, -step * r):
                    xc = x.copy()
                    xc[j] += s
                    xc = _project_ball(space, center, r, xc)
                    v = objective(xc, h)
                    if (v < best) if minimize else (v > best):
                        best, x, improved = v, xc, True
        if not improved:
            step *= 0.5
            if step < 1e-7:
                break
    return best


def estimate_nu_tilde(problem, method: MethodSpec, space: SpaceGeometry,
                      r: float, plan: SamplePlan) -> float:
    """Upper estimate of the worst acuteness ratio over the ball of radius r.

    A value <= 0 means a sampled direction already refutes the positive
    pairing assumption (or the operator annihilated a direction).
    """
    if r > problem.R * (1.0 + 1e-9):
        raise ArgumentError(f"r={r} exceeds problem radius R={problem.R}")
    method.check_space(space)
    rng = np.random.default_rng(plan.seed)
    center = np.asarray(problem.x0, dtype=float)
    pts = _ball_points(center, r, plan.n_points, rng, space)
    H0 = _direction_set(len(center), plan.n_dirs, rng, space)

    best = math.inf
    best_xh = (pts[0], H0[0])
    for x in pts:
        B = _operator(problem, method, x)
        H = H0
        fx = np.asarray(problem.f(x), dtype=float)
        # the trajectory direction is always sampled so that the residual
        #  variant can never fall below this estimate on the same plan
        if np.all(np.isfinite(fx)) and norm(space, fx) > 0.0:
            H = np.vstack([H0, fx])
        ratios = _acute_ratios(space, H, B)
        i = int(np.argmin(ratios))
        if ratios[i] < best:
            best = float(ratios[i])
            best_xh = (x.copy(), (H[i] / norm(space, H[i])).copy())
    if plan.refine and best > 0.0:
        def obj(x, h):
            return float(_acute_ratios(space, h[None, :],
                                       _operator(problem, method, x))[0])
        best = _polish(obj, space, center, r, *best_xh, minimize=True)
    return best


def estimate_lambda_tilde(problem, method: MethodSpec, space: SpaceGeometry,
                          r: float, plan: SamplePlan) -> float:
    """Lower estimate of the step-size bound for the method's step family.

    Minimal-quadratic families take the largest sampled pairing-to-image
    ratio; relaxed families take the largest inverse Rayleigh-type ratio
    and report ``inf`` as soon as a sampled pairing is nonpositive (the
    supremum is then unbounded).
    """
    if r > problem.R * (1.0 + 1e-9):
        raise ArgumentError(f"r={r} exceeds problem radius R={problem.R}")
    method.check_space(space)
    rng = np.random.default_rng(plan.seed)
    center = np.asarray(problem.x0, dtype=float)
    pts = _ball_points(center, r, plan.n_points, rng, space)
    H = _direction_set(len(center), plan.n_dirs, rng, space)
    th = method.effective_vartheta
    minimal_quadratic = method.mu_family == "min"

    best = -math.inf
    best_xh = (pts[0], H[0])
    for x in pts:
        B = _operator(problem, method, x)
        W = H @ B.T
        num = semiscalar_rows(space, H, W)
        if minimal_quadratic:
            den = space.sigma * norm_rows(space, W) ** 2
            if np.any(den == 0.0):
                return math.inf
            ratios = num / den
        else:
            if np.any(num <= 0.0):
                return math.inf
            ratios = norm_rows(space, H) ** 2 / (th * num)
        i = int(np.argmax(ratios))
        if ratios[i] > best:
            best = float(ratios[i])
            best_xh = (x.copy(), H[i].copy())
    if plan.refine and np.isfinite(best):
        def obj(x, h):
            B = _operator(problem, method, x)
            w = B @ h
            num = semiscalar_rows(space, h[None, :], w[None, :])[0]
            if minimal_quadratic:
                den = space.sigma * norm(space, w) ** 2
                return num / den if den > 0 else math.inf
            return norm(space, h) ** 2 / (th * num) if num > 0 else math.inf
        best = _polish(obj, space, center, r, *best_xh, minimize=False)
    return best


def estimate_nu_trajectory(problem, method: MethodSpec, space: SpaceGeometry,
                           r: float, plan: SamplePlan) -> float:
    """Acuteness ratio along residual directions only (h = f(x) per sample).

    Always at least as large as ``estimate_nu_tilde`` on the same plan,
    since the latter samples a superset of directions at every point.
    """
    if r > problem.R * (1.0 + 1e-9):
        raise ArgumentError(f"r={r} exceeds problem radius R={problem.R}")
    method.check_space(space)
    rng = np.random.default_rng(plan.seed)
    center = np.asarray(problem.x0, dtype=float)
    pts = _ball_points(center, r, plan.n_points, rng, space)
    best = math.inf
    for x in pts:
        fx = np.asarray(problem.f(x), dtype=float)
        if not np.all(np.isfinite(fx)) or norm(space, fx) == 0.0:
            continue
        B = _operator(problem, method, x)
        ratio = float(_acute_ratios(space, fx[None, :], B)[0])
        best = min(best, ratio)
    if not np.isfinite(best):
        raise ArgumentError("all sampled points have f(x) = 0; estimate undefined")
    return best


def _matrix_norm(space: SpaceGeometry, M: np.ndarray) -> float:
    s = float(np.linalg.norm(M, 2))
    if space.kind == EUCLIDEAN or space.p == 2.0:
        return s
    # p -> p induced norm upper bound via the spectral norm; safe direction
    return s * M.shape[0] ** abs(0.5 - 1.0 / space.p)


def estimate_omega_lipschitz(problem, r: float, plan: SamplePlan,
                             space: SpaceGeometry | None = None) -> float:
    """Lower estimate of the Jacobian Lipschitz constant over the ball.

    Pairs along each coordinate axis are always included, which recovers
    the exact constant for Jacobians whose worst variation is axis-aligned.
    """
    if space is None:
        space = SpaceGeometry(EUCLIDEAN)
    if r > problem.R * (1.0 + 1e-9):
        raise ArgumentError(f"r={r} exceeds problem radius R={problem.R}")
    rng = np.random.default_rng(plan.seed)
    center = np.asarray(problem.x0, dtype=float)
    dim = len(center)
    pairs: list[tuple[np.ndarray, np.ndarray]] = []
    eye = np.eye(dim)
    for i in range(dim):
        for t in (1.0, 0.5, 0.25):
            pairs.append((center, center + t * r * eye[i]))
            pairs.append((center, center - t * r * eye[i]))
    pts = _ball_points(center, r, plan.n_points, rng, space)
    pairs.extend(zip(pts[:-1], pts[1:]))

    best = 0.0
    n_used = 0
    for x1, x2 in pairs:
        dist = norm(space, x1 - x2)
        if dist <= 1e-14 * (1.0 + norm(space, x1)):
            continue
        D = np.asarray(problem.jacobian(x1), float) - np.asarray(problem.jacobian(x2), float)
        best = max(best, _matrix_norm(space, D) / dist)
        n_used += 1
    if n_used < 1:
        raise ArgumentError("need at least two distinct sample points")
    return best


def estimate_theta(problem, method: MethodSpec, space: SpaceGeometry,
                   r: float, plan: SamplePlan) -> float:
    """Bound on ||T(x)||: exactly 1 for identity T, sampled max matrix norm otherwise."""
    if not method.uses_adjoint:
        return 1.0
    method.check_space(space)
    rng = np.random.default_rng(plan.seed)
    center = np.asarray(problem.x0, dtype=float)
    pts = _ball_points(center, r, plan.n_points, rng, space)
    return max(_matrix_norm(space, np.asarray(problem.jacobian(x), float).T)
               for x in pts)


def estimated_bound_data(problem, method: MethodSpec, space: SpaceGeometry,
                         plan: SamplePlan, r: float | None = None) -> BoundData:
    """Assemble constant-in-r BoundData from sampled estimates at radius r.

    Constants sampled at the full radius are valid (if conservative) bound
    functions for every smaller radius.  Raises AssumptionError when the
    sampled acuteness is nonpositive or the step-size bound is unbounded.
    """
    if r is None:
        r = problem.R
    nu = estimate_nu_tilde(problem, method, space, r, plan)
    if nu <= 0.0:
        raise AssumptionError(
            f"sampled acuteness estimate {nu:.6g} <= 0: positive-pairing "
            "assumption fails on the sampled ball")
    lam = estimate_lambda_tilde(problem, method, space, r, plan)
    if not np.isfinite(lam):
        raise AssumptionError("sampled step-size bound is unbounded")
    theta = estimate_theta(problem, method, space, r, plan)
    L = estimate_omega_lipschitz(problem, r, plan, space)
    return BoundData(
        lam=lam, theta=theta, omega=LipschitzModulus(L), R=problem.R,
        nu=min(nu, 1.0), step_family=method.mu_family,
        vartheta=method.effective_vartheta,
        note=("sampled estimates at r={:.6g}: nu is an upper estimate of the "
              "infimum; lam, theta and the Lipschitz constant are lower "
              "estimates of the suprema").format(r))
