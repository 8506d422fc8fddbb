"""Scalar majorant calculus for residual-contracting iterations.

Everything here is built from four scalar bound functions of the ball
radius r: a step-size bound ``lam(r)``, an operator-norm bound
``theta(r)``, a linear contraction factor ``mu(r)`` (or an acuteness
constant ``nu(r)`` from which mu is derived), and a modulus of continuity
``omega(r, t)`` for the Jacobian.  The relaxation map

    d_sigma(r, phi) = mu(r) * phi + sigma * Omega(r, lam(r)*theta(r)*phi),
    Omega(r, t) = integral of omega(r, .) over [0, t],

majorizes the one-step residual-norm transition.  Its iterates, its
smallest positive fixed point, and the series ``w = sum of the iterates``
turn per-step contraction into total-displacement and error bounds.  A
run from initial residual norm ``a`` is certified at radius r when
``lam(r) * theta(r) * w_sigma(r, a) <= r``.

``sigma`` is the quadratic-inequality constant of the ambient space
(1 in the Euclidean case, p - 1 for l_p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ArgumentError, AssumptionError, DivergenceError

_SERIES_RTOL = 1e-12
_SERIES_CAP = 1_000_000
_ROOT_ATOL = 1e-12


# ---------------------------------------------------------------------------
# moduli of continuity

class LipschitzModulus:
    """omega(r, t) = L(r) * t. ``L`` may be a constant or a function of r."""

    def __init__(self, L: float | Callable[[float], float]):
        self._L = L if callable(L) else (lambda r, _v=float(L): _v)

    def value(self, r: float, t):
        return self._L(r) * t

    def integral(self, r: float, t):
        return 0.5 * self._L(r) * t * t

    def is_zero(self, r: float) -> bool:
        return self._L(r) == 0.0


class HolderModulus:
    """omega(r, t) = L(r) * t**alpha with 0 < alpha <= 1."""

    def __init__(self, L: float | Callable[[float], float], alpha: float):
        if not (0.0 < alpha <= 1.0):
            raise ArgumentError("Holder exponent must lie in (0, 1]")
        self._L = L if callable(L) else (lambda r, _v=float(L): _v)
        self.alpha = float(alpha)

    def value(self, r: float, t):
        return self._L(r) * t ** self.alpha

    def integral(self, r: float, t):
        return self._L(r) * t ** (1.0 + self.alpha) / (1.0 + self.alpha)

    def is_zero(self, r: float) -> bool:
        return self._L(r) == 0.0


class TabulatedModulus:
    """omega given on a monotone grid in t; piecewise-linear in between.

    The grid must start at (0, 0) and be nondecreasing.  Beyond the last
    node the value is held constant, so the integral grows linearly there.
    Segment integrals are exact (trapezoid on a piecewise-linear function).
    """

    def __init__(self, ts, ws):
        ts = np.asarray(ts, dtype=float)
        ws = np.asarray(ws, dtype=float)
        if ts.ndim != 1 or ts.shape != ws.shape or len(ts) < 2:
            raise ArgumentError("tabulated modulus needs matching 1-d grids, len >= 2")
        if ts[0] != 0.0 or ws[0] != 0.0:
            raise ArgumentError("tabulated modulus must start at (0, 0)")
        if np.any(np.diff(ts) <= 0.0):
            raise ArgumentError("tabulated t-grid must be strictly increasing")
        if np.any(np.diff(ws) < 0.0) or not np.all(np.isfinite(ws)):
            raise ArgumentError("tabulated omega values must be finite and nondecreasing")
        self.ts = ts
        self.ws = ws
        self._cum = np.concatenate(
            [[0.0], np.cumsum(0.5 * (ws[1:] + ws[:-1]) * np.diff(ts))])

    def value(self, r: float, t):
        return np.interp(t, self.ts, self.ws)

    def integral(self, r: float, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.ts, t, side="right") - 1, 0, len(self.ts) - 1)
        t0 = self.ts[idx]
        w0 = self.ws[idx]
        inside = idx < len(self.ts) - 1
        slope = np.where(
            inside,
            (self.ws[np.minimum(idx + 1, len(self.ts) - 1)] - w0)
            / np.where(inside, self.ts[np.minimum(idx + 1, len(self.ts) - 1)] - t0, 1.0),
            0.0,
        )
        dt = t - t0
        out = self._cum[idx] + w0 * dt + 0.5 * slope * dt * dt
        return float(out) if out.ndim == 0 else out

    def is_zero(self, r: float) -> bool:
        return bool(np.all(self.ws == 0.0))


# ---------------------------------------------------------------------------
# contraction factors derived from the acuteness constant

def mu_min_family(nu: float, sigma: float) -> float:
    """Contraction factor of the quadratic-form-minimizing step.

    Equals sqrt(1 - nu**2 / sigma): the normalized minimum of
    ||h||^2 - 2 L [h, Bh] + sigma L^2 ||Bh||^2 over the step scalar L.
    """
    if not (0.0 < nu <= 1.0):
        raise ArgumentError(f"nu must lie in (0, 1], got {nu}")
    if sigma < 1.0:
        raise ArgumentError(f"sigma must be >= 1, got {sigma}")
    return math.sqrt(max(0.0, 1.0 - nu * nu / sigma))


def altman_validity_threshold(vartheta: float, sigma: float) -> float:
    """Smallest acuteness constant for which the relaxed step contracts."""
    return math.sqrt(sigma / (2.0 * vartheta))


def mu_altman_family(nu: float, vartheta: float, sigma: float) -> float:
    """Contraction factor of the relaxed (Altman-type) step with parameter vartheta.

    Equals sqrt(1 - 2/vartheta + sigma / (vartheta**2 * nu**2)); only valid
    (mu < 1) when nu exceeds ``altman_validity_threshold``.
    """
    if not (0.0 < nu <= 1.0):
        raise ArgumentError(f"nu must lie in (0, 1], got {nu}")
    if not (0.0 < vartheta <= 2.0):
        raise ArgumentError(f"vartheta must lie in (0, 2], got {vartheta}")
    if sigma < 1.0:
        raise ArgumentError(f"sigma must be >= 1, got {sigma}")
    thr = altman_validity_threshold(vartheta, sigma)
    if nu <= thr:
        raise AssumptionError(
            f"relaxed step not certifiable: nu={nu:.6g} <= validity threshold "
            f"sqrt(sigma/(2*vartheta))={thr:.6g} gives mu >= 1")
    radicand = 1.0 - 2.0 / vartheta + sigma / (vartheta * vartheta * nu * nu)
    if radicand < -1e-12:
        raise AssumptionError(f"negative radicand {radicand} in contraction formula")
    return math.sqrt(max(0.0, radicand))


# ---------------------------------------------------------------------------
# bound data

def _as_fn(v) -> Callable[[float], float]:
    return v if callable(v) else (lambda r, _v=float(v): _v)


@dataclass(frozen=True)
class BoundData:
    """Scalar bound functions feeding the majorant calculus.

    ``lam`` and ``theta`` bound the step scalar and ||T(x)|| over the ball
    of radius r.  The contraction factor is either given directly (``mu``)
    or derived from an acuteness bound (``nu``) through the step family tag
    ("min" or "altman") and the space constant sigma at evaluation time.
    All of ``lam``/``theta``/``mu``/``nu`` may be constants or functions
    of r; lam/theta/mu must be nondecreasing and nu nonincreasing.
    """

    lam: float | Callable[[float], float]
    theta: float | Callable[[float], float]
    omega: LipschitzModulus | HolderModulus | TabulatedModulus
    R: float
    mu: float | Callable[[float], float] | None = None
    nu: float | Callable[[float], float] | None = None
    step_family: str | None = None
    vartheta: float = 1.0
    note: str = ""

    def __post_init__(self):
        if not (self.R > 0.0 and np.isfinite(self.R)):
            raise ArgumentError("ball radius R must be positive and finite")
        if self.mu is None and self.nu is None:
            raise ArgumentError("BoundData needs mu or nu")
        if self.mu is None and self.step_family not in ("min", "altman"):
            raise ArgumentError("nu-based bounds need step_family 'min' or 'altman'")

    def lam_at(self, r: float) -> float:
        v = float(_as_fn(self.lam)(r))
        if v < 0 or not np.isfinite(v):
            raise ArgumentError(f"lam({r}) = {v} is not a finite nonnegative value")
        return v

    def theta_at(self, r: float) -> float:
        v = float(_as_fn(self.theta)(r))
        if v < 0 or not np.isfinite(v):
            raise ArgumentError(f"theta({r}) = {v} is not a finite nonnegative value")
        return v

    def nu_at(self, r: float) -> float:
        return float(_as_fn(self.nu)(r))

    def mu_at(self, r: float, sigma: float) -> float:
        """mu(r), derived from nu via the step family when not given directly."""
        if self.mu is not None:
            v = float(_as_fn(self.mu)(r))
            if v < 0 or not np.isfinite(v):
                raise ArgumentError(f"mu({r}) = {v} is not a finite nonnegative value")
            return v
        nu = self.nu_at(r)
        if self.step_family == "min":
            return mu_min_family(nu, sigma)
        return mu_altman_family(nu, self.vartheta, sigma)

    def validate(self, sigma: float = 1.0, n_grid: int = 33) -> None:
        """Grid-check the monotonicity assumptions; raises ArgumentError."""
        rs = np.linspace(0.0, self.R, n_grid)
        slack = 1e-12

        def _mono(name, vals, direction):
            vals = np.asarray(vals)
            scale = np.maximum(1.0, np.abs(vals[:-1]))
            d = np.diff(vals) * direction
            if np.any(d < -slack * scale):
                raise ArgumentError(f"{name} violates monotonicity on the r-grid")

        _mono("lam", [self.lam_at(r) for r in rs], +1)
        _mono("theta", [self.theta_at(r) for r in rs], +1)
        if self.mu is not None:
            _mono("mu", [self.mu_at(r, sigma) for r in rs], +1)
        else:
            _mono("nu", [self.nu_at(r) for r in rs], -1)
        ts = np.linspace(0.0, max(1.0, self.R), 9)
        for r in (0.0, 0.5 * self.R, self.R):
            w0 = float(np.asarray(self.omega.value(r, 0.0)))
            if abs(w0) > slack:
                raise ArgumentError("omega(r, 0) must be 0")
            _mono("omega(., t)", [float(np.asarray(self.omega.value(r, t))) for t in ts], +1)
        for t in ts[1:]:
            _mono("omega(r, .)", [float(np.asarray(self.omega.value(r, t))) for r in rs], +1)


# ---------------------------------------------------------------------------
# the relaxation map and its derived objects

def integrated_modulus(bounds: BoundData, r: float, t: float) -> float:
    """Omega(r, t): the integral of omega(r, .) from 0 to t."""
    if t < 0:
        raise ArgumentError("t must be nonnegative")
    _check_radius(bounds, r)
    return float(np.asarray(bounds.omega.integral(r, t)))


def _check_radius(bounds: BoundData, r: float) -> None:
    if not (0.0 <= r <= bounds.R * (1.0 + 1e-9)):
        raise ArgumentError(f"radius r={r} outside [0, R={bounds.R}]")


def _relax_closure(bounds: BoundData, sigma: float, r: float):
    """Specialize d_sigma(r, .) to a fast scalar/array callable."""
    if sigma < 1.0:
        raise ArgumentError(f"sigma must be >= 1, got {sigma}")
    _check_radius(bounds, r)
    mu = bounds.mu_at(r, sigma)
    lt = bounds.lam_at(r) * bounds.theta_at(r)
    omega = bounds.omega

    def d(phi):
        return mu * phi + sigma * omega.integral(r, lt * phi)

    return d, mu, lt


def relax(bounds: BoundData, sigma: float, r: float, phi: float) -> float:
    """The relaxation map d_sigma(r, phi)."""
    if phi < 0:
        raise ArgumentError("phi must be nonnegative")
    d, _, _ = _relax_closure(bounds, sigma, r)
    return float(np.asarray(d(phi)))


def relax_iterate(bounds: BoundData, sigma: float, r: float, phi: float, n: int) -> float:
    """n-fold composition of the relaxation map; n = 0 returns phi."""
    if n < 0:
        raise ArgumentError("n must be >= 0")
    if phi < 0:
        raise ArgumentError("phi must be nonnegative")
    d, _, _ = _relax_closure(bounds, sigma, r)
    v = float(phi)
    for _ in range(n):
        v = float(np.asarray(d(v)))
    return v


def smallest_fixed_point(
    bounds: BoundData, sigma: float, r: float, phi_max: float | None = None
) -> float | None:
    """Smallest phi > 0 with phi = d_sigma(r, phi), or None if there is none.

    Scans a geometric grid on (0, phi_max] for a sign change of d - id and
    bisects to absolute tolerance 1e-12.  Zero is always a fixed point; a
    positive one can only separate from it when mu(r) < 1, so mu >= 1 is
    rejected outright.
    """
    d, mu, lt = _relax_closure(bounds, sigma, r)
    if mu >= 1.0:
        raise AssumptionError(
            f"relaxation slope mu({r}) = {mu:.6g} >= 1: no certificate possible")
    if lt == 0.0 or bounds.omega.is_zero(r):
        return None
    expand = phi_max is None
    if phi_max is None:
        phi_max = 10.0 * max(bounds.R, bounds.R / lt)
    lo_end = phi_max * 1e-18
    lo = hi = None
    for _ in range(8):
        grid = np.geomspace(lo_end, phi_max, 2048)
        g = np.asarray(d(grid)) - grid
        idx = np.flatnonzero(g >= 0.0)
        if len(idx) > 0:
            i = int(idx[0])
            lo, hi = (grid[i] * 1e-6, grid[i]) if i == 0 else (grid[i - 1], grid[i])
            break
        if not expand:
            return None
        phi_max *= 64.0  # root may lie beyond the scanned range; widen and retry
    if lo is None:
        return None
    for _ in range(256):
        if hi - lo <= _ROOT_ATOL:
            break
        mid = 0.5 * (lo + hi)
        if float(np.asarray(d(mid))) - mid >= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def majorant_sum(bounds: BoundData, sigma: float, r: float, phi: float) -> float:
    """w_sigma(r, phi): the sum of all relaxation iterates starting at phi.

    Converges exactly for phi below the smallest positive fixed point.
    Summation stops once the term ratio has stayed below 1 for five terms
    and the geometric tail bound drops below 1e-12 of the partial sum; the
    tail estimate itself is not added, so the result slightly underestimates
    the series.  A 1e6-term cap turns slow divergence into an error.
    """
    if phi < 0:
        raise ArgumentError("phi must be nonnegative")
    if phi == 0.0:
        return 0.0
    ps = smallest_fixed_point(bounds, sigma, r)
    if ps is not None and phi >= ps:
        raise DivergenceError(
            f"majorant series diverges: phi={phi:.6g} >= fixed point {ps:.6g}")
    d, _, _ = _relax_closure(bounds, sigma, r)
    total = 0.0
    term = float(phi)
    consec = 0
    for _ in range(_SERIES_CAP):
        total += term
        nxt = float(np.asarray(d(term)))
        if nxt <= 0.0:
            return total
        q = nxt / term
        if q >= 1.0:
            # d is convex with d(0)=0 and slope < 1, so a non-contracting
            # term means phi started at or above the positive fixed point
            raise DivergenceError(
                f"majorant series diverges: term {term:.6g} did not contract")
        consec += 1
        if consec >= 5 and nxt / (1.0 - q) < _SERIES_RTOL * total:
            return total
        term = nxt
        if not np.isfinite(total):
            break
    raise DivergenceError("majorant series did not stabilize within the term cap")


# ---------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class MajorantCertificate:
    """Feasibility verdict and rate/error-bound ingredients at a chosen radius.

    ``feasible`` means lam(r)*theta(r)*w_sigma(r, a) <= r <= R, which
    guarantees existence of a solution in the ball of radius r, convergence
    of the iteration, and validity of the error bounds.  When no radius
    works the certificate records diagnostics at a fallback radius; the
    a posteriori map may still be evaluated there as a best-effort bound.
    """

    r: float
    a: float
    sigma: float
    phi_star: float | None
    w_of_a: float
    condition_value: float
    feasible: bool
    velo_bound: float
    linear_rate: float
    diagnostics: str = ""


def _certificate_at(bounds: BoundData, sigma: float, a: float, r: float,
                    feasible: bool, diagnostics: str = "") -> MajorantCertificate:
    phi_star = None
    w = math.inf
    lt = math.nan
    mu = math.nan
    velo = math.nan
    try:
        lt = bounds.lam_at(r) * bounds.theta_at(r)
        mu = bounds.mu_at(r, sigma)
        velo = relax(bounds, sigma, r, a) / a
        phi_star = smallest_fixed_point(bounds, sigma, r)
        w = majorant_sum(bounds, sigma, r, a)
    except (AssumptionError, DivergenceError) as exc:
        diagnostics = diagnostics or str(exc)
    cond = lt * w if np.isfinite(w) else math.inf
    return MajorantCertificate(
        r=r, a=a, sigma=sigma, phi_star=phi_star, w_of_a=w,
        condition_value=cond, feasible=feasible, velo_bound=velo,
        linear_rate=mu, diagnostics=diagnostics)


def certify(bounds: BoundData, sigma: float, a: float,
            n_grid: int = 128) -> MajorantCertificate:
    """Search for the smallest radius whose majorant condition holds.

    Scans an r-grid on (0, R], refines the first feasible bracket by
    bisection, and evaluates the certificate there.  Infeasibility is a
    result, not an error: the returned certificate then carries
    ``feasible=False`` and diagnostics at the fallback radius R.
    """
    if not (a > 0.0 and np.isfinite(a)):
        raise ArgumentError("initial residual norm a must be positive")
    bounds.validate(sigma)
    R = bounds.R

    def excess(r: float) -> float:
        try:
            w = majorant_sum(bounds, sigma, r, a)
        except (AssumptionError, DivergenceError):
            return math.inf
        return bounds.lam_at(r) * bounds.theta_at(r) * w - r

    grid = np.linspace(R / n_grid, R, n_grid)
    vals = [excess(r) for r in grid]
    hit = next((i for i, v in enumerate(vals) if v <= 0.0), None)
    if hit is None:
        finite = [(v, r) for v, r in zip(vals, grid) if np.isfinite(v)]
        if np.isfinite(vals[-1]):
            r_diag, gap = R, vals[-1]
        elif finite:
            gap, r_diag = min(finite)
        else:
            r_diag, gap = R, math.inf
        return _certificate_at(
            bounds, sigma, a, r_diag, feasible=False,
            diagnostics=f"no feasible radius in (0, {R:g}]; "
                        f"smallest condition excess {gap:.6g} at r={r_diag:.6g}")
    lo = grid[hit - 1] if hit > 0 else grid[0] * 1e-6
    hi = grid[hit]
    if hit > 0 or excess(lo) > 0.0:
        for _ in range(200):
            if hi - lo <= max(_ROOT_ATOL, 1e-15 * R):
                break
            mid = 0.5 * (lo + hi)
            if excess(mid) <= 0.0:
                hi = mid
            else:
                lo = mid
    return _certificate_at(bounds, sigma, a, hi, feasible=True)


def apriori_bound(cert: MajorantCertificate, bounds: BoundData, n: int) -> float:
    """Error bound computable before the run: lam*theta*w(r, d^(n)(r, a))."""
    if not cert.feasible:
        raise ArgumentError("a priori bounds require a feasible certificate")
    dn = relax_iterate(bounds, cert.sigma, cert.r, cert.a, n)
    lt = bounds.lam_at(cert.r) * bounds.theta_at(cert.r)
    return lt * majorant_sum(bounds, cert.sigma, cert.r, dn)


def aposteriori_bound(cert: MajorantCertificate, bounds: BoundData,
                      res_norm: float) -> float:
    """Error bound from the observed residual: lam*theta*w(r, ||f(x_n)||)."""
    if res_norm < 0:
        raise ArgumentError("residual norm must be nonnegative")
    if res_norm == 0.0:
        return 0.0
    if cert.phi_star is not None and res_norm >= cert.phi_star:
        raise DivergenceError(
            f"residual {res_norm:.6g} >= fixed point {cert.phi_star:.6g}; "
            "majorant series diverges")
    lt = bounds.lam_at(cert.r) * bounds.theta_at(cert.r)
    return lt * majorant_sum(bounds, cert.sigma, cert.r, res_norm)


def rate_bounds(cert: MajorantCertificate, bounds: BoundData) -> tuple[float, float]:
    """(worst per-step error ratio bound d(r,a)/a, asymptotic linear factor mu(r))."""
    if not cert.feasible:
        raise ArgumentError("rate bounds require a feasible certificate")
    if cert.a == 0.0:
        raise ArgumentError("rate bounds undefined for a = 0")
    velo = relax(bounds, cert.sigma, cert.r, cert.a) / cert.a
    return velo, bounds.mu_at(cert.r, cert.sigma)
