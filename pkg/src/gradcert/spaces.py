"""Normed-space models: Euclidean space and finite-dimensional l_p, p >= 2.

The l_p model carries a semiscalar product ``[x, y] = <Jx, y>`` built from
the normalized duality selection

    (Jx)_i = ||x||^(2-p) * |x_i|^(p-1) * sign(x_i),

which satisfies ``[x, x] = ||x||^2`` and ``||Jx||_q = ||x||`` (q conjugate
to p).  By convention ``J0 = 0``, so ``semiscalar(0, y) = 0``.  For p = 2
every formula reduces exactly to the Euclidean dot product.

These spaces satisfy the quadratic-type norm inequality

    ||x + y||^2 <= ||x||^2 + 2[x, y] + sigma * ||y||^2

with the sharp constant ``sigma = p - 1`` (sigma = 1 in the Euclidean
case).  ``verify_space_axioms`` checks this inequality, and the algebraic
properties of the semiscalar product, on a seeded sample set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError

EUCLIDEAN = "euclidean"
SEQUENCE_P = "sequence_p"


@dataclass(frozen=True)
class SpaceGeometry:
    """Ambient-space descriptor. ``p`` is only meaningful for ``sequence_p``."""

    kind: str
    p: float = 2.0

    def __post_init__(self):
        if self.kind not in (EUCLIDEAN, SEQUENCE_P):
            raise ArgumentError(f"unknown space kind {self.kind!r}")
        if self.kind == SEQUENCE_P and not (np.isfinite(self.p) and self.p >= 2.0):
            raise ArgumentError(f"sequence_p requires p >= 2, got p={self.p}")

    @property
    def sigma(self) -> float:
        """Sharp constant of the quadratic norm inequality (p - 1 for l_p)."""
        return 1.0 if self.kind == EUCLIDEAN else self.p - 1.0

    @property
    def q(self) -> float:
        """Conjugate exponent, 1/p + 1/q = 1."""
        return 2.0 if self.kind == EUCLIDEAN else self.p / (self.p - 1.0)


def euclidean() -> SpaceGeometry:
    return SpaceGeometry(EUCLIDEAN)


def sequence_p(p: float) -> SpaceGeometry:
    return SpaceGeometry(SEQUENCE_P, float(p))


def _vec(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ArgumentError("expected a nonempty 1-d vector")
    if not np.all(np.isfinite(v)):
        raise ArgumentError("vector has non-finite entries")
    return v


def _pnorm(v: np.ndarray, p: float) -> float:
    # rescale by the largest entry so |v_i|**p cannot under- or overflow
    m = float(np.max(np.abs(v)))
    if m == 0.0:
        return 0.0
    return m * float(np.sum(np.abs(v / m) ** p)) ** (1.0 / p)


def norm(space: SpaceGeometry, x) -> float:
    """||x|| in the space norm (2-norm or p-norm)."""
    v = _vec(x)
    if space.kind == EUCLIDEAN:
        return float(np.linalg.norm(v))
    return _pnorm(v, space.p)


def dual_norm(space: SpaceGeometry, x) -> float:
    """Norm of a functional identified with a coordinate vector (q-norm)."""
    v = _vec(x)
    if space.kind == EUCLIDEAN:
        return float(np.linalg.norm(v))
    return _pnorm(v, space.q)


def semiscalar(space: SpaceGeometry, x, y) -> float:
    """Semiscalar product [x, y] = <Jx, y>; the dot product when p = 2.

    Linear in ``y``, homogeneous in ``x``, and [x, x] = ||x||^2.
    Returns 0 when x = 0 (the J0 = 0 convention).
    """
    xv = _vec(x)
    yv = _vec(y)
    if xv.shape != yv.shape:
        raise ArgumentError("semiscalar arguments must have equal dimension")
    if space.kind == EUCLIDEAN:
        return float(xv @ yv)
    m = float(np.max(np.abs(xv)))
    if m == 0.0:
        return 0.0
    # rescaled so the (p-1)-powers stay inside the floating-point range:
    # [x, y] = m * ||x/m||^(2-p) * sum |x_i/m|^(p-1) sign(x_i) y_i
    u = xv / m
    nu_ = float(np.sum(np.abs(u) ** space.p)) ** (1.0 / space.p)
    w = np.abs(u) ** (space.p - 1.0) * np.sign(u)
    return float(m * nu_ ** (2.0 - space.p) * (w @ yv))


def duality_map(space: SpaceGeometry, x) -> np.ndarray:
    """Jx as a coordinate vector: ||Jx||_q = ||x|| and <Jx, x> = ||x||^2."""
    xv = _vec(x)
    if space.kind == EUCLIDEAN:
        return xv.copy()
    m = float(np.max(np.abs(xv)))
    if m == 0.0:
        return np.zeros_like(xv)
    u = xv / m
    nu_ = float(np.sum(np.abs(u) ** space.p)) ** (1.0 / space.p)
    return m * nu_ ** (2.0 - space.p) * np.abs(u) ** (space.p - 1.0) * np.sign(u)


# Row-wise variants used by the sampling code; rows of X/Y are vectors.

def norm_rows(space: SpaceGeometry, X: np.ndarray) -> np.ndarray:
    if space.kind == EUCLIDEAN:
        return np.linalg.norm(X, axis=1)
    m = np.max(np.abs(X), axis=1)
    safe = np.where(m > 0.0, m, 1.0)
    return m * np.sum(np.abs(X / safe[:, None]) ** space.p, axis=1) ** (1.0 / space.p)


def semiscalar_rows(space: SpaceGeometry, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    if space.kind == EUCLIDEAN:
        return np.einsum("ij,ij->i", X, Y)
    out = np.zeros(len(X))
    m = np.max(np.abs(X), axis=1)
    nz = m > 0.0
    if np.any(nz):
        U = X[nz] / m[nz, None]
        nu_ = np.sum(np.abs(U) ** space.p, axis=1) ** (1.0 / space.p)
        W = np.abs(U) ** (space.p - 1.0) * np.sign(U)
        out[nz] = m[nz] * nu_ ** (2.0 - space.p) * np.einsum("ij,ij->i", W, Y[nz])
    return out


@dataclass
class PropertyCheck:
    """Worst normalized slack of one sampled property (negative = violated)."""

    name: str
    worst_slack: float
    violations: int
    witness: tuple | None


@dataclass
class SpaceAxiomReport:
    passed: bool
    n_checked: int
    tol: float
    sigma: float
    checks: dict[str, PropertyCheck] = field(default_factory=dict)


def _structured_pairs(dim: int) -> tuple[np.ndarray, np.ndarray]:
    # Deterministic adversarial pairs: parallel pairs expose sigma < 1, and
    # small alternating-sign perturbations of the all-ones vector approach
    # the sharp constant p - 1, exposing any understated sigma.
    xs, ys = [], []
    base = np.ones(dim)
    alt = np.array([(-1.0) ** i for i in range(dim)])
    for t in (-1.5, -0.5, 0.5, 2.0):
        xs.append(base.copy())
        ys.append(t * base)
    for eps in (1e-3, 1e-2, 0.1, 1.0):
        xs.append(base.copy())
        ys.append(eps * alt)
    eye = np.eye(dim)
    for i in range(dim):
        xs.append(eye[i].copy())
        ys.append(eye[(i + 1) % dim].copy())
    return np.array(xs), np.array(ys)


def verify_space_axioms(
    space: SpaceGeometry,
    n_samples: int = 1000,
    seed: int = 0,
    dims: tuple[int, ...] = (2, 3, 4),
    sigma: float | None = None,
    tol: float = 1e-9,
) -> SpaceAxiomReport:
    """Sample pairs (x, y) and scalars and check the semiscalar-product axioms.

    Checked per pair: [x,x] = ||x||^2, scalar homogeneity in the first slot,
    linearity in the second slot, [x,y] <= ||x|| ||y||, and the quadratic
    norm inequality with constant ``sigma`` (defaults to the space's own).
    A ``sigma`` override exists so a deliberately wrong constant can be shown
    to fail.  Violations beyond the relative tolerance are reported together
    with a witness pair.
    """
    if n_samples < 1:
        raise ArgumentError("n_samples must be >= 1")
    if not dims:
        raise ArgumentError("dims must be nonempty")
    sig = space.sigma if sigma is None else float(sigma)
    rng = np.random.default_rng(seed)

    names = ("pairing_norm", "first_slot_homogeneity", "second_slot_linearity",
             "cauchy_schwarz", "quadratic_inequality")
    worst = {n: (np.inf, None) for n in names}
    nviol = dict.fromkeys(names, 0)
    checked = 0

    per_dim = max(1, n_samples // len(dims))
    for dim in dims:
        xs_s, ys_s = _structured_pairs(dim)
        n_rand = max(0, per_dim - len(xs_s))
        scale = 10.0 ** rng.uniform(-2, 2, size=(n_rand, 1))
        X = np.vstack([xs_s, rng.standard_normal((n_rand, dim)) * scale])
        Y = np.vstack([ys_s, rng.standard_normal((n_rand, dim)) * scale])
        n = len(X)
        lam = rng.uniform(-3.0, 3.0, size=n)
        a1 = rng.uniform(-2.0, 2.0, size=n)
        a2 = rng.uniform(-2.0, 2.0, size=n)
        Y2 = np.roll(Y, 1, axis=0)

        nX = norm_rows(space, X)
        nY = norm_rows(space, Y)
        sxx = semiscalar_rows(space, X, X)
        sxy = semiscalar_rows(space, X, Y)

        def _update(name, slack, scale_, witness_rows):
            normed = slack / np.maximum(1.0, scale_)
            i = int(np.argmin(normed))
            if normed[i] < worst[name][0]:
                worst[name] = (float(normed[i]), tuple(w[i].copy() for w in witness_rows))
            nviol[name] += int(np.sum(normed < -tol))

        # (a) pairing against itself reproduces the squared norm
        _update("pairing_norm", -np.abs(sxx - nX**2), nX**2, (X,))
        # (b) [lam x, y] = lam [x, y]
        slxy = semiscalar_rows(space, lam[:, None] * X, Y)
        _update("first_slot_homogeneity", -np.abs(slxy - lam * sxy),
                np.abs(lam) * np.abs(sxy) + nX * nY, (X, Y, lam))
        # (c) linearity in the second slot
        comb = semiscalar_rows(space, X, a1[:, None] * Y + a2[:, None] * Y2)
        parts = a1 * sxy + a2 * semiscalar_rows(space, X, Y2)
        _update("second_slot_linearity", -np.abs(comb - parts),
                np.abs(comb) + np.abs(parts) + nX * (nY + norm_rows(space, Y2)), (X, Y, Y2))
        # (d) [x, y] <= ||x|| ||y||
        _update("cauchy_schwarz", nX * nY - sxy, nX * nY, (X, Y))
        # (iv) ||x+y||^2 <= ||x||^2 + 2[x,y] + sigma ||y||^2
        lhs = norm_rows(space, X + Y) ** 2
        rhs = nX**2 + 2.0 * sxy + sig * nY**2
        _update("quadratic_inequality", rhs - lhs,
                np.maximum(lhs, np.abs(rhs)), (X, Y))
        checked += n

    checks = {
        name: PropertyCheck(name, worst[name][0], nviol[name],
                            worst[name][1] if nviol[name] else None)
        for name in names
    }
    passed = all(c.violations == 0 for c in checks.values())
    return SpaceAxiomReport(passed=passed, n_checked=checked, tol=tol,
                            sigma=sig, checks=checks)
