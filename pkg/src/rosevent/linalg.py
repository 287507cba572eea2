"""Small dense linear algebra and finite-difference kernels.

Everything here is sized for the systems this package integrates (a handful
of states, not thousands): plain partial-pivoting LU, derivative stencils
that know about one-sided domains, and a cheap spectral-radius upper bound.
All operations are pure and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainViolation, SingularMatrix

# Pivots below SINGULARITY_RTOL * max|M| mean the matrix is treated as
# singular at working precision.
SINGULARITY_RTOL = 1e-13

_EPS = float(np.finfo(float).eps)
_SQRT_EPS = float(np.sqrt(_EPS))
# Second differences need a larger step than first differences or the
# stencil falls below the round-off floor.
_QUARTIC_EPS = float(_EPS ** 0.25)


def as_vector(x) -> np.ndarray:
    """Validate and return a 1-d float array with finite entries."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def as_matrix(m) -> np.ndarray:
    """Validate and return a square 2-d float array with finite entries."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


@dataclass(frozen=True)
class LuFactors:
    """Packed LU factors of a row-permuted matrix.

    `combined` stores the unit lower triangle strictly below the diagonal and
    U on and above it. `pivots` is a permutation of 0..n-1: row i of the
    factored matrix came from row pivots[i] of the input.
    """

    combined: np.ndarray
    pivots: np.ndarray

    @property
    def n(self) -> int:
        return self.combined.shape[0]


def lu_factor(m) -> LuFactors:
    """Factor M (with partial row pivoting) so that M[pivots] = L @ U.

    Raises SingularMatrix when the best available pivot in some column does
    not exceed SINGULARITY_RTOL * max|M|.
    """
    a = as_matrix(m).copy()
    n = a.shape[0]
    perm = np.arange(n)
    tol = SINGULARITY_RTOL * (float(np.max(np.abs(a))) if n else 0.0)
    for col in range(n):
        p = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[p, col]) <= tol:
            raise SingularMatrix(
                f"pivot {a[p, col]:.3e} in column {col} below tolerance {tol:.3e}"
            )
        if p != col:
            a[[col, p]] = a[[p, col]]
            perm[[col, p]] = perm[[p, col]]
        rows = slice(col + 1, n)
        a[rows, col] /= a[col, col]
        a[rows, col + 1:] -= np.outer(a[rows, col], a[col, col + 1:])
    return LuFactors(combined=a, pivots=perm)


def lu_solve(factors: LuFactors, b) -> np.ndarray:
    """Solve M x = b given factors from lu_factor(M)."""
    v = as_vector(b)
    n = factors.n
    if v.shape[0] != n:
        raise ValueError(f"matrix is {n}x{n} but b has length {v.shape[0]}")
    a = factors.combined
    x = v[factors.pivots].astype(float)
    for i in range(1, n):  # forward substitution, unit diagonal
        x[i] -= a[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):  # back substitution
        x[i] = (x[i] - a[i, i + 1:] @ x[i + 1:]) / a[i, i]
    return x


def _probe_points(x: np.ndarray, j: int, step: float):
    """Forward/backward perturbations of coordinate j with exactly
    representable offsets (the classic (x+h)-x trick)."""
    xp = x.copy()
    xm = x.copy()
    xp[j] = x[j] + step
    xm[j] = x[j] - step
    return xp, xm


def fd_jacobian(f: Callable, x, domain: Callable | None = None) -> np.ndarray:
    """Finite-difference Jacobian of a vector field.

    Central differences with step sqrt(eps)*max(1, |x_j|) per coordinate.
    When `domain` is given and a perturbed point leaves it, the stencil
    switches to the one-sided difference that stays inside; if both sides
    are outside, DomainViolation is raised.
    """
    x = as_vector(x)
    steps = _SQRT_EPS * np.maximum(1.0, np.abs(x))
    fx = None
    cols = []
    for j in range(x.shape[0]):
        xp, xm = _probe_points(x, j, steps[j])
        ok_p = domain is None or bool(domain(xp))
        ok_m = domain is None or bool(domain(xm))
        if ok_p and ok_m:
            cols.append(
                (np.asarray(f(xp), float) - np.asarray(f(xm), float))
                / (xp[j] - xm[j])
            )
        elif ok_p or ok_m:
            if fx is None:
                fx = np.asarray(f(x), float)
            if ok_p:
                cols.append((np.asarray(f(xp), float) - fx) / (xp[j] - x[j]))
            else:
                cols.append((fx - np.asarray(f(xm), float)) / (x[j] - xm[j]))
        else:
            raise DomainViolation(
                f"both perturbations of coordinate {j} leave the domain"
            )
    return np.column_stack(cols)


def fd_gradient(h: Callable, x, domain: Callable | None = None) -> np.ndarray:
    """Finite-difference gradient of a scalar function; stencils as in
    fd_jacobian."""
    x = as_vector(x)
    steps = _SQRT_EPS * np.maximum(1.0, np.abs(x))
    h0 = None
    grad = np.empty_like(x)
    for j in range(x.shape[0]):
        xp, xm = _probe_points(x, j, steps[j])
        ok_p = domain is None or bool(domain(xp))
        ok_m = domain is None or bool(domain(xm))
        if ok_p and ok_m:
            grad[j] = (float(h(xp)) - float(h(xm))) / (xp[j] - xm[j])
        elif ok_p or ok_m:
            if h0 is None:
                h0 = float(h(x))
            if ok_p:
                grad[j] = (float(h(xp)) - h0) / (xp[j] - x[j])
            else:
                grad[j] = (h0 - float(h(xm))) / (x[j] - xm[j])
        else:
            raise DomainViolation(
                f"both perturbations of coordinate {j} leave the domain"
            )
    return grad


def fd_hessian(h: Callable, x, domain: Callable | None = None) -> np.ndarray:
    """Finite-difference Hessian of a scalar function, exactly symmetric.

    On an unrestricted domain this uses direct second differences with step
    eps**0.25 * max(1, |x_j|). With a domain predicate it differences
    domain-aware gradients instead (one-sided where necessary), which is
    less accurate but never evaluates h outside the domain.
    """
    x = as_vector(x)
    n = x.shape[0]
    steps = _QUARTIC_EPS * np.maximum(1.0, np.abs(x))
    hess = np.empty((n, n))
    if domain is None:
        h0 = float(h(x))
        for j in range(n):
            xp, xm = _probe_points(x, j, steps[j])
            dj = xp[j] - x[j]
            hess[j, j] = (float(h(xp)) - 2.0 * h0 + float(h(xm))) / (dj * dj)
            for l in range(j + 1, n):
                dl = steps[l]
                xpp, xpm = _probe_points(xp, l, dl)
                xmp, xmm = _probe_points(xm, l, dl)
                val = (
                    float(h(xpp)) - float(h(xpm)) - float(h(xmp)) + float(h(xmm))
                ) / ((xp[j] - xm[j]) * (xpp[l] - xpm[l]))
                hess[j, l] = val
                hess[l, j] = val
    else:
        for j in range(n):
            xp, xm = _probe_points(x, j, steps[j])
            ok_p = bool(domain(xp))
            ok_m = bool(domain(xm))
            if ok_p and ok_m:
                gp = fd_gradient(h, xp, domain)
                gm = fd_gradient(h, xm, domain)
                hess[:, j] = (gp - gm) / (xp[j] - xm[j])
            elif ok_p or ok_m:
                g0 = fd_gradient(h, x, domain)
                if ok_p:
                    hess[:, j] = (fd_gradient(h, xp, domain) - g0) / (xp[j] - x[j])
                else:
                    hess[:, j] = (g0 - fd_gradient(h, xm, domain)) / (x[j] - xm[j])
            else:
                raise DomainViolation(
                    f"both perturbations of coordinate {j} leave the domain"
                )
    return 0.5 * (hess + hess.T)


def spectral_radius_bound(m) -> float:
    """Cheap upper bound on the spectral radius.

    Minimum of the Gershgorin row bound and a 50-iteration power-method
    estimate (deterministic all-ones start) inflated by 5%.
    """
    a = as_matrix(m)
    n = a.shape[0]
    if n == 0:
        return 0.0
    gersh = float(np.max(np.sum(np.abs(a), axis=1)))
    v = np.ones(n)
    est = gersh
    for _ in range(50):
        w = a @ v
        norm = float(np.max(np.abs(w)))
        if norm == 0.0:
            est = 0.0
            break
        est = norm / float(np.max(np.abs(v)))
        v = w / norm
    return min(gersh, 1.05 * est)
