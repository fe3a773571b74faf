"""Deterministic dense linear algebra.

The SVD here is the verification oracle for the whole package: a one-sided
Jacobi iteration (rotating column pairs until all are mutually orthogonal),
capped at 60 sweeps with an off-diagonal threshold of ``1e-14 * ||M||_F^2``
on the implicit Gram matrix.  A two-sided symmetric Jacobi eigensolver
provides the second, independent route used to cross-check singular values
through the Gram matrix, and is also the backbone for symmetric square
roots where an iterative scheme would be a conflict of interest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NumericalError, ValidationError
from .rng import RngStream
from .validation import check_feature_map, check_square

JACOBI_MAX_SWEEPS = 60
JACOBI_OFFDIAG_REL = 1e-14


def mat_mul(a, b) -> np.ndarray:
    a = check_feature_map(a, "left operand")
    b = check_feature_map(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"inner dimensions differ: {a.shape} x {b.shape}")
    return a @ b


def transpose(m) -> np.ndarray:
    return np.ascontiguousarray(check_feature_map(m).T)


def frobenius_norm(m) -> float:
    return float(np.sqrt(np.sum(check_feature_map(m) ** 2)))


def spectral_norm(m, tol: float = 1e-12, max_iters: int = 100_000) -> float:
    """Largest singular value by fully converged power iteration on M^T M.

    Distinct from the incomplete iteration used by the augmentation
    operators: this one runs to a relative tolerance.  The start vector
    comes from a fixed internal stream so results are reproducible.
    """
    m = check_feature_map(m)
    if not np.any(m):
        return 0.0
    d = m.shape[1]
    v = RngStream(0x5FEC72A1, 0).generator().standard_normal(d)
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iters):
        w = m.T @ (m @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        est = np.sqrt(nw)
        if abs(est - prev) <= tol * max(est, 1e-300):
            return float(est)
        prev = est
    raise NumericalError("spectral_norm power iteration did not converge")


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD: M = U @ diag(sigma) @ V.T with column-orthonormal U, V."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T


def _complete_orthonormal(cols: np.ndarray, fixed: int) -> np.ndarray:
    """Fill columns at index >= fixed with an orthonormal completion."""
    n, r = cols.shape
    out = cols.copy()
    basis = [out[:, j] for j in range(fixed)]
    j = fixed
    cand = 0
    while j < r:
        if cand >= n:
            raise NumericalError("failed to complete orthonormal basis")
        v = np.zeros(n)
        v[cand] = 1.0
        cand += 1
        for _ in range(2):  # twice-is-enough re-orthogonalisation
            for b in basis:
                v -= (b @ v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            v /= nv
            out[:, j] = v
            basis.append(v)
            j += 1
    return out


def _fix_signs(U: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Force the largest-magnitude entry of each V column positive."""
    for j in range(V.shape[1]):
        idx = np.argmax(np.abs(V[:, j]))
        if V[idx, j] < 0:
            V[:, j] = -V[:, j]
            U[:, j] = -U[:, j]
    return U, V


def svd_jacobi(m) -> SvdFactors:
    """One-sided Jacobi SVD, the package's decomposition oracle."""
    a = check_feature_map(m)
    n, d = a.shape
    b = a.copy()
    v = np.eye(d)
    fro2 = float(np.sum(a * a))
    if fro2 == 0.0:
        r = min(n, d)
        u = _complete_orthonormal(np.zeros((n, r)), 0)
        return SvdFactors(u, np.zeros(r), np.eye(d)[:, :r])
    off_tol = JACOBI_OFFDIAG_REL * fro2
    converged = False
    for _ in range(JACOBI_MAX_SWEEPS):
        rotated = False
        for i in range(d - 1):
            for j in range(i + 1, d):
                g = float(b[:, i] @ b[:, j])
                if abs(g) <= off_tol:
                    continue
                rotated = True
                dii = float(b[:, i] @ b[:, i])
                djj = float(b[:, j] @ b[:, j])
                tau = (djj - dii) / (2.0 * g)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = c * t
                bi = b[:, i].copy()
                b[:, i] = c * bi - s * b[:, j]
                b[:, j] = s * bi + c * b[:, j]
                vi = v[:, i].copy()
                v[:, i] = c * vi - s * v[:, j]
                v[:, j] = s * vi + c * v[:, j]
        if not rotated:
            converged = True
            break
    if not converged:
        raise NumericalError("one-sided Jacobi SVD did not converge in 60 sweeps")
    norms = np.sqrt(np.sum(b * b, axis=0))
    order = np.argsort(-norms, kind="stable")
    r = min(n, d)
    keep = order[:r]
    sigma = norms[keep]
    V = v[:, keep]
    U = np.zeros((n, r))
    # below this floor a column is rotation noise, not a resolvable direction
    rank_floor = 1e-13 * float(norms.max())
    nonzero = 0
    for col, k in enumerate(keep):
        if norms[k] > rank_floor:
            U[:, col] = b[:, k] / norms[k]
            nonzero = col + 1
    U = _complete_orthonormal(U, nonzero)
    U, V = _fix_signs(U, V)
    return SvdFactors(U, sigma, V)


def jacobi_eigh(s) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric two-sided Jacobi eigendecomposition.

    Returns (eigenvalues descending, eigenvectors as columns).  Independent
    of :func:`svd_jacobi`; used to cross-check it through the Gram matrix.
    """
    a = check_feature_map(s)
    check_square(a, "symmetric matrix")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-10 * max(1.0, float(np.abs(a).max()))):
        raise ValidationError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    d = a.shape[0]
    v = np.eye(d)
    off_tol = JACOBI_OFFDIAG_REL * max(float(np.sqrt(np.sum(a * a))), 1e-300)
    for _ in range(JACOBI_MAX_SWEEPS):
        rotated = False
        for i in range(d - 1):
            for j in range(i + 1, d):
                g = a[i, j]
                if abs(g) <= off_tol:
                    continue
                rotated = True
                tau = (a[j, j] - a[i, i]) / (2.0 * g)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                sn = c * t
                # A <- J^T A J applied as O(d) column then row updates
                ai = a[:, i].copy()
                a[:, i] = c * ai - sn * a[:, j]
                a[:, j] = sn * ai + c * a[:, j]
                ri = a[i, :].copy()
                a[i, :] = c * ri - sn * a[j, :]
                a[j, :] = sn * ri + c * a[j, :]
                a[i, j] = a[j, i] = 0.0
                vi = v[:, i].copy()
                v[:, i] = c * vi - sn * v[:, j]
                v[:, j] = sn * vi + c * v[:, j]
        if not rotated:
            break
    else:
        raise NumericalError("symmetric Jacobi did not converge in 60 sweeps")
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def spd_sqrt_inv_sqrt(g, min_eig_rel: float = 1e-13) -> tuple[np.ndarray, np.ndarray]:
    """(G^{1/2}, G^{-1/2}) of an SPD matrix via the Jacobi eigensolver."""
    w, q = jacobi_eigh(g)
    if w[0] <= 0:
        raise NumericalError("matrix is not positive definite")
    if w[-1] <= min_eig_rel * w[0]:
        raise NumericalError("matrix is numerically singular")
    root = (q * np.sqrt(w)) @ q.T
    inv_root = (q / np.sqrt(w)) @ q.T
    return 0.5 * (root + root.T), 0.5 * (inv_root + inv_root.T)


def _orthonormalize(y: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt with re-orthogonalisation; drops null columns."""
    n, k = y.shape
    q = np.zeros((n, k))
    kept = 0
    scale = max(float(np.abs(y).max()), 1e-300)
    for j in range(k):
        v = y[:, j].copy()
        for _ in range(2):
            for i in range(kept):
                v -= (q[:, i] @ v) * q[:, i]
        nv = np.linalg.norm(v)
        if nv > 1e-13 * scale:
            q[:, kept] = v / nv
            kept += 1
    return q[:, :kept]


def randomized_svd(m, rank: int, oversample: int = 8, power_iters: int = 2,
                   stream: RngStream | None = None) -> SvdFactors:
    """Randomized range-finder SVD (Gaussian probe, oversampling, power steps)."""
    a = check_feature_map(m)
    n, d = a.shape
    if rank < 1 or rank > min(n, d):
        raise ValidationError(f"rank must be in [1, {min(n, d)}], got {rank}")
    if oversample < 0 or power_iters < 0:
        raise ValidationError("oversample and power_iters must be non-negative")
    if stream is None:
        stream = RngStream(0)
    ell = min(d, rank + oversample)
    omega = stream.generator().standard_normal((d, ell))
    y = a @ omega
    q = _orthonormalize(y)
    for _ in range(power_iters):
        q = _orthonormalize(a.T @ q)
        q = _orthonormalize(a @ q)
    bsmall = q.T @ a
    inner = svd_jacobi(bsmall)
    u = q @ inner.U
    take = min(rank, inner.sigma.size)
    fac = SvdFactors(u[:, :take], inner.sigma[:take], inner.V[:, :take])
    return fac


def lu_decompose(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """LU with partial pivoting: P M = L U, L unit lower triangular.

    The permutation is returned as an index array ``p`` such that
    ``M[p] == L @ U``.
    """
    a = check_feature_map(m)
    check_square(a, "LU input")
    n = a.shape[0]
    u = a.copy()
    l = np.eye(n)
    perm = np.arange(n)
    for k in range(n):
        pivot = k + int(np.argmax(np.abs(u[k:, k])))
        if abs(u[pivot, k]) == 0.0:
            raise NumericalError("matrix is exactly singular (zero pivot)")
        if pivot != k:
            u[[k, pivot], k:] = u[[pivot, k], k:]
            l[[k, pivot], :k] = l[[pivot, k], :k]
            perm[[k, pivot]] = perm[[pivot, k]]
        for i in range(k + 1, n):
            l[i, k] = u[i, k] / u[k, k]
            u[i, k:] -= l[i, k] * u[k, k:]
            u[i, k] = 0.0
    return l, u, perm


def lu_solve_inverse_product(l: np.ndarray, u: np.ndarray, perm: np.ndarray,
                             b: np.ndarray) -> np.ndarray:
    """Solve (LU) X = B[perm], i.e. compute U^{-1} L^{-1} P B."""
    bp = b[perm]
    n = l.shape[0]
    y = np.zeros_like(bp)
    for i in range(n):
        y[i] = bp[i] - l[i, :i] @ y[:i]
    x = np.zeros_like(y)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - u[i, i + 1:] @ x[i + 1:]) / u[i, i]
    return x
