"""Dense kernels shared by all solvers.

Everything here works on plain complex numpy arrays: two-pass Gram-Schmidt
orthogonalization, an incrementally maintained QR factorization of a growing
generalized Hessenberg matrix, triangular solves and rank-revealing
orthonormalization.
"""

import numpy as np

__all__ = [
    "SingularMatrixError",
    "orthogonalize_against",
    "IncrementalQr",
    "QrUpdate",
    "solve_upper_triangular",
    "orthonormal_columns",
]


class SingularMatrixError(ValueError):
    """Raised when a triangular solve hits a (near-)zero pivot."""


def orthogonalize_against(v, Q):
    """Orthogonalize ``v`` against the orthonormal columns of ``Q``.

    Classical Gram-Schmidt with one unconditional second pass, so the
    returned residual is orthogonal to ``Q`` to machine precision even
    when ``v`` lies almost entirely inside the span.

    Parameters
    ----------
    v : (n,) complex array
    Q : (n, j) complex array with orthonormal columns; ``j`` may be 0.

    Returns
    -------
    h : (j,) coefficients such that ``v = Q @ h + q_residual``
    q_residual : (n,) component of ``v`` orthogonal to ``Q``
    beta : float, ``norm(q_residual)``
    """
    v = np.asarray(v)
    Q = np.asarray(Q)
    if Q.ndim != 2 or Q.shape[0] != v.shape[0]:
        raise ValueError(
            f"dimension mismatch: v has length {v.shape[0]}, "
            f"Q has shape {Q.shape}"
        )
    if Q.shape[1] == 0:
        h = np.zeros(0, dtype=np.result_type(v.dtype, np.complex128))
        w = v.astype(h.dtype, copy=True)
        return h, w, float(np.linalg.norm(w))
    h = Q.conj().T @ v
    w = v - Q @ h
    h2 = Q.conj().T @ w
    w = w - Q @ h2
    h = h + h2
    return h, w, float(np.linalg.norm(w))


def _givens(a, b):
    # Complex rotation [[c, s], [-conj(s), c]] @ [a, b] = [r, 0], c real.
    if b == 0:
        return 1.0, 0.0 + 0.0j, a
    if a == 0:
        babs = abs(b)
        return 0.0, np.conj(b) / babs, babs + 0.0j
    aabs = abs(a)
    d = np.hypot(aabs, abs(b))
    alpha = a / aabs
    return aabs / d, alpha * np.conj(b) / d, alpha * d


class QrUpdate:
    """What one :meth:`IncrementalQr.append_column` call did.

    ``rotations`` is the ordered list of ``(i, j, c, s)`` Givens rotations
    that were applied in the coordinate space of ``G*``; callers that
    maintain ``G* Q* r0`` vectors replay them via :meth:`apply`.
    """

    def __init__(self, grew_basis, rotations, singular):
        self.grew_basis = grew_basis
        self.rotations = rotations
        self.singular = singular

    def apply(self, coords):
        """Apply the recorded rotations to a coordinate vector in place."""
        for i, j, c, s in self.rotations:
            xi, xj = coords[i], coords[j]
            coords[i] = c * xi + s * xj
            coords[j] = -np.conj(s) * xi + c * xj
        return coords


class IncrementalQr:
    """QR factors of a growing t x k generalized Hessenberg matrix H.

    Maintains ``H = G @ [[R], [0]]`` with ``G`` an explicit t x t unitary
    matrix and ``R`` k x k upper-triangular. Columns are appended one per
    iteration; the basis dimension t grows either together with a column
    (``new_row``) or on its own (:meth:`extend_basis`).

    Previously computed entries of ``R`` are never touched again: the
    annihilating rotations only act on rows below the current diagonal.
    """

    def __init__(self, dtype=np.complex128):
        self.dtype = np.dtype(dtype)
        self.t = 0
        self.k = 0
        self.G = np.zeros((0, 0), dtype=self.dtype)
        self.R = np.zeros((0, 0), dtype=self.dtype)
        self.singular = False

    def extend_basis(self):
        """Grow the basis dimension by one: G becomes diag(G, 1)."""
        G = np.zeros((self.t + 1, self.t + 1), dtype=self.dtype)
        G[: self.t, : self.t] = self.G
        G[self.t, self.t] = 1.0
        self.G = G
        self.t += 1

    def append_column(self, h, new_row=None):
        """Append one column to H and restore the factorization.

        Parameters
        ----------
        h : (t,) array, the new column in the current basis.
        new_row : scalar or None. Present iff the basis grew this
            iteration; becomes the (t+1)-th entry of the column.

        Returns
        -------
        QrUpdate with the applied rotations. A zero new diagonal pivot is
        reported through ``update.singular`` (and ``self.singular``), not
        raised: it signals that the exact solution is already spanned.
        """
        h = np.asarray(h, dtype=self.dtype)
        if h.shape != (self.t,):
            raise ValueError(
                f"column has length {h.shape[0]}, expected {self.t}"
            )
        grew = new_row is not None
        if grew:
            self.extend_basis()
            w = np.empty(self.t, dtype=self.dtype)
            w[:-1] = self.G[:-1, :-1].conj().T @ h
            w[-1] = new_row
        else:
            w = self.G.conj().T @ h

        k_new = self.k + 1
        if self.t < k_new:
            raise ValueError("more columns than basis dimension")
        rotations = []
        for j in range(self.t - 1, k_new - 1, -1):
            c, s, r = _givens(w[j - 1], w[j])
            w[j - 1], w[j] = r, 0.0
            rotations.append((j - 1, j, c, s))
            gi = self.G[:, j - 1].copy()
            gj = self.G[:, j].copy()
            self.G[:, j - 1] = c * gi + np.conj(s) * gj
            self.G[:, j] = -s * gi + c * gj

        R = np.zeros((k_new, k_new), dtype=self.dtype)
        R[: self.k, : self.k] = self.R
        R[:k_new, k_new - 1] = w[:k_new]
        self.R = R
        self.k = k_new

        rnorm = np.linalg.norm(np.diag(self.R))
        pivot_zero = abs(self.R[-1, -1]) <= 1e-14 * max(rnorm, 1e-300)
        if pivot_zero:
            self.singular = True
        return QrUpdate(grew, rotations, pivot_zero)


def solve_upper_triangular(R, rhs):
    """Back-substitution for an upper-triangular system ``R x = rhs``.

    Raises
    ------
    SingularMatrixError
        If any ``|R[i, i]| <= 1e-14 * norm(R)``.
    """
    R = np.asarray(R)
    rhs = np.asarray(rhs)
    n = R.shape[0]
    if R.shape != (n, n) or rhs.shape[0] != n:
        raise ValueError("shape mismatch in triangular solve")
    if n == 0:
        return np.zeros(0, dtype=np.result_type(R.dtype, np.complex128))
    scale = np.linalg.norm(R)
    diag = np.abs(np.diag(R))
    if np.any(diag <= 1e-14 * scale):
        bad = int(np.argmin(diag))
        raise SingularMatrixError(
            f"diagonal entry {bad} of R is numerically zero"
        )
    x = np.zeros(n, dtype=np.result_type(R.dtype, rhs.dtype, np.complex128))
    for i in range(n - 1, -1, -1):
        x[i] = (rhs[i] - R[i, i + 1 :] @ x[i + 1 :]) / R[i, i]
    return x


def orthonormal_columns(M, rank_tol=1e-10):
    """Orthonormal basis of the column span of ``M``.

    The number of returned columns is the numerical rank: singular values
    below ``rank_tol`` times the largest column norm are dropped. A zero
    matrix yields zero columns.
    """
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValueError("expected a matrix")
    if M.shape[1] == 0:
        return M.copy()
    col_norms = np.linalg.norm(M, axis=0)
    biggest = float(col_norms.max()) if col_norms.size else 0.0
    if biggest == 0.0:
        return M[:, :0].copy()
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    rank = int(np.sum(s > rank_tol * biggest))
    return u[:, :rank]
