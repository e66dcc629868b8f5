"""Dense float64 kernels: pseudoinverse, affine projections, spectral radius.

All functions are pure and accept anything ``numpy.asarray`` understands.
"""

import numpy as np
from scipy.sparse.linalg import eigs

from ._validation import as_matrix, as_square, as_vector, check_positive
from .exceptions import InfeasibleSetError, ShapeError, SizeError

PINV_RTOL = 1e-12
PROJECTION_TOL = 1e-8
# Above this order spectral_radius switches from a dense eigensolver to
# an iterative one.
DENSE_EIG_MAX = 512
MAX_KRON_ENTRIES = 2**28


def pseudoinverse(A, tol=PINV_RTOL):
    """Moore-Penrose pseudoinverse through the SVD.

    Singular values below ``tol * sigma_max`` are treated as zero.

    Parameters
    ----------
    A : array_like, shape (r, c)
    tol : float
        Relative cutoff.

    Returns
    -------
    ndarray, shape (c, r)
    """
    A = as_matrix(A)
    check_positive(tol, "tol")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((A.shape[1], A.shape[0]))
    keep = s > tol * s[0]
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (Vt.T * inv) @ U.T


def matrix_rank(A, tol=1e-10):
    """Number of singular values above ``tol * sigma_max``."""
    A = as_matrix(A)
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def affine_projection(H, z, x, tol=PROJECTION_TOL, H_pinv=None):
    """Euclidean projection of ``x`` onto ``{y : H y = z}``.

    Computed as ``x - pinv(H) (H x - z)``. A precomputed pseudoinverse may
    be passed as ``H_pinv`` to skip the SVD.

    Raises
    ------
    InfeasibleSetError
        If the projected point violates ``H y = z`` by more than
        ``tol * (1 + ||z||)``, i.e. the set is empty.
    """
    H = as_matrix(H, "H")
    z = as_vector(z, "z")
    x = as_vector(x, "x")
    if H.shape[1] != x.size:
        raise ShapeError(f"H has {H.shape[1]} columns but x has dim {x.size}")
    if H.shape[0] != z.size:
        raise ShapeError(f"H has {H.shape[0]} rows but z has dim {z.size}")
    if H_pinv is None:
        H_pinv = pseudoinverse(H)
    y = x - H_pinv @ (H @ x - z)
    if np.linalg.norm(H @ y - z) > tol * (1.0 + np.linalg.norm(z)):
        raise InfeasibleSetError("affine set {y : Hy = z} is empty")
    return y


def kernel_projector(H, tol=PINV_RTOL):
    """Orthogonal projector onto ``kernel(H)``, i.e. ``I - pinv(H) H``.

    The result is symmetrized so ``P == P.T`` holds exactly.
    """
    H = as_matrix(H, "H")
    P = np.eye(H.shape[1]) - pseudoinverse(H, tol) @ H
    return 0.5 * (P + P.T)


def kronecker(A, B):
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    n_entries = A.size * B.size
    if n_entries > MAX_KRON_ENTRIES:
        raise SizeError(f"Kronecker product would hold {n_entries} entries")
    return np.kron(A, B)


def _is_symmetric(A):
    return np.allclose(A, A.T, rtol=0.0, atol=1e-14 * max(1.0, np.abs(A).max()))


def _symmetric_power_radius(A, tol, max_iter=10_000, seed=0):
    # Power iteration on A @ A, which is PSD for symmetric A, so the
    # iterate cannot oscillate between +lambda and -lambda.
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = A @ (A @ v)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        new = np.sqrt(nrm)
        if abs(new - est) <= tol * new:
            return float(new)
        est = new
    return float(est)


def spectral_radius(A, tol=1e-10):
    """Largest eigenvalue modulus of a square matrix.

    Dense eigendecomposition up to ``DENSE_EIG_MAX``; above that, power
    iteration for symmetric input and ARPACK for the rest. ``tol`` is the
    relative accuracy asked of the iterative paths.
    """
    A = as_square(A)
    check_positive(tol, "tol")
    n = A.shape[0]
    symmetric = _is_symmetric(A)
    if n <= DENSE_EIG_MAX:
        if symmetric:
            ev = np.linalg.eigvalsh(0.5 * (A + A.T))
        else:
            ev = np.linalg.eigvals(A)
        return float(np.max(np.abs(ev)))
    if symmetric:
        return _symmetric_power_radius(A, tol)
    vals = eigs(A, k=1, which="LM", tol=tol, return_eigenvectors=False)
    return float(np.abs(vals[0]))


def block_norms(Q, m):
    """Matrix of per-block spectral norms of an (N m) x (N m) block matrix."""
    Q = as_square(Q, "Q")
    if m < 1 or Q.shape[0] % m:
        raise ShapeError(f"order {Q.shape[0]} is not divisible into {m}x{m} blocks")
    N = Q.shape[0] // m
    blocks = Q.reshape(N, m, N, m).transpose(0, 2, 1, 3)
    return np.linalg.norm(blocks, ord=2, axis=(2, 3))


def mixed_matrix_norm(Q, m):
    """Infinity norm of the matrix of block 2-norms, blocks of size ``m``.

    Sub-multiplicative on (N m) x (N m) matrices.
    """
    return float(block_norms(Q, m).sum(axis=1).max())
