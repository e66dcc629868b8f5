"""Network linear equations ``z = H y`` split by contiguous row blocks."""

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from ._validation import as_matrix, as_vector
from .exceptions import (
    DegenerateRowError,
    DimensionError,
    InfeasibleSetError,
    ParseError,
    PartitionError,
    ShapeError,
)
from .linalg import affine_projection, kernel_projector, matrix_rank, pseudoinverse

RANK_RTOL = 1e-10

UNIQUE_EXACT = "unique-exact"
MULTIPLE_EXACT = "multiple-exact"
LEAST_SQUARES_ONLY = "least-squares-only"


@dataclass(frozen=True, eq=False)
class NetworkProblem:
    """Global ``(H, z)`` with node ``i`` owning rows ``offsets[i]:offsets[i+1]``.

    Derived per-node quantities (pseudoinverses, kernel projectors, Gram
    matrices) are computed lazily and cached.
    """

    H: np.ndarray
    z: np.ndarray
    sizes: tuple

    def __post_init__(self):
        H = as_matrix(self.H, "H")
        z = as_vector(self.z, "z")
        sizes = tuple(int(s) for s in self.sizes)
        if H.shape[0] != z.size:
            raise PartitionError(f"H has {H.shape[0]} rows but z has {z.size} entries")
        if not sizes or any(s < 1 for s in sizes):
            raise PartitionError("every node needs at least one row")
        if sum(sizes) != H.shape[0]:
            raise PartitionError(f"sizes sum to {sum(sizes)}, H has {H.shape[0]} rows")
        H.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "sizes", sizes)
        for i, Hi in enumerate(self.H_blocks):
            if not np.any(Hi):
                raise PartitionError(f"node {i} holds an all-zero block")

    @property
    def n_nodes(self):
        return len(self.sizes)

    @property
    def dim(self):
        return self.H.shape[1]

    @cached_property
    def offsets(self):
        return np.concatenate([[0], np.cumsum(self.sizes)])

    @cached_property
    def H_blocks(self):
        o = self.offsets
        return [self.H[o[i]:o[i + 1]] for i in range(self.n_nodes)]

    @cached_property
    def z_blocks(self):
        o = self.offsets
        return [self.z[o[i]:o[i + 1]] for i in range(self.n_nodes)]

    @cached_property
    def projectors(self):
        """Stacked kernel projectors, shape (N, m, m)."""
        return np.stack([kernel_projector(Hi) for Hi in self.H_blocks])

    @cached_property
    def min_norm_points(self):
        """Minimum-norm points ``pinv(H_i) z_i`` of each local set, shape (N, m)."""
        return np.stack(
            [pseudoinverse(Hi) @ zi for Hi, zi in zip(self.H_blocks, self.z_blocks)]
        )

    @cached_property
    def grams(self):
        """``H_i^T H_i`` stacked, shape (N, m, m)."""
        return np.stack([Hi.T @ Hi for Hi in self.H_blocks])

    @cached_property
    def local_rhs(self):
        """``H_i^T z_i`` stacked, shape (N, m)."""
        return np.stack([Hi.T @ zi for Hi, zi in zip(self.H_blocks, self.z_blocks)])

    @cached_property
    def block_projector(self):
        """Block-diagonal ``diag(P_1, ..., P_N)`` of order N m."""
        N, m = self.n_nodes, self.dim
        P = np.zeros((N * m, N * m))
        for i, Pi in enumerate(self.projectors):
            P[i * m:(i + 1) * m, i * m:(i + 1) * m] = Pi
        return P

    @cached_property
    def row_probabilities(self):
        """Per node, squared row norms over the squared Frobenius norm.

        Raises DegenerateRowError if any local row is zero.
        """
        probs = []
        for i, Hi in enumerate(self.H_blocks):
            sq = np.einsum("ij,ij->i", Hi, Hi)
            if np.any(sq == 0.0):
                raise DegenerateRowError(f"node {i} has a zero row")
            probs.append(sq / sq.sum())
        return probs

    @cached_property
    def row_cdfs(self):
        """Per-node cumulative row probabilities, padded with inf to (N, max l_i)."""
        cdf = np.full((self.n_nodes, max(self.sizes)), np.inf)
        for i, p in enumerate(self.row_probabilities):
            cdf[i, :p.size] = np.cumsum(p)
        return cdf

    def node_of_row(self, row):
        return int(np.searchsorted(self.offsets, row, side="right") - 1)

    def stack(self, x):
        """Coerce a stacked state to shape (N, m)."""
        x = np.asarray(x, dtype=np.float64)
        if x.size != self.n_nodes * self.dim:
            raise ShapeError(f"state has {x.size} entries, expected {self.n_nodes * self.dim}")
        return x.reshape(self.n_nodes, self.dim)


def partition_problem(H, z, sizes):
    """Split ``(H, z)`` into contiguous row blocks of the given sizes."""
    H = np.asarray(H, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if H.ndim != 2 or z.size != H.shape[0]:
        raise PartitionError("z must have one entry per row of H")
    return NetworkProblem(H, z, tuple(sizes))


def even_sizes(n_rows, n_nodes):
    """Row counts for ``n_nodes`` contiguous blocks differing by at most one."""
    if n_nodes < 1 or n_rows < n_nodes:
        raise PartitionError(f"cannot split {n_rows} rows across {n_nodes} nodes")
    base, extra = divmod(n_rows, n_nodes)
    return tuple(base + (i < extra) for i in range(n_nodes))


@dataclass(frozen=True)
class SolutionInfo:
    kind: str
    rank: int
    x_star: np.ndarray = None
    x_ls: np.ndarray = None
    residual: float = field(default=0.0)

    @property
    def has_exact(self):
        return self.kind in (UNIQUE_EXACT, MULTIPLE_EXACT)


def classify_solutions(problem, tol=RANK_RTOL):
    """Decide whether ``z = H y`` has a unique, many or no exact solutions."""
    H, z = problem.H, problem.z
    m = H.shape[1]
    rank = matrix_rank(H, tol)
    Hp = pseudoinverse(H, tol)
    y = Hp @ z
    residual = float(np.linalg.norm(H @ y - z))
    consistent = residual <= 1e-8 * (1.0 + np.linalg.norm(z))
    full_rank = rank == m
    if consistent:
        kind = UNIQUE_EXACT if full_rank else MULTIPLE_EXACT
    else:
        kind = LEAST_SQUARES_ONLY
    return SolutionInfo(
        kind=kind,
        rank=rank,
        x_star=y if kind == UNIQUE_EXACT else None,
        x_ls=y if full_rank else None,
        residual=residual,
    )


def projection_average(problem, x0):
    """Mean over nodes of the projections of ``x_i(0)`` onto ``{y : Hy = z}``.

    This is the consensual limit of projection consensus started at ``x0``.
    """
    X = problem.stack(x0)
    Hp = pseudoinverse(problem.H)
    # One feasibility check on the first point is enough: all share the set.
    first = affine_projection(problem.H, problem.z, X[0], H_pinv=Hp)
    rest = X[1:] - (X[1:] @ problem.H.T - problem.z) @ Hp.T
    return (first + rest.sum(axis=0)) / problem.n_nodes


def make_synthetic_problem(sizes, dim, rank=None, residual=0.0, rng=None):
    """Random Gaussian problem with prescribed rank.

    ``H = A B`` with Gaussian factors of inner dimension ``rank``; ``z`` is
    ``H y_true`` plus, when ``residual > 0``, a component of that norm
    orthogonal to ``range(H)`` (making the system inconsistent).

    Returns
    -------
    problem : NetworkProblem
    y_true : ndarray
    """
    rng = np.random.default_rng(rng)
    sizes = tuple(int(s) for s in sizes)
    n_rows = sum(sizes)
    rank = dim if rank is None else int(rank)
    if not 1 <= rank <= min(n_rows, dim):
        raise PartitionError(f"rank {rank} impossible for a {n_rows}x{dim} matrix")
    while True:
        if rank == dim:
            H = rng.standard_normal((n_rows, dim))
        else:
            H = rng.standard_normal((n_rows, rank)) @ rng.standard_normal((rank, dim))
        if matrix_rank(H) == rank and all(
            np.all(np.einsum("ij,ij->i", b, b) > 0) for b in np.split(H, np.cumsum(sizes)[:-1])
        ):
            break
    y_true = rng.standard_normal(dim)
    z = H @ y_true
    if residual > 0:
        if rank >= n_rows:
            raise PartitionError("range(H) is the whole space; no residual possible")
        w = rng.standard_normal(n_rows)
        U = np.linalg.svd(H, full_matrices=False)[0][:, :rank]
        w -= U @ (U.T @ w)
        z = z + residual * w / np.linalg.norm(w)
    return NetworkProblem(H, z, sizes), y_true


# ---------------------------------------------------------------- text I/O

def _fmt(v):
    return repr(float(v))


def _data_lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if line and not line.startswith("#"):
                yield lineno, line


def _parse_floats(line, lineno, path):
    try:
        return [float(tok) for tok in line.split()]
    except ValueError as exc:
        raise ParseError(f"bad number ({exc})", lineno, path) from None


def _parse_header(line, n_fields, lineno, path):
    toks = line.split()
    if len(toks) != n_fields:
        raise ParseError(f"expected a {n_fields}-field header, got {line!r}", lineno, path)
    try:
        vals = [int(t) for t in toks]
    except ValueError:
        raise ParseError(f"header must hold integers, got {line!r}", lineno, path) from None
    if any(v < 1 for v in vals):
        raise ParseError("header sizes must be positive", lineno, path)
    return vals


def _read_matrix(lines, path):
    try:
        lineno, line = next(lines)
    except StopIteration:
        raise ParseError("missing matrix header", None, path) from None
    rows, cols = _parse_header(line, 2, lineno, path)
    A = np.empty((rows, cols))
    for r in range(rows):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise ParseError(f"expected {rows} rows, got {r}", None, path) from None
        vals = _parse_floats(line, lineno, path)
        if len(vals) != cols:
            raise DimensionError(f"{path}:{lineno}: expected {cols} values, got {len(vals)}")
        A[r] = vals
    return A


def _read_vector(lines, path):
    try:
        lineno, line = next(lines)
    except StopIteration:
        raise ParseError("missing vector header", None, path) from None
    (dim,) = _parse_header(line, 1, lineno, path)
    v = np.empty(dim)
    for k in range(dim):
        try:
            lineno, line = next(lines)
        except StopIteration:
            raise ParseError(f"expected {dim} entries, got {k}", None, path) from None
        vals = _parse_floats(line, lineno, path)
        if len(vals) != 1:
            raise DimensionError(f"{path}:{lineno}: expected one value, got {len(vals)}")
        v[k] = vals[0]
    return v


def _matrix_text(A):
    out = [f"{A.shape[0]} {A.shape[1]}"]
    out += [" ".join(_fmt(v) for v in row) for row in A]
    return out


def _vector_text(v):
    return [f"{v.size}"] + [_fmt(x) for x in v]


def save_matrix(path, A):
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    Path(path).write_text("\n".join(_matrix_text(A)) + "\n")


def load_matrix(path):
    lines = _data_lines(path)
    A = _read_matrix(lines, path)
    _expect_end(lines, path)
    return A


def save_vector(path, v):
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    Path(path).write_text("\n".join(_vector_text(v)) + "\n")


def load_vector(path):
    lines = _data_lines(path)
    v = _read_vector(lines, path)
    _expect_end(lines, path)
    return v


def _expect_end(lines, path):
    for lineno, line in lines:
        raise ParseError(f"unexpected trailing data {line!r}", lineno, path)


def save_problem(path, H, z):
    """Write a matrix block followed by a vector block to one file."""
    H = np.atleast_2d(np.asarray(H, dtype=np.float64))
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    Path(path).write_text("\n".join(_matrix_text(H) + _vector_text(z)) + "\n")


def load_problem(path):
    """Read ``(H, z)`` written by :func:`save_problem`.

    Lines starting with ``#`` and blank lines are skipped.
    """
    lines = _data_lines(path)
    H = _read_matrix(lines, path)
    z = _read_vector(lines, path)
    _expect_end(lines, path)
    if z.size != H.shape[0]:
        raise DimensionError(f"{path}: H has {H.shape[0]} rows but z has {z.size} entries")
    return H, z


def load_libsvm(path, n_features=None):
    """Dense ``(H, z)`` from libsvm ``label idx:val ...`` lines (1-based)."""
    labels, entries = [], []
    max_idx = 0
    for lineno, line in _data_lines(path):
        toks = line.split()
        try:
            labels.append(float(toks[0]))
        except ValueError:
            raise ParseError(f"bad label {toks[0]!r}", lineno, path) from None
        row = {}
        for tok in toks[1:]:
            idx, sep, val = tok.partition(":")
            try:
                j = int(idx)
                row[j] = float(val)
            except ValueError:
                raise ParseError(f"bad feature {tok!r}", lineno, path) from None
            if not sep or j < 1:
                raise ParseError(f"bad feature {tok!r}", lineno, path)
            if n_features is not None and j > n_features:
                raise DimensionError(
                    f"{path}:{lineno}: feature index {j} exceeds n_features={n_features}"
                )
            max_idx = max(max_idx, j)
        entries.append(row)
    if not labels:
        raise ParseError("no examples found", None, path)
    cols = n_features if n_features is not None else max_idx
    H = np.zeros((len(labels), cols))
    for r, row in enumerate(entries):
        for j, v in row.items():
            H[r, j - 1] = v
    return H, np.asarray(labels)
