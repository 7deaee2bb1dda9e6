"""Sparse symmetric storage, fill-reducing orderings, Cholesky, and field sampling.

The factorization is a simplicial sparse Cholesky: a symbolic phase derives
the elimination tree and the exact pattern of the factor, then a left-looking
numeric phase fills it column by column.  The default fill-reducing ordering
is an approximate minimum degree (quotient graph with element absorption and
the classic approximate external degree bound); a geometric nested dissection
driven by the samplet support boxes is available as an alternative.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from math import sqrt

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInput, NonPositivePivot


# ---------------------------------------------------------------------------
# storage


@dataclass(eq=False)
class SparseSym:
    """Symmetric matrix; the lower triangle in compressed-column form.

    The diagonal is always stored explicitly, row indices are strictly
    increasing within each column, and the first entry of every column is the
    diagonal element.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.indptr.shape != (self.n + 1,):
            raise InvalidInput("indptr must have length n+1")
        starts = self.indptr[:-1]
        if np.any(self.indptr[1:] <= starts):
            raise InvalidInput("every column must hold at least its diagonal entry")
        if not np.array_equal(self.indices[starts], np.arange(self.n)):
            raise InvalidInput("every column must start with its diagonal entry")
        if self.indices.size > 1:
            gaps = np.diff(self.indices)
            inside = np.ones(gaps.size, dtype=bool)
            inside[self.indptr[1:-1] - 1] = False
            if np.any(gaps[inside] <= 0):
                raise InvalidInput("row indices must strictly increase within columns")

    @classmethod
    def from_triplets(cls, n: int, rows, cols, vals) -> "SparseSym":
        """Build from coordinate data; upper entries are mirrored, duplicates summed."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        swap = rows < cols
        rows2 = np.where(swap, cols, rows)
        cols2 = np.where(swap, rows, cols)
        # force an explicit diagonal
        rows2 = np.concatenate([rows2, np.arange(n, dtype=np.int64)])
        cols2 = np.concatenate([cols2, np.arange(n, dtype=np.int64)])
        vals2 = np.concatenate([vals, np.zeros(n)])
        mat = sp.csc_matrix((vals2, (rows2, cols2)), shape=(n, n))
        mat.sum_duplicates()
        mat.sort_indices()
        return cls(n=n, indptr=mat.indptr.astype(np.int64),
                   indices=mat.indices.astype(np.int64), values=mat.data)

    @classmethod
    def from_dense(cls, a: np.ndarray, tol: float = 0.0) -> "SparseSym":
        a = np.asarray(a, dtype=np.float64)
        n = a.shape[0]
        if a.shape != (n, n):
            raise InvalidInput("dense input must be square")
        if np.max(np.abs(a - a.T)) > tol:
            raise InvalidInput("dense input is not symmetric")
        rows, cols = np.nonzero(np.tril(a))
        return cls.from_triplets(n, rows, cols, a[rows, cols])

    @property
    def nnz_lower(self) -> int:
        return int(self.indices.size)

    @property
    def nnz_full(self) -> int:
        return 2 * self.nnz_lower - self.n

    def diagonal(self) -> np.ndarray:
        return self.values[self.indptr[:-1]]

    def to_scipy_full(self) -> sp.csc_matrix:
        lower = sp.csc_matrix((self.values, self.indices, self.indptr), shape=(self.n, self.n))
        strict = sp.tril(lower, k=-1)
        return (lower + strict.T).tocsc()

    def to_dense(self) -> np.ndarray:
        return self.to_scipy_full().toarray()

    def frobenius_norm(self) -> float:
        diag = self.diagonal()
        total = 2.0 * float(np.sum(self.values**2)) - float(np.sum(diag**2))
        return sqrt(total)


def add_ridge(a: SparseSym, rho: float) -> SparseSym:
    """Shift the diagonal by rho > 0; the sparsity pattern is unchanged."""
    if not rho > 0:
        raise InvalidInput(f"ridge parameter must be positive, got {rho}")
    values = a.values.copy()
    values[a.indptr[:-1]] += rho
    return SparseSym(n=a.n, indptr=a.indptr.copy(), indices=a.indices.copy(), values=values)


def anz(obj) -> float:
    """Average number of nonzero entries per row.

    Symmetric matrices count mirrored entries on both sides; Cholesky factors
    count the stored lower triangle only.
    """
    if isinstance(obj, SparseSym):
        return obj.nnz_full / obj.n
    if isinstance(obj, CholeskyFactor):
        return obj.nnz / obj.n
    raise InvalidInput(f"anz is defined for SparseSym and CholeskyFactor, got {type(obj)!r}")


# ---------------------------------------------------------------------------
# permutations


@dataclass(frozen=True)
class Permutation:
    """Bijection with both directions: new = rank[old], old = order[new]."""

    order: np.ndarray
    rank: np.ndarray

    @classmethod
    def from_order(cls, order) -> "Permutation":
        order = np.asarray(order, dtype=np.int64)
        n = order.size
        rank = np.full(n, -1, dtype=np.int64)
        rank[order] = np.arange(n, dtype=np.int64)
        if np.any(rank < 0):
            raise InvalidInput("order is not a permutation")
        return cls(order=order, rank=rank)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        idx = np.arange(n, dtype=np.int64)
        return cls(order=idx, rank=idx.copy())

    @property
    def n(self) -> int:
        return self.order.size


def permute_sym(a: SparseSym, perm: Permutation) -> SparseSym:
    """The matrix P A P^T, i.e. entry (i, j) moves to (rank[i], rank[j])."""
    if perm.n != a.n:
        raise InvalidInput("permutation size does not match matrix size")
    cols = np.repeat(np.arange(a.n, dtype=np.int64), np.diff(a.indptr))
    rows = a.indices
    return SparseSym.from_triplets(a.n, perm.rank[rows], perm.rank[cols], a.values)


# ---------------------------------------------------------------------------
# fill-reducing orderings


def _adjacency(a: SparseSym) -> list[np.ndarray]:
    """Off-diagonal adjacency lists of the symmetric pattern."""
    full = a.to_scipy_full().tocsr()
    out = []
    for i in range(a.n):
        nbrs = full.indices[full.indptr[i]:full.indptr[i + 1]]
        out.append(nbrs[nbrs != i].astype(np.int64))
    return out


def amd_order(a: SparseSym) -> np.ndarray:
    """Approximate minimum degree elimination order.

    Quotient-graph variant: eliminated pivots become elements, direct edges
    covered by an element are pruned, fully covered elements are absorbed, and
    variable degrees are tracked by the approximate external degree bound
    |A_i| + |L_p| + sum over remaining elements e of |L_e minus L_p|.
    Ties break on the smallest index, so the order is deterministic.
    """
    n = a.n
    adj = [set(lst) for lst in _adjacency(a)]
    elems: list[set[int]] = [set() for _ in range(n)]
    bnd: dict[int, set[int]] = {}
    degree = np.array([len(s) for s in adj], dtype=np.int64)
    alive = np.ones(n, dtype=bool)
    absorbed: set[int] = set()
    heap = [(int(degree[i]), i) for i in range(n)]
    heapq.heapify(heap)
    order = np.empty(n, dtype=np.int64)
    w: dict[int, int] = {}

    for step in range(n):
        while True:
            d, p = heapq.heappop(heap)
            if alive[p] and d == degree[p]:
                break
        alive[p] = False
        order[step] = p

        front = set(adj[p])
        for e in elems[p]:
            if e not in absorbed:
                front |= bnd[e]
                absorbed.add(e)
                del bnd[e]
        front.discard(p)
        front = {i for i in front if alive[i]}

        # |L_e \ L_p| for every element touching the front
        w.clear()
        for i in front:
            for e in elems[i]:
                if e not in absorbed and e not in w:
                    w[e] = len(bnd[e])
        for i in front:
            for e in elems[i]:
                if e in w:
                    w[e] -= 1

        remaining = n - step - 1
        front_size = len(front)
        for i in front:
            adj[i] -= front
            adj[i].discard(p)
            kept = set()
            ext = 0
            for e in elems[i]:
                if e in absorbed:
                    continue
                if w.get(e, 0) == 0:
                    absorbed.add(e)  # boundary fully covered by the new element
                    bnd.pop(e, None)
                    continue
                kept.add(e)
                ext += w[e]
            kept.add(p)
            elems[i] = kept
            d_new = min(remaining - 1, len(adj[i]) + (front_size - 1) + ext)
            d_new = max(d_new, 0)
            if d_new != degree[i]:
                degree[i] = d_new
                heapq.heappush(heap, (d_new, i))

        bnd[p] = front

    return order


def geometric_dissection_order(los: np.ndarray, his: np.ndarray,
                               min_block: int = 32) -> np.ndarray:
    """Recursive coordinate bisection on support boxes; separators come last.

    Splits at the median support center along the longest axis; supports
    straddling the cut form the separator and are ordered after both halves.
    """
    los = np.asarray(los, dtype=np.float64)
    his = np.asarray(his, dtype=np.float64)
    centers = (los + his) / 2.0
    out: list[np.ndarray] = []

    def recurse(idx: np.ndarray):
        if idx.size <= min_block:
            out.append(np.sort(idx))
            return
        c = centers[idx]
        extent = c.max(axis=0) - c.min(axis=0)
        axis = int(np.argmax(extent))
        cut = float(np.median(c[:, axis]))
        left = his[idx, axis] <= cut
        right = los[idx, axis] > cut
        sep = ~(left | right)
        if not left.any() or not right.any():
            # geometry degenerate along every useful axis: plain median split
            half = idx.size // 2
            ordered = idx[np.lexsort((idx, c[:, axis]))]
            recurse(ordered[:half])
            recurse(ordered[half:])
            return
        recurse(idx[left])
        recurse(idx[right])
        out.append(np.sort(idx[sep]))

    recurse(np.arange(los.shape[0], dtype=np.int64))
    return np.concatenate(out)


def basis_support_boxes(basis) -> tuple[np.ndarray, np.ndarray]:
    """Per-coefficient support boxes (the owning cluster's bounding box)."""
    n = basis.size
    d = basis.tree.cloud.dim
    los = np.empty((n, d))
    his = np.empty((n, d))
    root = basis.tree.root
    los[:basis.n_root_scaling] = root.bbox.lo
    his[:basis.n_root_scaling] = root.bbox.hi
    for cluster in basis.tree.clusters:
        block = basis.block(cluster)
        if block.n_samplets:
            sl = slice(block.samplet_offset, block.samplet_offset + block.n_samplets)
            los[sl] = cluster.bbox.lo
            his[sl] = cluster.bbox.hi
    return los, his


def fill_reducing_order(pattern: SparseSym, method: str = "amd",
                        supports: tuple[np.ndarray, np.ndarray] | None = None
                        ) -> Permutation:
    """A permutation whose Cholesky fill does not exceed the natural order's.

    ``method="amd"`` needs only the pattern; ``method="geometric"`` performs
    nested dissection on per-index support boxes and requires ``supports``.
    ``method="natural"`` returns the identity.
    """
    if method == "natural":
        return Permutation.identity(pattern.n)
    if method == "amd":
        return Permutation.from_order(amd_order(pattern))
    if method == "geometric":
        if supports is None:
            raise InvalidInput("geometric ordering requires support boxes")
        return Permutation.from_order(geometric_dissection_order(*supports))
    raise InvalidInput(f"unknown ordering method {method!r}")


# ---------------------------------------------------------------------------
# Cholesky


def _lower_row_lists(a: SparseSym) -> tuple[np.ndarray, np.ndarray]:
    """CSR-like view of the strict lower triangle: per row, the columns j < i."""
    cols = np.repeat(np.arange(a.n, dtype=np.int64), np.diff(a.indptr))
    rows = a.indices
    strict = rows > cols
    rows = rows[strict]
    cols = cols[strict]
    order = np.lexsort((cols, rows))
    rows = rows[order]
    cols = cols[order]
    rowptr = np.zeros(a.n + 1, dtype=np.int64)
    np.add.at(rowptr, rows + 1, 1)
    np.cumsum(rowptr, out=rowptr)
    return rowptr, cols


def elimination_tree(a: SparseSym) -> np.ndarray:
    """Parent array of the elimination tree (path-compressed construction)."""
    n = a.n
    rowptr, rowcols = _lower_row_lists(a)
    parent = np.full(n, -1, dtype=np.int64)
    ancestor = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        for idx in range(rowptr[k], rowptr[k + 1]):
            j = rowcols[idx]
            while j != -1 and j < k:
                j_next = ancestor[j]
                ancestor[j] = k
                if j_next == -1:
                    parent[j] = k
                j = j_next
    return parent


def symbolic_cholesky(a: SparseSym) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Factor pattern via elimination-tree reachability.

    Returns (indptr, indices, parent) for the lower-triangular factor with
    sorted row indices and the diagonal leading every column.
    """
    n = a.n
    parent = elimination_tree(a)
    rowptr, rowcols = _lower_row_lists(a)
    mark = np.full(n, -1, dtype=np.int64)
    pattern_rows: list[np.ndarray] = []
    counts = np.ones(n, dtype=np.int64)  # diagonal entries
    scratch: list[int] = []
    for k in range(n):
        mark[k] = k
        scratch.clear()
        for idx in range(rowptr[k], rowptr[k + 1]):
            j = rowcols[idx]
            while mark[j] != k:
                mark[j] = k
                scratch.append(j)
                j = parent[j]
                if j == -1:
                    break
        cols_k = np.array(scratch, dtype=np.int64)
        pattern_rows.append(cols_k)
        counts[cols_k] += 1

    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int64)
    fill = indptr[:-1].copy()
    indices[fill] = np.arange(n)  # diagonal first in every column
    fill += 1
    for k in range(n):
        cols_k = pattern_rows[k]
        indices[fill[cols_k]] = k  # rows are appended in increasing k: sorted
        fill[cols_k] += 1
    return indptr, indices, parent


@dataclass(eq=False)
class CholeskyFactor:
    """Lower-triangular factor of P (A + already-applied ridge) P^T."""

    n: int
    perm: Permutation
    rho: float
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_scipy(self) -> sp.csc_matrix:
        return sp.csc_matrix((self.values, self.indices, self.indptr), shape=(self.n, self.n))

    def matvec(self, z: np.ndarray) -> np.ndarray:
        """L @ z for a vector or a stack of columns."""
        return self.to_scipy() @ z

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve A x = b where A is the matrix this factor was computed from."""
        b = np.asarray(b, dtype=np.float64)
        y = b[self.perm.order].copy()
        y = self.solve_lower(y)
        y = self.solve_lower_transpose(y)
        return y[self.perm.rank]

    def solve_lower(self, b: np.ndarray) -> np.ndarray:
        """Forward substitution L y = b (in permuted coordinates)."""
        y = np.array(b, dtype=np.float64, copy=True)
        lp, li, lx = self.indptr, self.indices, self.values
        for j in range(self.n):
            lo, hi = lp[j], lp[j + 1]
            y[j] /= lx[lo]
            if hi > lo + 1:
                update = np.multiply.outer(lx[lo + 1:hi], y[j])
                y[li[lo + 1:hi]] -= update
        return y

    def solve_lower_transpose(self, b: np.ndarray) -> np.ndarray:
        """Backward substitution L^T x = b (in permuted coordinates)."""
        x = np.array(b, dtype=np.float64, copy=True)
        lp, li, lx = self.indptr, self.indices, self.values
        for j in range(self.n - 1, -1, -1):
            lo, hi = lp[j], lp[j + 1]
            if hi > lo + 1:
                x[j] -= lx[lo + 1:hi] @ x[li[lo + 1:hi]]
            x[j] /= lx[lo]
        return x


def sparse_cholesky(a: SparseSym, perm: Permutation | None = None,
                    rho: float = 0.0) -> CholeskyFactor:
    """Simplicial Cholesky of P A P^T with an exact symbolic pattern.

    ``rho`` only records the ridge already contained in ``a``.  Raises
    NonPositivePivot when a pivot fails to be positive, reporting the column
    of the permuted matrix at fault.
    """
    if perm is None:
        perm = Permutation.identity(a.n)
    ap = permute_sym(a, perm)
    lp, li, parent = symbolic_cholesky(ap)
    n = a.n
    lx = np.zeros(li.size, dtype=np.float64)

    work = np.zeros(n)
    link: list[list[int]] = [[] for _ in range(n)]
    ptr = np.array(lp, dtype=np.int64, copy=True)  # consume pointer per column

    ap_indptr, ap_indices, ap_values = ap.indptr, ap.indices, ap.values
    for j in range(n):
        rows_a = ap_indices[ap_indptr[j]:ap_indptr[j + 1]]
        work[rows_a] = ap_values[ap_indptr[j]:ap_indptr[j + 1]]
        for k in link[j]:
            start = ptr[k]
            stop = lp[k + 1]
            ljk = lx[start]
            work[li[start:stop]] -= ljk * lx[start:stop]
            ptr[k] = start + 1
            if start + 1 < stop:
                link[li[start + 1]].append(k)
        lo, hi = lp[j], lp[j + 1]
        pivot = work[j]
        if not pivot > 0.0:
            raise NonPositivePivot(j, pivot)
        rows_j = li[lo:hi]
        vals = work[rows_j]
        work[rows_j] = 0.0
        lx[lo:hi] = vals / sqrt(pivot)
        ptr[j] = lo + 1
        if lo + 1 < hi:
            link[li[lo + 1]].append(j)
        link[j] = []

    return CholeskyFactor(n=n, perm=perm, rho=rho, indptr=lp, indices=li, values=lx)


def factorization_residual(a: SparseSym, factor: CholeskyFactor) -> float:
    """|| P A P^T - L L^T ||_F relative to ||A||_F."""
    ap = permute_sym(a, factor.perm).to_scipy_full()
    l = factor.to_scipy()
    diff = (ap - l @ l.T).tocoo()
    denom = a.frobenius_norm()
    return float(np.linalg.norm(diff.data) / denom) if denom > 0 else 0.0


# ---------------------------------------------------------------------------
# Gaussian random fields


def normal_stream(seed: int, stream: int, n: int) -> np.ndarray:
    """Deterministic standard normals from a keyed counter-based generator.

    Each (seed, stream) pair owns an independent Philox stream; variates are
    produced by the Box-Muller transform, so a sample never depends on how
    many other samples were drawn.
    """
    if seed < 0 or stream < 0:
        raise InvalidInput("seed and stream index must be nonnegative")
    bits = np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))
    half = (n + 1) // 2
    u = bits.random(2 * half)
    radius = np.sqrt(-2.0 * np.log1p(-u[:half]))  # 1 - u in (0, 1]
    angle = 2.0 * np.pi * u[half:]
    z = np.empty(2 * half)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:n]


def sample_grf(factor: CholeskyFactor, basis, seed: int, n_samples: int) -> np.ndarray:
    """Draw Gaussian random fields with covariance P^T L L^T P, returned in
    the point basis and original point order, one row per sample.

    Each sample runs through its own stream and its own width-1 linear
    algebra, so sample s is bit-identical no matter how many samples are
    requested or in which batches they are drawn.
    """
    n = factor.n
    if basis.size != n:
        raise InvalidInput("factor and basis sizes differ")
    from .transform import inverse_transform_matrix

    l_mat = factor.to_scipy()
    fields = np.empty((n_samples, n))
    for s in range(n_samples):
        z = normal_stream(seed, s, n)
        correlated = l_mat @ z                   # L z, permuted coordinates
        samplet_coeffs = correlated[factor.perm.rank]
        fields[s] = inverse_transform_matrix(basis, samplet_coeffs[:, None])[:, 0]
    return fields
