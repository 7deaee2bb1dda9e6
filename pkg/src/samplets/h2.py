"""Compressed kernel matrices via interpolation-based far-field approximation.

Admissible cluster pairs (well separated in the cut-off sense) are evaluated
through a tensor Chebyshev interpolant of the kernel, all other pairs exactly.
Nested cluster bases connect interpolation data across levels through transfer
matrices, so the whole samplet-compressed matrix assembles in log-linear time:
a depth-first sweep over column clusters reuses son blocks for father blocks
and releases them as soon as they have been consumed.  Retained entries are
the samplet-samplet interactions of inadmissible pairs plus the root scaling
rows and columns; entries below the a-posteriori threshold are dropped.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .basis import SampletBasis
from .cluster_tree import BoundingBox, Cluster, ClusterTree, cluster_diameter
from .errors import InvalidInput, ResourceLimit
from .kernels import KernelConfig, dense_kernel_matrix, kernel_cross
from .sparse import SparseSym
from .transform import forward_transform_matrix

_DEGENERATE_WIDTH = 1e-300


def chebyshev_nodes_1d(lo: float, hi: float, p: int) -> np.ndarray:
    """p+1 Chebyshev points of the first kind mapped to [lo, hi], ascending."""
    k = np.arange(p + 1)
    ref = -np.cos((2 * k + 1) * np.pi / (2 * (p + 1)))
    return (lo + hi) / 2.0 + (hi - lo) / 2.0 * ref


def chebyshev_points(box: BoundingBox, p: int) -> np.ndarray:
    """Tensor grid of (p+1)^d Chebyshev points in the box, first axis slowest."""
    if p < 0:
        raise InvalidInput(f"interpolation degree must be >= 0, got {p}")
    axes = [chebyshev_nodes_1d(lo, hi, p) for lo, hi in zip(box.lo, box.hi)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _lagrange_1d(nodes: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Barycentric Lagrange basis values, shape (len(targets), len(nodes)).

    Collapsed node sets (zero-width axis) fall back to constant interpolation:
    the first basis function is 1, the others 0.
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    m = nodes.size
    out = np.zeros((targets.size, m))
    if m == 1 or np.ptp(nodes) <= _DEGENERATE_WIDTH:
        out[:, 0] = 1.0
        return out
    weights = np.empty(m)
    for j in range(m):
        weights[j] = 1.0 / np.prod(nodes[j] - np.delete(nodes, j))
    diff = targets[:, None] - nodes[None, :]
    exact = diff == 0.0
    hit_rows = exact.any(axis=1)
    safe = np.where(exact, 1.0, diff)
    terms = weights[None, :] / safe
    out[:] = terms / terms.sum(axis=1, keepdims=True)
    if hit_rows.any():
        out[hit_rows] = exact[hit_rows].astype(np.float64)
    return out


def lagrange_tensor(box: BoundingBox, p: int, points: np.ndarray) -> np.ndarray:
    """Tensor Lagrange basis values at ``points``; shape (n_points, (p+1)^d)."""
    n, d = points.shape
    values = None
    for axis in range(d):
        nodes = chebyshev_nodes_1d(box.lo[axis], box.hi[axis], p)
        a = _lagrange_1d(nodes, points[:, axis])
        if values is None:
            values = a
        else:
            values = (values[:, :, None] * a[:, None, :]).reshape(n, -1)
    return values


def transfer_matrix(parent: BoundingBox, son: BoundingBox, p: int) -> np.ndarray:
    """T[s, t] = (parent Lagrange polynomial s)(son interpolation point t)."""
    t = np.ones((1, 1))
    for axis in range(parent.lo.size):
        par_nodes = chebyshev_nodes_1d(parent.lo[axis], parent.hi[axis], p)
        son_nodes = chebyshev_nodes_1d(son.lo[axis], son.hi[axis], p)
        t = np.kron(t, _lagrange_1d(par_nodes, son_nodes).T)
    return t


def coupling_matrix(cfg: KernelConfig, box_a: BoundingBox, box_b: BoundingBox,
                    p: int) -> np.ndarray:
    """Kernel evaluated on the two clusters' interpolation grids."""
    return kernel_cross(cfg, chebyshev_points(box_a, p), chebyshev_points(box_b, p))


@dataclass(eq=False)
class InterpolationScheme:
    """Per-cluster Chebyshev grids and son transfer matrices for one tree."""

    tree: ClusterTree
    degree: int
    nodes: list[np.ndarray] = field(default_factory=list)
    transfers: dict[int, np.ndarray] = field(default_factory=dict)

    @classmethod
    def build(cls, tree: ClusterTree, p: int) -> "InterpolationScheme":
        if p < 0:
            raise InvalidInput(f"interpolation degree must be >= 0, got {p}")
        scheme = cls(tree=tree, degree=p)
        scheme.nodes = [chebyshev_points(c.bbox, p) for c in tree.clusters]
        for cluster in tree.clusters:
            if cluster.sons is not None:
                for son in cluster.sons:
                    scheme.transfers[son.index] = transfer_matrix(cluster.bbox, son.bbox, p)
        return scheme


@dataclass(eq=False)
class MultiscaleClusterBasis:
    """Samplet-transformed nested cluster bases: V_phi and V_sigma per cluster."""

    scheme: InterpolationScheme
    v_phi: list[np.ndarray]
    v_sigma: list[np.ndarray]


def compute_multiscale_cluster_basis(basis: SampletBasis,
                                     scheme: InterpolationScheme) -> MultiscaleClusterBasis:
    """Bottom-up pass: leaves transform Lagrange evaluations, fathers transform
    the stacked, transfer-mapped scaling parts of their sons."""
    if scheme.tree is not basis.tree:
        raise InvalidInput("interpolation scheme was built for a different tree")
    tree = basis.tree
    coords = tree.permuted_coords()
    v_phi: list[np.ndarray | None] = [None] * len(tree.clusters)
    v_sigma: list[np.ndarray | None] = [None] * len(tree.clusters)

    def ascend(cluster: Cluster) -> np.ndarray:
        if cluster.is_leaf:
            v_in = lagrange_tensor(cluster.bbox, scheme.degree,
                                   coords[cluster.begin:cluster.end])
        else:
            parts = [ascend(son) @ scheme.transfers[son.index].T for son in cluster.sons]
            v_in = np.vstack(parts)
        block = basis.block(cluster)
        v = block.q_matrix.T @ v_in
        v_phi[cluster.index] = v[:block.n_scaling]
        v_sigma[cluster.index] = v[block.n_scaling:]
        return v_phi[cluster.index]

    ascend(tree.root)
    return MultiscaleClusterBasis(scheme=scheme, v_phi=v_phi, v_sigma=v_sigma)


@dataclass(eq=False)
class _AssemblyContext:
    basis: SampletBasis
    cfg: KernelConfig
    eta: float
    mbasis: MultiscaleClusterBasis
    coords: np.ndarray
    diams: np.ndarray
    los: np.ndarray
    his: np.ndarray
    visited_pairs: int = 0

    def admissible(self, a: Cluster, b: Cluster) -> bool:
        if not np.isfinite(self.eta):
            return False
        gap = np.maximum(0.0, np.maximum(self.los[a.index] - self.his[b.index],
                                         self.los[b.index] - self.his[a.index]))
        dist = float(np.sqrt(gap @ gap))
        if dist <= 0.0:
            return False
        return dist >= self.eta * max(self.diams[a.index], self.diams[b.index])

    def stacked_v(self, c: Cluster) -> np.ndarray:
        return np.vstack([self.mbasis.v_phi[c.index], self.mbasis.v_sigma[c.index]])

    def kernel_block(self, a: Cluster, b: Cluster) -> np.ndarray:
        return kernel_cross(self.cfg, self.coords[a.begin:a.end],
                            self.coords[b.begin:b.end])


def _context(basis: SampletBasis, cfg: KernelConfig, eta: float, p: int) -> _AssemblyContext:
    if not eta > 0:
        raise InvalidInput(f"eta must be positive, got {eta}")
    tree = basis.tree
    scheme = InterpolationScheme.build(tree, p)
    mbasis = compute_multiscale_cluster_basis(basis, scheme)
    diams = np.array([cluster_diameter(c.bbox) for c in tree.clusters])
    los = np.stack([c.bbox.lo for c in tree.clusters])
    his = np.stack([c.bbox.hi for c in tree.clusters])
    return _AssemblyContext(basis=basis, cfg=cfg, eta=eta, mbasis=mbasis,
                            coords=tree.permuted_coords(), diams=diams,
                            los=los, his=his)


def _determine_block(ctx: _AssemblyContext, nu: Cluster, nu_p: Cluster) -> np.ndarray:
    """Approximation of the full two-cluster interaction in the output bases.

    Rows are nu's scaling functions followed by its samplets, columns likewise
    for nu_p.  Admissible pairs go through the interpolation path, leaf pairs
    are exact, mixed pairs recurse on the non-leaf side, and interior pairs
    recurse on both sides, each time transforming son scaling parts upward.
    """
    ctx.visited_pairs += 1
    basis = ctx.basis
    if ctx.admissible(nu, nu_p):
        s = kernel_cross(ctx.cfg, ctx.mbasis.scheme.nodes[nu.index],
                         ctx.mbasis.scheme.nodes[nu_p.index])
        return ctx.stacked_v(nu) @ s @ ctx.stacked_v(nu_p).T
    if nu.is_leaf and nu_p.is_leaf:
        q_row = basis.block(nu).q_matrix
        q_col = basis.block(nu_p).q_matrix
        return q_row.T @ ctx.kernel_block(nu, nu_p) @ q_col
    if nu.is_leaf:
        parts = []
        for son in nu_p.sons:
            sub = _determine_block(ctx, nu, son)
            parts.append(sub[:, :basis.block(son).n_scaling])
        return np.hstack(parts) @ basis.block(nu_p).q_matrix
    if nu_p.is_leaf:
        parts = []
        for son in nu.sons:
            sub = _determine_block(ctx, son, nu_p)
            parts.append(sub[:basis.block(son).n_scaling, :])
        return basis.block(nu).q_matrix.T @ np.vstack(parts)
    rows = []
    for son in nu.sons:
        cols = []
        for son_p in nu_p.sons:
            sub = _determine_block(ctx, son, son_p)
            cols.append(sub[:basis.block(son).n_scaling, :basis.block(son_p).n_scaling])
        rows.append(np.hstack(cols))
    return basis.block(nu).q_matrix.T @ np.vstack(rows) @ basis.block(nu_p).q_matrix


def recursively_determine_block(basis: SampletBasis, cfg: KernelConfig,
                                nu: Cluster, nu_p: Cluster,
                                eta: float, p: int) -> np.ndarray:
    """Standalone entry point for a single two-cluster block (test surface)."""
    ctx = _context(basis, cfg, eta, p)
    return _determine_block(ctx, nu, nu_p)


@dataclass(frozen=True)
class AssemblyStats:
    visited_pairs: int
    assembly_seconds: float
    peak_block_bytes: int


@dataclass(eq=False)
class CompressedKernelMatrix:
    """Sparse samplet-compressed kernel matrix K with its assembly parameters."""

    matrix: SparseSym
    kernel: KernelConfig
    eta: float
    p: int
    epsilon: float
    stats: AssemblyStats

    @property
    def n(self) -> int:
        return self.matrix.n

    @property
    def anz(self) -> float:
        return self.matrix.nnz_full / self.matrix.n


def assemble_compressed_kernel(basis: SampletBasis, cfg: KernelConfig,
                               eta: float = 1.25, p: int = 3,
                               epsilon: float = 1e-3) -> CompressedKernelMatrix:
    """Assemble the samplet-compressed kernel matrix in a single sweep.

    Column clusters are processed sons-first, so fine blocks exist before the
    father blocks that consume them; leaf-row blocks are cached across columns
    and popped exactly once.  Stored data are the samplet-samplet parts of
    every inadmissible pair plus the root scaling rows and columns; the strict
    lower triangle is assembled and mirrored, making the result exactly
    symmetric.  Off-diagonal entries below ``epsilon`` are dropped at the end.
    """
    if epsilon < 0:
        raise InvalidInput(f"epsilon must be nonnegative, got {epsilon}")
    start = time.perf_counter()
    ctx = _context(basis, cfg, eta, p)
    tree = basis.tree
    root = tree.root
    n = basis.size

    rows_out: list[np.ndarray] = []
    cols_out: list[np.ndarray] = []
    vals_out: list[np.ndarray] = []

    cache: dict[tuple[int, int], np.ndarray] = {}
    cache_bytes = 0
    peak_bytes = 0

    def global_rows(cluster: Cluster, include_scaling: bool) -> np.ndarray:
        block = basis.block(cluster)
        sam = np.arange(block.samplet_offset, block.samplet_offset + block.n_samplets,
                        dtype=np.int64)
        if not include_scaling:
            return sam
        if cluster is not root:
            raise AssertionError("only root scaling functions have global indices")
        return np.concatenate([np.arange(block.n_scaling, dtype=np.int64), sam])

    def emit(block_vals: np.ndarray, gi: np.ndarray, gj: np.ndarray):
        if gi.size == 0 or gj.size == 0:
            return
        ii = np.repeat(gi, gj.size)
        jj = np.tile(gj, gi.size)
        vv = block_vals.ravel()
        keep = ii >= jj
        if not keep.all():
            ii, jj, vv = ii[keep], jj[keep], vv[keep]
        rows_out.append(ii)
        cols_out.append(jj)
        vals_out.append(np.ascontiguousarray(vv))

    def store(nu: Cluster, col: Cluster, f: np.ndarray):
        ns_r = basis.block(nu).n_scaling
        ns_c = basis.block(col).n_scaling
        if nu is root and col is root:
            emit(f, global_rows(root, True), global_rows(root, True))
        elif col is root:
            emit(f[ns_r:, :], global_rows(nu, False), global_rows(root, True))
        elif nu is root:
            return  # upper strip; mirrored from the root-column pass
        else:
            off_r = basis.block(nu).samplet_offset
            off_c = basis.block(col).samplet_offset
            if off_r < off_c:
                return  # entirely upper triangle; the transposed pair stores it
            emit(f[ns_r:, ns_c:], global_rows(nu, False), global_rows(col, False))

    def setup_row(nu: Cluster, col: Cluster) -> np.ndarray:
        nonlocal cache_bytes, peak_bytes
        if not nu.is_leaf:
            parts = []
            for son in nu.sons:
                if ctx.admissible(son, col):
                    sub = _determine_block(ctx, son, col)
                else:
                    sub = setup_row(son, col)
                parts.append(sub[:basis.block(son).n_scaling, :])
            f = basis.block(nu).q_matrix.T @ np.vstack(parts)
        elif col.is_leaf:
            f = _determine_block(ctx, nu, col)
        else:
            parts = []
            for son_c in col.sons:
                if ctx.admissible(nu, son_c):
                    sub = _determine_block(ctx, nu, son_c)
                else:
                    sub = cache.pop((nu.index, son_c.index))
                    cache_bytes -= sub.nbytes
                parts.append(sub[:, :basis.block(son_c).n_scaling])
            f = np.hstack(parts) @ basis.block(col).q_matrix
        if nu.is_leaf and col is not root:
            cache[(nu.index, col.index)] = f
            cache_bytes += f.nbytes
            peak_bytes = max(peak_bytes, cache_bytes)
        store(nu, col, f)
        return f

    def setup_column(col: Cluster):
        if col.sons is not None:
            for son in col.sons:
                setup_column(son)
        setup_row(root, col)

    setup_column(root)
    if cache:
        # admissibility monotonicity guarantees every cached block is consumed
        raise AssertionError(f"{len(cache)} assembly blocks were never consumed")

    rows = np.concatenate(rows_out) if rows_out else np.empty(0, dtype=np.int64)
    cols = np.concatenate(cols_out) if cols_out else np.empty(0, dtype=np.int64)
    vals = np.concatenate(vals_out) if vals_out else np.empty(0)
    keep = (np.abs(vals) >= epsilon) | (rows == cols)
    matrix = SparseSym.from_triplets(n, rows[keep], cols[keep], vals[keep])
    stats = AssemblyStats(visited_pairs=ctx.visited_pairs,
                          assembly_seconds=time.perf_counter() - start,
                          peak_block_bytes=int(peak_bytes))
    return CompressedKernelMatrix(matrix=matrix, kernel=cfg, eta=eta, p=p,
                                  epsilon=epsilon, stats=stats)


def dense_compressed_oracle(cfg: KernelConfig, basis: SampletBasis,
                            cap: int = 2 ** 12) -> np.ndarray:
    """Exact two-sided samplet transform of the dense kernel matrix (oracle)."""
    n = basis.size
    if n > cap:
        raise ResourceLimit(f"dense oracle capped at N <= {cap}, got {n}")
    k = dense_kernel_matrix(cfg, basis.tree.cloud, cap=cap)
    return forward_transform_matrix(basis, forward_transform_matrix(basis, k).T)


def admissible_pair_count(tree: ClusterTree, eta: float) -> int:
    """Number of cluster pairs visited by the pruned block recursion.

    Descendants of an admissible pair are never visited, which is what bounds
    the assembly cost; leaf-leaf pairs terminate the recursion.
    """
    if not eta > 0:
        raise InvalidInput(f"eta must be positive, got {eta}")
    diams = np.array([cluster_diameter(c.bbox) for c in tree.clusters])
    los = np.stack([c.bbox.lo for c in tree.clusters])
    his = np.stack([c.bbox.hi for c in tree.clusters])

    def admissible(a: Cluster, b: Cluster) -> bool:
        if not np.isfinite(eta):
            return False
        gap = np.maximum(0.0, np.maximum(los[a.index] - his[b.index],
                                         los[b.index] - his[a.index]))
        dist = float(np.sqrt(gap @ gap))
        if dist <= 0.0:
            return False
        return dist >= eta * max(diams[a.index], diams[b.index])

    count = 0
    stack = [(tree.root, tree.root)]
    while stack:
        a, b = stack.pop()
        count += 1
        if admissible(a, b) or (a.is_leaf and b.is_leaf):
            continue
        for sa in (a.sons or (a,)):
            for sb in (b.sons or (b,)):
                stack.append((sa, sb))
    return count
