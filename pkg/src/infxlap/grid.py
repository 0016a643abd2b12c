"""Rectangular grid, frame field, and discrete Riemannian calculus.

Scalar fields are arrays of shape ``(ny, nx)`` indexed ``[j, i]`` with
``x_i = xmin + i*hx`` and ``y_j = ymin + j*hy``.  Vector fields carry a
trailing axis of length 2 (frame components), symmetric matrix fields a
trailing axis of length 3 storing ``(M11, M12, M22)`` so symmetry is
exact by construction.

The frame is a per-node invertible 2x2 matrix ``A`` with rows giving the
coefficients of the two vector fields in the Euclidean basis; the
frame gradient of u is ``A (du/dx, du/dy)``.  First derivatives use
central differences at interior nodes (second order) and third-order
one-sided stencils on the boundary rows, so that nesting two first
derivatives stays second-order accurate up to the boundary.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    """Invalid grid geometry."""


class FrameSingular(ValueError):
    """Frame determinant below the floor at some node."""

    def __init__(self, i: int, j: int, x: float, y: float, det: float):
        super().__init__(
            f"|det A| = {abs(det):.3e} below floor at node (i={i}, j={j}), "
            f"(x={x:g}, y={y:g})"
        )
        self.node = (i, j)
        self.det = det


@dataclass(frozen=True)
class Grid2D:
    """Node lattice on the rectangle [xmin, xmax] x [ymin, ymax]."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise GridError(f"need nx, ny >= 3, got nx={self.nx}, ny={self.ny}")
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise GridError("nonpositive domain extent")

    @property
    def hx(self) -> float:
        return (self.xmax - self.xmin) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.ymax - self.ymin) / (self.ny - 1)

    @property
    def xs(self) -> np.ndarray:
        return self.xmin + self.hx * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.ymin + self.hy * np.arange(self.ny)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays X, Y of shape (ny, nx)."""
        return np.meshgrid(self.xs, self.ys)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    def interior_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[1:-1, 1:-1] = True
        return m

    def boundary_mask(self) -> np.ndarray:
        return ~self.interior_mask()

    def sample(self, expr) -> np.ndarray:
        """Evaluate a callable/expression f(x, y) at every node."""
        out = np.empty(self.shape)
        xs, ys = self.xs, self.ys
        for j in range(self.ny):
            for i in range(self.nx):
                out[j, i] = expr(xs[i], ys[j])
        if not np.all(np.isfinite(out)):
            raise ValueError("sampled field contains non-finite values")
        return out


def build_grid(xmin, xmax, ymin, ymax, nx, ny) -> Grid2D:
    return Grid2D(float(xmin), float(xmax), float(ymin), float(ymax), int(nx), int(ny))


@dataclass(frozen=True)
class FrameField:
    """Per-node frame matrix A with cached inverse-transpose."""

    grid: Grid2D
    a: np.ndarray          # (ny, nx, 2, 2)
    inv_t: np.ndarray = field(default=None)  # (ny, nx, 2, 2), (A^t)^{-1}

    @property
    def det(self) -> np.ndarray:
        return (self.a[..., 0, 0] * self.a[..., 1, 1]
                - self.a[..., 0, 1] * self.a[..., 1, 0])

    def scaled(self, c: float) -> "FrameField":
        return make_frame(self.grid, c * self.a)


def make_frame(grid: Grid2D, a: np.ndarray, det_floor: float = 1e-10) -> FrameField:
    """Wrap per-node matrices, checking invertibility and caching (A^t)^{-1}."""
    a = np.asarray(a, dtype=float)
    if a.shape != (grid.ny, grid.nx, 2, 2):
        raise ValueError(f"frame array must have shape {(grid.ny, grid.nx, 2, 2)}")
    det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    bad = np.abs(det) < det_floor
    if np.any(bad):
        j, i = np.argwhere(bad)[0]
        raise FrameSingular(int(i), int(j), grid.xs[i], grid.ys[j], float(det[j, i]))
    # (A^t)^{-1} = adj(A^t)/det = [[a22, -a21], [-a12, a11]]/det
    inv_t = np.empty_like(a)
    inv_t[..., 0, 0] = a[..., 1, 1] / det
    inv_t[..., 0, 1] = -a[..., 1, 0] / det
    inv_t[..., 1, 0] = -a[..., 0, 1] / det
    inv_t[..., 1, 1] = a[..., 0, 0] / det
    return FrameField(grid=grid, a=a, inv_t=inv_t)


def sample_frame(a11, a12, a21, a22, grid: Grid2D,
                 det_floor: float = 1e-10) -> FrameField:
    """Sample four entry expressions a_ij(x, y) into a FrameField."""
    a = np.empty((grid.ny, grid.nx, 2, 2))
    a[..., 0, 0] = grid.sample(a11)
    a[..., 0, 1] = grid.sample(a12)
    a[..., 1, 0] = grid.sample(a21)
    a[..., 1, 1] = grid.sample(a22)
    return make_frame(grid, a, det_floor)


def identity_frame(grid: Grid2D) -> FrameField:
    a = np.zeros((grid.ny, grid.nx, 2, 2))
    a[..., 0, 0] = 1.0
    a[..., 1, 1] = 1.0
    return make_frame(grid, a)


def _d_axis(u: np.ndarray, h: float, axis: int) -> np.ndarray:
    """First derivative along one axis: central interior, matched edges.

    The 4-point edge stencils are second order with leading error term
    (h^2/6) u''', the same as the central stencil, so the error of the
    whole derivative field is a single smooth O(h^2) function of
    position.  Nested differentiation (the Hessian) then stays second
    order up to the boundary; an edge stencil with a different leading
    error would leave an O(h^2) jump between adjacent nodes that the
    outer stencil amplifies to O(h).
    """
    u = np.moveaxis(np.asarray(u, dtype=float), axis, 0)
    d = np.empty_like(u)
    d[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    d[0] = (-4.0 * u[0] + 7.0 * u[1] - 4.0 * u[2] + u[3]) / (2.0 * h)
    d[-1] = (4.0 * u[-1] - 7.0 * u[-2] + 4.0 * u[-3] - u[-4]) / (2.0 * h)
    return np.moveaxis(d, 0, axis)


def euclidean_gradient(u: np.ndarray, grid: Grid2D) -> np.ndarray:
    """(du/dx, du/dy) at every node, shape (ny, nx, 2)."""
    out = np.empty(grid.shape + (2,))
    out[..., 0] = _d_axis(u, grid.hx, axis=1)
    out[..., 1] = _d_axis(u, grid.hy, axis=0)
    return out


def riemannian_gradient(u: np.ndarray, frame: FrameField) -> np.ndarray:
    """Frame gradient D_X u = A (du/dx, du/dy), shape (ny, nx, 2).

    Interior nodes use central differences (second order); boundary
    nodes carry one-sided values so that consumers that re-differentiate
    (Hessian, energy quadrature) have data on the full lattice.
    """
    g = euclidean_gradient(u, frame.grid)
    return np.einsum("...ij,...j->...i", frame.a, g)


def symmetrized_hessian(u: np.ndarray, frame: FrameField) -> np.ndarray:
    """Symmetrized frame Hessian, stored as (M11, M12, M22), shape (ny, nx, 3).

    Computes X_i(X_j u) by applying the discrete frame gradient to each
    component of D_X u (nested first-derivative stencils; the cross term
    is the standard 4-point stencil on the differentiated field), then
    averages M and M^t.  Only interior values are meaningful; boundary
    rows hold the same nested-stencil values for completeness.
    """
    g = riemannian_gradient(u, frame)
    out = np.empty(frame.grid.shape + (3,))
    m = np.empty(frame.grid.shape + (2, 2))
    for jcomp in range(2):
        dg = euclidean_gradient(g[..., jcomp], frame.grid)
        # m[..., i, jcomp] = X_i(g_jcomp) = sum_k a_ik d_k g_jcomp
        m[..., :, jcomp] = np.einsum("...ik,...k->...i", frame.a, dg)
    out[..., 0] = m[..., 0, 0]
    out[..., 1] = 0.5 * (m[..., 0, 1] + m[..., 1, 0])
    out[..., 2] = m[..., 1, 1]
    return out


def hessian_as_matrix(h: np.ndarray) -> np.ndarray:
    """Expand packed (M11, M12, M22) storage into full 2x2 matrices."""
    m = np.empty(h.shape[:-1] + (2, 2))
    m[..., 0, 0] = h[..., 0]
    m[..., 0, 1] = h[..., 1]
    m[..., 1, 0] = h[..., 1]
    m[..., 1, 1] = h[..., 2]
    return m


_NEIGHBOR_OFFSETS = [(-1, -1), (-1, 0), (-1, 1),
                     (0, -1), (0, 1),
                     (1, -1), (1, 0), (1, 1)]


def riemannian_distance(frame: FrameField, grid: Grid2D,
                        source: tuple[int, int]) -> np.ndarray:
    """Shortest-path frame distance from a source node, shape (ny, nx).

    Edge weight between lattice neighbors P, Q is ||(M^t)^{-1}(Q - P)||
    with M the entrywise average of the endpoint frames (edge-midpoint
    quadrature of curve length).  Computed by Dijkstra on the 8-neighbor
    graph; ``source`` is given as (i, j) indices.
    """
    si, sj = source
    ny, nx = grid.shape
    if not (0 <= si < nx and 0 <= sj < ny):
        raise ValueError(f"source node ({si}, {sj}) outside the grid")

    # Precompute edge weights per direction, vectorized.
    weights = {}
    a = frame.a
    for dj, di in _NEIGHBOR_OFFSETS:
        # slice pairs: node (j, i) -> neighbor (j+dj, i+di)
        js = slice(max(0, -dj), ny - max(0, dj))
        is_ = slice(max(0, -di), nx - max(0, di))
        jd = slice(max(0, dj), ny - max(0, -dj))
        id_ = slice(max(0, di), nx - max(0, -di))
        mid = 0.5 * (a[js, is_] + a[jd, id_])
        det = (mid[..., 0, 0] * mid[..., 1, 1]
               - mid[..., 0, 1] * mid[..., 1, 0])
        if np.any(np.abs(det) == 0.0):
            raise FrameSingular(0, 0, grid.xmin, grid.ymin, 0.0)
        dx = di * grid.hx
        dy = dj * grid.hy
        # (M^t)^{-1} (dx, dy) via the adjugate formula
        v0 = (mid[..., 1, 1] * dx - mid[..., 1, 0] * dy) / det
        v1 = (-mid[..., 0, 1] * dx + mid[..., 0, 0] * dy) / det
        weights[(dj, di)] = np.sqrt(v0 * v0 + v1 * v1)

    dist = np.full(grid.shape, np.inf)
    dist[sj, si] = 0.0
    done = np.zeros(grid.shape, dtype=bool)
    heap = [(0.0, sj, si)]
    while heap:
        d, j, i = heapq.heappop(heap)
        if done[j, i]:
            continue
        done[j, i] = True
        for dj, di in _NEIGHBOR_OFFSETS:
            j2, i2 = j + dj, i + di
            if 0 <= j2 < ny and 0 <= i2 < nx and not done[j2, i2]:
                w = weights[(dj, di)][j - max(0, -dj), i - max(0, -di)]
                nd = d + w
                if nd < dist[j2, i2]:
                    dist[j2, i2] = nd
                    heapq.heappush(heap, (nd, j2, i2))
    # rectangles are connected; keep a finite sentinel regardless
    dist[~np.isfinite(dist)] = 1e300
    return dist


def grad_ln_p(p: np.ndarray, frame: FrameField) -> np.ndarray:
    """Frame gradient of ln p(x); rejects exponents at or below 1."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 1.0):
        j, i = np.argwhere(p <= 1.0)[0]
        raise ValueError(
            f"exponent p = {p[j, i]:g} <= 1 at node (i={i}, j={j})"
        )
    return riemannian_gradient(np.log(p), frame)
