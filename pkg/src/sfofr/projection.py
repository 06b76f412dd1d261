"""Reduced-rank spatial projection bases.

Areal data takes the leading eigenvectors of the Moran operator built
from the data graph after projecting out the covariate coefficients.
Point-level data gets a structured triangular mesh, a piecewise-linear
interpolation matrix onto that mesh, and the leading eigenvectors of the
centered mesh-graph Moran operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, RankDeficiencyError

# absolute tolerance on barycentric coordinates for point-in-triangle
LOCATE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation with vertices, triangles, and the vertex graph."""

    vertices: np.ndarray
    triangles: np.ndarray
    graph_adjacency: np.ndarray

    def __post_init__(self) -> None:
        v, t, n = self.vertices, self.triangles, self.graph_adjacency
        if v.ndim != 2 or v.shape[1] != 2:
            raise DimensionError("vertices must be m x 2")
        if t.ndim != 2 or t.shape[1] != 3:
            raise DimensionError("triangles must be k x 3")
        if t.min(initial=0) < 0 or t.max(initial=-1) >= v.shape[0]:
            raise DimensionError("triangle indices out of range")
        a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        area2 = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (
            b[:, 1] - a[:, 1]
        ) * (c[:, 0] - a[:, 0])
        if np.any(area2 <= 0):
            raise ValueError("triangles must be non-degenerate with positive area")
        m = v.shape[0]
        if n.shape != (m, m) or not np.array_equal(n, n.T) or np.any(np.diag(n) != 0):
            raise ValueError("graph adjacency must be symmetric with zero diagonal")

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]


@dataclass(frozen=True, eq=False)
class ProjectionBasis:
    """Projection matrix P with its spectrum; mesh pieces for point data."""

    P: np.ndarray
    rank: int
    eigenvalues: np.ndarray
    mesh: Mesh | None = None
    M: np.ndarray | None = field(default=None)
    A: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        if self.P.ndim != 2 or self.P.shape[1] != self.rank:
            raise DimensionError("P must have rank columns")
        if self.eigenvalues.shape != (self.rank,):
            raise DimensionError("eigenvalues must have length rank")
        if np.any(np.diff(self.eigenvalues) > 1e-10):
            raise ValueError("eigenvalues must be non-increasing")


def _sorted_eigh(op: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric eigendecomposition, eigenvalues non-increasing, fixed signs."""
    vals, vecs = np.linalg.eigh((op + op.T) / 2.0)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    # sign convention: largest-magnitude component of each vector positive
    lead = np.argmax(np.abs(vecs), axis=0)
    flip = vecs[lead, np.arange(vecs.shape[1])] < 0
    vecs[:, flip] *= -1.0
    return vals, vecs


def choose_rank(eigenvalues: np.ndarray, share: float = 0.9) -> int:
    """Smallest p capturing `share` of the positive-eigenvalue mass."""
    if not 0 < share <= 1:
        raise ConfigError("share must be in (0, 1]")
    vals = np.asarray(eigenvalues, dtype=float)
    pos = vals[vals > 0]
    if pos.size == 0:
        raise ValueError("operator has no positive eigenvalues")
    cum = np.cumsum(pos)
    return int(np.searchsorted(cum, share * cum[-1] - 1e-12)) + 1


def moran_basis_areal(
    x_coef: np.ndarray,
    D: np.ndarray,
    p: int | None = None,
    share: float = 0.9,
) -> ProjectionBasis:
    """Leading eigenvectors of the covariate-orthogonal Moran operator.

    With H the hat matrix of the covariate coefficients and Hp = I - H,
    the operator is Hp D Hp.  Pass p explicitly or let `share` pick the
    rank from the eigenvalue mass.
    """
    x_coef = np.asarray(x_coef, dtype=float)
    D = np.asarray(D, dtype=float)
    n, g = x_coef.shape
    if D.shape != (n, n):
        raise DimensionError("adjacency must be n x n")
    s = np.linalg.svd(x_coef, compute_uv=False)
    if s.size == 0 or s[-1] <= s[0] * max(n, g) * np.finfo(float).eps:
        raise RankDeficiencyError("covariate coefficients are rank deficient")
    h_perp = -x_coef @ np.linalg.solve(x_coef.T @ x_coef, x_coef.T)
    h_perp[np.diag_indices(n)] += 1.0
    vals, vecs = _sorted_eigh(h_perp @ D @ h_perp)
    if p is None:
        p = min(choose_rank(vals, share), n - g)
    if not 0 < p <= n - g:
        raise ConfigError(f"rank p={p} must lie in 1..{n - g} (n - g_n)")
    return ProjectionBasis(P=vecs[:, :p], rank=p, eigenvalues=vals[:p])


def build_mesh(
    bounds: tuple[tuple[float, float], tuple[float, float]],
    max_edge: float,
    margin: float = 0.0,
) -> Mesh:
    """Structured right-triangle lattice covering an expanded bounding box.

    Each square cell of the lattice splits into two triangles along its
    low-left to high-right diagonal.  Vertex and triangle ordering is
    deterministic (x fastest, then y).
    """
    if max_edge <= 0:
        raise ConfigError("max_edge must be positive")
    if margin < 0:
        raise ConfigError("margin must be nonnegative")
    (x0, x1), (y0, y1) = bounds
    x0, x1, y0, y1 = x0 - margin, x1 + margin, y0 - margin, y1 + margin
    if not (x1 > x0 and y1 > y0):
        raise ValueError("mesh domain must have positive area")
    nx = int(np.ceil((x1 - x0) / max_edge))
    ny = int(np.ceil((y1 - y0) / max_edge))
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    gx, gy = np.meshgrid(xs, ys)
    vertices = np.column_stack([gx.ravel(), gy.ravel()])

    triangles = np.empty((2 * nx * ny, 3), dtype=int)
    k = 0
    for iy in range(ny):
        for ix in range(nx):
            a = iy * (nx + 1) + ix
            b = a + 1
            c = b + (nx + 1)
            d = a + (nx + 1)
            triangles[k] = (a, b, c)
            triangles[k + 1] = (a, c, d)
            k += 2

    m = vertices.shape[0]
    N = np.zeros((m, m))
    for i, j in ((0, 1), (1, 2), (0, 2)):
        N[triangles[:, i], triangles[:, j]] = 1.0
        N[triangles[:, j], triangles[:, i]] = 1.0
    return Mesh(vertices=vertices, triangles=triangles, graph_adjacency=N)


def _barycentric(mesh: Mesh, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric coordinates of each point in every triangle.

    Returns (lam, inside): lam is q x k x 3, inside is the boolean mask
    of containment within LOCATE_TOL.
    """
    v, t = mesh.vertices, mesh.triangles
    a = v[t[:, 0]]
    e1 = v[t[:, 1]] - a
    e2 = v[t[:, 2]] - a
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    diff = points[:, None, :] - a[None, :, :]
    l1 = (diff[:, :, 0] * e2[None, :, 1] - diff[:, :, 1] * e2[None, :, 0]) / det
    l2 = (diff[:, :, 1] * e1[None, :, 0] - diff[:, :, 0] * e1[None, :, 1]) / det
    lam = np.stack([1.0 - l1 - l2, l1, l2], axis=2)
    inside = np.all(lam >= -LOCATE_TOL, axis=2)
    return lam, inside


def locate(mesh: Mesh, points: np.ndarray) -> np.ndarray:
    """Index of the containing triangle per point, lowest index on ties.

    Points outside the mesh raise ValueError listing their row numbers.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise DimensionError("points must be q x 2")
    out = np.empty(points.shape[0], dtype=int)
    for start in range(0, points.shape[0], 256):
        block = points[start : start + 256]
        _, inside = _barycentric(mesh, block)
        idx = np.argmax(inside, axis=1)
        missed = ~inside[np.arange(block.shape[0]), idx]
        if np.any(missed):
            rows = [str(start + r) for r in np.nonzero(missed)[0]]
            raise ValueError(
                "locations outside the mesh at rows: " + ", ".join(rows)
            )
        out[start : start + 256] = idx
    return out


def interpolation_matrix(mesh: Mesh, locations: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolation weights from mesh vertices.

    Row q holds the barycentric coordinates of location q within its
    containing triangle; at most 3 nonzeros, each in [0, 1], summing to 1.
    """
    locations = np.asarray(locations, dtype=float)
    if locations.ndim != 2 or locations.shape[1] != 2:
        raise DimensionError("locations must be q x 2")
    A = np.zeros((locations.shape[0], mesh.n_vertices))
    for start in range(0, locations.shape[0], 256):
        block = locations[start : start + 256]
        lam, inside = _barycentric(mesh, block)
        idx = np.argmax(inside, axis=1)
        missed = ~inside[np.arange(block.shape[0]), idx]
        if np.any(missed):
            rows = [str(start + r) for r in np.nonzero(missed)[0]]
            raise ValueError(
                "locations outside the mesh at rows: " + ", ".join(rows)
            )
        w = np.clip(lam[np.arange(block.shape[0]), idx], 0.0, None)
        w /= w.sum(axis=1, keepdims=True)
        rows_idx = np.arange(start, start + block.shape[0])
        A[rows_idx[:, None], mesh.triangles[idx]] = w
    return A


def moran_basis_point(mesh: Mesh, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading-p eigenvectors of the centered mesh-graph Moran operator."""
    m = mesh.n_vertices
    if not 0 < p <= m - 1:
        raise ConfigError(f"rank p={p} must lie in 1..{m - 1} (m - 1)")
    N = mesh.graph_adjacency
    centered = N - N.mean(axis=0, keepdims=True)
    centered -= centered.mean(axis=1, keepdims=True)
    vals, vecs = _sorted_eigh(centered)
    return vecs[:, :p], vals[:p]


def projection_point(
    mesh: Mesh,
    locations: np.ndarray,
    p: int | None = None,
    share: float = 0.9,
) -> ProjectionBasis:
    """Compose interpolation and the mesh Moran basis: P = A M."""
    A = interpolation_matrix(mesh, locations)
    if p is None:
        N = mesh.graph_adjacency
        centered = N - N.mean(axis=0, keepdims=True)
        centered -= centered.mean(axis=1, keepdims=True)
        vals, _ = _sorted_eigh(centered)
        p = min(choose_rank(vals, share), mesh.n_vertices - 1)
    M, eigenvalues = moran_basis_point(mesh, p)
    return ProjectionBasis(
        P=A @ M, rank=p, eigenvalues=eigenvalues, mesh=mesh, M=M, A=A
    )


def delta_precision(basis: ProjectionBasis, D: np.ndarray | None = None) -> np.ndarray:
    """Prior precision kernel of the projected random effect.

    Point-level bases carry a mesh; the kernel is M' Q_mesh M with
    Q_mesh the graph Laplacian of the mesh vertices.  Areal bases need
    the data adjacency D and give P' Q P.
    """
    from .spatial import icar_precision

    if basis.mesh is not None and basis.M is not None:
        Q = icar_precision(basis.mesh.graph_adjacency)
        return basis.M.T @ Q @ basis.M
    if D is None:
        raise ConfigError("areal projection basis needs the adjacency matrix D")
    if D.shape[0] != basis.P.shape[0]:
        raise DimensionError("adjacency order must match projection rows")
    Q = icar_precision(np.asarray(D, dtype=float))
    return basis.P.T @ Q @ basis.P


def write_mesh_csv(mesh: Mesh, vertices_path: str, triangles_path: str) -> None:
    with open(vertices_path, "w", newline="") as fh:
        fh.write("x,y\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r},{float(y)!r}\n")
    with open(triangles_path, "w", newline="") as fh:
        fh.write("a,b,c\n")
        for a, b, c in mesh.triangles:
            fh.write(f"{a},{b},{c}\n")


def write_projection_csv(path: str, basis: ProjectionBasis) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(f"eig={float(v)!r}" for v in basis.eigenvalues) + "\n")
        for row in basis.P:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
