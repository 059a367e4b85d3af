"""
Weighted graph and non-symmetric Laplacian of a stoquastic matrix.

With D = diag(psi0), L = -lambda0*I + D^-1 H D has zero row sums and the
stationary distribution pi_i = psi0_i^2 as its left null vector. The graph
carries the dressed weights w_ij = -psi0_i H_ij psi0_j.
"""

from __future__ import annotations

import dataclasses
import logging

import numpy as np
import scipy.sparse as sparse
from numpy.typing import NDArray

from .errors import PositivityError, StaleGroundStateError
from .model import StoquasticMatrix
from .report import Report
from .setting import RunSettings
from .spectra import SpectralPair

_logger = logging.getLogger(__name__)

IDENTITY_TOL = 1e-9
EIGEN_TOL = 1e-8


def _identity_scale(lambda0: float) -> float:
    return IDENTITY_TOL * max(1.0, abs(lambda0))


def _check_positive(psi0: NDArray[np.float64]) -> None:
    if not np.all(psi0 > 0):
        worst = int(np.argmin(psi0))
        raise PositivityError(
            f"ground state component {worst} is {psi0[worst]:.3e}; expected all components > 0"
        )


def _check_ground_state(
    matrix: StoquasticMatrix, lambda0: float, psi0: NDArray[np.float64]
) -> None:
    # alpha_i * (H alpha - lambda0 alpha)_i is both the pi-weighted Laplacian
    # row sum and the degree defect d_i - |lambda0| pi_i.
    defect = np.abs(psi0 * (matrix.to_csr() @ psi0 - lambda0 * psi0))
    worst = float(defect.max())
    if worst > _identity_scale(lambda0):
        raise StaleGroundStateError(
            f"ground state does not match the matrix: degree defect {worst:.3e} "
            f"exceeds {_identity_scale(lambda0):.1e}"
        )


@dataclasses.dataclass(frozen=True, eq=False)
class LaplacianMatrix:
    matrix: sparse.csr_matrix
    pi: NDArray[np.float64]

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    def matvec(self, vec: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.asarray(self.matrix @ vec)

    def to_dense(self) -> NDArray[np.float64]:
        return np.asarray(self.matrix.toarray())


@dataclasses.dataclass(frozen=True, eq=False)
class WeightedGraph:
    """
    The weighted graph of a stoquastic matrix.

    `weights` is the full symmetric weight matrix; its diagonal holds the
    self-loops w_ii, which count towards degrees but never towards a flow.
    """

    n_vertices: int
    weights: sparse.csr_matrix
    pi: NDArray[np.float64]
    degrees: NDArray[np.float64]
    bare_degree: float

    def adjacency(self) -> sparse.csr_matrix:
        """Off-diagonal weights only."""
        adj = self.weights.copy()
        adj.setdiag(0.0)
        adj.eliminate_zeros()
        return adj

    def self_loops(self) -> NDArray[np.float64]:
        return np.asarray(self.weights.diagonal())

    def edges(self) -> tuple[NDArray[np.int64], NDArray[np.int64], NDArray[np.float64]]:
        """Off-diagonal edges (i < j) in row-major order."""
        upper = sparse.triu(self.weights, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return (
            upper.row[order].astype(np.int64),
            upper.col[order].astype(np.int64),
            upper.data[order],
        )

    def neighbors(self, vertex: int) -> NDArray[np.int64]:
        """Adjacent vertices in ascending order, self excluded."""
        start, stop = self.weights.indptr[vertex], self.weights.indptr[vertex + 1]
        cols = np.sort(self.weights.indices[start:stop])
        return cols[cols != vertex].astype(np.int64)


def laplacian(
    matrix: StoquasticMatrix, lambda0: float, psi0: NDArray[np.float64]
) -> LaplacianMatrix:
    """L_ii = -lambda0 + H_ii, L_ij = (alpha_j / alpha_i) H_ij."""
    _check_positive(psi0)
    _check_ground_state(matrix, lambda0, psi0)
    h = matrix.to_csr().tocoo()
    data = h.data * psi0[h.col] / psi0[h.row]
    lap = sparse.csr_matrix((data, (h.row, h.col)), shape=h.shape)
    lap = (lap - lambda0 * sparse.identity(matrix.dim, format="csr")).tocsr()
    return LaplacianMatrix(matrix=lap, pi=psi0**2)


def graph_from(
    matrix: StoquasticMatrix, lambda0: float, psi0: NDArray[np.float64]
) -> WeightedGraph:
    """w_ij = -alpha_i H_ij alpha_j, computed once per unordered pair and mirrored."""
    _check_positive(psi0)
    w = -psi0[matrix.rows] * matrix.values * psi0[matrix.cols]
    off = matrix.rows != matrix.cols
    rows = np.concatenate([matrix.rows, matrix.cols[off]])
    cols = np.concatenate([matrix.cols, matrix.rows[off]])
    weights = sparse.csr_matrix(
        (np.concatenate([w, w[off]]), (rows, cols)), shape=(matrix.dim, matrix.dim)
    )
    pi = psi0**2
    degrees = np.asarray(weights.sum(axis=1)).ravel()
    defect = float(np.abs(degrees - abs(lambda0) * pi).max())
    if defect > _identity_scale(lambda0):
        raise StaleGroundStateError(
            f"degree identity violated: max |d_i - |lambda0| pi_i| = {defect:.3e}"
        )
    _logger.debug(
        "graph: N=%d, %d edges, %d self-loops",
        matrix.dim,
        int(off.sum()),
        int((~off).sum()),
    )
    return WeightedGraph(
        n_vertices=matrix.dim,
        weights=weights,
        pi=pi,
        degrees=degrees,
        bare_degree=abs(lambda0),
    )


def laplacian_gap(lap: LaplacianMatrix) -> float:
    """Gap of L from a dense non-symmetric eigensolve (real parts)."""
    values = np.sort(np.linalg.eigvals(lap.to_dense()).real)
    return float(values[1] - values[0])


def verify_laplacian(
    lap: LaplacianMatrix, pair: SpectralPair, settings: RunSettings | None = None
) -> Report:
    settings = settings or RunSettings()
    report = Report("laplacian")
    scale = _identity_scale(pair.lambda0)
    ones = np.ones(lap.dim)

    report.within("row_sums", float(np.abs(lap.matvec(ones)).max()), scale, "max |(L 1)_i|")
    left = np.asarray(lap.matrix.T @ lap.pi)
    report.within("left_null", float(np.abs(left).max()), scale, "max |(pi L)_j|")
    report.within("pi_normalized", abs(float(lap.pi.sum()) - 1.0), scale, "|sum pi - 1|")

    gap = pair.lambda1 - pair.lambda0
    v = pair.psi1 / np.sqrt(lap.pi)
    defect = float(np.linalg.norm(lap.matvec(v) - gap * v) / np.linalg.norm(v))
    report.within(
        "excited_eigenvector",
        defect,
        EIGEN_TOL * max(1.0, abs(pair.lambda0)),
        "||L v - gap v|| / ||v|| with v = D^-1 psi1",
    )

    if lap.dim <= settings.dense_limit:
        mismatch = abs(laplacian_gap(lap) - gap)
        report.within(
            "gap_matches", mismatch, EIGEN_TOL * max(1.0, abs(pair.lambda0)), "|gap(L) - gap(H)|"
        )
    else:
        report.skip("gap_matches", f"N={lap.dim} exceeds dense_limit={settings.dense_limit}")
    return report


def save_graph(graph: WeightedGraph, path: str) -> None:
    """Write the 'graph 1' text format: edges (self-loops included) then vertices."""
    upper = sparse.triu(graph.weights).tocoo()
    order = np.lexsort((upper.col, upper.row))
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"graph 1\n{graph.n_vertices} {upper.nnz}\n")
        for k in order:
            f.write(f"{int(upper.row[k])} {int(upper.col[k])} {float(upper.data[k]):.16e}\n")
        for i, p in enumerate(graph.pi):
            f.write(f"v {i} {float(p):.16e}\n")
