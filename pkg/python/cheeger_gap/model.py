"""
Stoquastic Hamiltonians: representation, validation, example builders and
the coordinate text file format.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from typing import Literal, Union

import numpy as np
import scipy.sparse as sparse
from numpy.typing import NDArray
from scipy.sparse.csgraph import connected_components

from .errors import (
    InvalidModelError,
    MatrixParseError,
    ReducibilityError,
    SizeLimitError,
    ValidationError,
)
from .report import Report

_logger = logging.getLogger(__name__)

MAGIC = "stoq 1"
DEFAULT_N_MAX = 20

ModelKind = Literal["ring", "transverse_field", "ising_chain", "file"]
MODEL_KINDS: tuple[str, ...] = ("ring", "transverse_field", "ising_chain", "file")


@dataclasses.dataclass(frozen=True, eq=False)
class StoquasticMatrix:
    """
    A real symmetric matrix with non-positive entries.

    Entries are stored once per unordered pair (row <= col) in row-major
    order; the lower triangle is implied by symmetry.
    """

    dim: int
    rows: NDArray[np.int64]
    cols: NDArray[np.int64]
    values: NDArray[np.float64]

    @classmethod
    def from_sparse(cls, matrix: sparse.spmatrix | sparse.sparray) -> StoquasticMatrix:
        """Canonicalize the upper triangle of a square matrix (zeros dropped)."""
        upper = sparse.triu(sparse.coo_matrix(matrix)).tocsr()
        upper.sum_duplicates()
        upper.eliminate_zeros()
        coo = upper.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return cls(
            dim=int(matrix.shape[0]),
            rows=coo.row[order].astype(np.int64),
            cols=coo.col[order].astype(np.int64),
            values=coo.data[order].astype(np.float64),
        )

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    def to_csr(self) -> sparse.csr_matrix:
        """The full symmetric matrix."""
        off = self.rows != self.cols
        rows = np.concatenate([self.rows, self.cols[off]])
        cols = np.concatenate([self.cols, self.rows[off]])
        values = np.concatenate([self.values, self.values[off]])
        return sparse.csr_matrix((values, (rows, cols)), shape=(self.dim, self.dim))

    def to_dense(self) -> NDArray[np.float64]:
        return np.asarray(self.to_csr().toarray())

    def diagonal(self) -> NDArray[np.float64]:
        diag = np.zeros(self.dim)
        on = self.rows == self.cols
        diag[self.rows[on]] = self.values[on]
        return diag

    def entry(self, i: int, j: int) -> float:
        i, j = min(i, j), max(i, j)
        hit = np.nonzero((self.rows == i) & (self.cols == j))[0]
        return float(self.values[hit[0]]) if hit.size else 0.0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StoquasticMatrix):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> int:
        return hash((self.dim, self.nnz, self.values.tobytes()))


@dataclasses.dataclass(frozen=True)
class ModelSpec:
    """Which model to build, with its size and coupling."""

    kind: ModelKind
    size: int | None = None
    coupling: float | None = None
    path: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise InvalidModelError(f"unknown model kind '{self.kind}'")
        if self.kind == "file":
            if not self.path:
                raise InvalidModelError("model 'file' requires a path")
            return
        if self.size is None or self.size < 1:
            raise InvalidModelError(f"model '{self.kind}' requires a positive size")
        if self.coupling is None or not math.isfinite(self.coupling):
            raise InvalidModelError(f"model '{self.kind}' requires a finite coupling")

    def params(self) -> dict[str, str]:
        """Model parameters as CSV-ready strings, in a fixed order."""
        if self.kind == "file":
            return {"model": "file", "path": str(self.path)}
        size_name = "N" if self.kind == "ring" else "n"
        coupling_name = "t" if self.kind == "ring" else "B"
        return {
            "model": self.kind,
            size_name: str(self.size),
            coupling_name: format(self.coupling, ".17g"),
        }


def _hypercube_pairs(n: int) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    states = np.arange(1 << n, dtype=np.int64)
    rows, cols = [], []
    for k in range(n):
        flipped = states ^ (1 << k)
        keep = states < flipped
        rows.append(states[keep])
        cols.append(flipped[keep])
    return np.concatenate(rows), np.concatenate(cols)


def _check_spin_count(n: int, n_max: int) -> None:
    if n < 1:
        raise InvalidModelError(f"number of spins must be at least 1, got {n}")
    if n > n_max:
        raise SizeLimitError(
            f"{n} spins exceed n_max={n_max} (2^{n} basis states); raise --n-max to allow"
        )


def build_ring(n_sites: int, t: float) -> StoquasticMatrix:
    """Periodic hopping on `n_sites` sites: -t between i and i±1 mod N."""
    if n_sites < 3:
        raise InvalidModelError(f"ring needs at least 3 sites, got {n_sites}")
    if not t > 0:
        raise InvalidModelError(f"hopping t must be positive, got {t}")
    i = np.arange(n_sites, dtype=np.int64)
    j = (i + 1) % n_sites
    values = np.full(n_sites, -float(t))
    matrix = sparse.coo_matrix((values, (np.minimum(i, j), np.maximum(i, j))), shape=(n_sites, n_sites))
    return StoquasticMatrix.from_sparse(matrix)


def build_transverse_field(
    n: int, b_field: float, n_max: int = DEFAULT_N_MAX
) -> StoquasticMatrix:
    """n free spins in a transverse field: the hypercube Q_n with weight -B."""
    _check_spin_count(n, n_max)
    if not b_field > 0:
        raise InvalidModelError(f"field B must be positive, got {b_field}")
    rows, cols = _hypercube_pairs(n)
    dim = 1 << n
    values = np.full(rows.shape[0], -float(b_field))
    return StoquasticMatrix.from_sparse(
        sparse.coo_matrix((values, (rows, cols)), shape=(dim, dim))
    )


def ising_diagonal(n: int) -> NDArray[np.float64]:
    """-sum over open-chain bonds of (s_k s_{k+1} + 2); bit value 0 is spin up."""
    states = np.arange(1 << n, dtype=np.int64)
    spins = 1 - 2 * ((states[:, None] >> np.arange(n)) & 1)
    bonds = spins[:, :-1] * spins[:, 1:] + 2
    return -bonds.sum(axis=1).astype(np.float64)


def build_ising_chain(
    n: int, b_field: float, n_max: int = DEFAULT_N_MAX
) -> StoquasticMatrix:
    """Open Ising chain of n spins with transverse field B."""
    if n < 2:
        raise InvalidModelError(f"Ising chain needs at least 2 spins, got {n}")
    _check_spin_count(n, n_max)
    if not b_field > 0:
        raise ReducibilityError(
            f"field B must be positive, got {b_field}: at B=0 the ground state is "
            "doubly degenerate and the matrix is reducible"
        )
    rows, cols = _hypercube_pairs(n)
    dim = 1 << n
    diag = np.arange(dim, dtype=np.int64)
    matrix = sparse.coo_matrix(
        (
            np.concatenate([np.full(rows.shape[0], -float(b_field)), ising_diagonal(n)]),
            (np.concatenate([rows, diag]), np.concatenate([cols, diag])),
        ),
        shape=(dim, dim),
    )
    return StoquasticMatrix.from_sparse(matrix)


MatrixLike = Union[StoquasticMatrix, sparse.spmatrix, sparse.sparray, NDArray[np.float64]]


def validate(matrix: MatrixLike) -> Report:
    """
    Check the stoquastic preconditions: dimension, symmetry, sign and
    irreducibility (connectivity of the off-diagonal support).
    """
    report = Report("validate")
    if isinstance(matrix, StoquasticMatrix):
        full = matrix.to_csr()
    else:
        full = sparse.csr_matrix(matrix)
    n = full.shape[0]
    if full.shape[0] != full.shape[1]:
        report.add("dimension", False, detail=f"matrix is {full.shape[0]}x{full.shape[1]}")
        return report
    report.add("dimension", n >= 2, value=n, detail="N >= 2")

    asym = abs(full - full.T)
    max_asym = float(asym.max()) if asym.nnz else 0.0
    report.add("symmetry", max_asym == 0.0, value=max_asym, detail="max |H_ij - H_ji|")

    max_entry = float(full.data.max()) if full.nnz else 0.0
    report.add("sign", max_entry <= 0.0, value=max_entry, detail="max entry <= 0")

    off = full.copy()
    off.setdiag(0)
    off.eliminate_zeros()
    if n >= 1:
        n_components, _ = connected_components(off, directed=False)
    else:
        n_components = 0
    report.add(
        "connectivity",
        n_components == 1,
        value=n_components,
        detail="connected components of the off-diagonal support",
    )
    return report


def _require_valid(matrix: MatrixLike) -> None:
    report = validate(matrix)
    if not report.passed:
        raise ValidationError(report)


def save_matrix(matrix: StoquasticMatrix, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{MAGIC}\n{matrix.dim} {matrix.nnz}\n")
        for i, j, v in zip(matrix.rows, matrix.cols, matrix.values):
            f.write(f"{int(i)} {int(j)} {float(v):.16e}\n")


def load_matrix(path: str) -> StoquasticMatrix:
    """
    Parse a matrix file and validate it.

    Lines with i > j are read as the mirrored entry of (j, i); a mirror that
    disagrees with its partner fails the symmetry check.
    """
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as e:
        raise MatrixParseError(f"cannot read file: {e.strerror}", path=path) from e

    content = [
        (lineno, line.strip())
        for lineno, line in enumerate(lines, start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not content or content[0][1] != MAGIC:
        line = content[0][0] if content else None
        raise MatrixParseError(f"expected header '{MAGIC}'", path=path, line=line)
    if len(content) < 2:
        raise MatrixParseError("missing 'N nnz' line", path=path)

    lineno, size_line = content[1]
    try:
        n_str, nnz_str = size_line.split()
        n, nnz = int(n_str), int(nnz_str)
    except ValueError as e:
        raise MatrixParseError("expected 'N nnz'", path=path, line=lineno) from e
    if n < 1 or nnz < 0:
        raise MatrixParseError("N must be positive and nnz non-negative", path=path, line=lineno)

    entries = content[2:]
    if len(entries) != nnz:
        raise MatrixParseError(f"expected {nnz} entries, found {len(entries)}", path=path)

    upper: dict[tuple[int, int], float] = {}
    mirrored: dict[tuple[int, int], float] = {}
    for lineno, text in entries:
        parts = text.split()
        if len(parts) != 3:
            raise MatrixParseError("expected 'i j value'", path=path, line=lineno)
        try:
            i, j, value = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as e:
            raise MatrixParseError(f"malformed entry '{text}'", path=path, line=lineno) from e
        if not (0 <= i < n and 0 <= j < n):
            raise MatrixParseError(f"index out of range for N={n}", path=path, line=lineno)
        if not math.isfinite(value):
            raise MatrixParseError("value must be finite", path=path, line=lineno)
        target = upper if i <= j else mirrored
        key = (min(i, j), max(i, j))
        if key in target:
            raise MatrixParseError(f"duplicate entry ({i}, {j})", path=path, line=lineno)
        target[key] = value

    rows: list[int] = []
    cols: list[int] = []
    values: list[float] = []
    for (i, j), value in upper.items():
        rows.append(i)
        cols.append(j)
        values.append(value)
        if i != j:
            rows.append(j)
            cols.append(i)
            values.append(mirrored.get((i, j), value))
    for (i, j), value in mirrored.items():
        if (i, j) not in upper:
            rows.extend([i, j])
            cols.extend([j, i])
            values.extend([value, value])
    raw = sparse.csr_matrix((values, (rows, cols)), shape=(n, n))
    _require_valid(raw)
    _logger.debug("loaded %s: N=%d, %d stored entries", path, n, nnz)
    return StoquasticMatrix.from_sparse(raw)


def build_model(spec: ModelSpec, n_max: int = DEFAULT_N_MAX) -> StoquasticMatrix:
    """Build and validate the matrix described by `spec`."""
    if spec.kind == "file":
        assert spec.path is not None
        return load_matrix(spec.path)
    assert spec.size is not None and spec.coupling is not None
    if spec.kind == "ring":
        matrix = build_ring(spec.size, spec.coupling)
    elif spec.kind == "transverse_field":
        matrix = build_transverse_field(spec.size, spec.coupling, n_max=n_max)
    else:
        matrix = build_ising_chain(spec.size, spec.coupling, n_max=n_max)
    _logger.debug("built %s: N=%d, %d stored entries", spec.kind, matrix.dim, matrix.nnz)
    _require_valid(matrix)
    return matrix


def random_stoquastic(
    rng: np.random.Generator,
    min_dim: int = 4,
    max_dim: int = 12,
    edge_probability: float = 0.5,
) -> StoquasticMatrix:
    """
    A random irreducible stoquastic matrix.

    N is uniform in [min_dim, max_dim]; the off-diagonal support is an
    Erdős–Rényi graph redrawn until connected, with weights uniform in
    [-1, -0.1]; the diagonal is uniform in [-1, 0].
    """
    n = int(rng.integers(min_dim, max_dim + 1))
    iu, ju = np.triu_indices(n, k=1)
    while True:
        keep = rng.random(iu.shape[0]) < edge_probability
        pattern = sparse.coo_matrix(
            (np.ones(int(keep.sum())), (iu[keep], ju[keep])), shape=(n, n)
        )
        if connected_components(pattern, directed=False)[0] == 1:
            break
    off = rng.uniform(-1.0, -0.1, size=int(keep.sum()))
    diag = rng.uniform(-1.0, 0.0, size=n)
    idx = np.arange(n)
    matrix = sparse.coo_matrix(
        (
            np.concatenate([off, diag]),
            (np.concatenate([iu[keep], idx]), np.concatenate([ju[keep], idx])),
        ),
        shape=(n, n),
    )
    return StoquasticMatrix.from_sparse(matrix)
