"""
Lowest two eigenpairs of a stoquastic matrix.

Small matrices go through a dense symmetric eigensolver. Larger ones use
shifted power iteration on sigma*I - H, which is entrywise non-negative and
irreducible, so it converges to the Perron vector; the first excited state
follows by deflation against the ground state.
"""

from __future__ import annotations

import dataclasses
import logging
from typing import Literal

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
from numpy.typing import NDArray

from .errors import ConvergenceError, PositivityError
from .model import StoquasticMatrix
from .setting import RunSettings

_logger = logging.getLogger(__name__)

SolverMethod = Literal["auto", "dense", "iterative"]

_RESIDUAL_CHECK_EVERY = 10


@dataclasses.dataclass(frozen=True, eq=False)
class SpectralPair:
    lambda0: float
    lambda1: float
    psi0: NDArray[np.float64]
    psi1: NDArray[np.float64]
    residual0: float
    residual1: float
    method: Literal["dense", "iterative"]
    # Power-iteration steps for (psi0, psi1); zero on the dense path.
    iterations: tuple[int, int] = (0, 0)
    near_degenerate: bool = False

    @property
    def gap(self) -> float:
        return spectral_gap(self)


def _residual(h: sparse.csr_matrix, vec: NDArray[np.float64], value: float) -> float:
    return float(np.linalg.norm(h @ vec - value * vec))


def _positive_ground_state(psi0: NDArray[np.float64]) -> NDArray[np.float64]:
    psi0 = psi0 / np.linalg.norm(psi0)
    if psi0.sum() < 0:
        psi0 = -psi0
    if not np.all(psi0 > 0):
        worst = int(np.argmin(psi0))
        raise PositivityError(
            f"ground state component {worst} is {psi0[worst]:.3e}; expected all components > 0"
        )
    return psi0


def _orient_excited(psi1: NDArray[np.float64]) -> NDArray[np.float64]:
    psi1 = psi1 / np.linalg.norm(psi1)
    if psi1[int(np.argmax(np.abs(psi1)))] < 0:
        psi1 = -psi1
    return psi1


def power_shift(h: sparse.csr_matrix) -> float:
    """sigma = max_i |H_ii| + max_i sum_j |H_ij|."""
    diag = float(np.abs(h.diagonal()).max())
    row = float(np.asarray(abs(h).sum(axis=1)).max())
    return diag + row


def _power_iterate(
    h: sparse.csr_matrix,
    start: NDArray[np.float64],
    sigma: float,
    tol: float,
    max_iter: int,
    deflate: NDArray[np.float64] | None,
    what: str,
) -> tuple[NDArray[np.float64], float, float, int]:
    vec = start / np.linalg.norm(start)
    value, residual = float("nan"), float("inf")
    for iteration in range(1, max_iter + 1):
        nxt = sigma * vec - h @ vec
        if deflate is not None:
            nxt -= deflate * float(deflate @ nxt)
        vec = nxt / np.linalg.norm(nxt)
        if iteration % _RESIDUAL_CHECK_EVERY == 0 or iteration == max_iter:
            hv = h @ vec
            value = float(vec @ hv)
            residual = float(np.linalg.norm(hv - value * vec))
            if residual <= tol:
                _logger.debug(
                    "power iteration for %s converged after %d steps (residual %.3e)",
                    what,
                    iteration,
                    residual,
                )
                return vec, value, residual, iteration
    raise ConvergenceError(
        f"power iteration for {what} did not converge to {tol:.1e}",
        residual=residual,
        iterations=max_iter,
    )


def _use_dense(matrix: StoquasticMatrix, method: SolverMethod, dense_limit: int) -> bool:
    if method == "auto":
        return matrix.dim <= dense_limit
    return method == "dense"


def ground_state(
    matrix: StoquasticMatrix,
    settings: RunSettings | None = None,
    method: SolverMethod = "auto",
) -> tuple[float, NDArray[np.float64]]:
    """Return (lambda0, psi0) with psi0 positive and unit-norm."""
    settings = settings or RunSettings()
    h = matrix.to_csr()
    if _use_dense(matrix, method, settings.dense_limit):
        values, vectors = scipy.linalg.eigh(matrix.to_dense(), subset_by_index=[0, 0])
        lambda0 = float(values[0])
        psi0 = _positive_ground_state(vectors[:, 0])
    else:
        psi0_raw, lambda0, _, _ = _power_iterate(
            h,
            np.ones(matrix.dim),
            power_shift(h),
            settings.tol,
            settings.max_iter,
            None,
            "ground state",
        )
        psi0 = _positive_ground_state(psi0_raw)
    residual = _residual(h, psi0, lambda0)
    if residual > settings.tol:
        raise ConvergenceError(
            "ground state residual above tolerance", residual=residual, iterations=0
        )
    return lambda0, psi0


def low_spectrum(
    matrix: StoquasticMatrix,
    settings: RunSettings | None = None,
    method: SolverMethod = "auto",
) -> SpectralPair:
    """The two lowest eigenpairs, residuals re-checked by explicit mat-vec."""
    settings = settings or RunSettings()
    h = matrix.to_csr()
    iterations = (0, 0)
    if _use_dense(matrix, method, settings.dense_limit):
        _logger.debug("dense eigensolve, N=%d", matrix.dim)
        values, vectors = scipy.linalg.eigh(matrix.to_dense(), subset_by_index=[0, 1])
        lambda0, lambda1 = float(values[0]), float(values[1])
        psi0 = _positive_ground_state(vectors[:, 0])
        psi1 = _orient_excited(vectors[:, 1])
        solver: Literal["dense", "iterative"] = "dense"
    else:
        _logger.debug("power iteration, N=%d", matrix.dim)
        sigma = power_shift(h)
        psi0_raw, lambda0, _, it0 = _power_iterate(
            h, np.ones(matrix.dim), sigma, settings.tol, settings.max_iter, None, "psi0"
        )
        psi0 = _positive_ground_state(psi0_raw)
        rng = np.random.default_rng(settings.seed)
        start = rng.standard_normal(matrix.dim)
        start -= psi0 * float(psi0 @ start)
        psi1_raw, lambda1, _, it1 = _power_iterate(
            h, start, sigma, settings.tol, settings.max_iter, psi0, "psi1"
        )
        psi1 = _orient_excited(psi1_raw)
        iterations = (it0, it1)
        solver = "iterative"

    residual0 = _residual(h, psi0, lambda0)
    residual1 = _residual(h, psi1, lambda1)
    for name, residual, steps in (
        ("psi0", residual0, iterations[0]),
        ("psi1", residual1, iterations[1]),
    ):
        if residual > settings.tol:
            raise ConvergenceError(
                f"{name} residual above tolerance {settings.tol:.1e}",
                residual=residual,
                iterations=steps,
            )

    near_degenerate = lambda1 - lambda0 < settings.degeneracy_tol
    if near_degenerate:
        _logger.warning(
            "near-degenerate spectrum: lambda1 - lambda0 = %.3e < %.1e",
            lambda1 - lambda0,
            settings.degeneracy_tol,
        )
    return SpectralPair(
        lambda0=lambda0,
        lambda1=lambda1,
        psi0=psi0,
        psi1=psi1,
        residual0=residual0,
        residual1=residual1,
        method=solver,
        iterations=iterations,
        near_degenerate=near_degenerate,
    )


def spectral_gap(pair: SpectralPair) -> float:
    """lambda1 - lambda0, clamped at zero."""
    return max(pair.lambda1 - pair.lambda0, 0.0)
