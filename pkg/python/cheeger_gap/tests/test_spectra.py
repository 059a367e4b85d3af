"""Tests for the lowest two eigenpairs."""

import dataclasses
import math

import numpy as np
import pytest

from cheeger_gap.errors import ConvergenceError
from cheeger_gap.model import build_ising_chain, build_ring, build_transverse_field
from cheeger_gap.setting import RunSettings
from cheeger_gap.spectra import ground_state, low_spectrum, power_shift, spectral_gap


class TestDense:
    """Test closed-form spectra on the dense path."""

    def test_two_spin_ising(self) -> None:
        """The even sector gives -2 - sqrt(5); the odd sector's lowest is -3."""
        pair = low_spectrum(build_ising_chain(2, 1.0))
        assert pair.lambda0 == pytest.approx(-2.0 - math.sqrt(5.0), abs=1e-12)
        assert pair.lambda1 == pytest.approx(-3.0, abs=1e-12)
        assert pair.gap == pytest.approx(math.sqrt(5.0) - 1.0, abs=1e-12)
        assert pair.method == "dense"

    @pytest.mark.parametrize("n", [2, 3, 4])
    @pytest.mark.parametrize("b_field", [0.5, 1.0, 3.0])
    def test_hypercube_gap(self, n: int, b_field: float) -> None:
        pair = low_spectrum(build_transverse_field(n, b_field))
        assert pair.lambda0 == pytest.approx(-n * b_field, abs=1e-9)
        assert pair.gap == pytest.approx(2.0 * b_field, abs=1e-9)

    @pytest.mark.parametrize("n", range(1, 11))
    def test_transverse_gap_is_twice_the_field(self, n: int) -> None:
        pair = low_spectrum(build_transverse_field(n, 0.7))
        assert pair.method == "dense"
        assert pair.gap == pytest.approx(1.4, abs=1e-9)

    def test_ring_gap(self) -> None:
        """-2t cos(2 pi k / N): gap 2 - sqrt(2) at N = 8."""
        pair = low_spectrum(build_ring(8, 1.0))
        assert pair.lambda0 == pytest.approx(-2.0, abs=1e-12)
        assert pair.gap == pytest.approx(2.0 - math.sqrt(2.0), abs=1e-12)

    def test_ground_state_is_positive_and_normalised(self) -> None:
        pair = low_spectrum(build_ising_chain(4, 1.0))
        assert np.all(pair.psi0 > 0)
        assert np.linalg.norm(pair.psi0) == pytest.approx(1.0)
        assert abs(float(pair.psi0 @ pair.psi1)) < 1e-10
        assert pair.residual0 < 1e-10 and pair.residual1 < 1e-10


class TestIterative:
    """Test the shifted power iteration against the dense solver."""

    def test_agrees_with_dense(self) -> None:
        for matrix in (build_transverse_field(3, 1.0), build_ising_chain(3, 2.0)):
            dense = low_spectrum(matrix, method="dense")
            iterative = low_spectrum(matrix, method="iterative")
            assert iterative.method == "iterative"
            assert iterative.lambda0 == pytest.approx(dense.lambda0, abs=1e-8)
            assert iterative.lambda1 == pytest.approx(dense.lambda1, abs=1e-8)
            np.testing.assert_allclose(iterative.psi0, dense.psi0, atol=1e-8)
            assert iterative.iterations[0] > 0

    def test_ground_energy_within_ten_tol(self) -> None:
        """Dense and iterative lambda0 agree to 10 tol, psi0 to 100 tol."""
        settings = RunSettings()
        for matrix in (
            build_transverse_field(4, 0.8),
            build_ising_chain(4, 1.0),
            build_ring(8, 1.0),
        ):
            dense = low_spectrum(matrix, settings, method="dense")
            iterative = low_spectrum(matrix, settings, method="iterative")
            assert abs(iterative.lambda0 - dense.lambda0) <= 10 * settings.tol
            assert np.linalg.norm(iterative.psi0 - dense.psi0) <= 100 * settings.tol

    def test_auto_switches_on_dense_limit(self) -> None:
        pair = low_spectrum(build_transverse_field(3, 1.0), RunSettings(dense_limit=4))
        assert pair.method == "iterative"

    def test_ground_state_only(self) -> None:
        lambda0, psi0 = ground_state(build_ring(6, 1.0), method="iterative")
        assert lambda0 == pytest.approx(-2.0, abs=1e-9)
        np.testing.assert_allclose(psi0, np.full(6, 1.0 / math.sqrt(6.0)), atol=1e-8)

    def test_non_convergence_raises(self) -> None:
        with pytest.raises(ConvergenceError) as excinfo:
            low_spectrum(build_ising_chain(4, 1.0), RunSettings(max_iter=5), method="iterative")
        assert excinfo.value.exit_code == 3
        assert excinfo.value.iterations == 5
        assert excinfo.value.residual > 1e-10

    def test_power_shift_dominates_spectrum(self) -> None:
        matrix = build_ising_chain(3, 1.0)
        sigma = power_shift(matrix.to_csr())
        eigenvalues = np.linalg.eigvalsh(matrix.to_dense())
        assert np.all(sigma - eigenvalues > 0)


def test_near_degenerate_flag() -> None:
    pair = low_spectrum(build_transverse_field(2, 1.0), RunSettings(degeneracy_tol=10.0))
    assert pair.near_degenerate
    assert not low_spectrum(build_transverse_field(2, 1.0)).near_degenerate


def test_spectral_gap_clamps_at_zero() -> None:
    pair = low_spectrum(build_ring(5, 1.0))
    swapped = dataclasses.replace(pair, lambda0=pair.lambda1, lambda1=pair.lambda0)
    assert spectral_gap(swapped) == 0.0
