import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from eigendetect.array_signal import ArrayConfig, Hypothesis, RngStream, ScenarioConfig, SnapshotMatrix, synth_snapshots
from eigendetect.covariance_eig import (
    EigenSpectrum,
    HermitianMatrix,
    eigen_spectrum,
    noise_variance_estimate,
    sample_covariance,
    spectra_from_snapshots,
)
from eigendetect.errors import DomainError, InvariantViolation


def _random_snapshots(rng, n, l):
    return SnapshotMatrix(rng.standard_normal((n, l)) + 1j * rng.standard_normal((n, l)))


def test_single_snapshot_outer_product():
    r = sample_covariance(SnapshotMatrix(np.array([[1], [1j]])))
    np.testing.assert_array_equal(r.entries, [[1, -1j], [1j, 1]])


def test_all_zero_snapshots():
    r = sample_covariance(SnapshotMatrix(np.zeros((3, 5))))
    np.testing.assert_array_equal(r.entries, np.zeros((3, 3)))


def test_two_canonical_snapshots_give_half_identity():
    r = sample_covariance(SnapshotMatrix(np.array([[1, 0], [0, 1]])))
    np.testing.assert_array_equal(r.entries, 0.5 * np.eye(2))


def test_zero_snapshots_rejected():
    with pytest.raises(DomainError):
        sample_covariance(SnapshotMatrix(np.zeros((3, 0))))


def test_sample_covariance_exactly_hermitian(rng):
    r = sample_covariance(_random_snapshots(rng, 7, 13)).entries
    assert np.array_equal(r, r.conj().T)


@pytest.mark.parametrize("matrix, expected", [
    (np.diag([2.0, 1.0]), [2, 1]),
    (np.eye(5), [1] * 5),
    (np.array([[1.0, 1.0], [1.0, 1.0]]), [2, 0]),
])
def test_eigen_spectrum_examples(matrix, expected):
    spec = eigen_spectrum(HermitianMatrix(matrix))
    np.testing.assert_allclose(spec.values, expected, atol=1e-15)
    assert np.all(spec.values >= 0)


def test_non_hermitian_rejected():
    with pytest.raises(InvariantViolation):
        HermitianMatrix(np.array([[1, 2], [0, 1]]))


def test_indefinite_matrix_rejected():
    with pytest.raises(InvariantViolation):
        eigen_spectrum(HermitianMatrix(np.diag([1.0, -0.5])))


def test_roundoff_negative_eigenvalue_clamped():
    spec = eigen_spectrum(HermitianMatrix(np.diag([1.0, -1e-14])))
    assert spec.values[-1] == 0.0


@pytest.mark.parametrize("values, expected", [
    ([5, 1, 1, 1], 1.0),
    ([3.5] * 6, 3.5),
    ([6, 2, 2, 2, 2], 2.0),  # (14 - 6) / 4
])
def test_noise_variance_examples(values, expected):
    assert noise_variance_estimate(EigenSpectrum.from_values(values)) == pytest.approx(expected, rel=1e-15)


def test_noise_variance_needs_two_antennas():
    with pytest.raises(DomainError):
        noise_variance_estimate(EigenSpectrum.from_values([3.0]))


def test_spectrum_validation():
    with pytest.raises(DomainError):
        EigenSpectrum(np.array([1.0, 2.0]), 3.0, 2)
    with pytest.raises(DomainError):
        EigenSpectrum(np.array([1.0, -2.0]), -1.0, 2)


@pytest.mark.parametrize("n", [2, 17, 64, 200, 512])
def test_trace_conservation(rng, n):
    l = max(n // 2, 3)
    spec = eigen_spectrum(sample_covariance(_random_snapshots(rng, n, l)))
    assert abs(spec.values.sum() - spec.trace) <= 1e-10 * spec.trace


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 8), l=st.integers(1, 20), seed=st.integers(0, 2**32 - 1))
def test_unitary_invariance(n, l, seed):
    rng = np.random.default_rng(seed)
    r = sample_covariance(_random_snapshots(rng, n, l)).entries
    u = unitary_group.rvs(n, random_state=seed)
    rotated = u @ r @ u.conj().T
    a = eigen_spectrum(HermitianMatrix(0.5 * (rotated + rotated.conj().T))).values
    b = eigen_spectrum(HermitianMatrix(r)).values
    np.testing.assert_allclose(a, b, rtol=1e-8, atol=1e-8 * b[0])


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 10), c=st.floats(1e-3, 1e3), seed=st.integers(0, 2**32 - 1))
def test_scaling_equivariance(n, c, seed):
    rng = np.random.default_rng(seed)
    r = sample_covariance(_random_snapshots(rng, n, 2 * n)).entries
    a = eigen_spectrum(HermitianMatrix(c * r)).values
    b = eigen_spectrum(HermitianMatrix(r)).values
    np.testing.assert_allclose(a, c * b, rtol=1e-10, atol=1e-12 * c * b[0])


def test_rank_deficient_spectrum_has_exact_zeros(rng):
    spec = eigen_spectrum(sample_covariance(_random_snapshots(rng, 10, 4)))
    assert np.all(spec.values[4:] == 0.0)
    assert np.all(spec.values[:4] > 0)


def test_h0_extreme_ratio_approaches_one_for_long_records():
    y = synth_snapshots(ScenarioConfig(0.0, 0.0, 100_000, Hypothesis.H0), ArrayConfig(4), RngStream(2))
    spec = eigen_spectrum(sample_covariance(y))
    assert spec.lambda_max / spec.lambda_min < 1.2


@pytest.mark.parametrize("n, l", [(8, 20), (20, 8), (6, 6)])
def test_batched_spectra_match_single_path(rng, n, l):
    stack = rng.standard_normal((5, n, l)) + 1j * rng.standard_normal((5, n, l))
    values, trace = spectra_from_snapshots(stack)
    for t in range(5):
        spec = eigen_spectrum(sample_covariance(SnapshotMatrix(stack[t])))
        np.testing.assert_allclose(values[t], spec.values, rtol=1e-10, atol=1e-12 * spec.trace)
        assert trace[t] == pytest.approx(spec.trace, rel=1e-12)
