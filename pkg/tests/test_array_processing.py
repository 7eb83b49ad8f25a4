import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcassm.array_processing import (
    IllConditionedNoiseWarning,
    NotPositiveDefiniteError,
    effective_channel,
    hermitian_eig,
    noise_covariance,
    steering_matrices,
    whitener,
)
from mcassm.channel import ArrayConfig, ChannelScenario, reference_scenario, synth_scenario

import oracles


def test_reference_eigvals_match_explicit_inverse_oracle():
    s = reference_scenario()
    eff = effective_channel(s, 4)
    lam = oracles.gram_eigvals(s.gains, s.aods, s.aoas, 16, 16, 0.5, 0.5, 4)
    np.testing.assert_allclose(eff.eigvals, lam, rtol=1e-9, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n_s=st.integers(1, 4))
def test_eigvals_match_oracle_on_random_links(seed, n_s):
    s = synth_scenario(5, seed)
    eff = effective_channel(s, n_s)
    lam = oracles.gram_eigvals(s.gains, s.aods, s.aoas, 16, 16, 0.5, 0.5, n_s)
    np.testing.assert_allclose(eff.eigvals, lam, rtol=1e-7, atol=1e-8 * lam[0])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_effective_channel_invariants(seed):
    eff = effective_channel(synth_scenario(5, seed), 4)
    u, lam = eff.eigvecs, eff.eigvals
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-10)
    gram = eff.g.conj().T @ eff.g
    np.testing.assert_allclose(u @ np.diag(lam) @ u.conj().T, gram, atol=1e-9 * lam[0])
    assert np.all(np.diff(lam) <= 1e-12 * lam[0]) and np.all(lam >= 0)
    # phase convention: largest entry of each column is real positive
    piv = u[np.argmax(np.abs(u), axis=0), np.arange(4)]
    np.testing.assert_allclose(piv.imag, 0, atol=1e-12)
    assert np.all(piv.real > 0)


def test_whitener_factorises_covariance():
    s = reference_scenario()
    _, a_r = steering_matrices(s)
    c = noise_covariance(a_r, 4)
    b = whitener(c)
    np.testing.assert_allclose(b.conj().T @ b, c, atol=1e-10)
    assert np.allclose(b, np.triu(b))


def test_whitener_ridge_warning_and_indefinite_error():
    a = np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
    with pytest.warns(IllConditionedNoiseWarning):
        whitener(a)
    with pytest.raises(NotPositiveDefiniteError):
        whitener(np.diag([1.0, -1.0]))


def test_collinear_paths_warn():
    s = ChannelScenario.from_arrays("c", [1.0, 0.5], [1.0, 2.0], [1.3, 1.3], ArrayConfig(8, 8))
    with pytest.warns(IllConditionedNoiseWarning):
        effective_channel(s, 2)


def test_n_s_out_of_range():
    with pytest.raises(ValueError):
        effective_channel(reference_scenario(), 6)


def test_hermitian_eig_rejects_indefinite():
    with pytest.raises(np.linalg.LinAlgError):
        hermitian_eig(np.diag([1.0, -0.5]))


def test_left_basis_orthonormal():
    eff = effective_channel(reference_scenario(), 4)
    y = eff.left_basis()
    np.testing.assert_allclose(y.conj().T @ y, np.eye(4), atol=1e-7)


def test_to_dict_roundtrips_g():
    eff = effective_channel(reference_scenario(), 3)
    d = eff.to_dict()
    g = np.array(d["g"]["real"]) + 1j * np.array(d["g"]["imag"])
    np.testing.assert_array_equal(g, eff.g)
