"""Whitened effective channel between the transmit and receive RF chains.

The receiver steers one phase-shifter network at each of the ``n_s``
strongest paths.  The RF-chain noise is coloured by the overlap of those
steering vectors; a Cholesky whitener removes it, leaving the ``n_s x n_s``
effective matrix ``G`` whose Gram matrix ``G^H G`` defines the eigen
subchannels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .channel import ChannelScenario, build_channel_matrix, steering_vector

__all__ = [
    "EffectiveChannel",
    "IllConditionedNoiseWarning",
    "NotPositiveDefiniteError",
    "steering_matrices",
    "noise_covariance",
    "whitener",
    "effective_channel",
    "hermitian_eig",
]

RIDGE_REL = 1e-10
EIG_CLAMP = -1e-9


class NotPositiveDefiniteError(linalg.LinAlgError, ValueError):
    pass


class IllConditionedNoiseWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class EffectiveChannel:
    """Whitened effective channel and the eigen-decomposition of ``G^H G``.

    Attributes
    ----------
    g : (n_s, n_s) complex ndarray
        Effective matrix ``G``.
    whitener_factor : (n_s, n_s) complex ndarray
        Upper-triangular ``B`` with ``C_noise = B^H B``.
    eigvals : (n_s,) ndarray
        Eigenvalues of ``G^H G``, descending.
    eigvecs : (n_s, n_s) complex ndarray
        Matching eigenvectors as columns; each column's largest-magnitude
        entry is real and positive.
    """

    g: np.ndarray
    whitener_factor: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray

    def __post_init__(self):
        for name in ("g", "whitener_factor", "eigvals", "eigvecs"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_s(self) -> int:
        return self.g.shape[0]

    def left_basis(self, n: int | None = None) -> np.ndarray:
        """Left singular vectors ``G q_k / sqrt(lambda_k)`` for the first ``n`` subchannels."""
        n = self.n_s if n is None else n
        lam = self.eigvals[:n]
        if np.any(lam <= 0):
            raise ValueError("left basis undefined for zero eigenvalues")
        return self.g @ self.eigvecs[:, :n] / np.sqrt(lam)

    def to_dict(self) -> dict:
        def cplx(a):
            return {"real": np.real(a).tolist(), "imag": np.imag(a).tolist()}

        return {
            "n_s": self.n_s,
            "g": cplx(self.g),
            "whitener_factor": cplx(self.whitener_factor),
            "eigvals": self.eigvals.tolist(),
            "eigvecs": cplx(self.eigvecs),
        }


def steering_matrices(scenario: ChannelScenario) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-path Tx/Rx steering rows: ``(A_t, A_r)``."""
    arr = scenario.array
    a_t = np.array([steering_vector(arr.n_tx, arr.d_tx, c.aod) for c in scenario.components])
    a_r = np.array([steering_vector(arr.n_rx, arr.d_rx, c.aoa) for c in scenario.components])
    return a_t, a_r


def noise_covariance(a_r: np.ndarray, n_s: int) -> np.ndarray:
    if not 1 <= n_s <= a_r.shape[0]:
        raise ValueError(f"n_s={n_s} outside 1..{a_r.shape[0]} available paths")
    rows = a_r[:n_s]
    return rows @ rows.conj().T


def whitener(c_noise: np.ndarray) -> np.ndarray:
    """Upper-triangular ``B`` with ``c_noise = B^H B``.

    Nearly singular covariances (paths with almost equal arrival angles) are
    ridge-regularised by ``1e-10 * mean(diag)`` with a warning.
    """
    c = np.asarray(c_noise, dtype=complex)
    c = (c + c.conj().T) / 2
    scale = float(np.mean(np.real(np.diag(c))))
    floor = RIDGE_REL * scale
    smallest = float(np.linalg.eigvalsh(c)[0])
    if smallest < -floor:
        raise NotPositiveDefiniteError(
            f"noise covariance is indefinite (smallest eigenvalue {smallest:.3g}); "
            "use fewer paths (smaller n_s)"
        )
    if smallest < floor:
        warnings.warn(
            f"noise covariance nearly singular (smallest eigenvalue {smallest:.3g}); "
            f"adding ridge {floor:.3g}",
            IllConditionedNoiseWarning,
            stacklevel=2,
        )
        c = c + floor * np.eye(c.shape[0])
    try:
        return linalg.cholesky(c, lower=False)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            f"Cholesky factorisation failed ({exc}); use fewer paths (smaller n_s)"
        ) from None


def hermitian_eig(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Descending eigenpairs of a Hermitian PSD matrix with a fixed phase convention."""
    a = (a + a.conj().T) / 2
    w, v = np.linalg.eigh(a)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    tol = EIG_CLAMP * max(1.0, abs(w[0]))
    if np.any(w < tol):
        raise linalg.LinAlgError(f"matrix is not positive semidefinite (eigenvalue {w.min():.3g})")
    w = np.clip(w, 0.0, None)
    pivot = np.argmax(np.abs(v), axis=0)
    phase = v[pivot, np.arange(v.shape[1])]
    v = v * (np.abs(phase) / phase)
    return w, v


def effective_channel(scenario: ChannelScenario, n_s: int) -> EffectiveChannel:
    """Whitened ``n_s x n_s`` channel seen from the Tx beams to the Rx RF chains."""
    if not 1 <= n_s <= scenario.n_paths:
        raise ValueError(f"n_s={n_s} outside 1..{scenario.n_paths} available paths")
    a_t, a_r = steering_matrices(scenario)
    h = build_channel_matrix(scenario)
    b = whitener(noise_covariance(a_r, n_s))
    rf = a_r[:n_s] @ h @ a_t[:n_s].conj().T / np.sqrt(scenario.array.n_tx)
    # (B^H)^{-1} rf without forming the inverse
    g = linalg.solve_triangular(b, rf, trans="C", lower=False)
    lam, u = hermitian_eig(g.conj().T @ g)
    return EffectiveChannel(g=g, whitener_factor=b, eigvals=lam, eigvecs=u)
