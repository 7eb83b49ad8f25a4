"""Bit mapping, transmission, detection and Monte-Carlo bit-error simulation.

Hypothesis ``h = l * M + m`` (0-based beam index ``l``, symbol index ``m``)
carries the bit label ``(l << log2 M) | gray_label[m]``: the beam bits are
natural binary and come first.

Simulation runs in the whitened ``n_s``-dimensional domain
``z = sqrt(rho) G W^H(l,:) s_m + n`` with ``n ~ CN(0, I)``.  The antenna
domain path (:func:`transmit`, :func:`receive_antenna`) exists to validate
that shortcut.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import kernels
from .array_processing import EffectiveChannel, steering_matrices
from .channel import ChannelScenario, build_channel_matrix
from .constellations import Constellation
from .design import MCADesign
from .digest import config_digest

__all__ = [
    "LinkConfig",
    "SimResult",
    "aggregation_matrix",
    "hypothesis_labels",
    "hypothesis_table",
    "map_bits",
    "unmap_bits",
    "transmit",
    "receive_whitened",
    "receive_antenna",
    "ml_detect",
    "ml_detect_reduced",
    "draw_noise",
    "run_monte_carlo",
]

DEFAULT_BLOCK = 16384


def aggregation_matrix(design) -> np.ndarray:
    """``W`` from an :class:`MCADesign` or a bare ``(L, n_s)`` array."""
    w = design.w if isinstance(design, MCADesign) else np.asarray(design, dtype=complex)
    if w.ndim != 2:
        raise ValueError("aggregation matrix must be 2-D (L, n_s)")
    return w


def _rate_bits(L: int, M: int) -> tuple[int, int]:
    if L < 1 or L & (L - 1) or M < 1 or M & (M - 1) or L * M < 2:
        raise ValueError(f"L*M must be a power of two >= 2 (L={L}, M={M})")
    return int(math.log2(L)), int(math.log2(M))


def hypothesis_labels(L: int, constellation: Constellation) -> np.ndarray:
    """Bit label of every hypothesis ``h = l*M + m``."""
    _, mb = _rate_bits(L, constellation.order)
    l = np.repeat(np.arange(L, dtype=np.int64), constellation.order)
    return (l << mb) | np.tile(constellation.labels.astype(np.int64), L)


def map_bits(bits, L: int, constellation: Constellation) -> tuple[int, int]:
    """First ``log2 L`` bits pick the beam (natural binary), the rest pick the symbol label."""
    if isinstance(bits, str):
        bits = [int(b) for b in bits]
    bits = [int(b) for b in bits]
    lb, mb = _rate_bits(L, constellation.order)
    if len(bits) != lb + mb:
        raise ValueError(f"expected {lb + mb} bits, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("bits must be 0 or 1")
    word = int("".join(map(str, bits)), 2)
    l, label = word >> mb, word & ((1 << mb) - 1)
    return l, int(constellation.index_of_label[label])


def unmap_bits(l: int, m: int, L: int, constellation: Constellation) -> list[int]:
    lb, mb = _rate_bits(L, constellation.order)
    if not (0 <= l < L and 0 <= m < constellation.order):
        raise ValueError(f"indices out of range: l={l}, m={m}")
    word = (l << mb) | int(constellation.labels[m])
    return [int(c) for c in format(word, f"0{lb + mb}b")]


def hypothesis_table(design, effective: EffectiveChannel, constellation: Constellation) -> np.ndarray:
    """Noiseless unit-SNR receptions ``X[h] = G W^H(l,:) s_m``, shape ``(L*M, n_s)``."""
    w = aggregation_matrix(design)
    if w.shape[1] != effective.n_s:
        raise ValueError(f"W has {w.shape[1]} columns, effective channel has n_s={effective.n_s}")
    beams = w.conj() @ effective.g.T  # row l is (G W^H(l,:))^T
    return (beams[:, None, :] * constellation.symbols[None, :, None]).reshape(-1, effective.n_s)


def transmit(l: int, m: int, design, scenario: ChannelScenario, constellation: Constellation) -> np.ndarray:
    """Antenna-domain transmit vector ``x = A_t(1:n_s,:)^H W(l,:)^H s_m``."""
    w = aggregation_matrix(design)
    a_t, _ = steering_matrices(scenario)
    return a_t[: w.shape[1]].conj().T @ (w[l].conj() * constellation.symbols[m])


def receive_whitened(l, m, snr_linear, design, effective, constellation, noise) -> np.ndarray:
    """``z = sqrt(rho) G W^H(l,:) s_m + noise``."""
    w = aggregation_matrix(design)
    signal = effective.g @ w[l].conj() * constellation.symbols[m]
    return math.sqrt(snr_linear) * signal + np.asarray(noise)


def receive_antenna(x, snr_linear, scenario: ChannelScenario, effective: EffectiveChannel, noise) -> np.ndarray:
    """Whitened RF-chain output from the full antenna model.

    ``y = sqrt(rho / N_t) H x + noise`` is combined by the ``n_s`` receive
    beams and whitened with ``(B^H)^{-1}``.  ``noise`` has length ``N_r``
    (or shape ``(k, N_r)`` for ``k`` draws).
    """
    h = build_channel_matrix(scenario)
    _, a_r = steering_matrices(scenario)
    y = math.sqrt(snr_linear / scenario.array.n_tx) * (h @ x) + np.asarray(noise)
    r = a_r[: effective.n_s] @ y.T
    z = linalg.solve_triangular(effective.whitener_factor, r, trans="C", lower=False)
    return z.T


def draw_noise(rng: np.random.Generator, shape) -> np.ndarray:
    """Circular complex Gaussian samples with unit total variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def _split(h: np.ndarray, M: int):
    return h // M, h % M


def ml_detect(z, design, effective: EffectiveChannel, constellation: Constellation, snr_linear):
    """Exhaustive ML decision ``argmin ||z - sqrt(rho) G W^H(l,:) s_m||``; ties to the lowest ``(l, m)``.

    ``z`` may be one reception or a stack of them; returns ``(l, m)`` accordingly.
    """
    z = np.asarray(z, dtype=complex)
    table = math.sqrt(snr_linear) * hypothesis_table(design, effective, constellation)
    h = kernels.nearest(np.atleast_2d(z), table)
    l, m = _split(h, constellation.order)
    return (int(l[0]), int(m[0])) if z.ndim == 1 else (l, m)


def reduced_table(design: MCADesign, effective: EffectiveChannel, constellation: Constellation, snr_linear):
    """Eigen-coordinates of every hypothesis on the ``n_sa`` active subchannels."""
    n_sa = design.n_sa
    gain = np.sqrt(snr_linear * design.power_scale * effective.eigvals[:n_sa]) * design.xi[:n_sa]
    beams = design.book.active * gain  # (L, n_sa)
    return (beams[:, None, :] * constellation.symbols[None, :, None]).reshape(-1, n_sa)


def ml_detect_reduced(z, design: MCADesign, effective: EffectiveChannel, constellation: Constellation, snr_linear):
    """ML decision using only the ``n_sa`` active eigen-subchannels.

    ``z`` is projected onto the left singular vectors ``G q_k / sqrt(lambda_k)``
    of the active subchannels; the discarded component is common to every
    hypothesis, so decisions match :func:`ml_detect`.
    """
    if not isinstance(design, MCADesign):
        raise TypeError("reduced detection needs an MCADesign (beam book and power split)")
    z = np.asarray(z, dtype=complex)
    basis = effective.left_basis(design.n_sa)
    coords = np.atleast_2d(z) @ basis.conj()
    h = kernels.nearest(coords, reduced_table(design, effective, constellation, snr_linear))
    l, m = _split(h, constellation.order)
    return (int(l[0]), int(m[0])) if z.ndim == 1 else (l, m)


@dataclass(frozen=True, eq=False)
class LinkConfig:
    """One simulated link: effective channel, aggregation matrix, constellation and run budget."""

    design: object  # MCADesign or (L, n_s) array
    effective: EffectiveChannel
    constellation: Constellation
    snr_db_list: tuple
    n_symbols_per_point: int
    seed: int = 0
    block_size: int = DEFAULT_BLOCK

    def __post_init__(self):
        object.__setattr__(self, "snr_db_list", tuple(float(s) for s in np.atleast_1d(self.snr_db_list)))
        w = aggregation_matrix(self.design)
        _rate_bits(w.shape[0], self.constellation.order)
        if w.shape[1] != self.effective.n_s:
            raise ValueError(f"W has {w.shape[1]} columns, effective channel has n_s={self.effective.n_s}")
        if self.n_symbols_per_point < 1 or self.block_size < 1:
            raise ValueError("symbol budget and block size must be positive")

    @property
    def L(self) -> int:
        return aggregation_matrix(self.design).shape[0]

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.L * self.constellation.order))

    def digest(self) -> str:
        return config_digest(
            {
                "w": aggregation_matrix(self.design),
                "g": self.effective.g,
                "constellation": self.constellation.name,
                "snr_db": self.snr_db_list,
                "symbols": self.n_symbols_per_point,
                "seed": self.seed,
                "block": self.block_size,
            }
        )


@dataclass(frozen=True, eq=False)
class SimResult:
    snr_db: np.ndarray
    bit_errors: np.ndarray
    bits_sent: np.ndarray
    symbol_errors: np.ndarray
    seed: int
    digest: str
    meta: dict = field(default_factory=dict)

    @property
    def ber(self) -> np.ndarray:
        return self.bit_errors / self.bits_sent

    def rows(self):
        for s, b, e, r in zip(self.snr_db, self.bits_sent, self.bit_errors, self.ber):
            yield float(s), int(b), int(e), float(r)

    def to_csv(self) -> str:
        lines = [f"# digest={self.digest} seed={self.seed}", "snr_db,bits,errors,ber"]
        lines += [f"{s:g},{b},{e},{r:.10e}" for s, b, e, r in self.rows()]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "digest": self.digest,
            "seed": self.seed,
            "points": [
                {"snr_db": s, "bits": b, "errors": e, "ber": r} for s, b, e, r in self.rows()
            ],
            **self.meta,
        }


def _block_counts(table, labels, snr_db, seed, snr_idx, block_idx, n):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(snr_idx, block_idx))))
    rho = 10.0 ** (snr_db / 10)
    scaled = math.sqrt(rho) * table
    h = rng.integers(0, len(table), n)
    z = scaled[h] + draw_noise(rng, (n, table.shape[1]))
    h_hat = kernels.nearest(z, scaled)
    return kernels.bit_errors(labels[h], labels[h_hat]), int(np.count_nonzero(h != h_hat))


def run_monte_carlo(config: LinkConfig, workers: int = 1) -> SimResult:
    """Fixed-budget BER estimate at every SNR point.

    Symbols are drawn in blocks of ``config.block_size``; block ``b`` at SNR
    index ``i`` owns the random stream ``SeedSequence(seed, spawn_key=(i, b))``,
    so results do not depend on ``workers``.
    """
    table = hypothesis_table(config.design, config.effective, config.constellation)
    labels = hypothesis_labels(config.L, config.constellation)
    n, bs = config.n_symbols_per_point, config.block_size
    jobs = [
        (i, b, min(bs, n - b * bs))
        for i in range(len(config.snr_db_list))
        for b in range(-(-n // bs))
    ]

    def work(job):
        i, b, size = job
        return _block_counts(table, labels, config.snr_db_list[i], config.seed, i, b, size)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(work, jobs))
    else:
        counts = [work(j) for j in jobs]

    n_pts = len(config.snr_db_list)
    bit_err = np.zeros(n_pts, dtype=np.int64)
    sym_err = np.zeros(n_pts, dtype=np.int64)
    for (i, _, _), (be, se) in zip(jobs, counts):
        bit_err[i] += be
        sym_err[i] += se
    return SimResult(
        snr_db=np.array(config.snr_db_list),
        bit_errors=bit_err,
        bits_sent=np.full(n_pts, n * config.bits_per_symbol, dtype=np.int64),
        symbol_errors=sym_err,
        seed=config.seed,
        digest=config.digest(),
    )
