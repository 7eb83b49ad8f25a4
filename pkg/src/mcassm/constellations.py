"""Unit-energy PSK / QAM symbol sets with Gray labels.

Rectangular QAM uses a ``sqrt(2M) x sqrt(M/2)`` grid (in-phase x quadrature),
so 8-QAM is 4 x 2 and 32-QAM is 8 x 4.
"""

from __future__ import annotations

import enum
import itertools
import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Family",
    "Constellation",
    "SymbolPairSet",
    "gen_constellation",
    "parse_constellation",
    "min_distance",
    "build_sm",
    "gray",
]


class Family(enum.Enum):
    PSK = "psk"
    SQUARE_QAM = "qam"
    RECT_QAM = "qam_rect"


def gray(n):
    return n ^ (n >> 1)


def _is_pow2(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


@dataclass(frozen=True, eq=False)
class Constellation:
    family: Family
    order: int
    symbols: np.ndarray
    labels: np.ndarray  # integer Gray label of symbol m

    def __post_init__(self):
        for name in ("symbols", "labels"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.order))

    def label_bits(self, m: int) -> str:
        return format(int(self.labels[m]), f"0{self.bits_per_symbol}b")

    @property
    def index_of_label(self) -> np.ndarray:
        inv = np.empty(self.order, dtype=np.int64)
        inv[self.labels] = np.arange(self.order)
        return inv

    @property
    def name(self) -> str:
        suffix = {Family.PSK: "psk", Family.SQUARE_QAM: "qam", Family.RECT_QAM: "qam"}[self.family]
        return f"{suffix}{self.order}" + ("r" if self.family is Family.RECT_QAM else "")

    def __repr__(self):
        return f"Constellation({self.name})"


@dataclass(frozen=True)
class SymbolPairSet:
    pairs: tuple[tuple[complex, complex], ...]
    scale: float = 1.0

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def _qam_grid(n_i: int, n_q: int, scale: float):
    """Grid symbols ordered in-phase major with per-axis Gray labels."""
    lv_i = np.arange(-(n_i - 1), n_i, 2)
    lv_q = np.arange(-(n_q - 1), n_q, 2)
    q_bits = int(math.log2(n_q))
    syms, labels = [], []
    for a, re_lv in enumerate(lv_i):
        for b, im_lv in enumerate(lv_q):
            syms.append(scale * complex(re_lv, im_lv))
            labels.append((gray(a) << q_bits) | gray(b))
    return np.array(syms), np.array(labels, dtype=np.int64)


def gen_constellation(family: Family | str, order: int) -> Constellation:
    family = Family(family) if not isinstance(family, Family) else family
    if order < 2 or not _is_pow2(order):
        raise ValueError(f"order must be a power of two >= 2, got {order}")
    k = int(math.log2(order))
    if family is Family.PSK:
        syms = np.exp(2j * np.pi * np.arange(order) / order)
        labels = gray(np.arange(order))
    elif family is Family.SQUARE_QAM:
        if k % 2:
            raise ValueError(f"square QAM needs an even number of bits, got M={order}")
        side = 1 << (k // 2)
        syms, labels = _qam_grid(side, side, math.sqrt(3 / (2 * (order - 1))))
    else:
        if k % 2 == 0 or order < 8:
            raise ValueError(f"rectangular QAM needs an odd number of bits and M >= 8, got M={order}")
        n_i = 1 << ((k + 1) // 2)
        syms, labels = _qam_grid(n_i, order // n_i, math.sqrt(6 / (5 * order - 4)))
    return Constellation(family, order, syms, np.asarray(labels, dtype=np.int64))


_NAME_RE = re.compile(r"^(psk|qam)(\d+)(r?)$")


def parse_constellation(name: str) -> Constellation:
    """``psk16`` / ``qam16`` / ``qam8r`` style names.  Odd-bit QAM is always rectangular."""
    m = _NAME_RE.match(name.strip().lower())
    if not m:
        raise ValueError(f"unrecognised constellation {name!r} (try psk16, qam16, qam8r)")
    kind, order, rect = m.group(1), int(m.group(2)), m.group(3)
    if kind == "psk":
        if rect:
            raise ValueError(f"unrecognised constellation {name!r}")
        return gen_constellation(Family.PSK, order)
    odd = _is_pow2(order) and int(math.log2(order)) % 2 == 1
    return gen_constellation(Family.RECT_QAM if (rect or odd) else Family.SQUARE_QAM, order)


def min_distance(c: Constellation) -> float:
    """Closed-form minimum distance between distinct symbols."""
    m = c.order
    if c.family is Family.PSK:
        return 2 * math.sin(math.pi / m)
    if c.family is Family.SQUARE_QAM:
        return math.sqrt(6 / (m - 1))
    return math.sqrt(24 / (5 * m - 4))


def build_sm(c: Constellation) -> SymbolPairSet:
    """Reduced symbol pairs generating every minimal cross-beam distance for QAM.

    Takes the first-octant grid points ``R + jI`` (``1 <= I <= R``) that are
    the smallest point along their direction (``gcd(R, I) == 1``), pairs each
    two distinct such points in grid order, and adds ``(1+j, 1+j)``.
    """
    if c.family is Family.PSK:
        raise ValueError("PSK needs no symbol-pair set; use the +/- beam sums directly")
    m = c.order
    if c.family is Family.SQUARE_QAM:
        r_max = i_max = math.isqrt(m) - 1
        scale = math.sqrt(3 / (2 * (m - 1)))
    else:
        r_max = math.isqrt(2 * m) - 1
        i_max = math.isqrt(m // 2) - 1
        scale = math.sqrt(6 / (5 * m - 4))
    points = [
        (r, i)
        for r in range(1, r_max + 1, 2)
        for i in range(1, min(r, i_max) + 1, 2)
        if math.gcd(r, i) == 1
    ]
    grid = [(points[0], points[0])] + list(itertools.combinations(points, 2))
    pairs = tuple((scale * complex(*a), scale * complex(*b)) for a, b in grid)
    return SymbolPairSet(pairs, scale)
