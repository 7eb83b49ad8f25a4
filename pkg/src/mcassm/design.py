"""Analytic max-min-distance design of the multipath aggregation matrix ``W``.

A beam-vector book ``upsilon`` (``L`` unit rows over the ``n_sa`` strongest
eigen-subchannels) is fixed; the free variable is the power split ``xi``
across subchannels, parametrised by ratios ``iota_k = xi_k^2 / xi_1^2``.
For a given ``iota`` every squared distance between two received hypotheses
is ``eps . iota / (m . iota)`` for a coefficient vector ``eps`` (``m`` is the
mean book power per subchannel), so the optimum lies on an intersection of
the few ``eps`` hyperplanes that can ever be smallest.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .array_processing import EffectiveChannel
from .constellations import Constellation, Family, build_sm, min_distance

__all__ = [
    "BeamVectorBook",
    "CandidateSet",
    "MCADesign",
    "DegenerateSpectrumError",
    "design_upsilon",
    "build_candidates",
    "prune_dominated",
    "solve_iota_candidates",
    "candidate_values",
    "select_optimum",
    "assemble_design",
    "optimize",
    "baseline_ssm",
    "baseline_gssm",
    "baseline_matrix",
]

DEGENERATE_REL = 1e-9
DEDUP_REL = 1e-9


class DegenerateSpectrumError(ValueError):
    """An active subchannel carries (numerically) no energy."""


@dataclass(frozen=True, eq=False)
class BeamVectorBook:
    vectors: np.ndarray  # (L, n_s), zero beyond n_sa
    n_sa: int

    def __post_init__(self):
        v = np.array(self.vectors)
        if v.ndim != 2:
            raise ValueError("beam vectors must form an (L, n_s) array")
        if not np.allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-12):
            raise ValueError("beam vectors must have unit norm")
        if np.any(np.abs(v[:, self.n_sa:]) > 0):
            raise ValueError(f"beam vectors must vanish beyond the first {self.n_sa} entries")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def L(self) -> int:
        return self.vectors.shape[0]

    @property
    def active(self) -> np.ndarray:
        return self.vectors[:, : self.n_sa]

    @property
    def row_power(self) -> np.ndarray:
        """Mean of ``|upsilon_l(k)|^2`` over the book, per active subchannel."""
        return np.mean(np.abs(self.active) ** 2, axis=0)

    def padded(self, n_s: int) -> np.ndarray:
        if n_s < self.vectors.shape[1]:
            if np.any(self.vectors[:, n_s:]):
                raise ValueError(f"book uses more than {n_s} subchannels")
            return self.vectors[:, :n_s]
        out = np.zeros((self.L, n_s), dtype=self.vectors.dtype)
        out[:, : self.vectors.shape[1]] = self.vectors
        return out


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """Candidate distance-coefficient vectors ``eps`` (one row each).

    ``refs[i]`` records the origin of row ``i``: ``("mod", l)`` for a
    same-beam symbol error, ``("mc", l1, l2, s1, s2, sign)`` for a beam error.
    """

    entries: np.ndarray
    refs: tuple = ()

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.ndim == 1:
            e = e.reshape(len(e), -1) if e.size else e.reshape(0, 0)
        object.__setattr__(self, "entries", e)
        refs = tuple(self.refs) or tuple(("?",) for _ in range(len(e)))
        object.__setattr__(self, "refs", refs)

    def __len__(self):
        return self.entries.shape[0]

    def _subset(self, mask) -> "CandidateSet":
        idx = np.flatnonzero(mask)
        return CandidateSet(self.entries[idx], tuple(self.refs[i] for i in idx))

    @property
    def d1(self) -> "CandidateSet":
        return self._subset([r[0] == "mod" for r in self.refs])

    @property
    def d2(self) -> "CandidateSet":
        return self._subset([r[0] == "mc" for r in self.refs])

    def distinct(self, rtol: float = 1e-12) -> np.ndarray:
        out: list[np.ndarray] = []
        for e in self.entries:
            if not any(np.allclose(e, o, rtol=rtol, atol=0) for o in out):
                out.append(e)
        return np.array(out)


@dataclass(frozen=True, eq=False)
class MCADesign:
    """Designed power split and the resulting aggregation matrix.

    ``v`` follows the unscaled row definition ``V(l,:) = conj(upsilon_l * xi)``;
    ``w = sqrt(power_scale) * V U^H`` is normalised to unit mean row power,
    so ``||W||_F^2 = L``.
    """

    iota: np.ndarray
    xi: np.ndarray
    v: np.ndarray
    w: np.ndarray
    book: BeamVectorBook
    power_scale: float
    min_ed: float | None = None
    candidate_table: tuple = field(default=())

    @property
    def L(self) -> int:
        return self.w.shape[0]

    @property
    def n_sa(self) -> int:
        return self.book.n_sa

    def to_dict(self) -> dict:
        return {
            "iota": self.iota.tolist(),
            "xi": self.xi.tolist(),
            "min_ed": self.min_ed,
            "power_scale": self.power_scale,
            "W": {"real": self.w.real.tolist(), "imag": self.w.imag.tolist()},
            "candidates": [
                {"iota": list(map(float, it)), "min_ed": float(val)}
                for it, val in self.candidate_table
            ],
        }


def design_upsilon(L: int, n_sa: int = 2, n_s: int = 4) -> BeamVectorBook:
    """PSK-like book ``upsilon_l = [cos(pi/4 + l pi/L), sin(pi/4 + l pi/L), 0, ...]`` (0-based ``l``)."""
    if n_sa != 2:
        raise NotImplementedError(
            f"built-in beam book covers n_sa=2 only (got {n_sa}); supply a BeamVectorBook"
        )
    if L < 1 or L & (L - 1):
        raise ValueError(f"L must be a power of two, got {L}")
    if n_s < n_sa:
        raise ValueError(f"n_s={n_s} is smaller than n_sa={n_sa}")
    ang = np.pi / 4 + np.arange(L) * np.pi / L
    v = np.zeros((L, n_s))
    v[:, 0], v[:, 1] = np.cos(ang), np.sin(ang)
    v[np.abs(v) < 1e-15] = 0.0
    return BeamVectorBook(v, n_sa)


def _check_spectrum(lam: np.ndarray, n_sa: int) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)[:n_sa]
    if len(lam) < n_sa:
        raise ValueError(f"need {n_sa} eigenvalues, got {len(lam)}")
    weak = np.flatnonzero(lam < DEGENERATE_REL * lam[0])
    if lam[0] <= 0 or weak.size:
        usable = int(weak[0]) if weak.size else 0
        warnings.warn(
            f"only {usable} of {n_sa} active subchannels carry energy (eigenvalues {lam})",
            RuntimeWarning,
            stacklevel=3,
        )
        raise DegenerateSpectrumError(
            f"subchannel(s) {list(weak + 1)} have eigenvalue below {DEGENERATE_REL:g} x lambda_1"
        )
    return lam


def build_candidates(
    book: BeamVectorBook, eigvals, constellation: Constellation
) -> CandidateSet:
    """All candidate ``eps`` vectors: one per beam, then one per beam pair / symbol pair / sign."""
    n_sa = book.n_sa
    lam = _check_spectrum(eigvals, n_sa)
    ups = book.active
    d2 = min_distance(constellation) ** 2
    rows, refs = [], []
    for l in range(book.L):
        rows.append(d2 * lam * np.abs(ups[l]) ** 2)
        refs.append(("mod", l))

    if constellation.family is Family.PSK:
        pairs = [(1.0, 1.0)]
    else:
        pairs = list(build_sm(constellation))
    for l1, l2 in itertools.combinations(range(book.L), 2):
        for s1, s2 in pairs:
            for sign in (1, -1):
                rows.append(lam * np.abs(ups[l1] * s1 + sign * ups[l2] * s2) ** 2)
                refs.append(("mc", l1, l2, s1, s2, sign))
    return CandidateSet(np.array(rows), tuple(refs))


def prune_dominated(d0: CandidateSet, rtol: float = 1e-12) -> CandidateSet:
    """Drop every entry that is elementwise >= some other entry.

    Equal entries collapse onto the first occurrence.
    """
    e = d0.entries
    if len(e) == 0:
        return d0
    tol = rtol * max(float(np.max(np.abs(e))), 1e-300)
    keep = np.ones(len(e), dtype=bool)
    for i in range(len(e)):
        le = np.all(e <= e[i] + tol, axis=1)
        le[i] = False
        if not le.any():
            continue
        same = np.all(np.abs(e - e[i]) <= tol, axis=1)
        # a strictly smaller entry, or an equal one seen earlier
        if np.any(le & ~same) or np.any(same[:i]):
            keep[i] = False
    return d0._subset(keep)


def solve_iota_candidates(d: CandidateSet, n_sa: int) -> list[np.ndarray]:
    """Equalise every ``n_sa``-subset of ``d`` with ``iota_1 = 1``; keep positive solutions."""
    e = d.entries
    if n_sa == 1:
        return [np.ones(1)]
    if len(e) < n_sa:
        return []
    found: list[np.ndarray] = []
    for subset in itertools.combinations(range(len(e)), n_sa):
        rows = e[list(subset)]
        a = rows[1:] - rows[0]
        lhs, rhs = a[:, 1:], -a[:, 0]
        if np.linalg.cond(lhs) > 1e12:
            continue  # parallel hyperplanes
        x = np.linalg.solve(lhs, rhs)
        if not np.all(np.isfinite(x)) or np.any(x <= 0):
            continue
        iota = np.concatenate(([1.0], x))
        if not any(np.allclose(iota, f, rtol=DEDUP_REL, atol=0) for f in found):
            found.append(iota)
    found.sort(key=tuple)
    return found


def candidate_values(candidates, d0: CandidateSet, row_power=None) -> np.ndarray:
    """Achieved minimum distance ``min_eps eps.iota / (m.iota)`` of each candidate ``iota``.

    ``row_power`` is ``m``; ``None`` gives the plain ``sum(iota)`` normalisation.
    """
    it = np.atleast_2d(np.asarray(candidates, dtype=float))
    m = np.ones(it.shape[1]) if row_power is None else np.asarray(row_power, dtype=float)
    return (d0.entries @ it.T).min(axis=0) / (it @ m)


def select_optimum(candidates, d0: CandidateSet, row_power=None) -> tuple[np.ndarray, float]:
    """Best candidate; ties go to the smallest ``iota_2``, then lexicographic order."""
    if len(candidates) == 0:
        raise ValueError("no feasible iota candidates (degenerate candidate set)")
    vals = candidate_values(candidates, d0, row_power)
    best = vals.max()
    tied = [i for i, v in enumerate(vals) if v >= best - 1e-12 * abs(best)]
    i = min(tied, key=lambda k: tuple(candidates[k]))
    return np.asarray(candidates[i], dtype=float), float(vals[i])


def assemble_design(
    iota, book: BeamVectorBook, effective: EffectiveChannel, min_ed=None, candidate_table=()
) -> MCADesign:
    iota = np.asarray(iota, dtype=float)
    if iota.shape != (book.n_sa,) or np.any(iota <= 0):
        raise ValueError(f"iota must be {book.n_sa} positive ratios, got {iota}")
    n_s = effective.n_s
    xi = np.zeros(n_s)
    xi[: book.n_sa] = np.sqrt(iota / iota.sum())
    ups = book.padded(n_s)
    v = np.conj(ups * xi)
    w = v @ effective.eigvecs.conj().T
    mean_power = float(np.mean(np.sum(np.abs(v) ** 2, axis=1)))
    scale = 1.0 / mean_power
    return MCADesign(
        iota=iota,
        xi=xi,
        v=v,
        w=w * math.sqrt(scale),
        book=book,
        power_scale=scale,
        min_ed=min_ed,
        candidate_table=tuple(candidate_table),
    )


def optimize(
    effective: EffectiveChannel,
    constellation: Constellation,
    L: int = 4,
    n_sa: int = 2,
    book: BeamVectorBook | None = None,
) -> MCADesign:
    """Full pipeline: book -> candidates -> prune -> intersections -> best ``iota`` -> ``W``."""
    book = book or design_upsilon(L, n_sa, effective.n_s)
    d0 = build_candidates(book, effective.eigvals, constellation)
    d = prune_dominated(d0)
    cands = solve_iota_candidates(d, book.n_sa)
    iota, best = select_optimum(cands, d0, book.row_power)
    vals = candidate_values(cands, d0, book.row_power)
    table = tuple(
        sorted(((tuple(map(float, c)), v) for c, v in zip(cands, vals.tolist())), key=lambda r: -r[1])
    )
    return assemble_design(iota, book, effective, min_ed=best, candidate_table=table)


def baseline_ssm(n_s: int, L: int | None = None) -> np.ndarray:
    """Conventional spatial scattering modulation: one path per beam symbol."""
    L = n_s if L is None else L
    if L != n_s:
        raise ValueError(f"SSM baseline needs L == n_s (got L={L}, n_s={n_s})")
    return np.eye(n_s, dtype=complex)


_GSSM_PATTERN = np.array(
    [
        [1, 1, 0, 0, 0],
        [1, 0, 1, 0, 0],
        [1, 0, 0, 1, 0],
        [1, 0, 0, 0, 1],
        [0, 1, 1, 0, 0],
        [0, 1, 0, 1, 0],
        [0, 1, 0, 0, 1],
        [0, 0, 1, 1, 0],
    ]
)


def baseline_gssm(n_s: int = 5, L: int = 8) -> np.ndarray:
    """Generalised SSM: each beam symbol drives a fixed pair of paths equally."""
    if (n_s, L) != (5, 8):
        raise ValueError(f"GSSM baseline is defined for n_s=5, L=8 (got n_s={n_s}, L={L})")
    return _GSSM_PATTERN.astype(complex) / math.sqrt(2)


def baseline_matrix(kind: str, n_s: int, L: int) -> np.ndarray:
    if kind == "ssm":
        return baseline_ssm(n_s, L)
    if kind == "gssm":
        return baseline_gssm(n_s, L)
    raise ValueError(f"unknown baseline {kind!r}")
