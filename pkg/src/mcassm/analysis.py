"""Closed-form error analysis: pairwise error probabilities, union bound, distance sweeps.

Squared distances between received hypotheses ``J = ||G W^H(l1,:) s1 - G W^H(l2,:) s2||^2``
drive everything here.  The union upper bound on the average bit error
probability is

    sum_{h1 != h2} hamming(h1, h2) Q(sqrt(rho J / 2)) / (L M log2(L M))

evaluated in the log domain so that it stays finite far below 1e-300.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as sopt
from scipy import special

from .array_processing import EffectiveChannel, effective_channel
from .channel import dump_link_records
from .constellations import Constellation
from .design import BeamVectorBook, assemble_design, baseline_matrix
from .design import optimize as optimize_design
from .digest import config_digest
from .link import aggregation_matrix, hypothesis_labels, hypothesis_table

__all__ = [
    "AbepCurve",
    "ScenarioSweep",
    "q_function",
    "log_q_function",
    "pairwise_ep",
    "distance_matrix",
    "hamming_matrix",
    "exact_min_ed",
    "uub_abep",
    "log_uub_abep",
    "uub_curve",
    "snr_at_target",
    "ed_sweep",
    "scenario_sweep",
]


def q_function(x):
    """Gaussian tail ``Q(x) = erfc(x / sqrt(2)) / 2``."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2))


def log_q_function(x):
    """``log Q(x)``, accurate deep into the tail."""
    return special.log_ndtr(-np.asarray(x, dtype=float))


def pairwise_ep(J, snr_linear):
    """Pairwise error probability ``Q(sqrt(rho J / 2))``."""
    J = np.asarray(J, dtype=float)
    rho = np.asarray(snr_linear, dtype=float)
    if np.any(J < 0) or np.any(rho < 0):
        raise ValueError("distance and SNR must be non-negative")
    return q_function(np.sqrt(rho * J / 2))


def distance_matrix(design, effective: EffectiveChannel, constellation: Constellation) -> np.ndarray:
    """All squared distances between unit-SNR hypotheses, ``(L*M, L*M)``."""
    x = hypothesis_table(design, effective, constellation)
    diff = x[:, None, :] - x[None, :, :]
    return np.sum(diff.real**2 + diff.imag**2, axis=2)


def hamming_matrix(L: int, constellation: Constellation) -> np.ndarray:
    labels = hypothesis_labels(L, constellation)
    return np.bitwise_count(labels[:, None] ^ labels[None, :]).astype(float)


def exact_min_ed(design, effective: EffectiveChannel, constellation: Constellation):
    """Smallest squared distance over all distinct hypothesis pairs.

    Returns
    -------
    J_min : float
    pair : tuple
        ``((l1, m1), (l2, m2))`` attaining it (first in index order).
    """
    d = distance_matrix(design, effective, constellation)
    n = len(d)
    if n < 2:
        raise ValueError("need at least two hypotheses")
    np.fill_diagonal(d, np.inf)
    flat = int(np.argmin(d))
    h1, h2 = divmod(flat, n)
    M = constellation.order
    return float(d[h1, h2]), ((h1 // M, h1 % M), (h2 // M, h2 % M))


def _log_uub(d, ham, rate_norm, snr_linear):
    off = ~np.eye(len(d), dtype=bool) & (ham > 0)
    dd, hh = d[off], ham[off]
    rho = np.atleast_1d(np.asarray(snr_linear, dtype=float))
    if dd.size == 0:
        return np.full(rho.shape, -np.inf)
    x = np.sqrt(rho[:, None] * dd[None, :] / 2)
    terms = np.log(hh)[None, :] + log_q_function(x)
    return special.logsumexp(terms, axis=1) - math.log(rate_norm)


def log_uub_abep(design, effective: EffectiveChannel, constellation: Constellation, snr_linear):
    """Natural log of :func:`uub_abep`; finite even where the bound underflows float64."""
    w = aggregation_matrix(design)
    L, M = w.shape[0], constellation.order
    if L * M < 2:
        out = np.full(np.shape(np.atleast_1d(snr_linear)), -np.inf)
    else:
        d = distance_matrix(w, effective, constellation)
        ham = hamming_matrix(L, constellation)
        out = _log_uub(d, ham, L * M * math.log2(L * M), snr_linear)
    return out if np.ndim(snr_linear) else float(out[0])


def uub_abep(design, effective: EffectiveChannel, constellation: Constellation, snr_linear):
    """Union upper bound on the average bit error probability at ``snr_linear`` (scalar or array)."""
    return np.exp(log_uub_abep(design, effective, constellation, snr_linear))


@dataclass(frozen=True, eq=False)
class AbepCurve:
    snr_db: np.ndarray
    uub: np.ndarray
    simulated: np.ndarray | None = None
    digest: str = ""
    extra: dict = field(default_factory=dict)  # additional named columns

    def to_csv(self) -> str:
        cols = ["snr_db", "uub"] + list(self.extra) + (["simulated"] if self.simulated is not None else [])
        lines = [f"# digest={self.digest}", ",".join(cols)]
        for i, s in enumerate(self.snr_db):
            vals = [f"{s:g}", f"{self.uub[i]:.10e}"]
            vals += [f"{self.extra[k][i]:.10e}" for k in self.extra]
            if self.simulated is not None:
                vals.append(f"{self.simulated[i]:.10e}")
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        out = {"digest": self.digest, "snr_db": self.snr_db.tolist(), "uub": self.uub.tolist()}
        out.update({k: np.asarray(v).tolist() for k, v in self.extra.items()})
        if self.simulated is not None:
            out["simulated"] = self.simulated.tolist()
        return out


def uub_curve(design, effective, constellation, snr_db_list, digest: str = "") -> AbepCurve:
    snr_db = np.asarray(snr_db_list, dtype=float)
    uub = np.atleast_1d(uub_abep(design, effective, constellation, 10 ** (snr_db / 10)))
    return AbepCurve(snr_db, uub, digest=digest)


def snr_at_target(design, effective, constellation, target=1e-4, lo_db=-40.0, hi_db=120.0) -> float:
    """SNR (dB) at which the union bound crosses ``target``; ``inf`` if it never does in range."""
    w = aggregation_matrix(design)
    L, M = w.shape[0], constellation.order
    d = distance_matrix(w, effective, constellation)
    ham = hamming_matrix(L, constellation)
    norm = L * M * math.log2(L * M)
    log_t = math.log(target)

    def f(s):
        return float(_log_uub(d, ham, norm, 10 ** (s / 10))[0]) - log_t

    if f(hi_db) > 0:
        return math.inf
    if f(lo_db) < 0:
        return lo_db
    return float(sopt.brentq(f, lo_db, hi_db, xtol=1e-10))


def ed_sweep(effective: EffectiveChannel, book: BeamVectorBook, constellation: Constellation, iota_grid):
    """Exact minimum distance of the design built at each ``iota_2`` (``n_sa = 2``).

    Returns an ``(n, 2)`` array of ``(iota_2, min_ed)`` rows.
    """
    if book.n_sa != 2:
        raise ValueError("ed_sweep varies the scalar iota_2 and needs n_sa = 2")
    rows = []
    for i2 in np.atleast_1d(np.asarray(iota_grid, dtype=float)):
        design = assemble_design([1.0, i2], book, effective)
        rows.append((i2, exact_min_ed(design, effective, constellation)[0]))
    return np.array(rows).reshape(-1, 2)


@dataclass(frozen=True, eq=False)
class ScenarioSweep:
    aggregate: AbepCurve
    links: list  # one dict per evaluated link
    failed: list  # (link_id, reason)

    def per_link_csv(self) -> str:
        cols = ["link_id", "status", "iota2", "min_ed", "snr_at_target_db"]
        lines = [f"# digest={self.aggregate.digest}", ",".join(cols)]
        for r in self.links:
            lines.append(
                f"{r['link_id']},ok,{r['iota2']:.10g},{r['min_ed']:.10g},{r['snr_at_target_db']:.6f}"
            )
        for link_id, reason in self.failed:
            lines.append(f"{link_id},failed: {reason.replace(',', ';')},,,")
        return "\n".join(lines) + "\n"


def scenario_sweep(
    scenarios,
    constellation: Constellation,
    snr_db_list,
    n_s: int = 4,
    L: int = 4,
    n_sa: int = 2,
    baseline: str = "mca",
    target: float = 1e-4,
) -> ScenarioSweep:
    """Per-link union bounds and their ensemble mean.

    Links whose effective channel or design cannot be formed are reported in
    ``failed`` and excluded from the aggregate.  The aggregate also carries
    the per-SNR median as an ``extra`` column.
    """
    scenarios = list(scenarios)
    if not scenarios:
        raise ValueError("scenario list is empty")
    snr_db = np.asarray(snr_db_list, dtype=float)
    rho = 10 ** (snr_db / 10)
    links, failed, curves = [], [], []
    for scen in scenarios:
        try:
            eff = effective_channel(scen, n_s)
            if baseline == "mca":
                design = optimize_design(eff, constellation, L=L, n_sa=n_sa)
                iota2 = float(design.iota[1]) if n_sa > 1 else math.nan
            else:
                design = baseline_matrix(baseline, n_s, L)
                iota2 = math.nan
            j_min = exact_min_ed(design, eff, constellation)[0]
            curve = np.atleast_1d(uub_abep(design, eff, constellation, rho))
            snr_t = snr_at_target(design, eff, constellation, target)
        except (ValueError, np.linalg.LinAlgError) as exc:
            failed.append((scen.link_id, str(exc)))
            continue
        curves.append(curve)
        links.append(
            {
                "link_id": scen.link_id,
                "iota2": iota2,
                "min_ed": j_min,
                "snr_at_target_db": snr_t,
                "uub": curve,
            }
        )
    if not curves:
        raise ValueError(f"all {len(scenarios)} links failed: {failed[0][1]}")
    stack = np.vstack(curves)
    digest = config_digest(
        {
            "records": dump_link_records(scenarios),
            "arrays": [vars(s.array) for s in scenarios],
            "constellation": constellation.name,
            "snr_db": snr_db,
            "n_s": n_s,
            "L": L,
            "n_sa": n_sa,
            "baseline": baseline,
        }
    )
    agg = AbepCurve(snr_db, stack.mean(axis=0), digest=digest, extra={"median": np.median(stack, axis=0)})
    return ScenarioSweep(agg, links, failed)
