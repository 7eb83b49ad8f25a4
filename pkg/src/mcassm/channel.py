"""Sparse multipath MIMO channel between two uniform linear arrays.

Channel records are kept as per-path triples (gain, angle of departure,
angle of arrival) and expanded into steering vectors / channel matrices on
demand.  Angles are in radians, element spacings in wavelengths.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Sequence

import numpy as np

__all__ = [
    "ArrayConfig",
    "MultipathComponent",
    "ChannelScenario",
    "RecordFormatError",
    "DegenerateChannelError",
    "SynthProfile",
    "steering_vector",
    "build_channel_matrix",
    "normalize_gains",
    "load_link_records",
    "synth_scenario",
    "synth_ensemble",
    "reference_scenario",
    "CSV_HEADER",
]

CSV_HEADER = ("link_id", "path_id", "beta", "theta_t_rad", "theta_r_rad")


class RecordFormatError(ValueError):
    """Malformed channel record input."""


class DegenerateChannelError(ValueError):
    """Channel parameters that cannot describe a usable link."""


@dataclass(frozen=True)
class ArrayConfig:
    n_tx: int = 16
    n_rx: int = 16
    d_tx: float = 0.5
    d_rx: float = 0.5

    def __post_init__(self):
        if int(self.n_tx) < 1 or int(self.n_rx) < 1:
            raise ValueError("antenna counts must be >= 1")
        if not (self.d_tx > 0 and self.d_rx > 0):
            raise ValueError("element spacings must be positive")


@dataclass(frozen=True)
class MultipathComponent:
    gain: complex | float
    aod: float
    aoa: float

    def __post_init__(self):
        if not (np.isfinite(self.gain) and np.isfinite(self.aod) and np.isfinite(self.aoa)):
            raise ValueError(f"non-finite multipath parameters: {self}")


@dataclass(frozen=True)
class ChannelScenario:
    """One link: multipath components sorted by decreasing ``|gain|``."""

    link_id: str
    components: tuple[MultipathComponent, ...]
    array: ArrayConfig = field(default_factory=ArrayConfig)

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise DegenerateChannelError(f"link {self.link_id!r} has no multipath components")
        # stable sort keeps the input order among equal magnitudes
        comps = tuple(sorted(comps, key=lambda c: -abs(c.gain)))
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "link_id", str(self.link_id))

    @property
    def n_paths(self) -> int:
        return len(self.components)

    @property
    def gains(self) -> np.ndarray:
        return np.array([c.gain for c in self.components])

    @property
    def aods(self) -> np.ndarray:
        return np.array([c.aod for c in self.components], dtype=float)

    @property
    def aoas(self) -> np.ndarray:
        return np.array([c.aoa for c in self.components], dtype=float)

    @classmethod
    def from_arrays(cls, link_id, beta, theta_t, theta_r, array: ArrayConfig | None = None):
        beta, theta_t, theta_r = (np.atleast_1d(np.asarray(a)) for a in (beta, theta_t, theta_r))
        if not (len(beta) == len(theta_t) == len(theta_r)):
            raise RecordFormatError(
                f"link {link_id!r}: beta/theta_t/theta_r lengths differ "
                f"({len(beta)}, {len(theta_t)}, {len(theta_r)})"
            )
        comps = tuple(
            MultipathComponent(_scalar(b), float(t), float(r))
            for b, t, r in zip(beta, theta_t, theta_r)
        )
        return cls(link_id, comps, array or ArrayConfig())

    def with_components(self, components: Sequence[MultipathComponent]) -> "ChannelScenario":
        return ChannelScenario(self.link_id, tuple(components), self.array)

    def with_array(self, array: ArrayConfig) -> "ChannelScenario":
        return ChannelScenario(self.link_id, self.components, array)


def _scalar(x):
    x = complex(x)
    return x.real if x.imag == 0 else x


def steering_vector(n_elems: int, spacing_wl: float, angle: float) -> np.ndarray:
    """ULA response with phase reference at the array centre.

    Element ``k`` (1-based) is ``exp(j 2 pi d (k - (1 + n)/2) cos(angle))``.
    """
    if n_elems < 1:
        raise ValueError("n_elems must be >= 1")
    k = np.arange(1, n_elems + 1)
    return np.exp(1j * 2 * np.pi * spacing_wl * (k - (1 + n_elems) / 2) * np.cos(angle))


def build_channel_matrix(scenario: ChannelScenario) -> np.ndarray:
    """Composite ``N_r x N_t`` matrix ``sum_n beta_n a_r,n^H a_t,n``."""
    arr = scenario.array
    h = np.zeros((arr.n_rx, arr.n_tx), dtype=complex)
    for c in scenario.components:
        a_t = steering_vector(arr.n_tx, arr.d_tx, c.aod)
        a_r = steering_vector(arr.n_rx, arr.d_rx, c.aoa)
        h += c.gain * np.outer(a_r.conj(), a_t)
    return h


def normalize_gains(components: Sequence[MultipathComponent]) -> list[MultipathComponent]:
    """Scale gains to unit l2 norm; angles and order are kept."""
    gains = np.array([c.gain for c in components])
    norm = np.sqrt(np.sum(np.abs(gains) ** 2))
    if norm == 0 or not np.isfinite(norm):
        raise DegenerateChannelError("all multipath gains are zero")
    return [MultipathComponent(_scalar(c.gain / norm), c.aod, c.aoa) for c in components]


# -- ingestion ---------------------------------------------------------------


def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data


def _csv_records(text: str):
    reader = csv.reader(io.StringIO(text))
    header = None
    for row_no, row in enumerate(reader, start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        if header is None:
            header = [h.strip() for h in row]
            missing = [h for h in CSV_HEADER if h not in header]
            if missing:
                raise RecordFormatError(f"row {row_no}: header lacks columns {missing}")
            idx = {h: header.index(h) for h in CSV_HEADER}
            continue
        if len(row) != len(header):
            raise RecordFormatError(
                f"row {row_no}: expected {len(header)} fields, got {len(row)}"
            )
        try:
            beta = _scalar(complex(row[idx["beta"]].strip().replace(" ", "")))
            tt = float(row[idx["theta_t_rad"]])
            tr = float(row[idx["theta_r_rad"]])
            comp = MultipathComponent(beta, tt, tr)
        except ValueError as exc:
            raise RecordFormatError(f"row {row_no}: {exc}") from None
        yield row[idx["link_id"]].strip(), comp


def _json_links(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RecordFormatError(f"invalid JSON: {exc}") from None
    links = doc.get("links", doc) if isinstance(doc, dict) else doc
    if not isinstance(links, list):
        raise RecordFormatError("expected a list of links")
    for i, link in enumerate(links):
        try:
            yield (
                str(link.get("link_id", i)),
                link["beta"],
                link["theta_t"],
                link["theta_r"],
            )
        except (KeyError, AttributeError):
            raise RecordFormatError(
                f"link entry {i}: needs 'beta', 'theta_t' and 'theta_r' arrays"
            ) from None


def load_link_records(
    source: BinaryIO | bytes | str,
    fmt: str = "csv",
    array: ArrayConfig | None = None,
    normalize: bool = False,
) -> list[ChannelScenario]:
    """Parse per-link multipath records.

    ``fmt`` is ``"csv"`` (columns ``link_id,path_id,beta,theta_t_rad,theta_r_rad``)
    or ``"json"`` (``{"links": [{"link_id", "beta", "theta_t", "theta_r"}]}``).
    Links keep their first-appearance order.  ``normalize`` rescales each
    link's gains to unit energy.
    """
    text = _read_text(source)
    array = array or ArrayConfig()
    grouped: dict[str, list[MultipathComponent]] = {}
    if fmt == "csv":
        for link_id, comp in _csv_records(text):
            grouped.setdefault(link_id, []).append(comp)
    elif fmt == "json":
        if not text.strip():
            return []
        for link_id, beta, tt, tr in _json_links(text):
            scen = ChannelScenario.from_arrays(link_id, beta, tt, tr, array)
            grouped[link_id] = list(scen.components)
    else:
        raise ValueError(f"unknown record format {fmt!r}")

    out = []
    for link_id, comps in grouped.items():
        if normalize:
            comps = normalize_gains(comps)
        out.append(ChannelScenario(link_id, tuple(comps), array))
    return out


def dump_link_records(scenarios: Iterable[ChannelScenario]) -> str:
    """CSV text for ``scenarios`` in the ingestion format."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for s in scenarios:
        for i, c in enumerate(s.components, start=1):
            beta = repr(c.gain) if isinstance(c.gain, float) else str(c.gain)
            w.writerow([s.link_id, i, beta, repr(float(c.aod)), repr(float(c.aoa))])
    return buf.getvalue()


# -- synthetic links -----------------------------------------------------------


@dataclass(frozen=True)
class SynthProfile:
    """Knobs for :func:`synth_scenario`.

    Path ``k`` (0-based) has magnitude ``decay**k * U(jitter, 1)`` and a random
    sign before normalization.
    """

    decay: float = 0.5
    jitter: float = 0.6
    array: ArrayConfig = field(default_factory=ArrayConfig)


def synth_scenario(
    n_paths: int, seed, profile: SynthProfile | None = None, link_id=None
) -> ChannelScenario:
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    profile = profile or SynthProfile()
    rng = np.random.default_rng(seed)
    mag = profile.decay ** np.arange(n_paths) * rng.uniform(profile.jitter, 1.0, n_paths)
    sign = rng.choice([-1.0, 1.0], n_paths)
    aod = rng.uniform(0.0, np.pi, n_paths)
    aoa = rng.uniform(0.0, np.pi, n_paths)
    comps = [MultipathComponent(float(g), float(t), float(r)) for g, t, r in zip(mag * sign, aod, aoa)]
    if link_id is None:
        link_id = f"synth-{seed}" if np.isscalar(seed) else "synth-" + "-".join(map(str, seed))
    return ChannelScenario(link_id, tuple(normalize_gains(comps)), profile.array)


def synth_ensemble(n_links: int, n_paths: int, seed: int, profile: SynthProfile | None = None):
    """``n_links`` independent synthetic links; link ``i`` is seeded by ``(seed, i)``."""
    return [synth_scenario(n_paths, (seed, i), profile, link_id=str(i)) for i in range(n_links)]


def reference_scenario(array: ArrayConfig | None = None) -> ChannelScenario:
    """Five-path indoor link used for the worked design examples."""
    return ChannelScenario.from_arrays(
        "reference",
        [0.9356, -0.2807, 0.1871, -0.0936, 0.0468],
        [2.0, 2.05, 1.2, 3.0, 0.4],
        [2.0, 1.6, 2.4, 2.45, 2.8],
        array,
    )
