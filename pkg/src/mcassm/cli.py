"""``mcassm`` command line: design, simulate and analyse links in batch.

Every CSV output starts with a ``# digest=...`` line identifying the
resolved run configuration; nothing time-dependent is written.
Settings are resolved as built-in defaults < ``--config`` JSON file < flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from .analysis import ed_sweep, scenario_sweep, uub_abep, uub_curve
from .array_processing import effective_channel
from .channel import (
    ArrayConfig,
    SynthProfile,
    dump_link_records,
    load_link_records,
    reference_scenario,
    synth_ensemble,
)
from .constellations import Family, gen_constellation, parse_constellation
from .design import assemble_design, baseline_matrix, design_upsilon, optimize
from .digest import config_digest
from .link import LinkConfig, run_monte_carlo

DEFAULTS = {
    "scenario": None,
    "link": None,
    "normalize": False,
    "nt": 16,
    "nr": 16,
    "dt": 0.5,
    "dr": 0.5,
    "ns": 4,
    "nsa": 2,
    "L": 4,
    "M": 16,
    "family": "qam",
    "snr": "0:2:30",
    "symbols": 100_000,
    "seed": 0,
    "baseline": "mca",
    "workers": 1,
    "synth_links": None,
    "paths": 5,
    "iota_min": 1e-1,
    "iota_max": 1e4,
    "points": 400,
    "abep_snr": None,
}
# keys that do not change results and stay out of the digest
_NO_DIGEST = {"out", "links_out", "json", "workers", "dump_effective", "config", "command"}


class CliError(Exception):
    pass


def parse_snr(text: str) -> np.ndarray:
    """``start:step:stop`` (inclusive), or a comma-separated list."""
    try:
        if ":" in text:
            start, step, stop = (float(p) for p in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return start + step * np.arange(max(n, 0))
        return np.array([float(p) for p in text.split(",") if p.strip()])
    except ValueError:
        raise CliError(f"bad SNR grid {text!r}; use start:step:stop or a comma list") from None


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("system")
    g.add_argument("--config", help="JSON file with default settings (flags override it)")
    g.add_argument("--scenario", help="link records (.csv or .json); default: built-in reference link")
    g.add_argument("--link", help="link_id to use from a multi-link scenario file (default: first)")
    g.add_argument("--normalize", action="store_true", default=None, help="rescale path gains to unit energy")
    g.add_argument("--nt", type=int, help="transmit antennas")
    g.add_argument("--nr", type=int, help="receive antennas")
    g.add_argument("--dt", type=float, help="transmit spacing (wavelengths)")
    g.add_argument("--dr", type=float, help="receive spacing (wavelengths)")
    g.add_argument("--ns", type=int, help="RF chains / steered paths")
    g.add_argument("--nsa", type=int, help="active eigen-subchannels")
    g.add_argument("-L", type=int, dest="L", help="beam-vector symbols")
    g.add_argument("-M", type=int, dest="M", help="constellation order")
    g.add_argument("--family", choices=["psk", "qam", "qam_rect"], help="constellation family")
    g.add_argument("--snr", help="SNR grid in dB, start:step:stop")
    g.add_argument("--symbols", type=int, help="symbols per SNR point")
    g.add_argument("--seed", type=int)
    g.add_argument(
        "--baseline",
        choices=["mca", "ssm", "gssm"],
        help="mca: designed W; ssm: W = I (L = ns); gssm: fixed pair pattern (ns=5, L=8)",
    )
    g.add_argument("--workers", type=int, help="parallel workers (results do not depend on it)")
    g.add_argument("--out", help="output file (default: stdout)")
    g.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    g.add_argument(
        "--dump-effective",
        nargs="?",
        const="-",
        metavar="PATH",
        help="write the effective-channel JSON (to stderr if no PATH)",
    )

    p = argparse.ArgumentParser(prog="mcassm", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("optimize", parents=[common], help="design W for one link")
    sub.add_parser("simulate", parents=[common], help="Monte-Carlo BER (snr_db,bits,errors,ber)")
    sub.add_parser("abep", parents=[common], help="union-bound ABEP curve (snr_db,uub)")
    ed = sub.add_parser("ed-sweep", parents=[common], help="min distance versus iota_2 (iota2,min_ed)")
    ed.add_argument("--iota-min", type=float)
    ed.add_argument("--iota-max", type=float)
    ed.add_argument("--points", type=int, help="log-spaced grid points")
    ed.add_argument("--abep-snr", type=float, help="also report the union bound at this SNR (dB)")
    sw = sub.add_parser("scenario-sweep", parents=[common], help="per-link and mean union bounds")
    sw.add_argument("--synth-links", type=int, help="use a synthetic ensemble of this many links")
    sw.add_argument("--paths", type=int, help="paths per synthetic link")
    sw.add_argument("--links-out", help="per-link CSV path (default: appended to stdout)")
    sy = sub.add_parser("synth", parents=[common], help="write synthetic link records")
    sy.add_argument("--synth-links", type=int, help="number of links (default 1)")
    sy.add_argument("--paths", type=int, help="paths per link")
    return p


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except FileNotFoundError:
            raise CliError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise CliError(f"config file {args.config} is not valid JSON: {exc}") from None
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise CliError(f"unknown keys in {args.config}: {sorted(unknown)}")
        cfg.update(loaded)
    cfg.update({k: v for k, v in vars(args).items() if v is not None})
    if cfg["baseline"] == "ssm":
        cfg["L"] = cfg["ns"]
    elif cfg["baseline"] == "gssm":
        cfg["ns"], cfg["L"] = 5, 8
    return cfg


def _constellation(cfg):
    fam, m = cfg["family"], cfg["M"]
    if fam == "qam_rect":
        return gen_constellation(Family.RECT_QAM, m)
    return parse_constellation(f"{fam}{m}")


def _array(cfg):
    return ArrayConfig(cfg["nt"], cfg["nr"], cfg["dt"], cfg["dr"])


def _load_all(cfg):
    path = cfg["scenario"]
    if path is None:
        return [reference_scenario(_array(cfg))]
    if not os.path.exists(path):
        raise CliError(f"scenario file not found: {path}")
    fmt = "json" if path.lower().endswith(".json") else "csv"
    with open(path, "rb") as fh:
        links = load_link_records(fh, fmt=fmt, array=_array(cfg), normalize=cfg["normalize"])
    if not links:
        raise CliError(f"no links in {path}")
    return links


def _scenario(cfg):
    links = _load_all(cfg)
    if cfg["link"] is None:
        return links[0]
    for s in links:
        if s.link_id == str(cfg["link"]):
            return s
    raise CliError(f"link {cfg['link']!r} not found in {cfg['scenario']}")


def _digest(cfg) -> str:
    keyed = {k: v for k, v in cfg.items() if k not in _NO_DIGEST}
    if cfg["scenario"] is not None:
        keyed["records"] = dump_link_records(_load_all(cfg))
    return config_digest(keyed)


def _emit(text: str, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _effective(cfg):
    eff = effective_channel(_scenario(cfg), cfg["ns"])
    dump = cfg.get("dump_effective")
    if dump:
        text = json.dumps(eff.to_dict(), indent=2) + "\n"
        if dump == "-":
            sys.stderr.write(text)
        else:
            _emit(text, dump)
    return eff


def _design(cfg, eff, con):
    if cfg["baseline"] == "mca":
        return optimize(eff, con, L=cfg["L"], n_sa=cfg["nsa"])
    return baseline_matrix(cfg["baseline"], cfg["ns"], cfg["L"])


def cmd_optimize(cfg):
    con = _constellation(cfg)
    eff = _effective(cfg)
    if cfg["baseline"] != "mca":
        raise CliError("optimize designs the MCA matrix; drop --baseline")
    design = optimize(eff, con, L=cfg["L"], n_sa=cfg["nsa"])
    doc = {"digest": _digest(cfg), "constellation": con.name, "eigvals": eff.eigvals.tolist()}
    doc.update(design.to_dict())
    if cfg.get("json"):
        _emit(json.dumps(doc, indent=2) + "\n", cfg.get("out"))
        return
    print("lambda: " + " ".join(f"{v:.6g}" for v in eff.eigvals))
    print("iota_opt: " + " ".join(f"{v:.10g}" for v in design.iota))
    print(f"min_ed: {design.min_ed:.6g}")
    for iota, val in design.candidate_table:
        print(f"  candidate iota2={iota[-1]:.6g} min_ed={val:.6g}")
    if cfg.get("out"):
        _emit(json.dumps(doc, indent=2) + "\n", cfg["out"])


def cmd_simulate(cfg):
    con = _constellation(cfg)
    eff = _effective(cfg)
    config = LinkConfig(
        _design(cfg, eff, con), eff, con, parse_snr(cfg["snr"]), cfg["symbols"], cfg["seed"]
    )
    res = dataclasses.replace(run_monte_carlo(config, workers=cfg["workers"]), digest=_digest(cfg))
    _emit(json.dumps(res.to_dict(), indent=2) + "\n" if cfg.get("json") else res.to_csv(), cfg.get("out"))


def cmd_abep(cfg):
    con = _constellation(cfg)
    eff = _effective(cfg)
    curve = uub_curve(_design(cfg, eff, con), eff, con, parse_snr(cfg["snr"]), digest=_digest(cfg))
    _emit(json.dumps(curve.to_dict(), indent=2) + "\n" if cfg.get("json") else curve.to_csv(), cfg.get("out"))


def cmd_ed_sweep(cfg):
    con = _constellation(cfg)
    eff = _effective(cfg)
    if not 0 < cfg["iota_min"] <= cfg["iota_max"]:
        raise CliError("need 0 < --iota-min <= --iota-max")
    grid = np.geomspace(cfg["iota_min"], cfg["iota_max"], cfg["points"])
    book = design_upsilon(cfg["L"], cfg["nsa"], cfg["ns"])
    rows = ed_sweep(eff, book, con, grid)
    cols = ["iota2", "min_ed"]
    if cfg["abep_snr"] is not None:
        rho = 10 ** (cfg["abep_snr"] / 10)
        uub = [uub_abep(assemble_design([1.0, i2], book, eff), eff, con, rho) for i2 in rows[:, 0]]
        rows = np.column_stack([rows, uub])
        cols.append("uub")
    digest = _digest(cfg)
    if cfg.get("json"):
        doc = {"digest": digest, **{c: rows[:, i].tolist() for i, c in enumerate(cols)}}
        _emit(json.dumps(doc, indent=2) + "\n", cfg.get("out"))
        return
    lines = [f"# digest={digest}", ",".join(cols)]
    lines += [",".join(f"{v:.10g}" for v in r) for r in rows]
    _emit("\n".join(lines) + "\n", cfg.get("out"))


def _ensemble(cfg):
    if cfg["synth_links"]:
        return synth_ensemble(cfg["synth_links"], cfg["paths"], cfg["seed"], SynthProfile(array=_array(cfg)))
    return _load_all(cfg)


def cmd_scenario_sweep(cfg):
    con = _constellation(cfg)
    res = scenario_sweep(
        _ensemble(cfg),
        con,
        parse_snr(cfg["snr"]),
        n_s=cfg["ns"],
        L=cfg["L"],
        n_sa=cfg["nsa"],
        baseline=cfg["baseline"],
    )
    agg = dataclasses.replace(res.aggregate, digest=_digest(cfg))
    res = dataclasses.replace(res, aggregate=agg)
    if res.failed:
        print(f"{len(res.failed)} link(s) excluded", file=sys.stderr)
    if cfg.get("json"):
        doc = agg.to_dict()
        doc["links"] = [
            {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in r.items()} for r in res.links
        ]
        doc["failed"] = [{"link_id": i, "reason": r} for i, r in res.failed]
        _emit(json.dumps(doc, indent=2) + "\n", cfg.get("out"))
        return
    _emit(agg.to_csv(), cfg.get("out"))
    if cfg.get("links_out"):
        _emit(res.per_link_csv(), cfg["links_out"])
    elif not cfg.get("out"):
        sys.stdout.write("\n" + res.per_link_csv())


def cmd_synth(cfg):
    n = cfg["synth_links"] or 1
    links = synth_ensemble(n, cfg["paths"], cfg["seed"], SynthProfile(array=_array(cfg)))
    _emit(dump_link_records(links), cfg.get("out"))


COMMANDS = {
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
    "abep": cmd_abep,
    "ed-sweep": cmd_ed_sweep,
    "scenario-sweep": cmd_scenario_sweep,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = resolve(args)
        COMMANDS[args.command](cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, np.linalg.LinAlgError, OSError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
