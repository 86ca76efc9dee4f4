"""Command-line front end.

    kerrchain <command> [--config PATH] [--out DIR] [--threads N] [--seed S]

Commands: kernel-dump, scatter, sweep, verify, slh-dump.  Configs are JSON;
every file written is accompanied by a JSON manifest echoing the resolved
configuration.  Exit status: 0 success, 1 invalid config, 2 failed checks.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .kernels import KernelSpec, KernelVariant, OnShellPoint
from .params import ChainSpec, FrequencyGrid, Propagation, SiteParams, default_grid, grid_build

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2
COMMANDS = ("kernel-dump", "scatter", "sweep", "verify", "slh-dump")


class ConfigError(ValueError):
    def __init__(self, where: str, msg: str):
        super().__init__(f"{where}: {msg}" if where else msg)
        self.where = where


# ---------------------------------------------------------------- config parsing


def _get(d: dict, key: str, where: str, kind=float, default=None, required=False):
    if key not in d:
        if required:
            raise ConfigError(f"{where}.{key}" if where else key, "missing required field")
        return default
    val = d[key]
    here = f"{where}.{key}" if where else key
    try:
        if kind is float:
            if isinstance(val, bool) or not isinstance(val, (int, float, str)):
                raise TypeError
            out = float(val)  # accepts "inf"
            if math.isnan(out):
                raise ValueError
            return out
        if kind is int:
            if isinstance(val, bool) or not isinstance(val, int):
                raise TypeError
            return val
        if kind is str:
            if not isinstance(val, str):
                raise TypeError
            return val
        if kind is bool:
            if not isinstance(val, bool):
                raise TypeError
            return val
        if kind is list:
            if not isinstance(val, list):
                raise TypeError
            return val
        if kind is dict:
            if not isinstance(val, dict):
                raise TypeError
            return val
    except (TypeError, ValueError):
        raise ConfigError(here, f"expected {kind.__name__}, got {val!r}") from None
    return val


def _wrap(where: str, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(where, str(exc)) from None


def parse_chain(d, where="chain") -> ChainSpec:
    if not isinstance(d, dict):
        raise ConfigError(where, "expected an object")
    sites = _get(d, "sites", where, list, required=True)
    if not sites:
        raise ConfigError(f"{where}.sites", "must be non-empty")
    parsed = []
    for i, s in enumerate(sites):
        w = f"{where}.sites[{i}]"
        if not isinstance(s, dict):
            raise ConfigError(w, "expected an object")
        parsed.append(_wrap(w, SiteParams, _get(s, "gamma", w, default=1.0), _get(s, "delta", w, default=0.0),
                            _get(s, "chi", w, default=0.0)))
    prop = _get(d, "propagation", where, str, default="counter")
    if prop not in ("co", "counter"):
        raise ConfigError(f"{where}.propagation", f"must be 'co' or 'counter', got {prop!r}")
    return ChainSpec(tuple(parsed), Propagation(prop))


def parse_grid(d, where) -> FrequencyGrid:
    if not isinstance(d, dict):
        raise ConfigError(where, "expected an object")
    return _wrap(where, grid_build, _get(d, "center", where, default=0.0),
                 _get(d, "half_width", where, required=True), _get(d, "count", where, int, required=True))


def parse_kernel(name, chain: ChainSpec, where="kernel") -> KernelSpec:
    if name is None:
        return _wrap(where, KernelSpec.for_chain, chain)
    if not isinstance(name, str):
        raise ConfigError(where, f"expected a variant name, got {name!r}")
    try:
        variant = KernelVariant(name)
    except ValueError:
        raise ConfigError(where, f"unknown variant {name!r}; choose from {[v.value for v in KernelVariant]}") from None
    return _wrap(where, KernelSpec, variant, chain)


def _axis(val, where) -> np.ndarray:
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return np.array([float(val)])
    if isinstance(val, list):
        try:
            return np.array([float(v) for v in val])
        except (TypeError, ValueError):
            raise ConfigError(where, "list entries must be numbers") from None
    if isinstance(val, dict):
        return parse_grid(val, where).points
    raise ConfigError(where, f"expected number, list or grid object, got {val!r}")


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", f"invalid JSON ({exc.msg})") from None
    if not isinstance(cfg, dict):
        raise ConfigError(path, "top level must be a JSON object")
    return cfg


# ---------------------------------------------------------------- output helpers


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.17g" % float(x)


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_text(buf.getvalue())


def _versions() -> dict:
    import scipy

    return {"kerrchain": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_manifest(path: Path, command: str, resolved: dict, args, extra: dict | None = None) -> Path:
    man = {
        "command": command,
        "config": resolved,
        "threads": args.threads,
        "seed": args.seed,
        "backend": _backend.default_name(),
        "versions": _versions(),
        "file": path.name,
    }
    if extra:
        man.update(extra)
    side = path.with_suffix(".json")
    side.write_text(json.dumps(man, indent=2, sort_keys=True, default=str) + "\n")
    return side


# ---------------------------------------------------------------- commands


def cmd_kernel_dump(cfg, args, out: Path) -> int:
    chain = parse_chain(cfg.get("chain", {"sites": [{"gamma": 1.0, "delta": 0.0, "chi": 1.0}]}))
    kspec = parse_kernel(cfg.get("kernel"), chain)
    if kspec.diagonal:
        raise ConfigError("kernel", "infinite_diagonal has no connected kernel to dump")
    sl = _get(cfg, "slice", "", dict, default={"omega_a": 0.0, "nu_a": {"half_width": 2.0, "count": 41}, "nu_b": 0.0})
    axes = {k: _axis(sl.get(k, 0.0), f"slice.{k}") for k in ("omega_a", "nu_a", "nu_b")}
    wa, na, nb = np.meshgrid(axes["omega_a"], axes["nu_a"], axes["nu_b"], indexing="ij")
    vals = kspec(OnShellPoint(wa.ravel(), na.ravel(), nb.ravel()))
    path = out / "kernel_dump.csv"
    write_csv(path, ("omega_a", "nu_a", "nu_b", "re", "im"),
              zip(wa.ravel(), na.ravel(), nb.ravel(), vals.real, vals.imag))
    resolved = {"chain": chain.to_dict(), "kernel": kspec.variant.value,
                "slice": {k: v.tolist() for k, v in axes.items()}}
    write_manifest(path, "kernel-dump", resolved, args)
    print(f"wrote {path} ({vals.size} rows)")
    return EXIT_OK


def _pulse(d, where, default_center):
    from .wavepacket import PulseShape

    d = d or {}
    if not isinstance(d, dict):
        raise ConfigError(where, "expected an object")
    return _wrap(where, PulseShape.gaussian, _get(d, "center", where, default=default_center),
                 _get(d, "sigma", where, default=0.2))


def cmd_scatter(cfg, args, out: Path) -> int:
    from .analysis import gate_overlap, schmidt_decompose
    from .wavepacket import make_separable_jsa, scatter_two_photon, write_jsa

    chain = parse_chain(cfg.get("chain", {"sites": [{"gamma": 1.0, "delta": 0.0, "chi": 1.0}]}))
    kspec = parse_kernel(cfg.get("kernel"), chain)
    site = chain.sites[0]
    pulses = _get(cfg, "pulses", "", dict, default={})
    pa = _pulse(pulses.get("a"), "pulses.a", site.delta)
    pb = _pulse(pulses.get("b"), "pulses.b", site.delta)
    if "grid" in cfg:
        ga = gb = parse_grid(cfg["grid"], "grid")
    else:
        ga = parse_grid(cfg["grid_a"], "grid_a") if "grid_a" in cfg else default_grid(site, pa.sigma)
        gb = parse_grid(cfg["grid_b"], "grid_b") if "grid_b" in cfg else default_grid(site, pb.sigma)
    cutoff = _get(cfg, "node_cutoff", "", default=1e-14)
    jin = _wrap("pulses", make_separable_jsa, pa, pb, ga, gb)
    jout = scatter_two_photon(jin, kspec, threads=args.threads, cutoff=cutoff)
    o = gate_overlap(jout, jin, chain)
    rep = schmidt_decompose(jout)
    resolved = {
        "chain": chain.to_dict(), "kernel": kspec.variant.value,
        "pulses": {"a": pa.to_dict(), "b": pb.to_dict()},
        "grid_a": ga.to_dict(), "grid_b": gb.to_dict(), "node_cutoff": cutoff,
    }
    meta = {"config": resolved, "versions": _versions(), "backend": _backend.default_name()}
    write_jsa(out / "jsa_in.csv", jin, {**meta, "role": "input"})
    summary = {"overlap_re": o.real, "overlap_im": o.imag, "schmidt_number": rep.schmidt_number,
               "entropy": rep.entropy, "norm_out": jout.norm()}
    write_jsa(out / "jsa_out.csv", jout, {**meta, "role": "output", "summary": summary})
    print(f"norm_out={jout.norm():.12g} overlap={o.real:+.12g}{o.imag:+.12g}j K={rep.schmidt_number:.12g}")
    return EXIT_OK


def _float_list(cfg, key, default):
    vals = _get(cfg, key, "", list, default=default)
    if not vals:
        raise ConfigError(key, "range must be nonempty")
    try:
        return [float(v) for v in vals]
    except (TypeError, ValueError):
        raise ConfigError(key, "entries must be numbers") from None


def cmd_sweep(cfg, args, out: Path) -> int:
    from .analysis import SWEEP_COLUMNS, fidelity_sweep

    tmpl = _get(cfg, "template", "", dict, default={})
    template = _wrap("template", SiteParams, _get(tmpl, "gamma", "template", default=1.0),
                     _get(tmpl, "delta", "template", default=0.0), 0.0)
    ns = _get(cfg, "n_sites", "", list, default=[1, 12])
    if not ns or not all(isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in ns):
        raise ConfigError("n_sites", "must be a nonempty list of positive integers")
    sigmas = _float_list(cfg, "sigma", [0.05])
    chis = _float_list(cfg, "chi", [10.0])
    prop = _get(cfg, "propagation", "", str, default="counter")
    if prop not in ("co", "counter"):
        raise ConfigError("propagation", f"must be 'co' or 'counter', got {prop!r}")
    count = _get(cfg, "grid_count", "", int, default=129)
    if count < 3 or count % 2 == 0:
        raise ConfigError("grid_count", "must be odd and >= 3")
    infinite = _get(cfg, "infinite", "", bool, default=False)
    rows = fidelity_sweep(ns, sigmas, chis, template, prop, count, infinite, threads=args.threads)
    path = out / "sweep.csv"
    write_csv(path, SWEEP_COLUMNS, ([r.as_dict()[c] for c in SWEEP_COLUMNS] for r in rows))
    resolved = {"template": template.to_dict(), "n_sites": ns, "sigma": sigmas, "chi": chis,
                "propagation": prop, "grid_count": count, "infinite": infinite,
                "grid_rule": "center delta, half_width 8 sigma"}
    failures = sum(bool(r.error) for r in rows)
    write_manifest(path, "sweep", resolved, args, {"rows": len(rows), "failed_rows": failures})
    print(f"wrote {path} ({len(rows)} rows, {failures} failed)")
    return EXIT_OK


VERIFY_DEFAULTS = {
    "exact_tol": 1e-10,
    "limit_tol": 1e-3,
    "residue_tol": 1e-6,
    "causality_tol": 1e-6,
    "contrast_min": 1e-2,
    "fredholm_tol": 1e-3,
    "norm_tol": 2e-3,
    "fredholm_count": 257,
    "points": 1000,
}


def run_checks(tol: dict, seed: int) -> list[tuple[str, bool, float, float]]:
    """(name, passed, value, threshold) for every oracle check."""
    from .oracle import QuadratureSpec, causality_integral_check, fredholm_solve, reduction_suite, residue_integral_check
    from .wavepacket import PulseShape, make_separable_jsa, scatter_two_photon

    rows = []
    rep = reduction_suite(seed, points=int(tol["points"]), exact_tol=tol["exact_tol"], limit_tol=tol["limit_tol"])
    rows += [(f"reduction: {r.name}", r.passed, r.max_error, r.tolerance) for r in rep.results]
    q = QuadratureSpec()
    worst = max(residue_integral_check(wb, SiteParams(1.0, d, 0.0), q)["rel_err"]
                for d in (-1.0, 0.0, 1.0) for wb in (-2.0, 0.0, 2.0))
    rows.append(("residue identity", worst <= tol["residue_tol"], worst, tol["residue_tol"]))
    vals, contrast = [], []
    for d in np.linspace(-2, 2, 5):
        for wb in np.linspace(-3, 3, 5):
            a, b = SiteParams(1.0, d, 1.0), SiteParams(1.5, -0.5 * d, 2.0)
            vals.append(causality_integral_check(wb, a, b, q)["normalized"])
            contrast.append(causality_integral_check(wb, a, b, q, conjugate=True)["normalized"])
    rows.append(("causality integral vanishes", max(vals) <= tol["causality_tol"], max(vals), tol["causality_tol"]))
    rows.append(("causality contrast nonzero", min(contrast) >= tol["contrast_min"], min(contrast), tol["contrast_min"]))
    site = SiteParams(1.0, 0.0, 1.0)
    grid = default_grid(site, 0.2, int(tol["fredholm_count"]))
    p = PulseShape.gaussian(0.0, 0.2)
    oracle_out = fredholm_solve(p, p, site, grid).jsa
    closed = scatter_two_photon(make_separable_jsa(p, p, grid, grid), KernelSpec(KernelVariant.SINGLE_SITE, ChainSpec((site,))))
    mask = np.abs(closed.values) > 1e-3 * np.abs(closed.values).max()
    rel = float((np.abs(oracle_out.values - closed.values)[mask] / np.abs(closed.values)[mask]).max())
    rows.append(("fredholm vs closed form", rel <= tol["fredholm_tol"], rel, tol["fredholm_tol"]))
    dn = abs(oracle_out.norm() - 1)
    rows.append(("fredholm output norm", dn <= tol["norm_tol"], dn, tol["norm_tol"]))
    return rows


def cmd_verify(cfg, args, out: Path) -> int:
    tol = dict(VERIFY_DEFAULTS)
    for k in list(cfg):
        if k not in tol:
            raise ConfigError(k, f"unknown verify option; known: {sorted(tol)}")
        tol[k] = _get(cfg, k, "", int if k in ("fredholm_count", "points") else float)
    rows = run_checks(tol, args.seed)
    width = max(len(r[0]) for r in rows)
    for name, ok, val, thr in rows:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {val:10.3e}  (threshold {thr:.0e})")
    path = out / "verify.csv"
    write_csv(path, ("check", "passed", "value", "threshold"), ((n, str(ok).lower(), v, t) for n, ok, v, t in rows))
    all_ok = all(r[1] for r in rows)
    write_manifest(path, "verify", tol, args, {"passed": all_ok})
    return EXIT_OK if all_ok else EXIT_FAILED


def cmd_slh_dump(cfg, args, out: Path) -> int:
    from .slh import build_chain, dump_terms

    chain = parse_chain(cfg.get("chain", {"sites": [{"gamma": 1.0, "delta": 0.0, "chi": 1.0}] * 2}))
    if any(s.chi_is_infinite for s in chain.sites):
        raise ConfigError("chain", "slh-dump needs finite chi")
    triple = _wrap("chain", build_chain, chain)
    text = dump_terms(triple, chain.n_sites)
    sys.stdout.write(text)
    path = out / "slh.txt"
    path.write_text(text)
    write_manifest(path, "slh-dump", {"chain": chain.to_dict()}, args)
    return EXIT_OK


HANDLERS = {
    "kernel-dump": cmd_kernel_dump,
    "scatter": cmd_scatter,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "slh-dump": cmd_slh_dump,
}


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kerrchain", description="Few-photon scattering through cross-Kerr chains.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--threads", type=_positive, default=1)
    p.add_argument("--seed", type=_u64, default=0)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        cfg = load_config(args.config)
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError("--out", str(exc)) from None
        return HANDLERS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"kerrchain: invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
