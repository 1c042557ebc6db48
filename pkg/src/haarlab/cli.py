"""Command-line front end.

Subcommands: norm, avg, gen, rate, scan, check.  A run is described by a
key-value config file plus flag overrides; every output directory receives a
manifest.json recording the effective config, seeds, kernel-bank hash and
tolerances, so identical configs reproduce byte-identical outputs.

Exit codes: 0 success, 2 validation error, 3 tolerance failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import experiments as xp
from .errors import HaarLabError
from .generators import (
    RademacherSigns,
    counterexample_gN,
    density_failure_f,
    fractal_family,
    smooth_bump,
    tensor_GN,
    unc_packet,
    weierstrass_packet,
)
from .grid import GridField, GridSpec, export_csv_1d, load_field, save_field
from .haar import MaskA, build_canonical_enumeration, dyadic_average, partial_sum, t_mask
from .kernels import build_kernel_bank, make_params
from .norms import besov_norm, tl_norm

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_TOLERANCE = 3

DEFAULTS = {
    "d": 1,
    "J": 12,
    "B": 2,
    "M": 6,
    "delta_min": 1e-3,
    "s": 1.0,
    "p": 0.8,
    "q": 2.0,
    "seed": 7,
    "N_list": "2,3,4,5,6,7,8",
    "model": "power",
    "out": "runs",
}


def _parse_scalar(text: str):
    if text == "inf":
        return math.inf
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def load_config(path: str | None) -> dict:
    """Key-value config file: one 'key = value' per line, # comments."""
    cfg = dict(DEFAULTS)
    if path:
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, _, val = line.partition("=")
                cfg[key.strip()] = _parse_scalar(val.strip())
    return cfg


def _apply_overrides(cfg: dict, args: argparse.Namespace) -> dict:
    for key in ("d", "J", "B", "M", "s", "p", "q", "seed", "out", "model", "N_list"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = _parse_scalar(val) if isinstance(val, str) else val
    return cfg


def _n_list(cfg: dict) -> list:
    raw = cfg["N_list"]
    if isinstance(raw, str):
        return [int(tok) for tok in raw.split(",") if tok.strip()]
    return [int(raw)]


def _manifest(cfg: dict, bank, outputs: list, extra: dict | None = None) -> dict:
    payload = {
        "config": {k: (repr(v) if isinstance(v, float) else v) for k, v in cfg.items()},
        "bank_hash": bank.content_hash() if bank is not None else None,
        "outputs": outputs,
        "tolerances": {
            "power_exponent": xp.POWER_TOL,
            "exp_rate": xp.EXP_TOL,
            "r2_min": xp.R2_MIN,
        },
    }
    if extra:
        payload.update(extra)
    blob = json.dumps(payload, sort_keys=True)
    payload["manifest_hash"] = hashlib.sha256(blob.encode()).hexdigest()[:16]
    return payload


def _write_manifest(payload: dict, outdir: str) -> None:
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _grid_and_bank(cfg: dict):
    spec = GridSpec(d=int(cfg["d"]), J=int(cfg["J"]), B=int(cfg["B"]))
    bank = build_kernel_bank(int(cfg["M"]), spec, delta_min=float(cfg["delta_min"]))
    return spec, bank


def _build_generator(name: str, cfg: dict, spec, bank) -> GridField:
    seed = int(cfg["seed"])
    parts = name.split(":")
    kind, args = parts[0], parts[1:]
    if kind == "density_failure":
        return density_failure_f(spec)
    if kind == "packet":
        N = int(args[0]) if args else 8
        return weierstrass_packet(N, RademacherSigns(seed), spec)
    if kind == "gN":
        N = int(args[0]) if args else 8
        g, _ = counterexample_gN(N, q=float(cfg["q"]), n_draws=16, spec=spec, bank=bank, seed=seed)
        return g
    if kind == "fractal":
        fam = args[0] if args else "F1_gj"
        j = int(args[1]) if len(args) > 1 else 3
        return fractal_family(fam, j, spec)
    if kind == "bump":
        return smooth_bump(spec)
    if kind == "unc":
        kappa, sigma, N = (int(a) for a in args[:3])
        return unc_packet(kappa, sigma, N, spec)
    raise HaarLabError(f"unknown generator {name!r}")


def _load_input(args, cfg, spec, bank) -> GridField:
    if getattr(args, "input", None):
        return load_field(args.input)
    gen = getattr(args, "gen", None) or "density_failure"
    return _build_generator(gen, cfg, spec, bank)


def cmd_norm(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    outdir = str(cfg["out"])
    os.makedirs(outdir, exist_ok=True)
    spec, bank = _grid_and_bank(cfg)
    f = _load_input(args, cfg, spec, bank)
    prm = make_params(float(cfg["s"]), float(cfg["p"]), float(cfg["q"]),
                      d=spec.d, K=spec.J - 4, M=int(cfg["M"]))
    report = (besov_norm if args.besov else tl_norm)(f, prm, bank)
    csv_path = os.path.join(outdir, "norm_report.csv")
    report.to_csv(csv_path)
    _write_manifest(_manifest(cfg, bank, ["norm_report.csv"],
                              {"value": repr(report.value)}), outdir)
    print(f"norm value {report.value!r} (K={report.truncation}) -> {csv_path}")
    return EXIT_OK


def cmd_avg(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    outdir = str(cfg["out"])
    os.makedirs(outdir, exist_ok=True)
    spec, bank = _grid_and_bank(cfg)
    f = _load_input(args, cfg, spec, bank)
    N = int(args.N)
    if args.op == "EN":
        out = dyadic_average(f, N, complement=args.complement)
    elif args.op == "TN":
        out = t_mask(f, N, MaskA.constant(1.0))
    elif args.op in ("SR", "PE"):
        enum = build_canonical_enumeration(min(N, spec.J - 2), (-spec.B, spec.B), d=spec.d)
        out = partial_sum(f, enum, enum.markers.get(N, len(enum.items)))
    else:
        raise HaarLabError(f"unknown operator {args.op}")
    path = os.path.join(outdir, f"{args.op}_{N}.f64")
    save_field(out, path)
    outputs = [os.path.basename(path)]
    if spec.d == 1:
        export_csv_1d(out, path + ".csv")
        outputs.append(os.path.basename(path) + ".csv")
    _write_manifest(_manifest(cfg, bank, outputs), outdir)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_gen(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    outdir = str(cfg["out"])
    os.makedirs(outdir, exist_ok=True)
    spec, bank = _grid_and_bank(cfg)
    f = _build_generator(args.name, cfg, spec, bank)
    path = os.path.join(outdir, args.name.replace(":", "_") + ".f64")
    save_field(f, path)
    outputs = [os.path.basename(path)]
    if spec.d == 1:
        export_csv_1d(f, path + ".csv")
        outputs.append(os.path.basename(path) + ".csv")
    _write_manifest(_manifest(cfg, bank, outputs), outdir)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_rate(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    outdir = str(cfg["out"])
    os.makedirs(outdir, exist_ok=True)
    spec, bank = _grid_and_bank(cfg)
    s, p, q = float(cfg["s"]), float(cfg["p"]), float(cfg["q"])
    prm = make_params(s, p, q, d=spec.d, K=spec.J - 4, M=int(cfg["M"]))
    N_list = _n_list(cfg)
    probes = xp.probe_battery(spec, bank, seed=int(cfg["seed"]))
    series = xp.op_norm_lower(xp.OperatorSpec("EN"), probes, prm, N_list, spec, bank)
    model = "exponential-in-N" if cfg["model"] in ("exp", "exponential-in-N") else "power-in-N"
    fit = xp.rate_fit([(n, v) for n, v, _ in series], model=model)
    csv_path = os.path.join(outdir, "rate.csv")
    with open(csv_path, "w") as fh:
        fh.write("N,ratio,probe\n")
        for n, v, pid in series:
            fh.write(f"{n},{v!r},{pid}\n")
    _write_manifest(
        _manifest(cfg, bank, ["rate.csv"],
                  {"exponent": repr(fit.exponent), "r2": repr(fit.r2), "model": model}),
        outdir,
    )
    print(f"fitted exponent {fit.exponent:.4f} (r2={fit.r2:.4f}, {model}) -> {csv_path}")
    return EXIT_OK


def cmd_scan(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    outdir = str(cfg["out"])
    os.makedirs(outdir, exist_ok=True)
    spec, bank = _grid_and_bank(cfg)
    tuples = []
    for tok in args.tuples.split(";"):
        s, p, q = (_parse_scalar(t) for t in tok.split(","))
        tuples.append((float(s), float(p), float(q)))
    rows = xp.region_scan(
        tuples, spec.d, _n_list(cfg), spec, bank,
        seed=int(cfg["seed"]), out_csv=os.path.join(outdir, "scan.csv"),
    )
    _write_manifest(_manifest(cfg, bank, ["scan.csv"]), outdir)
    bad = [r for r in rows if r.agree == "no"]
    for r in rows:
        print(f"(s={r.s}, p={r.p}, q={r.q}) {r.verdict.predicted_growth:9s} "
              f"measured={r.measured if r.measured is None else round(r.measured, 4)} agree={r.agree}")
    return EXIT_TOLERANCE if bad else EXIT_OK


def cmd_check(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    outdir = str(cfg["out"])
    os.makedirs(outdir, exist_ok=True)
    spec, bank = _grid_and_bank(cfg)
    results = xp.identity_suite(spec, bank, seed=int(cfg["seed"]), fault=args.inject_fault)
    csv_path = os.path.join(outdir, "check.csv")
    with open(csv_path, "w") as fh:
        fh.write("check,residual,tol,passed\n")
        for r in results:
            fh.write(f"{r.name},{r.residual!r},{r.tol!r},{r.passed}\n")
    _write_manifest(_manifest(cfg, bank, ["check.csv"]), outdir)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "pass" if r.passed else "FAIL"
        print(f"{status} {r.name}: residual {r.residual:.3e} (tol {r.tol:.0e})")
    return EXIT_TOLERANCE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="haarlab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--d", type=int, default=None)
        sp.add_argument("--J", type=int, default=None)
        sp.add_argument("--B", type=int, default=None)
        sp.add_argument("--s", default=None)
        sp.add_argument("--p", default=None)
        sp.add_argument("--q", default=None)

    sp = sub.add_parser("norm", help="compute a quasi-norm report")
    common(sp)
    sp.add_argument("--input", default=None)
    sp.add_argument("--gen", default=None)
    sp.add_argument("--besov", action="store_true")
    sp.set_defaults(fn=cmd_norm)

    sp = sub.add_parser("avg", help="apply EN/TN/SR/PE and export the field")
    common(sp)
    sp.add_argument("--op", choices=("EN", "TN", "SR", "PE"), default="EN")
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--complement", action="store_true")
    sp.add_argument("--input", default=None)
    sp.add_argument("--gen", default=None)
    sp.set_defaults(fn=cmd_avg)

    sp = sub.add_parser("gen", help="emit an example field")
    common(sp)
    sp.add_argument("--name", required=True)
    sp.set_defaults(fn=cmd_gen)

    sp = sub.add_parser("rate", help="growth-rate experiment for one (s,p,q)")
    common(sp)
    sp.add_argument("--N-list", dest="N_list", default=None)
    sp.add_argument("--model", choices=("power", "exp"), default=None)
    sp.set_defaults(fn=cmd_rate)

    sp = sub.add_parser("scan", help="region scan over ;-separated s,p,q tuples")
    common(sp)
    sp.add_argument("--tuples", required=True)
    sp.add_argument("--N-list", dest="N_list", default=None)
    sp.set_defaults(fn=cmd_scan)

    sp = sub.add_parser("check", help="run the exact-identity suite")
    common(sp)
    sp.add_argument("--inject-fault", choices=("mask",), default=None)
    sp.set_defaults(fn=cmd_check)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (HaarLabError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
