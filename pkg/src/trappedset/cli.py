"""Command-line front end.

Every subcommand writes one CSV (``--out``, default standard output) and,
when ``--out`` names a file, a JSON manifest next to it recording the
command line, configuration digest, seeds and output digests.  Exit status:
0 on success, 2 on invalid input, 3 when a resource cap is hit, 64 for an
unknown subcommand.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile

import numpy as np

from trappedset import io as tio
from trappedset import pressure as pr
from trappedset import resonances as rs
from trappedset import stats, trace
from trappedset.config import build_config, load_config
from trappedset.errors import ConfigurationError, ResourceCapError
from trappedset.generators import enumerate_cylinder, enumerate_schottky, enumerate_three_disk
from trappedset.generators.schottky import worker_count
from trappedset.orbits import Model

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CAP = 3
EXIT_USAGE = 64

SUBCOMMANDS = ("orbits", "spectrum", "pressure", "bowen", "trace", "count", "pair", "invariant")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--model", choices=[m.value for m in Model])
    p.add_argument("--core-length", type=float)
    p.add_argument("--separation", type=float)
    p.add_argument("--radius", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--oriented", action="store_true", default=None)
    p.add_argument("--max-symbol-length", type=int)
    p.add_argument("--orbit-cap", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="output CSV path, '-' for stdout")
    p.add_argument("--manifest", help="manifest path (default: OUT.manifest.json)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trappedset", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("orbits", help="enumerate periodic orbits")
    _common(p)

    p = sub.add_parser("spectrum", help="window counts and minimal-separation report")
    _common(p)
    p.add_argument("--c0", type=float)
    p.add_argument("--t-min", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--t-step", type=float, default=0.5)
    p.add_argument("--width", type=float, default=stats.WINDOW_WIDTH)

    for name in ("pressure", "bowen"):
        p = sub.add_parser(name, help="pressure estimate" if name == "pressure" else "root of Bowen's equation")
        _common(p)
        if name == "pressure":
            p.add_argument("--s", type=float, default=0.5)
        p.add_argument("--method", choices=[m.value for m in pr.Method if m is not pr.Method.TRACE_PAIRING],
                       default=pr.Method.WINDOW_REGRESSION.value)
        p.add_argument("--t-min", type=float)
        p.add_argument("--t-max", type=float)
        p.add_argument("--t-step", type=float, default=0.5)
        p.add_argument("--use-stability", action="store_true", help="weight by log|det(1-P)|")

    p = sub.add_parser("trace", help="orbit-side (or resonance-side) pairing with a windowed test")
    _common(p)
    p.add_argument("--test", choices=[k.value for k in trace.TestKind], default="phi2")
    p.add_argument("--T", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--auto-align", action="store_true")
    p.add_argument("--j-plus", type=float)
    p.add_argument("--c0", type=float)
    p.add_argument("--mode", choices=[m.value for m in trace.InvariantMode], default="geometric")
    p.add_argument("--resonances", help="resonance CSV for spectral mode")
    p.add_argument("--tol", type=float, default=rs.DEFAULT_TOL)

    p = sub.add_parser("count", help="strip counting and the Tauberian check")
    _common(p)
    p.add_argument("--resonances", help="resonance CSV (default: cylinder lattice or --ensemble)")
    p.add_argument("--ensemble", help="lattice:SPACING | powerlaw:EXPONENT | poisson:INTENSITY")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--r-grid", default="10:10000:25", help="START:STOP:NUM (log-spaced) or comma list")
    p.add_argument("--delta", type=float)
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--c", type=float, default=0.25)
    p.add_argument("--r0", type=float)

    p = sub.add_parser("pair", help="resonance-side pairing")
    _common(p)
    p.add_argument("--resonances", help="resonance CSV (default: calibrated cylinder lattice)")
    p.add_argument("--test", choices=["phi2", "flambda"], default="phi2")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--tol", type=float, default=rs.DEFAULT_TOL)

    p = sub.add_parser("invariant", help="growth rate of the aligned trace pairing")
    _common(p)
    p.add_argument("--mode", choices=[m.value for m in trace.InvariantMode], default="geometric")
    p.add_argument("--t-min", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--t-step", type=float, default=0.5)
    p.add_argument("--alpha", type=float)
    p.add_argument("--tol", type=float, default=rs.DEFAULT_TOL)
    return parser


def _config_from_args(args):
    overrides = {}

    def put(section, key, value):
        if value is not None:
            overrides.setdefault(section, {})[key] = value

    put("model", "kind", args.model)
    put("cylinder", "core_length", args.core_length)
    put("three_disk", "separation", args.separation)
    put("three_disk", "radius", args.radius)
    put("enumeration", "horizon", args.horizon)
    put("enumeration", "oriented", args.oriented)
    put("enumeration", "max_symbol_length", args.max_symbol_length)
    put("enumeration", "orbit_cap", args.orbit_cap)
    put("analysis", "epsilon", args.epsilon)
    put("analysis", "nu", args.nu)
    put("analysis", "seed", args.seed)
    if getattr(args, "c0", None) is not None:
        put("analysis", "c0", args.c0)
    if getattr(args, "alpha", None) is not None:
        put("analysis", "alpha", args.alpha)
    if args.config:
        base = load_config(args.config)
        merged = {sec: dict(vals) for sec, vals in base.values.items()}
        for sec, vals in overrides.items():
            if sec != "model":
                merged.setdefault(sec, {}).update(vals)
        merged["model"] = {"kind": overrides.get("model", {}).get("kind", base.model)}
        return build_config(merged)
    return build_config(overrides)


def _spectrum(cfg, horizon=None, oriented=None):
    horizon = cfg.horizon if horizon is None else horizon
    oriented = cfg.get("enumeration", "oriented") if oriented is None else oriented
    model_cfg = cfg.model_config()
    if cfg.model is Model.CYLINDER:
        return enumerate_cylinder(model_cfg, horizon, oriented)
    if cfg.model is Model.SCHOTTKY:
        return enumerate_schottky(
            model_cfg, horizon, oriented, cfg.get("enumeration", "orbit_cap"), workers=worker_count()
        )
    spec = enumerate_three_disk(model_cfg, horizon, cfg.get("enumeration", "max_symbol_length"), oriented)
    if len(spec) > cfg.get("enumeration", "orbit_cap"):
        raise ResourceCapError("orbit count exceeds orbit_cap")
    return spec


def _t_range(args, horizon, default_min=None):
    t_max = args.t_max if args.t_max is not None else horizon
    t_min = args.t_min if args.t_min is not None else (default_min if default_min is not None else max(1.0, t_max / 2))
    if not 0 < t_min < t_max:
        raise ConfigurationError(f"need 0 < t-min < t-max, got {t_min}, {t_max}")
    return t_min, t_max


def _horizon_for(args, cfg, t_max):
    if args.horizon is None and t_max is not None:
        return max(t_max, 1e-9)
    return cfg.horizon


def _cmd_orbits(args, cfg, manifest):
    spec = _spectrum(cfg)
    manifest.orbit_count = len(spec)
    manifest.model_descriptor = spec.model_descriptor
    return tio.orbits_csv(spec)


def _cmd_spectrum(args, cfg, manifest):
    horizon = _horizon_for(args, cfg, args.t_max)
    spec = _spectrum(cfg, horizon)
    manifest.orbit_count = len(spec)
    manifest.model_descriptor = spec.model_descriptor
    t_min, t_max = _t_range(args, horizon)
    grid = stats.window_grid(t_min, t_max, args.t_step)
    nu, c0 = cfg.get("analysis", "nu"), cfg.get("analysis", "c0")
    rows = []
    for T, w in stats.check_minimal_separation(spec, nu, c0, grid, args.width).items():
        count = stats.window_count(spec, T, args.width)
        if w is None:
            rows.append((T, count, False, None, None, None))
        else:
            rows.append((T, count, True, w.left_gap, w.right_gap, w.cluster_span))
    return tio.csv_text(tio.SPECTRUM_HEADER, rows)


def _cmd_pressure(args, cfg, manifest):
    horizon = _horizon_for(args, cfg, args.t_max)
    spec = _spectrum(cfg, horizon)
    manifest.orbit_count = len(spec)
    manifest.model_descriptor = spec.model_descriptor
    t_range = _t_range(args, horizon)
    est = pr.pressure_estimate(spec, args.s, args.method, t_range, args.t_step, use_stability=args.use_stability)
    manifest.results = {"pressure": est.value, "stderr": est.fit.stderr, "s": args.s, "method": est.method.value}
    print(f"Pr(-{args.s} J^u) = {est.value:.6f}", file=sys.stderr)
    grid = stats.window_grid(t_range[0], t_range[1], args.t_step)
    sums = pr.window_sums(spec, args.s, grid, use_stability=args.use_stability)
    rows = [(T, v, math.log(v) if v > 0 else None) for T, v in zip(grid, sums)]
    return tio.csv_text(tio.PRESSURE_HEADER, rows)


def _cmd_bowen(args, cfg, manifest):
    horizon = _horizon_for(args, cfg, args.t_max)
    spec = _spectrum(cfg, horizon)
    manifest.orbit_count = len(spec)
    manifest.model_descriptor = spec.model_descriptor
    t_range = _t_range(args, horizon)
    root = pr.bowen_root(spec, args.method, t_range, step=args.t_step, use_stability=args.use_stability)
    manifest.results = {"t_u": root.t_u, "d_H": root.hausdorff_dimension}
    return tio.csv_text(tio.BOWEN_HEADER, [(root.t_u, root.hausdorff_dimension, *root.bracket)])


def _resonances_for(args, cfg, test):
    if args.resonances:
        return rs.read_resonances(args.resonances)
    if cfg.model is not Model.CYLINDER:
        raise ConfigurationError("spectral mode needs --resonances unless the model is the cylinder")
    ell0 = cfg.get("cylinder", "core_length")
    k_max, n_max = rs.required_box(ell0, test, args.tol)
    return rs.cylinder_lattice(ell0, k_max, n_max)


def _cmd_trace(args, cfg, manifest):
    kind = trace.TestKind(args.test)
    if kind is trace.TestKind.PHI1:
        if args.beta is None:
            raise ConfigurationError("phi1 needs --beta")
        eps = cfg.get("analysis", "epsilon")
        T = eps * math.log(args.beta)
    else:
        if args.T is None:
            raise ConfigurationError(f"{kind.value} needs --T")
        T = args.T
    oriented = rs.CALIBRATED_ORIENTED if args.mode == "spectral" else None
    spec = _spectrum(cfg, _horizon_for(args, cfg, T), oriented)
    manifest.orbit_count = len(spec)
    manifest.model_descriptor = spec.model_descriptor
    if kind is trace.TestKind.PHI1:
        nu, c0 = cfg.get("analysis", "nu"), cfg.get("analysis", "c0")
        b = trace.phi1_center(spec, T, nu, c0)
        lam = trace.align_lambda_phi1(b, args.beta) if args.auto_align or args.lam is None else args.lam
        j_plus = args.j_plus
        if j_plus is None:
            h = 0.0
            theta = stats.theta_plus_u(spec, (max(T - 1.0, 0.0), T)) if spec.in_window(max(T - 1, 0), T) else 0.5
            j_plus = stats.choose_j_plus(theta, h, nu).j_plus
        test = trace.WindowedTest.phi1(cfg.get("analysis", "epsilon"), args.beta, lam, j_plus, b)
    else:
        if args.lam is None and not args.auto_align:
            raise ConfigurationError("give --lambda or --auto-align")
        if args.lam is None:
            lengths = [o.length for o in spec.in_window(T - 1.0, T) if T - 1.0 < o.length < T]
            lam = trace.dirichlet_box(sorted(set(lengths)), 1.0) if lengths else 1.0
        else:
            lam = args.lam
        test = trace.WindowedTest.phi2(T, lam) if kind is trace.TestKind.PHI2 else trace.WindowedTest.flambda(T, lam)
    if args.mode == "spectral":
        ev = rs.spectral_side(_resonances_for(args, cfg, test), test, args.tol)
    else:
        ev = trace.geometric_side(spec, test)
    return tio.csv_text(
        tio.TRACE_HEADER,
        [(T, float(test.lam), ev.value.real, ev.value.imag, ev.truncation_bound, ev.contributing_orbits)],
    )


def _parse_grid(text):
    if ":" in text:
        start, stop, num = text.split(":")
        return np.geomspace(float(start), float(stop), int(num))
    return np.array([float(x) for x in text.split(",")])


def _parse_ensemble(text, r_max):
    kind, _, value = text.partition(":")
    try:
        v = float(value)
    except ValueError as exc:
        raise ConfigurationError(f"bad ensemble {text!r}") from exc
    if kind == "lattice":
        return rs.Lattice(v, 1, r_max)
    if kind == "powerlaw":
        return rs.PowerLaw(v, 1.0, r_max)
    if kind == "poisson":
        return rs.Poisson(v, 1.0, r_max)
    raise ConfigurationError(f"unknown ensemble kind {kind!r}")


def _cmd_count(args, cfg, manifest):
    grid = _parse_grid(args.r_grid)
    r_top = float(np.max(grid))
    if args.resonances:
        res = rs.read_resonances(args.resonances)
    elif args.ensemble:
        res = rs.synthetic_ensemble(_parse_ensemble(args.ensemble, 1.5 * r_top), args.seed)
    elif cfg.model is Model.CYLINDER:
        ell0 = cfg.get("cylinder", "core_length")
        n_max = int(math.ceil(1.5 * r_top * ell0 / (2 * math.pi)))
        res = rs.cylinder_lattice(ell0, max(0, int(math.ceil(args.s))), n_max)
    else:
        raise ConfigurationError("count needs --resonances or --ensemble for this model")
    mu = rs.strip_measure(res, args.s)
    rows = [(float(r), rs.strip_count(mu, r)) for r in grid]
    if args.delta is not None:
        r0 = args.r0 if args.r0 is not None else float(np.min(grid))
        v = rs.tauberian_accumulate(mu, args.delta, args.kappa, args.c, r0)
        manifest.results = {
            "tauberian_verdict": v.verdict, "c1": v.c1, "c2": v.c2, "first_violation": v.first_violation,
        }
        print(f"tauberian verdict {v.verdict}: c1={v.c1:.6g} c2={v.c2:.6g}", file=sys.stderr)
    return tio.csv_text(tio.COUNT_HEADER, rows)


def _cmd_pair(args, cfg, manifest):
    test = trace.WindowedTest.phi2(args.T, args.lam) if args.test == "phi2" else trace.WindowedTest.flambda(args.T, args.lam)
    res = _resonances_for(args, cfg, test)
    ev = rs.spectral_side(res, test, args.tol)
    return tio.csv_text(
        tio.PAIR_HEADER, [(args.T, args.lam, ev.value.real, ev.value.imag, ev.truncation_bound, len(res))]
    )


def _cmd_invariant(args, cfg, manifest):
    mode = trace.InvariantMode(args.mode)
    oriented = rs.CALIBRATED_ORIENTED if mode is trace.InvariantMode.SPECTRAL else None
    horizon = _horizon_for(args, cfg, args.t_max)
    spec = _spectrum(cfg, horizon, oriented)
    manifest.orbit_count = len(spec)
    manifest.model_descriptor = spec.model_descriptor
    t_min, t_max = _t_range(args, horizon)
    grid = stats.window_grid(t_min, t_max, args.t_step)
    alpha = cfg.get("analysis", "alpha")
    resonances = None
    if mode is trace.InvariantMode.SPECTRAL:
        if cfg.model is not Model.CYLINDER:
            raise ConfigurationError("spectral mode is available for the cylinder lattice only")
        ell0 = cfg.get("cylinder", "core_length")

        def resonances(test):
            return rs.cylinder_lattice(ell0, *rs.required_box(ell0, test, args.tol))

    est = trace.spectral_invariant_estimate(spec, grid, mode, resonances, alpha=alpha, tol=args.tol)
    manifest.results = {"slope": est.value, "stderr": est.fit.stderr, "mode": mode.value, "alpha": alpha}
    print(f"pairing growth rate {est.value:.6f}", file=sys.stderr)
    rows = [(T, str(lam), re, im, bound, n) for T, lam, re, im, bound, n in est.diagnostics["rows"]]
    return tio.csv_text(tio.TRACE_HEADER, rows)


_HANDLERS = {
    "orbits": _cmd_orbits,
    "spectrum": _cmd_spectrum,
    "pressure": _cmd_pressure,
    "bowen": _cmd_bowen,
    "trace": _cmd_trace,
    "count": _cmd_count,
    "pair": _cmd_pair,
    "invariant": _cmd_invariant,
}


def run(argv) -> int:
    argv = list(argv)
    if not argv or argv[0] in ("-h", "--help"):
        build_parser().print_help(sys.stdout if argv else sys.stderr)
        return EXIT_OK if argv else EXIT_USAGE
    if argv[0] not in SUBCOMMANDS:
        build_parser().print_usage(sys.stderr)
        print(f"unknown subcommand {argv[0]!r}; choose from {', '.join(SUBCOMMANDS)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        cfg = _config_from_args(args)
        manifest = tio.RunManifest(
            command=argv, config_hash=cfg.digest(), model_descriptor="", seeds={"seed": args.seed}
        )
        text = _HANDLERS[args.command](args, cfg, manifest)
        tio.write_text(args.out, text)
        if args.out not in (None, "-"):
            manifest.record_output(args.out)
            manifest.finish()
            manifest.write(args.manifest or args.out + ".manifest.json")
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def replay_manifest(path) -> bool:
    """Re-run the command of a manifest into a scratch file and compare output digests."""
    manifest = tio.RunManifest.read(path)
    argv = list(manifest.command)
    if "--out" not in argv:
        raise ConfigurationError("manifest has no --out output to compare")
    i = argv.index("--out")
    original = os.path.abspath(argv[i + 1])
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "replay.csv")
        argv[i + 1] = out
        if "--manifest" in argv:
            j = argv.index("--manifest")
            argv[j + 1] = os.path.join(tmp, "replay.manifest.json")
        if run(argv) != EXIT_OK:
            return False
        return tio.sha256_file(out) == manifest.outputs.get(original)


def main(argv=None) -> int:
    code = run(sys.argv[1:] if argv is None else argv)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
