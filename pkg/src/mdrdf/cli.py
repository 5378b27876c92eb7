"""Command-line interface: solve, fit, sweep, simulate, verify.

Results are UTF-8 JSON (per-frequency tables as RFC-4180-style CSV with a
single leading '#' manifest line); every output embeds the run manifest
that reproduces it. Writes are atomic (temp file + rename). File layouts
are documented in docs/formats.md.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import MdrdfError, NoConvergence, TargetInfeasible
from .rdf import NoiseSpectra, RdfPoint, evaluate, fit_lambdas, sweep
from .spectra import (
    DEFAULT_GRID_SIZE,
    PredictorCoeffs,
    Spectrum,
    flat_spectrum,
    midpoint_omega,
    regularize,
    spectrum_from_predictor,
)
from .spectral_solver import LagrangePair
from .sim import SimConfig, run_md_channel, run_md_codec
from .white_md import DistortionPair

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_INFEASIBLE = 4


class ConfigError(Exception):
    pass


def _manifest(args: list[str], seed: int | None) -> dict:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    ts = (
        datetime.fromtimestamp(int(epoch), tz=timezone.utc)
        if epoch
        else datetime.now(tz=timezone.utc)
    )
    return {
        "command": ["mdrdf"] + args,
        "seed": seed,
        "version": __version__,
        "timestamp": ts.isoformat(timespec="seconds"),
    }


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _emit(path: str | None, text: str) -> None:
    if path:
        _atomic_write(path, text)
    else:
        sys.stdout.write(text)


def parse_spectrum_spec(spec: str, grid_size: int) -> Spectrum:
    """Build a spectrum from a compact CLI spec string.

    Kinds: 'flat:VAR', 'cosine', 'ar:A1,A2,...:INNOV_VAR',
    'table:PATH.json' (keys 'omega', 'value', interpolated onto the grid).
    """
    kind, _, rest = spec.partition(":")
    if kind == "flat":
        try:
            return flat_spectrum(float(rest), grid_size)
        except ValueError as e:
            raise ConfigError(f"bad flat spectrum: {e}") from e
    if kind == "cosine":
        return Spectrum(np.cos(midpoint_omega(grid_size)) + 1.0)
    if kind == "ar":
        coeff_str, _, var_str = rest.rpartition(":")
        if not coeff_str:
            raise ConfigError("ar spectrum needs 'ar:A1,...:VAR'")
        try:
            coeffs = [float(c) for c in coeff_str.split(",")]
            pred = PredictorCoeffs(
                coeffs=np.asarray(coeffs), innovation_variance=float(var_str)
            )
        except ValueError as e:
            raise ConfigError(f"bad ar spectrum: {e}") from e
        if not pred.is_minimum_phase():
            raise ConfigError("ar coefficients are not minimum phase")
        return spectrum_from_predictor(pred, grid_size)
    if kind == "table":
        try:
            with open(rest, encoding="utf-8") as fh:
                data = json.load(fh)
            om_in = np.asarray(data["omega"], dtype=float)
            vals_in = np.asarray(data["value"], dtype=float)
        except (OSError, KeyError, ValueError) as e:
            raise ConfigError(f"bad table spectrum: {e}") from e
        if om_in.size != vals_in.size or om_in.size == 0:
            raise ConfigError("table arrays must be nonempty and equal length")
        if np.any(vals_in < 0):
            raise ConfigError("table values must be nonnegative")
        om = midpoint_omega(grid_size)
        return Spectrum(np.interp(om, om_in, vals_in))
    raise ConfigError(f"unknown spectrum kind {kind!r}")


def _prepare_spectrum(args) -> tuple[Spectrum, float]:
    spectrum = parse_spectrum_spec(args.spectrum, args.grid_size)
    d_eps = 0.0
    if np.any(spectrum.values <= 0.0):
        spectrum, d_eps = regularize(spectrum, args.regularize_eps)
    return spectrum, d_eps


def _point_payload(point: RdfPoint, d_eps: float, grid_size: int) -> dict:
    def db(x):
        return 10.0 * math.log10(x) if x > 0 else None

    return {
        "lambda1": point.lambdas.lambda1,
        "lambda2": point.lambdas.lambda2,
        "rate_nats": point.rate,
        "rate_bits": point.rate_bits,
        "d_side": point.d_side,
        "d_central": point.d_central,
        "d_side_db": db(point.d_side),
        "d_central_db": db(point.d_central),
        "d_eps": d_eps,
        "grid_size": grid_size,
    }


SPECTRA_CSV_COLUMNS = [
    "omega",
    "source",
    "theta_plus",
    "theta_minus",
    "d_side",
    "d_central",
    "rate_bits",
    "on_boundary",
]


def _spectra_csv(spectrum: Spectrum, point: RdfPoint, manifest: dict) -> str:
    out = io.StringIO()
    out.write("# manifest: " + json.dumps(manifest, sort_keys=True) + "\r\n")
    writer = csv.writer(out, dialect="excel", lineterminator="\r\n")
    writer.writerow(SPECTRA_CSV_COLUMNS)
    om = spectrum.omega
    S = spectrum.values
    tp = point.spectra.theta_plus
    tm = point.spectra.theta_minus
    bound = point.spectra.boundary_mask
    with np.errstate(divide="ignore"):
        rate_b = np.where(
            bound, 0.0, 0.5 * np.log(S / (2.0 * np.sqrt(tp * tm))) / math.log(2.0)
        )
    ds = tp + tm
    dc = S * tp / (S - tm)
    for k in range(spectrum.grid_size):
        writer.writerow(
            [
                f"{om[k]:.10g}",
                f"{S[k]:.10g}",
                f"{tp[k]:.10g}",
                f"{tm[k]:.10g}",
                f"{ds[k]:.10g}",
                f"{dc[k]:.10g}",
                f"{rate_b[k]:.10g}",
                int(bound[k]),
            ]
        )
    return out.getvalue()


def _load_spectra_csv(path: str) -> tuple[Spectrum, NoiseSpectra]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                continue
            rows.append(line)
    reader = csv.DictReader(rows)
    S, tp, tm, bound = [], [], [], []
    for rec in reader:
        S.append(float(rec["source"]))
        tp.append(float(rec["theta_plus"]))
        tm.append(float(rec["theta_minus"]))
        bound.append(bool(int(rec.get("on_boundary", "0"))))
    if not S:
        raise ConfigError(f"no spectra rows in {path}")
    return Spectrum(np.asarray(S)), NoiseSpectra(
        np.asarray(tp), np.asarray(tm), np.asarray(bound)
    )


def _add_spectrum_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spectrum", required=True, help="flat:VAR | cosine | ar:A1,..:VAR | table:PATH")
    p.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    p.add_argument("--regularize-eps", type=float, default=1e-9)


def _cmd_solve(args, argv) -> int:
    if args.lambda1 <= 0 or args.lambda2 <= 0:
        raise ConfigError("lambda1 and lambda2 must be positive")
    spectrum, d_eps = _prepare_spectrum(args)
    point = evaluate(spectrum, LagrangePair(args.lambda1, args.lambda2))
    manifest = _manifest(argv, None)
    payload = {"manifest": manifest, "result": _point_payload(point, d_eps, args.grid_size)}
    _emit(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if args.csv:
        _atomic_write(args.csv, _spectra_csv(spectrum, point, manifest))
    return EXIT_OK


def _cmd_fit(args, argv) -> int:
    if args.ds <= 0 or args.dc <= 0:
        raise ConfigError("ds and dc must be positive")
    if args.dc > args.ds:
        raise TargetInfeasible("dc must not exceed ds")
    spectrum, d_eps = _prepare_spectrum(args)
    point = fit_lambdas(spectrum, DistortionPair(args.ds, args.dc), tol=args.tol)
    manifest = _manifest(argv, None)
    payload = {"manifest": manifest, "result": _point_payload(point, d_eps, args.grid_size)}
    _emit(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if args.csv:
        _atomic_write(args.csv, _spectra_csv(spectrum, point, manifest))
    return EXIT_OK


def _parse_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError("grid spec must be MIN:MAX:COUNT")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if lo <= 0 or hi < lo or count < 1:
        raise ConfigError("grid spec requires 0 < MIN <= MAX and COUNT >= 1")
    if count == 1:
        return [lo]
    return list(np.exp(np.linspace(math.log(lo), math.log(hi), count)))


def _cmd_sweep(args, argv) -> int:
    spectrum, _ = _prepare_spectrum(args)
    grid1 = _parse_grid(args.lambda1_grid)
    grid2 = _parse_grid(args.lambda2_grid)
    workers = int(os.environ.get("MDRDF_THREADS", "1"))
    points = sweep(spectrum, grid1, grid2, max_workers=workers)
    manifest = _manifest(argv, None)
    out = io.StringIO()
    out.write("# manifest: " + json.dumps(manifest, sort_keys=True) + "\r\n")
    writer = csv.writer(out, dialect="excel", lineterminator="\r\n")
    writer.writerow(["lambda1", "lambda2", "rate_nats", "rate_bits", "d_side", "d_central"])
    for pt in points:
        writer.writerow(
            [
                f"{pt.lambdas.lambda1:.10g}",
                f"{pt.lambdas.lambda2:.10g}",
                f"{pt.rate:.10g}",
                f"{pt.rate_bits:.10g}",
                f"{pt.d_side:.10g}",
                f"{pt.d_central:.10g}",
            ]
        )
    _emit(args.out, out.getvalue())
    return EXIT_OK


def _cmd_simulate(args, argv) -> int:
    if args.spectra:
        spectrum, noise = _load_spectra_csv(args.spectra)
        d_eps = 0.0
    else:
        if args.lambda1 is None or args.lambda2 is None:
            raise ConfigError("simulate needs --lambda1/--lambda2 or --spectra CSV")
        if args.lambda1 <= 0 or args.lambda2 <= 0:
            raise ConfigError("lambda1 and lambda2 must be positive")
        spectrum, d_eps = _prepare_spectrum(args)
        point = evaluate(spectrum, LagrangePair(args.lambda1, args.lambda2))
        noise = point.spectra
    cfg = SimConfig(
        num_samples=args.samples,
        seed=args.seed,
        mode=args.mode,
        erasure=args.erasure,
        welch_segment=args.welch,
    )
    runner = run_md_codec if args.structure == "codec" else run_md_channel
    report = runner(spectrum, noise, cfg)
    payload = {
        "manifest": _manifest(argv, args.seed),
        "result": report.to_dict(),
        "d_eps": d_eps,
    }
    _emit(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _cmd_verify(args, argv) -> int:
    from . import verify as verify_mod

    results = verify_mod.run_all(perturb_cubic=args.perturb_cubic)
    failed = [name for name, ok, _ in results if not ok]
    for name, ok, detail in results:
        line = f"{name}: {'PASS' if ok else 'FAIL'}"
        if detail and not ok:
            line += f" ({detail})"
        print(line)
    print(f"{len(results) - len(failed)}/{len(results)} property suites passed")
    return EXIT_OK if not failed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdrdf",
        description=(
            "Symmetric two-description rate-distortion points for stationary "
            "Gaussian spectra, and time-domain coding simulations."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="evaluate one multiplier pair")
    _add_spectrum_args(p)
    p.add_argument("--lambda1", type=float, required=True)
    p.add_argument("--lambda2", type=float, required=True)
    p.add_argument("--out", help="JSON output path (default stdout)")
    p.add_argument("--csv", help="per-frequency CSV output path")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("fit", help="fit multipliers to distortion targets")
    _add_spectrum_args(p)
    p.add_argument("--ds", type=float, required=True, help="side distortion target")
    p.add_argument("--dc", type=float, required=True, help="central distortion target")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", help="JSON output path (default stdout)")
    p.add_argument("--csv", help="per-frequency CSV output path")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("sweep", help="tabulate operating points over a multiplier grid")
    _add_spectrum_args(p)
    p.add_argument("--lambda1-grid", required=True, help="MIN:MAX:COUNT (log spaced)")
    p.add_argument("--lambda2-grid", required=True, help="MIN:MAX:COUNT (log spaced)")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("simulate", help="run the time-domain coding simulation")
    _add_spectrum_args(p)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lambda2", type=float)
    p.add_argument("--spectra", help="per-frequency CSV from solve/fit")
    p.add_argument("--structure", choices=["codec", "channel"], default="codec")
    p.add_argument("--mode", choices=["awgn", "ecdq"], default="awgn")
    p.add_argument("--samples", type=int, default=1 << 18)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--erasure", choices=["none", "lose_desc1", "lose_desc2"], default="none")
    p.add_argument("--welch", type=int, default=4096)
    p.add_argument("--out", help="JSON output path (default stdout)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify", help="run the analytical property suites")
    p.add_argument(
        "--perturb-cubic",
        type=float,
        default=0.0,
        help="test hook: perturb a cubic coefficient to confirm detection",
    )
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args, argv)
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except TargetInfeasible as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (MdrdfError, NoConvergence, FloatingPointError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
