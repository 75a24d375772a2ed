"""Command-line runner: simulations, scans, variance tables and identity checks.

Every subcommand takes the same flag vocabulary; ``--config FILE`` supplies
defaults as flat ``key=value`` lines (keys are flag names without dashes)
and explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .coeffs import parse_distribution
from .hermite import builtin
from .mc import SimulationConfig, run, scan, variance_target, variance_zscore
from .symfun import verify_identities_suite
from .trigpoly import dirichlet_power_mean, triple_dirichlet_estimate
from .variance import predict, sinc_moment_closed, sinc_moment_quadrature

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

SUMMARY_KEYS = (
    "n",
    "replicas",
    "dist",
    "phi",
    "seed",
    "grid_m",
    "sample_variance",
    "target_variance",
    "target_kind",
    "zscore",
    "ks_statistic",
    "skewness",
    "excess_kurtosis",
)

# flag name -> (type, default)
FLAGS = {
    "n": (str, None),
    "replicas": (int, 1000),
    "dist": (str, "gaussian"),
    "phi": (str, "x^2"),
    "seed": (int, 0),
    "grid": (int, None),
    "workers": (int, 1),
    "out": (str, None),
    "summary": (str, None),
    "svg": (str, None),
    "kmax": (int, None),
    "q": (int, None),
    "pmax": (int, 8),
    "trials": (int, None),
}

COMMANDS = ("simulate", "scan", "variance", "sinc-moments", "hermite", "verify-identities", "dirichlet", "report")


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="szfluct", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        p = sub.add_parser(name)
        for flag in FLAGS:
            # defaults are resolved after merging the config file
            p.add_argument(f"--{flag}", default=None)
        p.add_argument("--config", default=None)
    return parser


def read_config(path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-")
        if key not in FLAGS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def resolve_options(ns: argparse.Namespace) -> dict:
    file_values = read_config(ns.config) if ns.config else {}
    opts = {}
    for flag, (kind, default) in FLAGS.items():
        raw = getattr(ns, flag)
        if raw is None:
            raw = file_values.get(flag)
        if raw is None:
            opts[flag] = default
            continue
        try:
            opts[flag] = kind(raw)
        except ValueError as exc:
            raise UsageError(f"--{flag}: {exc}") from None
    return opts


def parse_args(argv=None) -> tuple[str, dict]:
    ns = build_parser().parse_args(argv)
    return ns.command, resolve_options(ns)


def _single_n(opts) -> int:
    if opts["n"] is None:
        raise UsageError("--n is required")
    try:
        n = int(opts["n"])
    except ValueError:
        raise UsageError(f"--n must be an integer, got {opts['n']!r}") from None
    if n < 1:
        raise UsageError("--n must be positive")
    return n


def _n_list(opts) -> list[int]:
    if opts["n"] is None:
        raise UsageError("--n is required")
    try:
        return [int(v) for v in str(opts["n"]).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--n must be a comma-separated integer list, got {opts['n']!r}") from None


def emit_csv(samples, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("replica,value\n")
        for i, v in enumerate(samples):
            fh.write(f"{i},{float(v):.17g}\n")


def read_samples_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["replica", "value"]:
            raise ValueError(f"{path}: unexpected header {header}")
        return np.array([float(row[1]) for row in reader], dtype=np.float64)


def summary_record(cfg: SimulationConfig, summary, target: float, target_kind: str) -> dict:
    try:
        z = variance_zscore(summary, target)
    except ZeroDivisionError:
        z = None
    return {
        "n": cfg.n,
        "replicas": summary.replicas,
        "dist": cfg.dist.label,
        "phi": cfg.phi.label,
        "seed": cfg.master_seed,
        "grid_m": summary.grid_m,
        "sample_variance": summary.sample_variance,
        "target_variance": target,
        "target_kind": target_kind,
        "zscore": z,
        "ks_statistic": summary.ks_statistic,
        "skewness": summary.skewness,
        "excess_kurtosis": summary.excess_kurtosis,
        "sample_mean": summary.sample_mean,
        "variance_se": summary.variance_se,
        "unconverged_replicas": summary.unconverged,
        "seconds": summary.seconds,
    }


def emit_summary_json(record: dict, path) -> None:
    missing = [k for k in SUMMARY_KEYS if k not in record]
    if missing:
        raise ValueError(f"summary is missing keys {missing}")
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")


SVG_W, SVG_H = 800, 600
MARGIN = 60
HIST_BINS = 60
OVERLAY_POINTS = 200


def _svg_header() -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">',
        f'<rect x="0" y="0" width="{SVG_W}" height="{SVG_H}" fill="white"/>',
        f'<line x1="{MARGIN}" y1="{SVG_H - MARGIN}" x2="{SVG_W - MARGIN}" y2="{SVG_H - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{SVG_H - MARGIN}" stroke="black"/>',
    ]


def histogram_svg(samples, sigma_overlay: float | None) -> str:
    """800x600 histogram over mean +- 4 sd with an N(0, sigma^2) density overlay.

    Zero-spread samples give a single bar and no overlay.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot draw a histogram of no samples")
    plot_w = SVG_W - 2 * MARGIN
    plot_h = SVG_H - 2 * MARGIN
    base = SVG_H - MARGIN
    mean = math.fsum(x) / x.size
    sd = math.sqrt(math.fsum((x - mean) ** 2) / (x.size - 1)) if x.size > 1 else 0.0
    lines = _svg_header()
    if sd == 0.0:
        w = plot_w / HIST_BINS
        lines.append(f'<rect class="bar" x="{MARGIN + (plot_w - w) / 2:.3f}" y="{MARGIN}" width="{w:.3f}" height="{plot_h}" fill="steelblue"/>')
        lines.append(f'<text x="{SVG_W / 2:.0f}" y="{SVG_H - 20}" text-anchor="middle" font-size="14">all samples = {mean:.6g}</text>')
        lines.append("</svg>")
        return "\n".join(lines) + "\n"
    lo, hi = mean - 4 * sd, mean + 4 * sd
    counts, edges = np.histogram(x, bins=HIST_BINS, range=(lo, hi))
    width = edges[1] - edges[0]
    density = counts / (x.size * width)
    curve_x = curve_y = None
    if sigma_overlay is not None and sigma_overlay > 0:
        curve_x = np.linspace(lo, hi, OVERLAY_POINTS)
        curve_y = np.exp(-0.5 * (curve_x / sigma_overlay) ** 2) / (sigma_overlay * math.sqrt(2 * math.pi))
    top = max(float(density.max()), float(curve_y.max()) if curve_y is not None else 0.0)
    top = top if top > 0 else 1.0
    bar_w = plot_w / HIST_BINS
    for i, d in enumerate(density):
        h = plot_h * d / top
        lines.append(f'<rect class="bar" x="{MARGIN + i * bar_w:.3f}" y="{base - h:.3f}" width="{bar_w:.3f}" height="{h:.3f}" fill="steelblue"/>')
    if curve_y is not None:
        px = MARGIN + plot_w * (curve_x - lo) / (hi - lo)
        py = base - plot_h * curve_y / top
        pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(px, py))
        lines.append(f'<polyline class="overlay" points="{pts}" fill="none" stroke="crimson" stroke-width="2"/>')
    lines.append(f'<text x="{MARGIN}" y="{SVG_H - 20}" font-size="14">{lo:.4g}</text>')
    lines.append(f'<text x="{SVG_W - MARGIN}" y="{SVG_H - 20}" text-anchor="end" font-size="14">{hi:.4g}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def emit_histogram_svg(samples, sigma_overlay, path) -> None:
    Path(path).write_text(histogram_svg(samples, sigma_overlay))


def _config(opts, n: int) -> SimulationConfig:
    if opts["replicas"] < 2:
        raise UsageError("--replicas must be at least 2")
    try:
        return SimulationConfig(
            n=n,
            replicas=opts["replicas"],
            dist=parse_distribution(opts["dist"]),
            phi=builtin(opts["phi"]),
            grid=opts["grid"],
            master_seed=opts["seed"],
            workers=opts["workers"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _simulate(opts, out=None, summary_path=None, svg=None) -> int:
    cfg = _config(opts, _single_n(opts))
    target, kind = variance_target(cfg)
    samples, summ = run(cfg, target)
    record = summary_record(cfg, summ, target, kind)
    out = out or opts["out"]
    summary_path = summary_path or opts["summary"]
    svg = svg or opts["svg"]
    if out:
        emit_csv(samples, out)
    if summary_path:
        emit_summary_json(record, summary_path)
    if svg:
        emit_histogram_svg(samples, math.sqrt(max(target, 0.0)), svg)
    for key in SUMMARY_KEYS:
        print(f"{key}: {record[key]}")
    return EXIT_OK


def cmd_simulate(opts) -> int:
    return _simulate(opts)


def cmd_report(opts) -> int:
    if not opts["out"]:
        raise UsageError("report needs --out DIR")
    outdir = Path(opts["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    return _simulate(opts, outdir / "samples.csv", outdir / "summary.json", outdir / "histogram.svg")


def cmd_scan(opts) -> int:
    cfg = _config(opts, 1)
    rows = scan(cfg, _n_list(opts))
    header = ["n", "sample_variance", "target", "target_kind", "zscore", "ks_statistic", "seed"]
    table = [[r.n, f"{r.sample_variance:.17g}", f"{r.target:.17g}", r.target_kind, f"{r.zscore:.6g}", f"{r.ks:.6g}", r.seed] for r in rows]
    if opts["out"]:
        with open(opts["out"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(table)
    print("\t".join(header))
    for row in table:
        print("\t".join(str(v) for v in row))
    return EXIT_OK


def cmd_variance(opts) -> int:
    try:
        phi = builtin(opts["phi"])
        dist = parse_distribution(opts["dist"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    pred = predict(phi, dist)
    print(f"phi: {phi.label}")
    print(f"dist: {dist.label}")
    print(f"sigma_phi_sq: {pred.sigma_phi_sq:.17g}")
    print(f"kurtosis_correction: {pred.kurtosis_correction:.17g}")
    print(f"total: {pred.total:.17g}")
    print(f"tail_bound: {pred.tail_bound:.3g}")
    print(f"k_max_used: {pred.k_max_used}")
    return EXIT_OK


def cmd_sinc_moments(opts) -> int:
    kmax = opts["kmax"] if opts["kmax"] is not None else 12
    if kmax < 2:
        raise UsageError("--kmax must be at least 2")
    print("k\tclosed\tquadrature\tabs_diff")
    for k in range(2, kmax + 1):
        c = sinc_moment_closed(k)
        qd = sinc_moment_quadrature(k, 1e-9)
        print(f"{k}\t{c:.17g}\t{qd:.17g}\t{abs(c - qd):.3g}")
    return EXIT_OK


def cmd_hermite(opts) -> int:
    try:
        phi = builtin(opts["phi"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    kmax = opts["kmax"] if opts["kmax"] is not None else min(phi.series.K, 16)
    print("k,c_k")
    for k in range(kmax + 1):
        print(f"{k},{phi.series[k]:.17g}")
    return EXIT_OK


def cmd_verify_identities(opts) -> int:
    n_max = _single_n(opts) if opts["n"] is not None else 6
    trials = opts["trials"] if opts["trials"] is not None else 100
    t0 = time.perf_counter()
    report = verify_identities_suite(n_max=n_max, p_max=opts["pmax"], trials=trials, seed=opts["seed"])
    elapsed = time.perf_counter() - t0
    status = "ok" if report.ok else "FAILED"
    print(f"identities {status}: {report.checks} exact checks, {len(report.failures)} failures, {elapsed:.2f}s")
    for f in report.failures[:10]:
        print(f"  failure: {f}")
    return EXIT_OK if report.ok else EXIT_CHECK_FAILED


def cmd_dirichlet(opts) -> int:
    n_list = _n_list(opts) if opts["n"] is not None else [64, 256, 1024]
    samples = opts["trials"] if opts["trials"] is not None else 100_000
    cols = ["n", "triple_estimate", "se"]
    if opts["q"] is not None:
        cols.append(f"n_mean_D^{opts['q']}")
    print("\t".join(cols))
    for n in n_list:
        try:
            est, se = triple_dirichlet_estimate(n, samples, opts["seed"])
            row = [str(n), f"{est:.6g}", f"{se:.3g}"]
            if opts["q"] is not None:
                row.append(f"{dirichlet_power_mean(n, opts['q']):.17g}")
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        print("\t".join(row))
    return EXIT_OK


HANDLERS = {
    "simulate": cmd_simulate,
    "scan": cmd_scan,
    "variance": cmd_variance,
    "sinc-moments": cmd_sinc_moments,
    "hermite": cmd_hermite,
    "verify-identities": cmd_verify_identities,
    "dirichlet": cmd_dirichlet,
    "report": cmd_report,
}


def main(argv=None) -> int:
    try:
        command, opts = parse_args(argv)
        return HANDLERS[command](opts)
    except SystemExit as exc:  # argparse usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"szfluct: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
