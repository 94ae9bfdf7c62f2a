"""Command-line interface.

Subcommands: gen, compress, recover, range, sweep, timing, localize, profile.
Errors exit nonzero and print one machine-readable JSON line on stderr with a
category field (parameter / format / protocol / io / geometry).
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import baselines, experiments, fileio
from .detect import DetectorConfig, alpha_from_rho, speed_of_sound
from .errors import (
    GeometryError,
    PacketFormatError,
    PacketProtocolError,
    ParameterError,
)
from .pipeline import METHODS
from .recovery import SolverConfig
from .sensing import choose_buffer_count, compress_buffered
from .signals import ChirpSpec, gen_linear_chirp, simulate_channel

_EXIT_CODES = {
    "parameter": 2,
    "format": 3,
    "protocol": 4,
    "geometry": 5,
    "io": 6,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        return _fail("parameter", exc)
    except PacketFormatError as exc:
        return _fail("format", exc)
    except PacketProtocolError as exc:
        return _fail("protocol", exc)
    except GeometryError as exc:
        return _fail("geometry", exc)
    except OSError as exc:
        return _fail("io", exc)


def _fail(category: str, exc: Exception) -> int:
    sys.stderr.write(json.dumps({"error": category, "message": str(exc)}) + "\n")
    return _EXIT_CODES[category]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsexcorr",
        description="Cross-correlation ranging via structured sparse recovery",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate chirps and synthetic traces")
    gsub = g.add_subparsers(dest="what", required=True)

    gc = gsub.add_parser("chirp", help="write a linear chirp signal file")
    gc.add_argument("--f-start", type=float, required=True)
    gc.add_argument("--f-end", type=float, required=True)
    gc.add_argument("--duration", type=float, required=True)
    gc.add_argument("--fs", type=float, required=True)
    gc.add_argument("-o", "--output", required=True)
    gc.set_defaults(func=_cmd_gen_chirp)

    gt = gsub.add_parser("trace", help="synthesize a multipath trace from a chirp")
    gt.add_argument("--ref", required=True, help="reference chirp signal file")
    gt.add_argument("--t-a", type=float, required=True, help="acquisition window, s")
    gt.add_argument("--delay", type=int, required=True, help="LoS delay, samples")
    gt.add_argument("--snr-db", type=float, default=float("inf"))
    gt.add_argument("--preset", choices=experiments.PRESETS, default="CASE_A")
    gt.add_argument("--seed", type=int, default=0)
    gt.add_argument("-o", "--output", required=True)
    gt.set_defaults(func=_cmd_gen_trace)

    c = sub.add_parser("compress", help="compress a signal file into packet files")
    c.add_argument("--signal", required=True)
    c.add_argument("--alpha", type=float, default=None,
                   help="compression factor; default: receiver rho rule")
    c.add_argument("--buffers", type=int, default=None,
                   help="buffer count; default: rule from --ref length")
    c.add_argument("--ref", default=None, help="reference file for the buffer rule")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("-o", "--output", required=True, help="output directory")
    c.set_defaults(func=_cmd_compress)

    r = sub.add_parser("recover", help="recover coefficients from packet files")
    _recovery_args(r)
    r.add_argument("-o", "--output", required=True, help="coefficients CSV")
    r.set_defaults(func=_cmd_recover)

    rg = sub.add_parser("range", help="recover packets and estimate the range")
    _recovery_args(rg)
    rg.add_argument("--sigma", type=float, default=3.0)
    rg.add_argument("--strict", action="store_true",
                    help="disable the tallest-anywhere fallback")
    rg.add_argument("--no-refine", action="store_true")
    rg.add_argument("--temp-c", type=float, default=20.0)
    rg.set_defaults(func=_cmd_range)

    s = sub.add_parser("sweep", help="run a characterization sweep")
    s.add_argument("--config", default=None, help="JSON config file")
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--summary", default=None, help="optional summary CSV path")
    s.set_defaults(func=_cmd_sweep)

    t = sub.add_parser("timing", help="correlation vs compression timing table")
    t.add_argument("-n", type=int, default=4800)
    t.add_argument("--alphas", default="0.05,0.10,0.30,0.50")
    t.add_argument("--buffers", type=int, default=10)
    t.add_argument("-o", "--output", required=True)
    t.set_defaults(func=_cmd_timing)

    l = sub.add_parser("localize", help="simulate localization rounds")
    l.add_argument("--scenario", default=None, help="JSON scenario file")
    l.add_argument("-o", "--output", required=True)
    l.set_defaults(func=_cmd_localize)

    pr = sub.add_parser("profile", help="sparsity profile of a trace per domain")
    pr.add_argument("--signal", required=True)
    pr.add_argument("--ref", required=True)
    pr.add_argument("-o", "--output", required=True)
    pr.set_defaults(func=_cmd_profile)

    return parser


def _recovery_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--packets", required=True, help="directory of packet files")
    p.add_argument("--ref", required=True, help="reference chirp signal file")
    p.add_argument("--method", choices=[m for m in METHODS if "DOWNSAMPLE" not in m and m != "XCORR"],
                   default="STRUCT_SXCORR")
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--mu0", type=float, default=0.6)
    p.add_argument("--max-iterations", type=int, default=2000)


def _cmd_gen_chirp(args) -> int:
    spec = ChirpSpec(args.f_start, args.f_end, args.duration, args.fs)
    sig = gen_linear_chirp(spec)
    fileio.write_signal(args.output, sig)
    print(json.dumps({"samples": len(sig), "fs": sig.fs, "output": args.output}))
    return 0


def _cmd_gen_trace(args) -> int:
    p = fileio.read_signal(args.ref)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    ch = experiments.make_channel(args.preset, args.delay, args.snr_db,
                                  args.seed, rng)
    trace, truth = simulate_channel(p, ch, args.t_a)
    fileio.write_signal(args.output, trace)
    print(json.dumps({"samples": len(trace), "fs": trace.fs,
                      "truth_lag": truth, "output": args.output}))
    return 0


def _cmd_compress(args) -> int:
    sig = fileio.read_signal(args.signal)
    if args.buffers is not None:
        b = args.buffers
    elif args.ref is not None:
        ref = fileio.read_signal(args.ref)
        b = choose_buffer_count(len(ref) / ref.fs, sig.fs, len(sig))
    else:
        raise ParameterError("pass --buffers or --ref to set the buffer count")
    alpha = args.alpha if args.alpha is not None else alpha_from_rho(sig)
    packets = compress_buffered(sig, b, alpha, args.seed)
    paths = fileio.write_packets(args.output, packets)
    print(json.dumps({"packets": len(paths), "alpha": alpha, "buffers": b,
                      "m_tilde": packets[0].m_tilde, "n_tilde": packets[0].n_tilde,
                      "output": args.output}))
    return 0


def _solver_from(args) -> SolverConfig:
    return SolverConfig(epsilon=args.epsilon, lam=args.lam, k=args.k, mu0=args.mu0,
                        max_iterations=args.max_iterations)


def _cmd_recover(args) -> int:
    from .recovery import recover_buffered

    packets = fileio.read_packets(args.packets)
    ref = fileio.read_signal(args.ref)
    coeffs = recover_buffered(packets, ref, _solver_from(args), mode=args.method)
    rows = []
    for c in coeffs:
        for i, v in enumerate(c.values):
            if v != 0.0:
                rows.append({"buffer": c.buffer_index, "lag": c.lag_of_index(i),
                             "value": float(v)})
    diag = [{"buffer": c.buffer_index, "iterations": c.info.iterations,
             "converged": c.info.converged, "residual": c.info.residual}
            for c in coeffs if c.info]
    fileio.write_rows_csv(args.output, rows, ["buffer", "lag", "value"])
    print(json.dumps({"buffers": len(coeffs), "diagnostics": diag}))
    return 0


def _cmd_range(args) -> int:
    from .detect import detection_to_range
    from .recovery import recover_buffered

    packets = fileio.read_packets(args.packets)
    ref = fileio.read_signal(args.ref)
    coeffs = recover_buffered(packets, ref, _solver_from(args), mode=args.method)
    det = DetectorConfig(sigma=args.sigma, fallback_tallest=not args.strict,
                         refine=not args.no_refine)
    v_s = speed_of_sound(args.temp_c)
    est = detection_to_range(coeffs, det, packets[0].fs, v_s, method=args.method)
    print(json.dumps({
        "method": est.method, "range_m": est.range_m,
        "delay_samples": est.delay_samples, "delay_samples_int": est.delay_samples_int,
        "detection_buffer": est.detection_buffer, "lag_hat": est.lag_hat,
        "valid": est.valid, "fallback_used": est.fallback_used,
        "v_s": v_s,
    }))
    return 0


def _cmd_sweep(args) -> int:
    overrides = {}
    if args.config:
        overrides = json.loads(Path(args.config).read_text())
    if args.trials is not None:
        overrides["trials"] = args.trials
    cfg = _sweep_config(overrides)
    rows = experiments.run_sweep(cfg)
    stamp = datetime.now(timezone.utc).isoformat()
    fileio.write_rows_csv(args.output, rows, experiments.SWEEP_FIELDS,
                          header_comment=f"generated {stamp}")
    if args.summary:
        fileio.write_rows_csv(args.summary, experiments.summarize_sweep(rows),
                              experiments.SUMMARY_FIELDS,
                              header_comment=f"generated {stamp}")
    print(json.dumps({"rows": len(rows), "output": args.output}))
    return 0


def _sweep_config(overrides: dict) -> experiments.ExperimentConfig:
    kwargs = dict(overrides)
    if "chirp" in kwargs:
        kwargs["chirp"] = ChirpSpec(**kwargs["chirp"])
    if "solver" in kwargs:
        kwargs["solver"] = SolverConfig(**kwargs["solver"])
    if "detector" in kwargs:
        kwargs["detector"] = DetectorConfig(**kwargs["detector"])
    for key in ("methods", "alphas", "presets"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    if "snr_buckets" in kwargs:
        kwargs["snr_buckets"] = tuple(tuple(b) for b in kwargs["snr_buckets"])
    return experiments.ExperimentConfig(**kwargs)


def _cmd_timing(args) -> int:
    alphas = tuple(float(a) for a in args.alphas.split(","))
    rows = experiments.run_timing(n=args.n, alphas=alphas, buffers=args.buffers)
    stamp = datetime.now(timezone.utc).isoformat()
    fileio.write_rows_csv(args.output, rows, experiments.TIMING_FIELDS,
                          header_comment=f"generated {stamp}")
    print(json.dumps({"rows": len(rows), "output": args.output}))
    return 0


def _cmd_localize(args) -> int:
    scenario = {}
    if args.scenario:
        scenario = json.loads(Path(args.scenario).read_text())
    rows = experiments.run_localization(scenario)
    stamp = datetime.now(timezone.utc).isoformat()
    fileio.write_rows_csv(args.output, rows, experiments.LOCALIZE_FIELDS,
                          header_comment=f"generated {stamp}")
    errors = [r["error_m"] for r in rows if r["error_m"] != ""]
    summary = {"rows": len(rows), "output": args.output}
    if errors:
        summary["median_error_m"] = float(np.median(errors))
    print(json.dumps(summary))
    return 0


def _cmd_profile(args) -> int:
    sig = fileio.read_signal(args.signal)
    ref = fileio.read_signal(args.ref)
    rows = []
    for domain in (baselines.DOMAIN_CORRELATION, baselines.DOMAIN_DCT, baselines.DOMAIN_FFT):
        prof = baselines.sparsity_profile(ref, sig, domain)
        rows.append({
            "domain": domain,
            "k_50": prof.k_for(0.50),
            "k_90": prof.k_for(0.90),
            "k_95": prof.k_for(0.95),
            "k_99": prof.k_for(0.99),
            "coefficients": prof.sorted_magnitudes.size,
        })
    fileio.write_rows_csv(args.output, rows,
                          ["domain", "k_50", "k_90", "k_95", "k_99", "coefficients"])
    print(json.dumps({"rows": len(rows), "output": args.output}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
