"""Benchmark harness: characterization sweeps, timing runs, localization.

Every trial is reproducible: trace synthesis seeds derive from
(root seed, preset, SNR bucket, trial) and sensing seeds from the cell, so a
rerun with the same config emits byte-identical result rows.  Relative errors
follow the benchmarking convention of this codebase: each method is scored
against the plain cross-correlation estimate on the very same trace, with the
geometric truth logged alongside.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .baselines import xcorr_fd, xcorr_td
from .detect import DetectorConfig, speed_of_sound
from .errors import ParameterError
from .localize import simulate_localization_round
from .pipeline import METHODS, RangingPipeline
from .recovery import SolverConfig
from .sensing import CostCounter, compress, gen_sensing_matrix
from .signals import ChannelProfile, ChirpSpec, SampledSignal, gen_linear_chirp, simulate_channel

PRESETS = ("CASE_A", "CASE_B", "CASE_C")

# listener profile used by default in sweeps: 3-7 kHz / 0.01 s chirp at 15 kHz,
# 0.04 s acquisition window
LISTENER_CHIRP = ChirpSpec(f_start=3000.0, f_end=7000.0, duration=0.01, fs=15000.0)
LISTENER_T_A = 0.04

SWEEP_FIELDS = [
    "preset", "snr_lo", "snr_hi", "alpha", "method", "trial", "seed",
    "snr_db", "truth_lag", "detected_delay", "detected_delay_int", "range_m",
    "xcorr_delay", "xcorr_range_m", "rel_error_m", "abs_error_m",
    "valid", "fallback", "iterations", "config_hash",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Axes and knobs of one characterization sweep."""

    methods: tuple[str, ...] = ("SXCORR", "STRUCT_SXCORR")
    alphas: tuple[float, ...] = (0.05, 0.10, 0.20, 0.30, 0.50)
    snr_buckets: tuple[tuple[float, float], ...] = ((0, 5), (5, 10), (10, 20), (20, 30))
    presets: tuple[str, ...] = ("CASE_A", "CASE_B", "CASE_C")
    trials: int = 100
    seed: int = 1
    chirp: ChirpSpec = LISTENER_CHIRP
    t_a: float = LISTENER_T_A
    temp_c: float = 20.0
    solver: SolverConfig = SolverConfig()
    detector: DetectorConfig = DetectorConfig(sigma=3.0)
    buffers: int | None = None   # None = rule-derived from the chirp length

    def __post_init__(self):
        if not self.methods or not self.alphas or not self.snr_buckets or not self.presets:
            raise ParameterError("sweep axes must be nonempty")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ParameterError(f"unknown methods: {sorted(unknown)}")
        unknown = set(self.presets) - set(PRESETS)
        if unknown:
            raise ParameterError(f"unknown presets: {sorted(unknown)}")

    @property
    def v_s(self) -> float:
        return speed_of_sound(self.temp_c)


def config_hash(cfg) -> str:
    blob = json.dumps(asdict(cfg), sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def derive_seed(*parts: int) -> int:
    """Stable 63-bit seed from integer coordinates."""
    ss = np.random.SeedSequence([int(p) & 0x7FFFFFFF for p in parts])
    return int(ss.generate_state(1, np.uint64)[0] >> 1)


def make_channel(preset: str, los_delay: int, snr_db: float, noise_seed: int,
                 geom_rng: np.random.Generator, max_extra: int = 80) -> ChannelProfile:
    """Synthetic stand-ins for the three measurement environments.

    CASE_A: clean single path (noise dominates).  CASE_B: two mild
    reflections.  CASE_C: seven strong early reflections.
    """
    if preset == "CASE_A":
        paths = [(los_delay, 1.0)]
    elif preset == "CASE_B":
        extras = geom_rng.integers(8, 41, size=2)
        paths = [(los_delay, 1.0),
                 (los_delay + int(extras[0]), 0.35),
                 (los_delay + int(extras[1]), 0.20)]
    elif preset == "CASE_C":
        extras = geom_rng.integers(2, max_extra + 1, size=7)
        gains = geom_rng.uniform(0.3, 0.8, size=7)
        paths = [(los_delay, 1.0)]
        paths += [(los_delay + int(e), float(g)) for e, g in zip(extras, gains)]
    else:
        raise ParameterError(f"unknown channel preset {preset!r}")
    return ChannelProfile(paths=tuple(paths), snr_db=snr_db, noise_seed=noise_seed)


def synthesize_trial(cfg: ExperimentConfig, p: SampledSignal, preset: str,
                     bucket: tuple[float, float], trial: int,
                     preset_idx: int, bucket_idx: int) -> tuple[SampledSignal, int, float, int]:
    """Deterministic (trace, truth_lag, snr_db, seed) for one sweep trial."""
    seed = derive_seed(cfg.seed, preset_idx, bucket_idx, trial)
    rng = np.random.Generator(np.random.PCG64(seed))
    n_a = int(round(cfg.t_a * p.fs))
    max_extra = 80 if preset == "CASE_C" else 40
    max_los = n_a - len(p) - max_extra
    if max_los < 1:
        raise ParameterError("acquisition window too short for the channel presets")
    los = int(rng.integers(0, max_los + 1))
    snr_db = float(rng.uniform(bucket[0], bucket[1]))
    ch = make_channel(preset, los, snr_db, int(rng.integers(0, 2**62)), rng,
                      max_extra=max_extra)
    trace, truth = simulate_channel(p, ch, cfg.t_a)
    return trace, truth, snr_db, seed


def run_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Characterize every (preset, alpha, SNR bucket, method) cell."""
    p = gen_linear_chirp(cfg.chirp)
    chash = config_hash(cfg)
    v_s = cfg.v_s
    rows: list[dict] = []

    for preset_idx, preset in enumerate(cfg.presets):
        for bucket_idx, bucket in enumerate(cfg.snr_buckets):
            trials = [
                synthesize_trial(cfg, p, preset, bucket, t, preset_idx, bucket_idx)
                for t in range(cfg.trials)
            ]
            for alpha_idx, alpha in enumerate(cfg.alphas):
                pipe = RangingPipeline(p, cfg.solver, cfg.detector, v_s)
                phi_seed = derive_seed(cfg.seed, preset_idx, bucket_idx, alpha_idx, 7919)
                for trial, (trace, truth, snr_db, seed) in enumerate(trials):
                    ref = pipe.run(trace, "XCORR")
                    true_range = truth / p.fs * v_s
                    for method in cfg.methods:
                        res = (ref if method == "XCORR"
                               else pipe.run(trace, method, alpha=alpha, seed=phi_seed,
                                             buffers=cfg.buffers))
                        est = res.estimate
                        rows.append({
                            "preset": preset,
                            "snr_lo": bucket[0], "snr_hi": bucket[1],
                            "alpha": alpha, "method": method, "trial": trial,
                            "seed": seed, "snr_db": snr_db, "truth_lag": truth,
                            "detected_delay": est.delay_samples,
                            "detected_delay_int": est.delay_samples_int,
                            "range_m": est.range_m,
                            "xcorr_delay": ref.estimate.delay_samples,
                            "xcorr_range_m": ref.estimate.range_m,
                            "rel_error_m": abs(est.range_m - ref.estimate.range_m),
                            "abs_error_m": abs(est.range_m - true_range),
                            "valid": est.valid, "fallback": est.fallback_used,
                            "iterations": res.iterations, "config_hash": chash,
                        })
    return rows


def summarize_sweep(rows: list[dict]) -> list[dict]:
    """Per-cell mean/std/median of relative error, plus validity rate."""
    cells: dict[tuple, list[dict]] = {}
    for r in rows:
        key = (r["preset"], r["snr_lo"], r["snr_hi"], r["alpha"], r["method"])
        cells.setdefault(key, []).append(r)
    out = []
    for key in sorted(cells):
        grp = cells[key]
        rel = np.array([g["rel_error_m"] for g in grp])
        out.append({
            "preset": key[0], "snr_lo": key[1], "snr_hi": key[2],
            "alpha": key[3], "method": key[4], "n": len(grp),
            "rel_mean_m": float(rel.mean()), "rel_std_m": float(rel.std()),
            "rel_median_m": float(np.median(rel)),
            "valid_rate": float(np.mean([g["valid"] for g in grp])),
        })
    return out


SUMMARY_FIELDS = ["preset", "snr_lo", "snr_hi", "alpha", "method", "n",
                  "rel_mean_m", "rel_std_m", "rel_median_m", "valid_rate"]


# --- timing ------------------------------------------------------------------

TIMING_FIELDS = ["n", "alpha", "buffers", "td_xcorr_s", "fd_xcorr_s",
                 "compress_one_shot_s", "compress_buffered_s",
                 "madds_one_shot", "madds_buffered", "madd_ratio", "speedup"]


def _best_of(fn, repeats: int = 5) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_timing(n: int = 4800, alphas=(0.05, 0.10, 0.30, 0.50), buffers: int = 10,
               fs: float = 48000.0, chirp: ChirpSpec | None = None,
               seed: int = 0, repeats: int = 5) -> list[dict]:
    """Wall-clock and multiply-add comparison of correlation vs compression."""
    chirp = chirp or ChirpSpec(1000.0, 20000.0, 0.01, fs)
    p = gen_linear_chirp(chirp)
    rng = np.random.Generator(np.random.PCG64(seed))
    x = SampledSignal(rng.standard_normal(n), fs)

    td_s = _best_of(lambda: xcorr_td(p, x), repeats=max(2, repeats // 2))
    fd_s = _best_of(lambda: xcorr_fd(p, x), repeats=repeats)

    rows = []
    for alpha in alphas:
        m = int(round(alpha * n))
        phi_full = gen_sensing_matrix(seed, m, n)
        one_shot_s = _best_of(lambda: compress(x, phi_full), repeats=repeats)
        counter_full = CostCounter()
        compress(x, phi_full, counter=counter_full)

        n_tilde = n // buffers
        m_tilde = int(round(alpha * n_tilde))
        phi_buf = gen_sensing_matrix(seed, m_tilde, n_tilde)
        chunks = x.samples.reshape(buffers, n_tilde)

        def buffered():
            for chunk in chunks:
                compress(chunk, phi_buf)

        buffered_s = _best_of(buffered, repeats=repeats)
        counter_buf = CostCounter()
        for chunk in chunks:
            compress(chunk, phi_buf, counter=counter_buf)

        rows.append({
            "n": n, "alpha": alpha, "buffers": buffers,
            "td_xcorr_s": td_s, "fd_xcorr_s": fd_s,
            "compress_one_shot_s": one_shot_s, "compress_buffered_s": buffered_s,
            "madds_one_shot": counter_full.madds, "madds_buffered": counter_buf.madds,
            "madd_ratio": counter_buf.madds / counter_full.madds,
            "speedup": one_shot_s / buffered_s if buffered_s > 0 else math.inf,
        })
    return rows


# --- buffered vs single-buffer detection --------------------------------------

BUFFER_FIELDS = ["preset", "snr_lo", "snr_hi", "alpha", "trial",
                 "rel_error_buffered_m", "rel_error_single_m", "config_hash"]


def run_buffer_comparison(cfg: ExperimentConfig, alpha: float = 0.30) -> list[dict]:
    """Same traces recovered with the buffer rule vs one monolithic buffer."""
    p = gen_linear_chirp(cfg.chirp)
    chash = config_hash(cfg)
    v_s = cfg.v_s
    rows = []
    for preset_idx, preset in enumerate(cfg.presets):
        for bucket_idx, bucket in enumerate(cfg.snr_buckets):
            pipe = RangingPipeline(p, cfg.solver, cfg.detector, v_s)
            phi_seed = derive_seed(cfg.seed, preset_idx, bucket_idx, 104729)
            for trial in range(cfg.trials):
                trace, truth, snr_db, seed = synthesize_trial(
                    cfg, p, preset, bucket, trial, preset_idx, bucket_idx)
                ref = pipe.run(trace, "XCORR")
                buffered = pipe.run(trace, "STRUCT_SXCORR", alpha=alpha, seed=phi_seed)
                single = pipe.run(trace, "STRUCT_SXCORR", alpha=alpha, seed=phi_seed,
                                  buffers=1)
                rows.append({
                    "preset": preset, "snr_lo": bucket[0], "snr_hi": bucket[1],
                    "alpha": alpha, "trial": trial,
                    "rel_error_buffered_m": abs(buffered.estimate.range_m - ref.estimate.range_m),
                    "rel_error_single_m": abs(single.estimate.range_m - ref.estimate.range_m),
                    "config_hash": chash,
                })
    return rows


# --- localization --------------------------------------------------------------

LOCALIZE_FIELDS = ["method", "loss_rate", "round", "failed", "anchors_used",
                   "error_m", "config_hash"]


def default_scenario() -> dict:
    """Five listeners on a +-45 degree arc, 3-8 m from the beacon."""
    angles = np.linspace(-45, 45, 5) * math.pi / 180.0
    radii = [3.0, 4.5, 6.0, 7.0, 8.0]
    anchors = [[r * math.cos(a), r * math.sin(a)] for r, a in zip(radii, angles)]
    return {
        "anchors": anchors,
        "beacon": [0.0, 0.0],
        "beacon_jitter_m": 0.0,   # per-round uniform displacement radius
        "methods": ["STRUCT_SXCORR"],
        "alpha": 0.30,
        "preset": "CASE_A",
        "snr_db": 20.0,
        "loss_rates": [0.0],
        "rounds": 50,
        "seed": 1,
        "temp_c": 20.0,
        "chirp": {"f_start": 3000.0, "f_end": 7000.0, "duration": 0.01, "fs": 15000.0},
        "t_a": 0.04,
    }


def run_localization(scenario: dict) -> list[dict]:
    """Monte-Carlo localization rounds per method and packet-loss rate."""
    sc = dict(default_scenario())
    sc.update(scenario)
    chirp = ChirpSpec(**sc["chirp"])
    p = gen_linear_chirp(chirp)
    v_s = speed_of_sound(sc["temp_c"])
    solver = SolverConfig(**sc.get("solver", {}))
    detector = DetectorConfig(**sc.get("detector", {"sigma": 3.0}))
    chash = config_hash_dict(sc)

    rows = []
    for method in sc["methods"]:
        pipe = RangingPipeline(p, solver, detector, v_s)
        phi_seed = derive_seed(sc["seed"], 15485863)

        def ranger(trace):
            res = pipe.run(trace, method, alpha=sc["alpha"], seed=phi_seed)
            return res.estimate.range_m if res.estimate.delay_samples >= 0 else None

        def channel(delay, noise_seed):
            geom = np.random.Generator(np.random.PCG64(noise_seed))
            return make_channel(sc["preset"], delay, sc["snr_db"], noise_seed, geom,
                                max_extra=40)

        for loss_idx, loss in enumerate(sc["loss_rates"]):
            for rnd in range(sc["rounds"]):
                round_seed = derive_seed(sc["seed"], loss_idx, rnd)
                beacon = tuple(sc["beacon"])
                jitter = float(sc.get("beacon_jitter_m", 0.0))
                if jitter > 0:
                    jrng = np.random.Generator(np.random.PCG64(derive_seed(sc["seed"], 31, rnd)))
                    angle = jrng.uniform(0, 2 * math.pi)
                    radius = jitter * math.sqrt(jrng.uniform())
                    beacon = (beacon[0] + radius * math.cos(angle),
                              beacon[1] + radius * math.sin(angle))
                result = simulate_localization_round(
                    beacon, [tuple(a) for a in sc["anchors"]],
                    p, ranger, sc["t_a"], v_s, channel,
                    loss_rate=loss, seed=round_seed,
                )
                rows.append({
                    "method": method, "loss_rate": loss, "round": rnd,
                    "failed": result.failed, "anchors_used": result.anchors_used,
                    "error_m": result.error_m if result.error_m is not None else "",
                    "config_hash": chash,
                })
    return rows


def config_hash_dict(d: dict) -> str:
    blob = json.dumps(d, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]
