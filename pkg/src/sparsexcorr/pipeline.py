"""End-to-end ranging: trace in, range estimate out, for every method.

This is the glue the benchmark harness, the adaptive-alpha feedback loop and
the localization rounds all share.  Recovery operators (dictionary, sensing
matrix, their product) are cached per configuration so Monte-Carlo sweeps do
not rebuild them for every trial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import downsample_baseline, dct_baseline, xcorr_range
from .detect import DetectorConfig, RangeEstimate, detection_to_range
from .errors import ParameterError
from .recovery import (
    MODE_SXCORR,
    MODE_STRUCT,
    RecoveryContext,
    SolverConfig,
    build_recovery_context,
    recover_buffered,
)
from .sensing import CostCounter, choose_buffer_count, compress_buffered
from .signals import SampledSignal

METHODS = (
    "XCORR",
    "SXCORR",
    "STRUCT_SXCORR",
    "DCT",
    "DOWNSAMPLE_XCORR",
    "DOWNSAMPLE_STRUCT_SXCORR",
)


@dataclass
class PipelineResult:
    estimate: RangeEstimate
    iterations: int = 0
    measurements: int = 0
    madds: int = 0


class RangingPipeline:
    """Runs any supported method against traces sharing one reference signal."""

    def __init__(self, p: SampledSignal, solver: SolverConfig | None = None,
                 detector: DetectorConfig | None = None, v_s: float = 343.0,
                 dct_solver: SolverConfig | None = None):
        self.p = p
        self.solver = solver or SolverConfig()
        self.detector = detector or DetectorConfig()
        self.v_s = v_s
        # DCT needs far more atoms per buffer than the correlation domain
        self.dct_solver = dct_solver
        self._contexts: dict[tuple, RecoveryContext] = {}

    def buffer_count(self, trace: SampledSignal) -> int:
        return choose_buffer_count(len(self.p) / self.p.fs, self.p.fs, len(trace))

    def _context(self, n_tilde: int, m_tilde: int, seed: int) -> RecoveryContext:
        key = (n_tilde, m_tilde, seed)
        if key not in self._contexts:
            self._contexts[key] = build_recovery_context(self.p, n_tilde, m_tilde, seed)
        return self._contexts[key]

    def run(self, trace: SampledSignal, method: str, alpha: float = 0.30,
            seed: int = 0, buffers: int | None = None) -> PipelineResult:
        if method == "XCORR":
            est = xcorr_range(self.p, trace, self.detector, self.v_s)
            return PipelineResult(estimate=est, measurements=len(trace))
        if method in ("SXCORR", "STRUCT_SXCORR"):
            return self._run_compressed(trace, method, alpha, seed, buffers)
        if method == "DCT":
            return self._run_dct(trace, alpha, seed, buffers)
        if method == "DOWNSAMPLE_XCORR":
            f_d = max(2, int(round(1.0 / alpha)))
            est = downsample_baseline(trace, f_d, self.p, "XCORR", det=self.detector, v_s=self.v_s)
            return PipelineResult(estimate=est, measurements=int(np.ceil(len(trace) / f_d)))
        if method == "DOWNSAMPLE_STRUCT_SXCORR":
            f_d = max(2, int(round(1.0 / alpha)))
            est = downsample_baseline(trace, f_d, self.p, MODE_STRUCT, cfg=self.solver,
                                      det=self.detector, v_s=self.v_s, seed=seed)
            return PipelineResult(estimate=est, measurements=int(np.ceil(len(trace) / f_d)))
        raise ParameterError(f"unknown method {method!r}")

    def _run_compressed(self, trace, method, alpha, seed, buffers) -> PipelineResult:
        b = buffers if buffers is not None else self.buffer_count(trace)
        counter = CostCounter()
        packets = compress_buffered(trace, b, alpha, seed, counter=counter)
        head = packets[0]
        ctx = self._context(head.n_tilde, head.m_tilde, head.seed)
        mode = MODE_STRUCT if method == "STRUCT_SXCORR" else MODE_SXCORR
        coeffs = recover_buffered(packets, self.p, self.solver, mode=mode, context=ctx)
        est = detection_to_range(coeffs, self.detector, trace.fs, self.v_s, method=method)
        iters = sum(c.info.iterations for c in coeffs if c.info is not None)
        return PipelineResult(
            estimate=est,
            iterations=iters,
            measurements=head.m_tilde * len(packets),
            madds=counter.madds,
        )

    def _run_dct(self, trace, alpha, seed, buffers) -> PipelineResult:
        b = buffers if buffers is not None else self.buffer_count(trace)
        counter = CostCounter()
        packets = compress_buffered(trace, b, alpha, seed, counter=counter)
        cfg = self.dct_solver
        if cfg is None:
            # give the DCT domain a sparsity budget proportional to the buffer
            k_dct = max(self.solver.k, packets[0].n_tilde // 3)
            cfg = SolverConfig(
                epsilon=self.solver.epsilon, lam=self.solver.lam,
                max_iterations=self.solver.max_iterations,
                convergence_tol=self.solver.convergence_tol,
                k=k_dct, mu0=self.solver.mu0,
            )
        est = dct_baseline(packets, self.p, cfg, self.detector, self.v_s)
        return PipelineResult(
            estimate=est,
            measurements=packets[0].m_tilde * len(packets),
            madds=counter.madds,
        )

    def feedback_detector(self, seed: int = 0, buffers: int | None = None):
        """Strict-validity probe for the base-station alpha feedback loop."""
        strict = DetectorConfig(sigma=self.detector.sigma, fallback_tallest=False,
                                refine=self.detector.refine)
        saved = self.detector

        def probe(trace: SampledSignal, alpha: float) -> tuple[bool, int]:
            self.detector = strict
            try:
                res = self.run(trace, "STRUCT_SXCORR", alpha=alpha, seed=seed, buffers=buffers)
            finally:
                self.detector = saved
            return res.estimate.valid, res.measurements

        return probe
