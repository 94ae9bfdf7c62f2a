"""Reference methods the compressed pipeline is benchmarked against.

`xcorr_td` is the project-wide accuracy oracle: a literal per-lag sliding
inner product, deliberately independent of both the FFT implementation and
the dictionary product it certifies.  The sequence convention for p against x
is s[tau] = sum_t p[t + tau] * x[t] with tau running from -(len(x)-1) to
+(len(p)-1); a copy of p delayed by d samples therefore peaks at lag -d.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct, fft, idct
from scipy.signal import fftconvolve

from .detect import DetectorConfig, RangeEstimate, detection_to_range, parabolic_refine
from .errors import ParameterError
from .recovery import (
    MODE_STRUCT,
    SolverConfig,
    SparseCoefficients,
    prune_against_columns,
    recover_buffered,
    solve_l1,
)
from .sensing import MeasurementPacket, compress_buffered, gen_sensing_matrix
from .signals import SampledSignal

DOMAIN_CORRELATION = "CORRELATION"
DOMAIN_DCT = "DCT"
DOMAIN_FFT = "FFT"


def _vec(x) -> np.ndarray:
    return x.samples if isinstance(x, SampledSignal) else np.asarray(x, dtype=np.float64)


def xcorr_lags(n_p: int, n_x: int) -> np.ndarray:
    """Lag axis matching xcorr_td(p, x) for signals of these lengths."""
    return np.arange(-(n_x - 1), n_p)


def xcorr_td(p, x) -> np.ndarray:
    """Direct-sum cross-correlation over all len(p)+len(x)-1 lags. O(n^2)."""
    pv, xv = _vec(p), _vec(x)
    if pv.size == 0 or xv.size == 0:
        raise ParameterError("cross-correlation needs nonempty signals")
    n_p, n_x = pv.size, xv.size
    out = np.empty(n_p + n_x - 1)
    for idx in range(out.size):
        tau = idx - (n_x - 1)
        lo = max(0, -tau)          # t range with both operands in bounds
        hi = min(n_x, n_p - tau)
        out[idx] = float(pv[lo + tau : hi + tau] @ xv[lo:hi]) if hi > lo else 0.0
    return out


def xcorr_fd(p, x) -> np.ndarray:
    """FFT cross-correlation, zero-padded to avoid circular wrap-around."""
    pv, xv = _vec(p), _vec(x)
    if pv.size == 0 or xv.size == 0:
        raise ParameterError("cross-correlation needs nonempty signals")
    return fftconvolve(pv, xv[::-1], mode="full")


def argmax_delay(s: np.ndarray) -> int:
    """Lag maximizing |s|^2; ties resolve to the smallest lag.

    The input is indexed on the xcorr_td lag axis for equal-length operands
    (odd length 2n-1, lag 0 at the center).
    """
    s = np.asarray(s)
    if s.size % 2 != 1:
        raise ParameterError("expected an odd-length full correlation sequence")
    idx = int(np.argmax(s**2))  # first occurrence = smallest lag
    return idx - (s.size // 2)


@dataclass(frozen=True)
class SparsityProfile:
    """Descending coefficient magnitudes of one signal in one domain."""

    domain: str
    sorted_magnitudes: np.ndarray

    def k_for(self, energy_fraction: float) -> int:
        """Smallest coefficient count capturing the given energy fraction."""
        if not 0 < energy_fraction <= 1:
            raise ParameterError("energy fraction must lie in (0, 1]")
        energy = self.sorted_magnitudes**2
        total = float(energy.sum())
        if total == 0.0:
            return 0
        cum = np.cumsum(energy)
        return int(np.searchsorted(cum, energy_fraction * total - 1e-12) + 1)


def sparsity_profile(p, x, domain: str) -> SparsityProfile:
    """Magnitude-sorted representation of x in the named domain."""
    xv = _vec(x)
    if domain == DOMAIN_CORRELATION:
        coeffs = xcorr_fd(_pad_to(_vec(p), xv.size), xv)
    elif domain == DOMAIN_DCT:
        coeffs = dct(xv, type=2, norm="ortho")
    elif domain == DOMAIN_FFT:
        coeffs = fft(xv)
    else:
        raise ParameterError(f"unknown sparsity domain {domain!r}")
    mags = np.sort(np.abs(coeffs))[::-1]
    return SparsityProfile(domain=domain, sorted_magnitudes=mags)


def _pad_to(v: np.ndarray, n: int) -> np.ndarray:
    if v.size > n:
        raise ParameterError("reference longer than trace")
    out = np.zeros(n)
    out[: v.size] = v
    return out


def dct_basis(n: int) -> np.ndarray:
    """Orthonormal inverse-DCT-II synthesis matrix (x = basis @ coeffs)."""
    return idct(np.eye(n), axis=0, type=2, norm="ortho")


def dct_baseline(packets: list[MeasurementPacket], p: SampledSignal, cfg: SolverConfig,
                 det: DetectorConfig, v_s: float) -> RangeEstimate:
    """Recover each buffer's DCT coefficients by l1, reconstruct, correlate.

    Pruning runs in the DCT domain (orthonormal columns, so it reduces to a
    top-k pass); detection then operates on per-buffer cross-correlations of
    the reconstructed buffers, mirroring the main pipeline's two phases.
    """
    if not packets:
        raise ParameterError("no packets to recover")
    head = packets[0]
    n_tilde = head.n_tilde
    basis = dct_basis(n_tilde)
    phi = gen_sensing_matrix(head.seed, head.m_tilde, n_tilde)
    a = phi.entries @ basis
    norms = np.linalg.norm(basis, axis=0)

    p_pad = _pad_to(p.samples, n_tilde)
    coeffs = []
    for pkt in sorted(packets, key=lambda q: q.buffer_index):
        sol = solve_l1(a, pkt.y_tilde, cfg, buffer_index=pkt.buffer_index, n_tilde=n_tilde)
        pruned = prune_against_columns(sol.values, basis, norms, cfg.k, cfg.mu0)
        x_hat = basis @ pruned
        corr = xcorr_fd(p_pad, x_hat)
        coeffs.append(SparseCoefficients(corr, pkt.buffer_index, n_tilde, sol.info))
    return detection_to_range(coeffs, det, head.fs, v_s, method="DCT")


def downsample_baseline(x: SampledSignal, f_d: int, p: SampledSignal, mode: str,
                        cfg: SolverConfig | None = None,
                        det: DetectorConfig | None = None,
                        v_s: float = 343.0,
                        seed: int = 0) -> RangeEstimate:
    """Keep every f_d-th sample and range on the decimated pair.

    XCORR mode correlates the decimated trace against the decimated reference;
    STRUCT_SXCORR solves the l1 problem against a correlation dictionary built
    from the decimated reference (buffer by buffer, full measurements).  The
    returned estimate is already rescaled to full-rate distance via the
    decimated sample rate.
    """
    if f_d < 1 or int(f_d) != f_d:
        raise ParameterError("downsampling factor must be a positive integer")
    p_ds = p.samples[::f_d]
    x_ds = x.samples[::f_d]
    if x_ds.size < p_ds.size:
        raise ParameterError("decimated trace shorter than decimated reference")
    fs_ds = x.fs / f_d
    det = det or DetectorConfig()

    if mode == "XCORR":
        sig_ds = SampledSignal(x_ds, fs_ds)
        ref_ds = SampledSignal(p_ds, fs_ds)
        est = xcorr_range(ref_ds, sig_ds, det, v_s)
        est.method = "DOWNSAMPLE_XCORR"
        return est
    if mode != MODE_STRUCT:
        raise ParameterError(f"unknown downsampling mode {mode!r}")

    cfg = cfg or SolverConfig()
    b = max(1, int(np.ceil(x_ds.size / p_ds.size)))
    sig_ds = SampledSignal(x_ds, fs_ds)
    ref_ds = SampledSignal(p_ds, fs_ds)
    packets = compress_buffered(sig_ds, b, 1.0, seed)
    coeffs = recover_buffered(packets, ref_ds, cfg, mode=MODE_STRUCT)
    est = detection_to_range(coeffs, det, fs_ds, v_s, method="DOWNSAMPLE_STRUCT_SXCORR")
    return est


def xcorr_range(p: SampledSignal, x: SampledSignal, det: DetectorConfig, v_s: float,
                use_fft: bool = True) -> RangeEstimate:
    """Full-trace matched-filter range: argmax of |xcorr|^2, optional refinement.

    This is the best-case reference every compressed method is scored against.
    """
    p_pad = _pad_to(p.samples, len(x))
    s = xcorr_fd(p_pad, x.samples) if use_fft else xcorr_td(p_pad, x.samples)
    lag = argmax_delay(s)
    center = s.size // 2
    frac = float(lag)
    refined = False
    if det.refine:
        offset, refined = parabolic_refine(s, lag + center)
        frac += offset
    delay = -frac                 # delayed copies peak at negative lags
    delay_int = -lag
    range_m = max(delay, 0.0) / x.fs * v_s
    return RangeEstimate(
        detection_buffer=0,
        prior_buffers=0,
        lag_hat=max(delay, 0.0),
        delay_samples=delay,
        delay_samples_int=delay_int,
        range_m=range_m,
        valid=delay >= 0,
        method="XCORR",
        refined=refined,
    )
