"""Two-phase peak detection, range conversion, and compression-factor rules.

Lag convention: coefficient index i of a buffer maps to lag i - (n_tilde - 1),
so a signal DELAYED by d samples relative to a buffer start peaks at lag -d in
that buffer (the reference is the first correlation operand).  Converting a
detection to a range therefore negates the lag: a peak at lag L in buffer i
corresponds to the trace-level delay  i * n_tilde - L.

Phase 1 keeps, per buffer, the first tallest local maximum of |coefficients|
that clears mean + sigma * std of that buffer's magnitudes.  Phase 2 picks the
tallest candidate across buffers and validates the lag-sign handshake with the
neighboring buffer; an absent neighbor counts as a failed handshake.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .recovery import SparseCoefficients
from .signals import SampledSignal

METHOD_XCORR = "XCORR"
METHOD_SXCORR = "SXCORR"
METHOD_STRUCT = "STRUCT_SXCORR"


@dataclass(frozen=True)
class DetectorConfig:
    """sigma: threshold in std-devs; fallback: tallest-anywhere when phase 2 fails."""

    sigma: float = 6.0
    fallback_tallest: bool = True
    refine: bool = True


@dataclass(frozen=True)
class PeakCandidate:
    buffer_index: int
    lag: int                 # signed, relative to the buffer
    magnitude: float
    threshold_sigma: float


@dataclass
class RangeEstimate:
    """A detection converted to meters.

    `lag_hat` is the (possibly fractional) positive sample offset within the
    detection buffer after sign normalization, so the total delay in samples
    is n_tilde * prior_buffers + lag_hat and range follows from fs and v_s.
    """

    detection_buffer: int
    prior_buffers: int
    lag_hat: float
    delay_samples: float
    delay_samples_int: int
    range_m: float
    valid: bool
    method: str
    fallback_used: bool = False
    refined: bool = False
    failure: str | None = None


def detect_phase1(coeffs: list[SparseCoefficients], sigma: float) -> list[PeakCandidate]:
    """First tallest qualifying local maximum of |values| per buffer.

    A buffer with no qualifying peak simply contributes no candidate.
    """
    candidates = []
    for c in coeffs:
        mags = np.abs(c.values)
        if mags.size == 0:
            raise ParameterError("empty coefficient vector")
        thresh = float(mags.mean() + sigma * mags.std())
        idx = _local_maxima(mags)
        idx = idx[(mags[idx] >= thresh) & (mags[idx] > 0)]
        if idx.size == 0:
            continue
        best = idx[np.argmax(mags[idx])]  # argmax returns the first (smallest lag) tie
        candidates.append(
            PeakCandidate(
                buffer_index=c.buffer_index,
                lag=c.lag_of_index(int(best)),
                magnitude=float(mags[best]),
                threshold_sigma=sigma,
            )
        )
    return candidates


def _local_maxima(mags: np.ndarray) -> np.ndarray:
    """Indices that are >= both neighbors (boundaries compare one side)."""
    if mags.size == 1:
        return np.array([0])
    left_ok = np.empty(mags.size, dtype=bool)
    right_ok = np.empty(mags.size, dtype=bool)
    left_ok[0] = True
    left_ok[1:] = mags[1:] >= mags[:-1]
    right_ok[-1] = True
    right_ok[:-1] = mags[:-1] >= mags[1:]
    return np.flatnonzero(left_ok & right_ok)


@dataclass
class Phase2Result:
    candidate: PeakCandidate | None
    valid: bool
    reason: str | None = None


def detect_phase2(candidates: list[PeakCandidate]) -> Phase2Result:
    """Select the ranging peak across buffers and check lag-sign consistency.

    With a single candidate it wins unconditionally.  With several, the
    tallest must hand off correctly to its neighbor: a negative (or zero) lag
    needs a positive-lag candidate in the next buffer, a positive lag needs a
    negative-lag candidate in the previous one.  A missing neighbor candidate
    fails the check.
    """
    if not candidates:
        return Phase2Result(None, False, reason="no candidates")
    if len(candidates) == 1:
        return Phase2Result(candidates[0], True)

    tallest = min(candidates, key=lambda c: (-c.magnitude, c.lag))
    by_buffer = {c.buffer_index: c for c in candidates}
    if tallest.lag > 0:
        prev = by_buffer.get(tallest.buffer_index - 1)
        if prev is None:
            return Phase2Result(tallest, False, reason="no candidate in previous buffer")
        if prev.lag >= 0:
            return Phase2Result(tallest, False, reason="previous buffer lag not negative")
    else:
        nxt = by_buffer.get(tallest.buffer_index + 1)
        if nxt is None:
            return Phase2Result(tallest, False, reason="no candidate in next buffer")
        if nxt.lag <= 0:
            return Phase2Result(tallest, False, reason="next buffer lag not positive")
    return Phase2Result(tallest, True)


def parabolic_refine(values: np.ndarray, peak_index: int) -> tuple[float, bool]:
    """Sub-sample offset of the peak from a parabola through 3 |value| points.

    Returns (offset, refined); a boundary peak comes back unrefined with
    offset 0.  The offset always lies strictly inside (-1, +1).
    """
    mags = np.abs(np.asarray(values, dtype=np.float64))
    if peak_index <= 0 or peak_index >= mags.size - 1:
        return 0.0, False
    a, b, c = mags[peak_index - 1], mags[peak_index], mags[peak_index + 1]
    denom = a - 2.0 * b + c
    if denom == 0.0:
        return 0.0, True
    offset = 0.5 * (a - c) / denom
    offset = float(np.clip(offset, math.nextafter(-1.0, 0.0), math.nextafter(1.0, 0.0)))
    return offset, True


def estimate_range(b_prev: int, lag_hat: float, n_tilde: int, fs: float, v_s: float) -> tuple[float, bool]:
    """Meters from (buffers before detection, in-buffer delay in samples).

    Returns (range_m, valid); a negative total sample offset flips valid and
    clamps the range at zero.
    """
    if fs <= 0 or v_s <= 0:
        raise ParameterError("fs and v_s must be positive")
    total = n_tilde * b_prev + lag_hat
    rng = (total / fs) * v_s
    if total < 0:
        return 0.0, False
    return rng, True


def speed_of_sound(temp_c: float) -> float:
    """Temperature-compensated speed of sound in air, m/s."""
    return 331.4 + 0.6 * temp_c


def normalize_detection(buffer_index: int, lag: float, n_tilde: int) -> tuple[int, float]:
    """Map a (buffer, signed lag) detection to (prior buffers, positive offset).

    A non-positive lag means the signal started inside this buffer; a positive
    lag means it started n_tilde - lag samples into the previous one.
    """
    if lag <= 0:
        return buffer_index, -lag
    return buffer_index - 1, n_tilde - lag


def detection_to_range(coeffs: list[SparseCoefficients], det: DetectorConfig,
                       fs: float, v_s: float, method: str) -> RangeEstimate:
    """Run both detection phases on per-buffer coefficients and convert to meters."""
    if not coeffs:
        raise ParameterError("no coefficient buffers to detect on")
    n_tilde = coeffs[0].n_tilde
    candidates = detect_phase1(coeffs, det.sigma)
    phase2 = detect_phase2(candidates)

    fallback_used = False
    valid = phase2.valid
    chosen = phase2.candidate
    if not phase2.valid:
        if not det.fallback_tallest:
            if chosen is None:
                return RangeEstimate(
                    detection_buffer=-1, prior_buffers=0, lag_hat=0.0,
                    delay_samples=0.0, delay_samples_int=0, range_m=0.0,
                    valid=False, method=method, failure=phase2.reason,
                )
        else:
            fallback_used = True
            chosen = _tallest_anywhere(coeffs)
            if chosen is None:
                return RangeEstimate(
                    detection_buffer=-1, prior_buffers=0, lag_hat=0.0,
                    delay_samples=0.0, delay_samples_int=0, range_m=0.0,
                    valid=False, method=method, failure="all buffers zero",
                )

    by_buffer = {c.buffer_index: c for c in coeffs}
    buf = by_buffer[chosen.buffer_index]
    peak_index = chosen.lag + (n_tilde - 1)
    lag = float(chosen.lag)
    refined = False
    if det.refine:
        offset, refined = parabolic_refine(buf.values, peak_index)
        lag += offset

    b_prev_int, lag_hat_int = normalize_detection(chosen.buffer_index, chosen.lag, n_tilde)
    b_prev, lag_hat = normalize_detection(chosen.buffer_index, lag, n_tilde)
    range_m, in_window = estimate_range(b_prev, lag_hat, n_tilde, fs, v_s)
    if valid and in_window:
        failure = None
    elif not in_window:
        failure = "negative total delay"
    else:
        failure = phase2.reason
    return RangeEstimate(
        detection_buffer=chosen.buffer_index,
        prior_buffers=b_prev,
        lag_hat=lag_hat,
        delay_samples=n_tilde * b_prev + lag_hat,
        delay_samples_int=int(n_tilde * b_prev_int + lag_hat_int),
        range_m=range_m,
        valid=valid and in_window,
        method=method,
        fallback_used=fallback_used,
        refined=refined,
        failure=failure,
    )


def _tallest_anywhere(coeffs: list[SparseCoefficients]) -> PeakCandidate | None:
    """Global |coefficient| maximum across all buffers, ignoring thresholds."""
    best = None
    for c in coeffs:
        mags = np.abs(c.values)
        i = int(np.argmax(mags))
        if mags[i] <= 0:
            continue
        cand = PeakCandidate(c.buffer_index, c.lag_of_index(i), float(mags[i]), math.nan)
        if best is None or cand.magnitude > best.magnitude:
            best = cand
    return best


# --- adaptive compression factor ------------------------------------------

_RHO_TABLE = (
    (30.0, 0.05),
    (20.0, 0.10),
    (15.0, 0.20),
    (10.0, 0.30),
    (5.0, 0.50),
)


def alpha_from_rho(x: SampledSignal) -> float:
    """Receiver-side compression factor from the peak-to-mean amplitude ratio."""
    mags = np.abs(x.samples)
    mean = float(mags.mean())
    if mean == 0.0:
        return 1.0
    rho = float(mags.max()) / mean
    for floor, alpha in _RHO_TABLE:
        if rho > floor:
            return alpha
    return 1.0


@dataclass
class FeedbackAttempt:
    alpha: float
    measurements: int
    success: bool


@dataclass
class AlphaFeedbackResult:
    alpha: float
    valid: bool
    attempts: list[FeedbackAttempt] = field(default_factory=list)

    @property
    def total_measurements(self) -> int:
        return sum(a.measurements for a in self.attempts)

    def overhead_vs_fixed(self, fixed_measurements: int) -> float:
        """Extra measurements spent relative to a single fixed-alpha pass, in %."""
        if fixed_measurements <= 0:
            raise ParameterError("fixed_measurements must be positive")
        return 100.0 * (self.total_measurements - fixed_measurements) / fixed_measurements


def alpha_feedback_loop(trace: SampledSignal, detector,
                        start_alpha: float = 0.30, step: float = 0.05) -> AlphaFeedbackResult:
    """Search the alpha grid by repeated detection attempts.

    `detector(trace, alpha)` must run the full compress -> recover -> detect
    pipeline and return (success, measurement_count).  On an initial success
    alpha is stepped down until failure (keeping the last success); on an
    initial failure it is stepped up until success.  Never leaves (0, 1];
    returns alpha=1.0 flagged invalid when even full measurements fail.
    """
    if not 0 < start_alpha <= 1:
        raise ParameterError("start_alpha must lie in (0, 1]")
    if step <= 0:
        raise ParameterError("step must be positive")

    attempts: list[FeedbackAttempt] = []

    def probe(alpha: float) -> bool:
        ok, m = detector(trace, alpha)
        attempts.append(FeedbackAttempt(alpha=alpha, measurements=int(m), success=bool(ok)))
        return bool(ok)

    alpha = start_alpha
    if probe(alpha):
        best = alpha
        while alpha - step > 0:
            alpha = round(alpha - step, 10)
            if not probe(alpha):
                break
            best = alpha
        return AlphaFeedbackResult(alpha=best, valid=True, attempts=attempts)

    while alpha < 1.0:
        alpha = min(round(alpha + step, 10), 1.0)
        if probe(alpha):
            return AlphaFeedbackResult(alpha=alpha, valid=True, attempts=attempts)
    return AlphaFeedbackResult(alpha=1.0, valid=False, attempts=attempts)
