"""Reference chirp generation and a synthetic multipath acoustic channel.

Everything here is deterministic given its inputs: chirps from their spec,
channel noise from an explicit seed (PCG64).  Ground-truth arrival lags are
returned alongside every synthesized trace so detection accuracy can be
scored exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class ChirpSpec:
    """Linear frequency sweep: f_start -> f_end over `duration` at rate `fs`."""

    f_start: float
    f_end: float
    duration: float
    fs: float

    def __post_init__(self):
        if self.f_start <= 0 or self.f_end <= 0:
            raise ParameterError("chirp frequencies must be positive")
        if self.duration <= 0:
            raise ParameterError("chirp duration must be positive")
        if self.fs <= 2 * max(self.f_start, self.f_end):
            raise ParameterError(
                f"fs={self.fs} violates Nyquist for sweep up to "
                f"{max(self.f_start, self.f_end)} Hz"
            )
        if round(self.duration * self.fs) < 2:
            raise ParameterError("chirp must span at least 2 samples")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.fs))


@dataclass(frozen=True)
class SampledSignal:
    """A finite real-valued sample vector with its sample rate in Hz."""

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ParameterError("signal must be a nonempty 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("signal samples must be finite")
        if self.fs <= 0:
            raise ParameterError("sample rate must be positive")
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class ChannelProfile:
    """Multipath channel: (delay_samples, gain) taps plus white Gaussian noise.

    The minimum-delay tap is the line-of-sight path.  `snr_db` is defined on
    the LoS component only (power of the LoS contribution over noise power);
    use ``math.inf`` for a noise-free channel.  Reflections must arrive
    strictly after the LoS path.
    """

    paths: tuple[tuple[int, float], ...]
    snr_db: float = math.inf
    noise_seed: int = 0

    def __post_init__(self):
        paths = tuple((int(d), float(g)) for d, g in self.paths)
        if len(paths) == 0:
            raise ParameterError("channel needs at least one path")
        delays = [d for d, _ in paths]
        gains = [g for _, g in paths]
        if min(delays) < 0:
            raise ParameterError("path delays must be >= 0 samples")
        if not all(np.isfinite(gains)):
            raise ParameterError("path gains must be finite")
        los = min(delays)
        if sum(1 for d in delays if d == los) != 1:
            raise ParameterError("exactly one path may carry the minimum delay")
        object.__setattr__(self, "paths", paths)

    @property
    def los_delay(self) -> int:
        return min(d for d, _ in self.paths)

    @property
    def los_gain(self) -> float:
        los = self.los_delay
        return next(g for d, g in self.paths if d == los)


def gen_linear_chirp(spec: ChirpSpec) -> SampledSignal:
    """Generate a unit-amplitude linear chirp, phase starting at 0.

    The waveform is sin(phi(t)) with instantaneous frequency sweeping
    linearly from f_start to f_end, so the first sample is exactly 0.
    """
    n = spec.n_samples
    t = np.arange(n) / spec.fs
    rate = (spec.f_end - spec.f_start) / spec.duration
    phase = 2.0 * np.pi * (spec.f_start * t + 0.5 * rate * t * t)
    return SampledSignal(np.sin(phase), spec.fs)


def min_acquisition_time(d_c: float, v_s: float, t_p: float, t_r: float) -> float:
    """Lower bound on the recording window: flight time + pulse + reverberation."""
    if d_c <= 0 or v_s <= 0 or t_p <= 0 or t_r <= 0:
        raise ParameterError("all acquisition-time inputs must be positive")
    return d_c / v_s + t_p + t_r


def simulate_channel(
    p: SampledSignal, ch: ChannelProfile, t_a: float
) -> tuple[SampledSignal, int]:
    """Propagate the reference signal through the channel.

    Returns the acquired trace of round(t_a * fs) samples together with the
    ground-truth LoS delay in samples.  Noise is drawn from PCG64(noise_seed)
    and rescaled so the realized LoS-power-to-noise-power ratio matches
    ``ch.snr_db`` exactly, not just in expectation.
    """
    n_a = int(round(t_a * p.fs))
    max_delay = max(d for d, _ in ch.paths)
    if n_a < len(p) + max_delay:
        raise ParameterError(
            f"acquisition window of {n_a} samples cannot hold a {len(p)}-sample "
            f"signal delayed by {max_delay}"
        )

    x = np.zeros(n_a)
    for delay, gain in ch.paths:
        x[delay : delay + len(p)] += gain * p.samples

    if math.isfinite(ch.snr_db):
        los = np.zeros(n_a)
        los[ch.los_delay : ch.los_delay + len(p)] = ch.los_gain * p.samples
        los_power = float(np.sum(los**2))
        if los_power == 0.0:
            raise ParameterError("LoS component has zero power; SNR undefined")
        rng = np.random.Generator(np.random.PCG64(ch.noise_seed))
        v = rng.standard_normal(n_a)
        target = los_power * 10.0 ** (-ch.snr_db / 10.0)
        v *= math.sqrt(target / float(np.sum(v**2)))
        x = x + v

    return SampledSignal(x, p.fs), ch.los_delay


def measured_snr_db(x: SampledSignal, noise_floor: float) -> float:
    """Peak-amplitude SNR: 20*log10(peak|x| / noise_floor)."""
    if noise_floor <= 0:
        raise ParameterError("noise floor must be positive")
    peak = float(np.max(np.abs(x.samples)))
    if peak == 0.0:
        return -math.inf
    return 20.0 * math.log10(peak / noise_floor)
