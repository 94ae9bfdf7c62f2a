"""2D position from anchor ranges via linearized least squares.

Subtracting the first anchor's circle equation from the others turns the
nonlinear range constraints into an overdetermined linear system; three
non-collinear anchors make it full rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, ParameterError
from .signals import SampledSignal, simulate_channel


@dataclass(frozen=True)
class AnchorSet:
    """Known anchor positions (meters) with measured ranges to the target."""

    anchors: tuple[tuple[float, float], ...]
    ranges: tuple[float, ...]

    def __post_init__(self):
        anchors = tuple((float(x), float(y)) for x, y in self.anchors)
        ranges = tuple(float(r) for r in self.ranges)
        if len(anchors) < 3:
            raise GeometryError("2D multilateration needs at least 3 anchors")
        if len(anchors) != len(ranges):
            raise ParameterError("one range per anchor required")
        if any(r < 0 for r in ranges):
            raise ParameterError("ranges must be nonnegative")
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "ranges", ranges)


def multilaterate(a: AnchorSet) -> tuple[np.ndarray, float]:
    """Least-squares position estimate and the linear-system residual norm."""
    pts = np.asarray(a.anchors, dtype=np.float64)
    rng = np.asarray(a.ranges, dtype=np.float64)
    x0, y0 = pts[0]
    r0 = rng[0]

    mat = 2.0 * (pts[1:] - pts[0])
    rhs = (
        r0**2 - rng[1:] ** 2
        + np.sum(pts[1:] ** 2, axis=1)
        - (x0**2 + y0**2)
    )
    if np.linalg.matrix_rank(mat, tol=1e-9 * max(1.0, float(np.abs(mat).max()))) < 2:
        raise GeometryError("anchors are collinear; position is not identifiable")
    pos, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    residual = float(np.linalg.norm(mat @ pos - rhs))
    return pos, residual


@dataclass
class LocalizationRound:
    position: np.ndarray | None
    error_m: float | None
    anchors_used: int
    failed: bool
    ranges: list[float]


def simulate_localization_round(
    beacon: tuple[float, float],
    anchors: list[tuple[float, float]],
    p: SampledSignal,
    ranger,
    t_a: float,
    v_s: float,
    make_channel,
    loss_rate: float = 0.0,
    seed: int = 0,
) -> LocalizationRound:
    """One TDMA-style ranging round against every surviving anchor.

    `ranger(trace) -> range_m or None` runs the selected pipeline;
    `make_channel(delay_samples, seed) -> ChannelProfile` supplies per-anchor
    propagation.  Packet loss independently removes whole anchors; fewer than
    3 survivors fails the round.
    """
    if not 0 <= loss_rate < 1:
        raise ParameterError("loss_rate must lie in [0, 1)")
    rng = np.random.Generator(np.random.PCG64(seed))
    bx, by = beacon

    kept_anchors = []
    measured = []
    for ax, ay in anchors:
        if rng.random() < loss_rate:
            continue
        dist = math.hypot(ax - bx, ay - by)
        delay = int(round(dist / v_s * p.fs))
        ch = make_channel(delay, int(rng.integers(0, 2**63 - 1)))
        trace, _ = simulate_channel(p, ch, t_a)
        est = ranger(trace)
        if est is None:
            continue
        kept_anchors.append((ax, ay))
        measured.append(est)

    if len(kept_anchors) < 3:
        return LocalizationRound(None, None, len(kept_anchors), True, measured)
    pos, _ = multilaterate(AnchorSet(tuple(kept_anchors), tuple(measured)))
    err = float(math.hypot(pos[0] - bx, pos[1] - by))
    return LocalizationRound(pos, err, len(kept_anchors), False, measured)
