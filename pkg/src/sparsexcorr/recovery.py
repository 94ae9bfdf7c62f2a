"""L1 recovery of correlation-domain coefficients, with coherence pruning.

The solver is accelerated proximal gradient (soft thresholding) on
min 0.5*||A s - y||^2 + lam*||s||_1 with a step from a power-iteration
estimate of ||A||_2^2.  When a residual tolerance `epsilon` is given instead
of `lam`, the regularization weight is halved (warm-started) until the
residual constraint is met, which realizes the constrained form of the
problem.  Momentum restarts keep the objective non-increasing.

Coefficients whose dictionary column is all-zero can never leave zero: their
gradient is identically zero and soft thresholding keeps them there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dictionary import CorrelationDictionary, build_correlation_dictionary, coherence_row
from .errors import PacketProtocolError, ParameterError
from .sensing import MeasurementPacket, gen_sensing_matrix
from .signals import SampledSignal

MODE_SXCORR = "SXCORR"
MODE_STRUCT = "STRUCT_SXCORR"


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the l1 solve and the structured pruning pass.

    Exactly one of `lam` / `epsilon` drives the solve; with both None a
    default weight lam = 0.1 * ||A^T y||_inf is used.
    """

    epsilon: float | None = None
    lam: float | None = None
    max_iterations: int = 2000
    convergence_tol: float = 1e-6
    k: int = 5
    mu0: float = 0.6

    def __post_init__(self):
        if self.epsilon is not None and self.epsilon < 0:
            raise ParameterError("epsilon must be >= 0")
        if self.lam is not None and self.lam < 0:
            raise ParameterError("lam must be >= 0")
        if self.max_iterations < 1:
            raise ParameterError("max_iterations must be >= 1")
        if not 0 < self.mu0 <= 1:
            raise ParameterError("mu0 must lie in (0, 1]")
        if self.k < 1:
            raise ParameterError("k must be >= 1")


@dataclass
class SolveInfo:
    """Diagnostics attached to every solve."""

    iterations: int
    converged: bool
    residual: float
    lam: float
    restarts: int
    objective: list[float] = field(default_factory=list, repr=False)
    feasible: bool | None = None  # residual <= epsilon, when epsilon given


@dataclass
class SparseCoefficients:
    """Recovered coefficient vector in the correlation domain of one buffer."""

    values: np.ndarray              # length 2*n_tilde - 1
    buffer_index: int
    n_tilde: int
    info: SolveInfo | None = None

    def lag_of_index(self, i: int) -> int:
        return i - (self.n_tilde - 1)

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-(self.n_tilde - 1), self.n_tilde)


def _spectral_norm_sq(a: np.ndarray, iters: int = 60) -> float:
    """Power-iteration estimate of ||a||_2^2 with a small safety margin."""
    rng = np.random.Generator(np.random.PCG64(0))
    v = rng.standard_normal(a.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = a.T @ (a @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 1.0
        new_est = nw
        v = w / nw
        if abs(new_est - est) <= 1e-9 * max(new_est, 1.0):
            est = new_est
            break
        est = new_est
    return 1.02 * est


def _soft(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _fista(a, y, lam, lip, max_iter, tol, x0=None):
    """Monotone FISTA; returns (solution, iterations, converged, restarts, trace)."""
    x = np.zeros(a.shape[1]) if x0 is None else x0.copy()
    z = x.copy()
    t = 1.0
    step = 1.0 / lip

    def objective(s):
        r = a @ s - y
        return 0.5 * float(r @ r) + lam * float(np.sum(np.abs(s)))

    f_x = objective(x)
    trace = [f_x]
    restarts = 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = a.T @ (a @ z - y)
        x_new = _soft(z - step * grad, lam * step)
        f_new = objective(x_new)
        if f_new > f_x:
            # momentum overshoot: restart and take a plain descent step
            restarts += 1
            t = 1.0
            grad = a.T @ (a @ x - y)
            x_new = _soft(x - step * grad, lam * step)
            f_new = objective(x_new)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        z = x_new + ((t - 1.0) / t_new) * (x_new - x)
        rel_change = abs(f_x - f_new) / max(f_x, 1e-30)
        x, f_x, t = x_new, f_new, t_new
        trace.append(f_x)
        if rel_change < tol:
            converged = True
            break
    return x, it, converged, restarts, trace


def solve_l1(a: np.ndarray, y: np.ndarray, cfg: SolverConfig,
             buffer_index: int = 0, n_tilde: int | None = None) -> SparseCoefficients:
    """Sparse coefficients of y against the columns of a.

    Never raises on non-convergence; the returned SolveInfo carries the
    `converged` flag and final residual instead.
    """
    a = np.asarray(a, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if a.ndim != 2 or y.ndim != 1 or a.shape[0] != y.size:
        raise ParameterError(f"shape mismatch: A is {a.shape}, y has {y.size} entries")
    if n_tilde is None:
        n_tilde = (a.shape[1] + 1) // 2

    if not np.any(y):
        info = SolveInfo(iterations=0, converged=True, residual=0.0, lam=0.0,
                         restarts=0, objective=[0.0],
                         feasible=True if cfg.epsilon is not None else None)
        return SparseCoefficients(np.zeros(a.shape[1]), buffer_index, n_tilde, info)

    lip = _spectral_norm_sq(a)
    lam0 = cfg.lam if cfg.lam is not None else 0.1 * float(np.max(np.abs(a.T @ y)))
    lam = max(lam0, 1e-300)

    x, iters, converged, restarts, trace = _fista(
        a, y, lam, lip, cfg.max_iterations, cfg.convergence_tol
    )
    residual = float(np.linalg.norm(a @ x - y))

    feasible = None
    if cfg.epsilon is not None and cfg.lam is None:
        # constrained form: relax the weight until the residual fits; the
        # late stages need a tighter stop than the headline tolerance
        stages = 0
        while residual > cfg.epsilon and stages < 40:
            lam *= 0.5
            x, extra, converged, more, trace2 = _fista(
                a, y, lam, lip, cfg.max_iterations, cfg.convergence_tol * 1e-3, x0=x
            )
            iters += extra
            restarts += more
            trace.extend(trace2[1:])
            residual = float(np.linalg.norm(a @ x - y))
            stages += 1
        feasible = residual <= cfg.epsilon
        converged = converged and feasible
    elif cfg.epsilon is not None:
        feasible = residual <= cfg.epsilon

    info = SolveInfo(iterations=iters, converged=converged, residual=residual,
                     lam=lam, restarts=restarts, objective=trace, feasible=feasible)
    return SparseCoefficients(x, buffer_index, n_tilde, info)


def prune_against_columns(values: np.ndarray, columns: np.ndarray, norms: np.ndarray,
                          k: int, mu0: float) -> np.ndarray:
    """Greedy mutual-incoherence selection of at most k coefficient peaks.

    Repeatedly keep the largest-magnitude remaining entry and zero everything
    whose dictionary column has coherence >= mu0 with the kept one.  An entry
    sitting on an all-zero column only ever suppresses itself.
    """
    work = np.abs(values).astype(np.float64)
    out = np.zeros_like(values, dtype=np.float64)
    for _ in range(k):
        if not np.any(work):
            break
        l_star = int(np.argmax(work))
        out[l_star] = values[l_star]
        if norms[l_star] > 0:
            coherent = coherence_row(columns, norms, l_star) >= mu0
            work[coherent] = 0.0
        work[l_star] = 0.0
    return out


def structured_prune(s: SparseCoefficients, psi: CorrelationDictionary,
                     k: int, mu0: float) -> SparseCoefficients:
    """Coherence-pruned copy of s: <= k nonzeros, pairwise coherence < mu0."""
    if s.values.size != psi.width:
        raise ParameterError(f"coefficient length {s.values.size} != dictionary width {psi.width}")
    pruned = prune_against_columns(s.values, psi.columns, psi.norms, k, mu0)
    return SparseCoefficients(pruned, s.buffer_index, s.n_tilde, s.info)


@dataclass(frozen=True)
class RecoveryContext:
    """Precomputed operators shared by every buffer of one ranging event."""

    psi: CorrelationDictionary
    a: np.ndarray
    n_tilde: int
    m_tilde: int
    seed: int


def build_recovery_context(p: SampledSignal, n_tilde: int, m_tilde: int, seed: int) -> RecoveryContext:
    """Form psi from p (zero-padded to n_tilde) and A = phi @ psi."""
    psi = build_correlation_dictionary(p, n_tilde)
    phi = gen_sensing_matrix(seed, m_tilde, n_tilde)
    a = phi.entries @ psi.columns
    return RecoveryContext(psi=psi, a=a, n_tilde=n_tilde, m_tilde=m_tilde, seed=int(seed))


def recover_buffered(packets: list[MeasurementPacket], p: SampledSignal,
                     cfg: SolverConfig, mode: str = MODE_STRUCT,
                     context: RecoveryContext | None = None) -> list[SparseCoefficients]:
    """Solve every buffer independently; optionally prune each solution.

    Packets must agree on (seed, alpha, n_tilde, buffer_count, fs); missing
    buffer indices are tolerated (the detector treats them as empty), while
    duplicates are a protocol violation.
    """
    if mode not in (MODE_SXCORR, MODE_STRUCT):
        raise ParameterError(f"unknown recovery mode {mode!r}")
    if not packets:
        raise ParameterError("no packets to recover")
    head = packets[0]
    seen: set[int] = set()
    for pkt in packets:
        meta = (pkt.seed, pkt.alpha, pkt.n_tilde, pkt.buffer_count, pkt.fs, pkt.m_tilde)
        if meta != (head.seed, head.alpha, head.n_tilde, head.buffer_count, head.fs, head.m_tilde):
            raise PacketProtocolError("packets disagree on compression metadata")
        if pkt.buffer_index in seen:
            raise PacketProtocolError(f"duplicate buffer index {pkt.buffer_index}")
        seen.add(pkt.buffer_index)
    if len(p) > head.n_tilde:
        raise ParameterError("reference longer than a buffer; cannot build dictionary")

    if context is None:
        context = build_recovery_context(p, head.n_tilde, head.m_tilde, head.seed)
    elif (context.n_tilde, context.m_tilde, context.seed) != (head.n_tilde, head.m_tilde, head.seed):
        raise PacketProtocolError("recovery context does not match packet metadata")

    out = []
    for pkt in sorted(packets, key=lambda q: q.buffer_index):
        coeffs = solve_l1(context.a, pkt.y_tilde, cfg,
                          buffer_index=pkt.buffer_index, n_tilde=pkt.n_tilde)
        if mode == MODE_STRUCT:
            coeffs = structured_prune(coeffs, context.psi, cfg.k, cfg.mu0)
        out.append(coeffs)
    return out
