"""Correlation dictionary: every integer time shift of the reference signal.

The dictionary has one column per lag, ordered from the most negative lag
-(n_a - 1) up to +(n_a - 1), so the transpose product with an acquired trace
enumerates the full cross-correlation sequence.  Column norms are cached at
construction because the coherence-pruning pass queries them repeatedly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .signals import SampledSignal


@dataclass(frozen=True)
class CorrelationDictionary:
    """n_a x (2*n_a - 1) matrix of time-shifted copies of the reference."""

    columns: np.ndarray          # shape (n_a, 2*n_a - 1)
    source: np.ndarray           # the (zero-extended) reference, length n_a
    norms: np.ndarray            # cached column 2-norms, length 2*n_a - 1

    @property
    def n_a(self) -> int:
        return self.columns.shape[0]

    @property
    def width(self) -> int:
        return self.columns.shape[1]

    def lag_of_column(self, i: int) -> int:
        """Lag (in samples) represented by 0-based column i."""
        return i - (self.n_a - 1)

    def column_of_lag(self, lag: int) -> int:
        return lag + (self.n_a - 1)

    @property
    def lags(self) -> np.ndarray:
        n = self.n_a
        return np.arange(-(n - 1), n)

    @property
    def nonzero_columns(self) -> np.ndarray:
        return np.flatnonzero(self.norms > 0)

    def to_csv(self, path) -> None:
        """Debug dump, column-major: one dictionary column per CSV line."""
        np.savetxt(path, self.columns.T, delimiter=",")


def build_correlation_dictionary(p: SampledSignal | np.ndarray, n_a: int) -> CorrelationDictionary:
    """Build the shift dictionary for a reference of length <= n_a.

    A shorter reference is first right zero-padded to n_a samples.  With
    1-based column index i, columns hold:

        i in [1, n_a]:          [zeros(n_a - i); p(1:i)]
        i in [n_a+1, 2n_a-1]:   [p(i+1-n_a : n_a); zeros(i - n_a)]

    i.e. right shifts with front truncation, then left shifts with tail
    truncation; column n_a is the reference itself.
    """
    samples = p.samples if isinstance(p, SampledSignal) else np.asarray(p, dtype=np.float64)
    n_p = samples.size
    if n_p < 1:
        raise ParameterError("reference signal must be nonempty")
    if n_a < n_p:
        raise ParameterError(f"n_a={n_a} is smaller than the reference length {n_p}")

    ext = np.zeros(n_a)
    ext[:n_p] = samples

    cols = np.zeros((n_a, 2 * n_a - 1))
    for i in range(1, n_a + 1):                      # right shifts, 1-based
        cols[n_a - i :, i - 1] = ext[:i]
    for i in range(n_a + 1, 2 * n_a):                # left shifts
        shift = i - n_a
        cols[: n_a - shift, i - 1] = ext[shift:]

    norms = np.linalg.norm(cols, axis=0)
    return CorrelationDictionary(columns=cols, source=ext, norms=norms)


def correlate_via_dictionary(psi: CorrelationDictionary, x: SampledSignal | np.ndarray) -> np.ndarray:
    """Full cross-correlation of the reference with x as the product psi^T x.

    Entry j equals the sliding inner product of the (zero-extended) reference
    and x at lag ``psi.lag_of_column(j)``.
    """
    vec = x.samples if isinstance(x, SampledSignal) else np.asarray(x, dtype=np.float64)
    if vec.size != psi.n_a:
        raise ParameterError(f"trace length {vec.size} != dictionary rows {psi.n_a}")
    return psi.columns.T @ vec


def mutual_coherence(psi: CorrelationDictionary) -> float:
    """Largest normalized inner product between distinct nonzero columns.

    Zero columns (possible once a short reference is zero-padded) carry no
    direction and are skipped.
    """
    keep = psi.nonzero_columns
    if keep.size < 2:
        raise ParameterError("coherence needs at least 2 nonzero columns")
    unit = psi.columns[:, keep] / psi.norms[keep]
    gram = np.abs(unit.T @ unit)
    np.fill_diagonal(gram, 0.0)
    return float(min(gram.max(), 1.0))


def coherent_index_set(psi: CorrelationDictionary, l_star: int, mu0: float) -> set[int]:
    """Columns whose normalized inner product with column l_star is >= mu0.

    Always contains l_star itself (self-coherence is 1).  Zero columns are
    never coherent with anything.
    """
    if not 0 <= l_star < psi.width:
        raise ParameterError(f"column index {l_star} out of range")
    if psi.norms[l_star] == 0:
        raise ParameterError(f"column {l_star} is all-zero; coherence undefined")
    if not 0 <= mu0 <= 1:
        raise ParameterError("mu0 must lie in [0, 1]")
    coh = coherence_row(psi.columns, psi.norms, l_star)
    idx = set(np.flatnonzero((coh >= mu0) & (psi.norms > 0)).tolist())
    idx.add(l_star)
    return idx


def coherence_row(columns: np.ndarray, norms: np.ndarray, l_star: int) -> np.ndarray:
    """|c_j . c_l*| / (|c_j| |c_l*|) for all j, with 0 wherever a norm is 0."""
    prods = np.abs(columns.T @ columns[:, l_star])
    denom = norms * norms[l_star]
    out = np.zeros(columns.shape[1])
    nz = denom > 0
    out[nz] = prods[nz] / denom[nz]
    return np.minimum(out, 1.0)
