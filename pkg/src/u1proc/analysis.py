"""Closed-form success probabilities and brute-force oracles.

Probabilities are exact :class:`fractions.Fraction` values.  Floats appear
only in the large-N asymptote and in the log-domain evaluation used to
compare against it.
"""
from __future__ import annotations

import warnings
from fractions import Fraction
from math import comb, exp, lgamma, log, pi, sqrt

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching


def to_dyadic(p: float, bits: int, atol: float = 1e-12) -> Fraction:
    """Snap a simulated probability onto the grid ``k / 2**bits``.

    Raises if the float is not within ``atol`` of a grid point, so a wrong
    simulation cannot be rounded into a right answer.
    """
    scale = 2 ** bits
    k = round(p * scale)
    if abs(p - k / scale) > atol:
        raise ValueError(f"probability {p!r} is not dyadic with denominator 2**{bits}")
    return Fraction(k, scale)


def p_vmc(n: int) -> Fraction:
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    return 1 - Fraction(1, 2 ** n)


def p_multicopy(n: int) -> Fraction:
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    if n % 2 == 0:
        warnings.warn(f"even N={n} gives the same probability as N={n - 1}", stacklevel=2)
        return p_multicopy(n - 1)
    return 1 - Fraction(comb(n, (n - 1) // 2), 2 ** n)


def p_multicopy_log(n: int) -> float:
    """Odd-N multi-copy probability evaluated through log-gamma."""
    if n < 1 or n % 2 == 0:
        raise ValueError(f"N must be odd and >= 1, got {n}")
    k = (n - 1) // 2
    log_tail = lgamma(n + 1) - lgamma(k + 1) - lgamma(n - k + 1) - n * log(2)
    return 1.0 - exp(log_tail)


def p_asymptotic(n: int) -> float:
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    return 1.0 - sqrt(2.0 / (pi * n))


def p_preprocess(x: int) -> Fraction:
    if not 1 <= x <= 6:
        raise ValueError(f"X must be in [1, 6], got {x}")
    n = 2 ** x - 1
    return 1 - Fraction(comb(n, 2 ** (x - 1) - 1), 2 ** n)


def first_passage_oracle(n: int, chunk_bits: int = 20) -> Fraction:
    """Fraction of all ``2**N`` fair +-1 walks whose partial sums reach +1.

    Exhaustive: bit ``t`` of the sequence index is step ``t`` (1 = up).
    """
    if not 1 <= n <= 25:
        raise ValueError(f"N must be in [1, 25], got {n}")
    total = 2 ** n
    chunk = 2 ** min(n, chunk_bits)
    hits = 0
    for start in range(0, total, chunk):
        seq = np.arange(start, start + chunk, dtype=np.int64)
        pos = np.zeros(chunk, dtype=np.int32)
        hit = np.zeros(chunk, dtype=bool)
        for t in range(n):
            pos += (2 * ((seq >> t) & 1) - 1).astype(np.int32)
            hit |= pos >= 1
        hits += int(hit.sum())
    return Fraction(hits, total)


def weight_raising_graph(n: int) -> csr_matrix:
    """Bipartite adjacency: row j -- column k iff ``|k| = |j| + 1``."""
    dim = 2 ** n
    idx = np.arange(dim)
    weights = np.array([bin(i).count("1") for i in idx])
    rows, cols = [], []
    for w in range(n):
        r = idx[weights == w]
        c = idx[weights == w + 1]
        rows.append(np.repeat(r, len(c)))
        cols.append(np.tile(c, len(r)))
    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=int)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=int)
    return csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(dim, dim))


def matching_deficit_oracle(n: int) -> int:
    """``2**N`` minus the size of a maximum weight-raising matching."""
    if not 1 <= n <= 11:
        raise ValueError(f"N must be in [1, 11], got {n}")
    match = maximum_bipartite_matching(weight_raising_graph(n), perm_type="column")
    return 2 ** n - int((match >= 0).sum())


def overall_from_levels(q: dict[int, Fraction]) -> Fraction:
    """Sum of ``q_s (1 - 2**-s)`` over program levels."""
    return sum((qs * p_vmc(s) for s, qs in q.items()), Fraction(0))
