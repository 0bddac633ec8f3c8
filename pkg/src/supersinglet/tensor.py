"""Dense complex linear algebra on tensor-product spaces.

Matrices and states are plain numpy arrays. Party ordering is big-endian:
amplitude index ``i`` of an ``n``-party state encodes the digits
``(i_0, ..., i_{n-1})`` in base ``d`` with ``i_0`` most significant.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

HERMITIAN_TOL = 1e-10
RANK_TOL = 1e-9


def _num_parties(size: int, d: int) -> int:
    n = 0
    m = size
    while m > 1 and m % d == 0:
        m //= d
        n += 1
    if m != 1 or d < 2:
        raise ValueError(f"dimension {size} is not a power of local dimension {d}")
    return n


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return m.ndim == 2 and m.shape[0] == m.shape[1] and hermiticity_defect(m) <= tol


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T), initial=0.0))


def tensor_product(ops: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product of square matrices, in list order."""
    ops = list(ops)
    if not ops:
        raise ValueError("tensor_product needs at least one operator")
    for op in ops:
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise ValueError(f"non-square operator of shape {op.shape}")
    return reduce(np.kron, ops)


def apply_local(state: np.ndarray, op: np.ndarray, site: int) -> np.ndarray:
    """Apply ``op`` on tensor factor ``site`` of ``state`` (identity elsewhere).

    ``state`` may be a vector of length ``d**n`` or an array whose first axis
    has that length (e.g. a density matrix, acted on from the left). The
    result is not renormalized.
    """
    d = op.shape[0]
    if op.shape != (d, d):
        raise ValueError(f"local operator must be square, got {op.shape}")
    n = _num_parties(state.shape[0], d)
    if not 0 <= site < n:
        raise ValueError(f"site {site} out of range for {n} parties")
    left = d**site
    t = state.reshape(left, d, -1)
    out = np.einsum("ij,ajb->aib", op, t, optimize=False)
    return out.reshape(state.shape)


def apply_product(state: np.ndarray, ops: dict[int, np.ndarray] | Sequence[np.ndarray]) -> np.ndarray:
    """Apply a product operator given per site (``None`` entries mean identity)."""
    items = ops.items() if isinstance(ops, dict) else enumerate(ops)
    out = state
    for site, op in items:
        if op is not None:
            out = apply_local(out, op, site)
    return out


def partial_trace(m: np.ndarray, keep: Iterable[int], d: int, n: int) -> np.ndarray:
    """Reduced matrix on the parties in ``keep`` (returned in increasing order)."""
    keep = sorted(set(keep))
    if m.shape != (d**n, d**n):
        raise ValueError(f"matrix of shape {m.shape} is not an operator on ({d})^{n}")
    if not keep or keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"keep must be a nonempty subset of range({n})")
    t = m.reshape((d,) * (2 * n))
    row = list(range(n))
    col = [n + k if k in keep else k for k in range(n)]
    out_idx = keep + [n + k for k in keep]
    reduced = np.einsum(t, row + col, out_idx)
    dk = d ** len(keep)
    return reduced.reshape(dk, dk)


def rho_norm(rho: np.ndarray, x: np.ndarray) -> float:
    """State-weighted norm ``Tr(rho X* X) ** 0.5``."""
    if rho.shape != x.shape or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"dimension mismatch: rho {rho.shape} vs X {x.shape}")
    val = np.real(np.trace(rho @ (x.conj().T @ x)))
    return float(np.sqrt(max(val, 0.0)))


def hermitian_spectrum(m: np.ndarray, top_k: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Top ``top_k`` eigenpairs in descending order.

    Returns ``(values, vectors)`` with eigenvectors as columns.
    """
    if not is_hermitian(m):
        raise ValueError(f"matrix is not Hermitian (defect {hermiticity_defect(m):.3e})")
    dim = m.shape[0]
    k = dim if top_k is None else min(int(top_k), dim)
    if k < 1:
        raise ValueError("top_k must be positive")
    if k == dim:
        vals, vecs = np.linalg.eigh(m)
    else:
        vals, vecs = scipy.linalg.eigh(m, subset_by_index=[dim - k, dim - 1])
    return vals[::-1].copy(), vecs[:, ::-1].copy()


def numerical_rank(vectors: Sequence[np.ndarray], tol: float = RANK_TOL) -> tuple[int, list[np.ndarray]]:
    """Rank and orthonormal basis of the span of matrices under ``tr(A^* B)``.

    Singular values above ``tol`` times the largest count toward the rank.
    """
    vectors = list(vectors)
    if not vectors:
        raise ValueError("numerical_rank needs at least one element")
    shape = vectors[0].shape
    for v in vectors:
        if v.shape != shape:
            raise ValueError(f"shape mismatch: {v.shape} vs {shape}")
    stacked = np.stack([np.asarray(v).ravel() for v in vectors])
    _, s, vh = np.linalg.svd(stacked, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return 0, []
    rank = int(np.sum(s > tol * s[0]))
    return rank, [vh[i].reshape(shape) for i in range(rank)]


def reduced_density(psi: np.ndarray, site: int, d: int) -> np.ndarray:
    """Single-site reduced state of a pure vector, without forming ``|psi><psi|``."""
    n = _num_parties(psi.shape[0], d)
    if not 0 <= site < n:
        raise ValueError(f"site {site} out of range for {n} parties")
    t = psi.reshape(d**site, d, -1)
    return np.einsum("aib,ajb->ij", t, t.conj())
