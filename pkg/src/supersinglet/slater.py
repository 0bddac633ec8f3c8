"""The Slater state and the operators built from a projector family around it."""

from __future__ import annotations

import itertools
import math
from typing import Iterator, Sequence

import numpy as np

from .families import ProjectorFamily
from .tensor import apply_local, apply_product, tensor_product

MAX_SLATER_DIM = 8


def permutation_sign(sigma: Sequence[int]) -> int:
    inversions = sum(1 for i in range(len(sigma)) for j in range(i + 1, len(sigma)) if sigma[i] > sigma[j])
    return -1 if inversions % 2 else 1


def permutations(n: int) -> Iterator[tuple[tuple[int, ...], int]]:
    """All permutations of ``range(n)`` in lexicographic order, with signs."""
    for sigma in itertools.permutations(range(n)):
        yield sigma, permutation_sign(sigma)


def slater_state(d: int) -> np.ndarray:
    """Totally antisymmetric state of ``d`` qudits of local dimension ``d``."""
    if not 2 <= d <= MAX_SLATER_DIM:
        raise ValueError(f"slater_state supports 2 <= d <= {MAX_SLATER_DIM}, got d={d}")
    psi = np.zeros(d**d)
    weights = d ** np.arange(d - 1, -1, -1)
    amp = 1.0 / math.sqrt(math.factorial(d))
    for sigma, sign in permutations(d):
        psi[int(np.dot(sigma, weights))] = sign * amp
    return psi


def _check_permutation(sigma: Sequence[int]) -> list[int]:
    sigma = [int(s) for s in sigma]
    if sorted(sigma) != list(range(len(sigma))):
        raise ValueError(f"{sigma} is not a permutation of range({len(sigma)})")
    return sigma


def permute_state(state: np.ndarray, sigma: Sequence[int], d: int) -> np.ndarray:
    """Action of ``V_sigma``: ``|i_0 .. i_{n-1}> -> |i_sigma(0) .. i_sigma(n-1)>``."""
    sigma = _check_permutation(sigma)
    n = len(sigma)
    t = state.reshape((d,) * n + state.shape[1:])
    extra = list(range(n, t.ndim))
    return np.transpose(t, sigma + extra).reshape(state.shape)


def permutation_operator(sigma: Sequence[int], d: int) -> np.ndarray:
    """Unitary ``V_sigma`` permuting the tensor factors of ``(C^d)^{n}``."""
    sigma = _check_permutation(sigma)
    dim = d ** len(sigma)
    return permute_state(np.eye(dim), sigma, d)


def symmetrize(ops: Sequence[np.ndarray]) -> np.ndarray:
    """Average of ``ops[sigma(0)] x ... x ops[sigma(n-1)]`` over all permutations."""
    ops = list(ops)
    if not ops:
        raise ValueError("symmetrize needs at least one operator")
    shape = ops[0].shape
    if any(op.shape != shape for op in ops):
        raise ValueError("all operators must have the same dimension")
    n = len(ops)
    total = None
    for sigma in itertools.permutations(range(n)):
        term = tensor_product([ops[s] for s in sigma])
        total = term if total is None else total + term
    return total / math.factorial(n)


def _placements(d: int, r: int) -> Iterator[tuple[int, ...]]:
    return itertools.combinations(range(d), r)


def _require_rank(f: ProjectorFamily) -> int:
    r = f.r
    if not isinstance(r, int) or not 0 < r < f.d:
        raise ValueError(f"S_mu needs an integer rank 0 < r < d, got r={r}, d={f.d}")
    return r


def r_mu(f: ProjectorFamily, mu: int) -> np.ndarray:
    """``P^{x r} x (I - P)^{x (d - r)}`` on ``d`` sites."""
    r = _require_rank(f)
    p = f.projectors[mu]
    q = np.eye(f.d) - p
    return tensor_product([p] * r + [q] * (f.d - r))


def s_mu(f: ProjectorFamily, mu: int) -> np.ndarray:
    """Projection ``S_mu``: sum over the ``C(d, r)`` placements of ``r`` copies of ``P_mu``."""
    r = _require_rank(f)
    p = f.projectors[mu]
    q = np.eye(f.d) - p
    total = None
    for sub in _placements(f.d, r):
        term = tensor_product([p if i in sub else q for i in range(f.d)])
        total = term if total is None else total + term
    return total


def apply_s_mu(f: ProjectorFamily, mu: int, state: np.ndarray) -> np.ndarray:
    """``S_mu`` applied to ``state`` without forming the ``d^d`` by ``d^d`` matrix."""
    r = _require_rank(f)
    p = f.projectors[mu]
    q = np.eye(f.d) - p
    out = np.zeros(state.shape, dtype=np.result_type(state, p))
    for sub in _placements(f.d, r):
        out += apply_product(state, [p if i in sub else q for i in range(f.d)])
    return out


def t_mu(f: ProjectorFamily, mu: int) -> np.ndarray:
    """``P_mu`` placed at each of the ``d`` sites, summed."""
    p = f.projectors[mu]
    eye = np.eye(f.d)
    total = None
    for site in range(f.d):
        term = tensor_product([p if i == site else eye for i in range(f.d)])
        total = term if total is None else total + term
    return total


def apply_t_mu(f: ProjectorFamily, mu: int, state: np.ndarray) -> np.ndarray:
    p = f.projectors[mu]
    return sum(apply_local(state, p, site) for site in range(f.d))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


def singlet_deviation(state: np.ndarray, u: np.ndarray) -> float:
    """``min_xi || U^{x n} psi - xi psi ||`` for a unit vector ``psi``."""
    d = u.shape[0]
    out = state.astype(complex)
    n = 0
    size = state.shape[0]
    while size > 1:
        size //= d
        n += 1
    for site in range(n):
        out = apply_local(out, u, site)
    overlap = np.vdot(state, out)
    xi = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(out - xi * state))


def check_singlet(state: np.ndarray, trials: int = 100, seed: int = 0) -> float:
    """Worst phase-minimized deviation over ``trials`` seeded Haar unitaries."""
    d = _guess_parties(state.shape[0])
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        worst = max(worst, singlet_deviation(state, haar_unitary(d, rng)))
    return worst


def _guess_parties(size: int) -> int:
    # states here live on d parties of local dimension d, so size = d**d
    for d in range(2, MAX_SLATER_DIM + 1):
        if d**d == size:
            return d
    raise ValueError(f"state length {size} is not of the form d**d")
