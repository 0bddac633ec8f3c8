"""Operator-space computations: Lie closures, commutants and Schur-Weyl counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .families import FOUR_PROJECTOR, ProjectorFamily, four_complements
from .slater import s_mu, slater_state
from .tensor import hermitian_spectrum, numerical_rank

MAX_COMMUTANT_DIM = 31
MAX_SPECTRAL_DIM = 3125
CLOSURE_TOL = 1e-9


@dataclass
class OperatorSpan:
    """Orthonormal basis (trace inner product) of a subspace of ``D x D`` matrices."""

    ambient_dim: int
    basis: list[np.ndarray]
    sweeps: int | None = None
    label: str = ""

    @property
    def dim(self) -> int:
        return len(self.basis)

    def matrix(self) -> np.ndarray:
        """Basis elements as columns of a ``D^2 x dim`` matrix."""
        if not self.basis:
            return np.zeros((self.ambient_dim**2, 0), dtype=complex)
        return np.stack([b.ravel() for b in self.basis], axis=1)

    def gram_defect(self) -> float:
        q = self.matrix()
        return float(np.max(np.abs(q.conj().T @ q - np.eye(self.dim)), initial=0.0))

    def residual(self, x: np.ndarray) -> float:
        """Frobenius norm of the part of ``x`` orthogonal to the span."""
        v = x.ravel()
        q = self.matrix()
        return float(np.linalg.norm(v - q @ (q.conj().T @ v)))

    def to_json(self) -> dict[str, Any]:
        return {"generators": self.label, "closure_dim": self.dim, "ambient_dim": self.ambient_dim, "sweeps": self.sweeps}


def _check_square(ops: Sequence[np.ndarray]) -> int:
    ops = list(ops)
    if not ops:
        raise ValueError("need at least one operator")
    D = ops[0].shape[0]
    for op in ops:
        if op.shape != (D, D):
            raise ValueError(f"dimension mismatch: {op.shape} vs {(D, D)}")
    return D


def span_of(ops: Sequence[np.ndarray], tol: float = CLOSURE_TOL, label: str = "") -> OperatorSpan:
    D = _check_square(ops)
    _, basis = numerical_rank(ops, tol)
    return OperatorSpan(D, basis, label=label)


def _comm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def lie_closure(generators: Sequence[np.ndarray], tol: float = CLOSURE_TOL, label: str = "") -> OperatorSpan:
    """Smallest commutator-closed complex subspace containing ``generators``.

    Each sweep adds the commutators of all basis pairs and re-ranks; the loop
    stops after a sweep with no growth or once the full matrix algebra is reached.
    """
    D = _check_square(generators)
    rank, basis = numerical_rank(generators, tol)
    sweeps = 0
    while rank < D * D:
        new = [_comm(basis[i], basis[j]) for i in range(rank) for j in range(i + 1, rank)]
        sweeps += 1
        if not new:
            break
        grown, grown_basis = numerical_rank(basis + new, tol)
        if grown == rank:
            break
        rank, basis = grown, grown_basis
    return OperatorSpan(D, basis, sweeps, label)


def closure_residual(span: OperatorSpan) -> float:
    """Largest residual of a basis-pair commutator after projection onto the span."""
    worst = 0.0
    for i in range(span.dim):
        for j in range(i + 1, span.dim):
            worst = max(worst, span.residual(_comm(span.basis[i], span.basis[j])))
    return worst


def generated_algebra(ops: Sequence[np.ndarray], tol: float = CLOSURE_TOL) -> OperatorSpan:
    """Unital associative algebra generated by ``ops``."""
    D = _check_square(ops)
    rank, basis = numerical_rank([np.eye(D)] + list(ops), tol)
    sweeps = 0
    while rank < D * D:
        sweeps += 1
        prods = [a @ b for a in basis for b in basis]
        grown, grown_basis = numerical_rank(basis + prods, tol)
        if grown == rank:
            break
        rank, basis = grown, grown_basis
    return OperatorSpan(D, basis, sweeps, "associative")


def commutator_closed_form(k: int, n: int) -> np.ndarray:
    """Block form of the ``n``-th iterated commutator of the four-projector complements ``A, B``.

    Block ``l`` on ``|2l>, |2l+1>`` is ``w_l [[0, z_l^n], [(-z_l)^n, 0]]``.
    """
    d = 2 * k + 1
    out = np.zeros((d, d))
    for ell in range(k):
        z = (4 * k - 2 - 8 * ell) / d
        w = math.sqrt((4 * ell + 2) * (4 * k - 4 * ell)) / d
        out[2 * ell, 2 * ell + 1] = w * z**n
        out[2 * ell + 1, 2 * ell] = w * (-z) ** n
    return out


def iterated_commutator_sequence(f: ProjectorFamily, n_max: int, literal: bool = False) -> list[np.ndarray]:
    """``Z^(0) = A - B``, ``Z^(1) = 2[A, B]``, then ``Z^(n+1) = [Z^(n), A + B]``.

    ``literal=True`` uses ``Z^(n+1) = 2[Z^(n), A]`` instead, which agrees with
    the closed block form only for ``n <= 1``.
    """
    if f.kind != FOUR_PROJECTOR:
        raise ValueError(f"iterated commutators need the four-projector family, got {f.kind}")
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    A, B, _, _ = four_complements(f.params["k"])
    seq = [A - B]
    if n_max >= 1:
        seq.append(2 * _comm(A, B))
    for _ in range(2, n_max + 1):
        seq.append(2 * _comm(seq[-1], A) if literal else _comm(seq[-1], A + B))
    return seq


def commutator_sequence_defects(f: ProjectorFamily, n_max: int, literal: bool = False) -> list[float]:
    k = f.params["k"]
    return [
        float(np.max(np.abs(z - commutator_closed_form(k, n))))
        for n, z in enumerate(iterated_commutator_sequence(f, n_max, literal))
    ]


def _vec_commutator_operator(ops: Sequence[np.ndarray]) -> np.ndarray:
    # row-major vec: vec(XY) = (I kron Y^T) vec(X), vec(YX) = (Y kron I) vec(X)
    D = ops[0].shape[0]
    eye = np.eye(D)
    return np.vstack([np.kron(eye, y.T) - np.kron(y, eye) for y in ops])


def commutant(ops: Sequence[np.ndarray], tol: float = CLOSURE_TOL, label: str = "") -> OperatorSpan:
    """All ``X`` with ``XY = YX`` for every ``Y`` in ``ops``, via the stacked nullspace SVD."""
    D = _check_square(ops)
    if D > MAX_COMMUTANT_DIM:
        raise ValueError(f"commutant is limited to D <= {MAX_COMMUTANT_DIM} (dense D^2 x D^2 system), got D={D}")
    L = _vec_commutator_operator(list(ops))
    _, s, vh = np.linalg.svd(L, full_matrices=True)
    s_full = np.zeros(D * D)
    s_full[: s.size] = s
    scale = s_full[0] if s_full[0] > 0 else 1.0
    null = np.flatnonzero(s_full <= tol * scale)
    basis = [vh[i].conj().reshape(D, D) for i in null]
    return OperatorSpan(D, basis, label=label)


def subspace_distance(a: OperatorSpan, b: OperatorSpan) -> float:
    """Largest principal-angle sine between the two spans, computed as projector residuals."""
    qa, qb = a.matrix(), b.matrix()
    ra = qb - qa @ (qa.conj().T @ qb)
    rb = qa - qb @ (qb.conj().T @ qa)
    out = 0.0
    for r in (ra, rb):
        if r.size:
            out = max(out, float(np.linalg.norm(r, 2)))
    return out


def partitions(n: int) -> list[tuple[int, ...]]:
    """Partitions of ``n`` in descending lexicographic order."""
    if not 1 <= n <= 12:
        raise ValueError(f"partitions supports 1 <= n <= 12, got {n}")

    def gen(rest: int, cap: int):
        if rest == 0:
            yield ()
            return
        for first in range(min(rest, cap), 0, -1):
            for tail in gen(rest - first, first):
                yield (first,) + tail

    return list(gen(n, n))


def _check_partition(pi: Sequence[int]) -> tuple[int, ...]:
    pi = tuple(int(p) for p in pi)
    if not pi or any(p <= 0 for p in pi) or any(pi[i] < pi[i + 1] for i in range(len(pi) - 1)):
        raise ValueError(f"{pi} is not a partition")
    return pi


def hook_lengths(pi: Sequence[int]) -> list[int]:
    pi = _check_partition(pi)
    cols = [sum(1 for p in pi if p > j) for j in range(pi[0])]
    return [pi[i] - j + cols[j] - i - 1 for i in range(len(pi)) for j in range(pi[i])]


def contents(pi: Sequence[int]) -> list[int]:
    pi = _check_partition(pi)
    return [j - i for i in range(len(pi)) for j in range(pi[i])]


def schur_weyl_dimensions(pi: Sequence[int], d: int, n: int | None = None) -> tuple[int, int]:
    """``(dim_perm, dim_sym)`` for the Young diagram ``pi`` of ``n`` boxes and local dimension ``d``.

    ``dim_perm = n! / prod h(x)`` and ``dim_sym = prod (d + c(x)) / h(x)``.
    """
    pi = _check_partition(pi)
    n = sum(pi) if n is None else n
    if sum(pi) != n:
        raise ValueError(f"{pi} is not a partition of {n}")
    hooks = hook_lengths(pi)
    hprod = math.prod(hooks)
    dim_perm = Fraction(math.factorial(n), hprod)
    dim_sym = Fraction(math.prod(d + c for c in contents(pi)), hprod)
    if dim_perm.denominator != 1 or dim_sym.denominator != 1:
        raise ArithmeticError(f"non-integral dimension for {pi}")
    return int(dim_perm), max(int(dim_sym), 0)


@dataclass
class SchurWeylReport:
    d: int
    n: int
    records: list[dict[str, Any]]
    total: int
    unit_sym_partitions: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        ok = self.total == self.d**self.n
        if self.d == self.n:
            ok = ok and len(self.unit_sym_partitions) == 1
        return ok

    @property
    def algebra_dims(self) -> tuple[int, int]:
        """``(sum dim_perm^2, sum dim_sym^2)``: dimensions of the permutation and symmetric algebras."""
        return (
            sum(r["dim_perm"] ** 2 for r in self.records if r["dim_sym"] > 0),
            sum(r["dim_sym"] ** 2 for r in self.records),
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "d": self.d,
            "n": self.n,
            "records": self.records,
            "total": self.total,
            "expected_total": self.d**self.n,
            "unit_sym_partitions": [list(p) for p in self.unit_sym_partitions],
            "passed": self.passed,
        }


def schur_weyl_check(d: int, n: int) -> SchurWeylReport:
    if not (1 <= d <= 8 and 1 <= n <= 8):
        raise ValueError(f"schur_weyl_check supports d, n <= 8, got d={d}, n={n}")
    records = []
    total = 0
    for pi in partitions(n):
        dp, ds = schur_weyl_dimensions(pi, d, n)
        records.append({"partition": list(pi), "dim_perm": dp, "dim_sym": ds})
        total += dp * ds
    unit = [tuple(r["partition"]) for r in records if r["dim_sym"] == 1]
    return SchurWeylReport(d, n, records, total, unit)


@dataclass
class SpectralCertificate:
    N: int
    d: int
    lambda_max: float
    multiplicity: int
    lambda_2: float
    overlap: float
    tol: float = 1e-10

    @property
    def gap(self) -> float:
        return self.N - self.lambda_2

    @property
    def passed(self) -> bool:
        return abs(self.lambda_max - self.N) <= self.tol and self.multiplicity == 1 and self.overlap >= 1 - 1e-8

    def to_json(self) -> dict[str, Any]:
        return {
            "N": self.N,
            "d": self.d,
            "lambda_max": self.lambda_max,
            "multiplicity": self.multiplicity,
            "lambda_2": self.lambda_2,
            "gap": self.gap,
            "overlap": self.overlap,
            "passed": self.passed,
        }


def r_operator(f: ProjectorFamily) -> np.ndarray:
    return sum(s_mu(f, mu) for mu in range(f.N))


def spectral_certificate(f: ProjectorFamily, top_k: int = 16) -> SpectralCertificate:
    """Top of the spectrum of ``R = sum_mu S_mu``; the Slater state should be its unique top eigenvector."""
    D = f.d**f.d
    if D > MAX_SPECTRAL_DIM:
        raise ValueError(f"spectral certificate is limited to d^d <= {MAX_SPECTRAL_DIM}, got {D}")
    R = r_operator(f)
    k = min(top_k, D)
    while True:
        vals, vecs = hermitian_spectrum(R, k)
        mult = int(np.sum(np.abs(vals - f.N) <= 1e-8))
        if mult < k or k == D:
            break
        k = min(2 * k, D)
    below = vals[np.abs(vals - f.N) > 1e-8]
    lam2 = float(below[0]) if below.size else float("nan")
    psi = slater_state(f.d)
    top = vecs[:, :max(mult, 1)]
    overlap = float(np.linalg.norm(top.conj().T @ psi))
    return SpectralCertificate(f.N, f.d, float(vals[0]), mult, lam2, overlap)
