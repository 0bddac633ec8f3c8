"""Families of orthogonal projections summing to a scalar multiple of the identity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

RANK_ONE = "rank_one"
FOUR_PROJECTOR = "four_projector"


@dataclass(frozen=True)
class LambdaElement:
    """Element ``x_k`` of the recursively defined set for ``N`` projections."""

    N: int
    k: int
    value: Fraction

    @property
    def numerator(self) -> int:
        return self.value.numerator

    @property
    def dim(self) -> int:
        return self.value.denominator

    @property
    def rank(self) -> int | None:
        """Common projector rank ``b / N`` when it is an integer."""
        b = self.numerator
        return b // self.N if b % self.N == 0 else None

    def __str__(self) -> str:
        return f"{self.value.numerator}/{self.value.denominator}"


def lambda_sequence(N: int, k_max: int) -> list[LambdaElement]:
    """Exact values ``x_0 .. x_{k_max}`` of ``x_k = 1 + 1/(N - 1 - x_{k-1})``, ``x_0 = 0``.

    For ``N = 3`` the set is the single value 3/2.
    """
    if N < 3:
        raise ValueError(f"N must be at least 3, got {N}")
    if k_max < 0:
        raise ValueError(f"k_max must be nonnegative, got {k_max}")
    if N == 3:
        return [LambdaElement(3, 0, Fraction(3, 2))]
    out = [LambdaElement(N, 0, Fraction(0))]
    x = Fraction(0)
    for k in range(1, k_max + 1):
        x = 1 + 1 / (N - 1 - x)
        out.append(LambdaElement(N, k, x))
    return out


@dataclass
class ProjectorFamily:
    """``N`` orthogonal projections on ``C^d`` with ``sum P_mu = x I``."""

    N: int
    d: int
    x: Fraction
    r: int
    projectors: list[np.ndarray]
    kind: str
    params: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "N": self.N,
            "d": self.d,
            "x": f"{self.x.numerator}/{self.x.denominator}",
            "r": self.r,
            "kind": self.kind,
            "params": dict(self.params),
            "projectors": [
                [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(p, dtype=complex)]
                for p in self.projectors
            ],
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "ProjectorFamily":
        projectors = []
        for p in doc["projectors"]:
            arr = np.array([[complex(re, im) for re, im in row] for row in p])
            if not np.any(arr.imag):
                arr = arr.real.copy()
            projectors.append(arr)
        return cls(
            N=int(doc["N"]),
            d=int(doc["d"]),
            x=Fraction(doc["x"]),
            r=int(doc["r"]),
            projectors=projectors,
            kind=doc.get("kind", "external"),
            params={k: int(v) for k, v in doc.get("params", {}).items()},
        )


def rank_one_coefficients(d: int) -> tuple[list[float], list[float]]:
    alpha = [-math.sqrt((d + 1) / (d * (d - mu) * (d - mu + 1))) for mu in range(d)]
    beta = [math.sqrt((d + 1) * (d - mu) / (d * (d - mu + 1))) for mu in range(d)]
    return alpha, beta


def rank_one_vectors(d: int) -> list[np.ndarray]:
    """Unit vectors ``psi_0 .. psi_d`` with pairwise overlaps ``-1/d``."""
    alpha, beta = rank_one_coefficients(d)
    vecs = []
    for mu in range(d):
        v = np.zeros(d)
        v[:mu] = alpha[:mu]
        v[mu] = beta[mu]
        vecs.append(v)
    vecs.append(np.array(alpha))
    return vecs


def rank_one_family(d: int) -> ProjectorFamily:
    """``N = d + 1`` rank-one projections summing to ``(d + 1)/d`` times the identity."""
    if d < 3:
        raise ValueError(f"rank-one family needs d >= 3 (N = d + 1 >= 4), got d={d}")
    projectors = [np.outer(v, v) for v in rank_one_vectors(d)]
    return ProjectorFamily(
        N=d + 1, d=d, x=Fraction(d + 1, d), r=1, projectors=projectors, kind=RANK_ONE, params={"d": d}
    )


def _split_block(a: float, b: float, sign: int) -> np.ndarray:
    w = math.sqrt(a * b)
    return 0.5 * np.array([[a, sign * w], [sign * w, b]])


def four_complements(k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The complements ``A, B, C, D`` in dimension ``2k + 1``.

    ``A, B`` are block diagonal on ``|2l>, |2l+1>`` (``l < k``) with a unit
    entry at ``|2k>``; ``C, D`` carry a unit entry at ``|0>`` and blocks on
    ``|2l-1>, |2l>`` (``1 <= l <= k``).
    """
    if k < 1:
        raise ValueError(f"four-projector family needs k >= 1, got {k}")
    d = 2 * k + 1
    A, B, C, D = (np.zeros((d, d)) for _ in range(4))
    for ell in range(k):
        x1 = (4 * ell + 2) / d
        x2 = (4 * k - 4 * ell) / d
        s = slice(2 * ell, 2 * ell + 2)
        A[s, s] = _split_block(x1, x2, +1)
        B[s, s] = _split_block(x1, x2, -1)
    A[2 * k, 2 * k] = B[2 * k, 2 * k] = 1.0
    C[0, 0] = D[0, 0] = 1.0
    for ell in range(1, k + 1):
        y1 = 4 * ell / d
        y2 = (4 * k + 2 - 4 * ell) / d
        s = slice(2 * ell - 1, 2 * ell + 1)
        C[s, s] = _split_block(y1, y2, +1)
        D[s, s] = _split_block(y1, y2, -1)
    return A, B, C, D


def four_projector_family(k: int) -> ProjectorFamily:
    """Four projections in dimension ``d = 2k + 1`` summing to ``4k/(2k+1)`` times the identity."""
    A, B, C, D = four_complements(k)
    d = 2 * k + 1
    eye = np.eye(d)
    return ProjectorFamily(
        N=4,
        d=d,
        x=Fraction(4 * k, d),
        r=k,
        projectors=[eye - A, eye - B, eye - C, eye - D],
        kind=FOUR_PROJECTOR,
        params={"k": k},
    )


_KIND_ALIASES = {"four": FOUR_PROJECTOR, FOUR_PROJECTOR: FOUR_PROJECTOR, "rank-one": RANK_ONE, RANK_ONE: RANK_ONE}


def family_for(d: int, N: int, kind: str | None = None) -> ProjectorFamily:
    """Pick the configured family for local dimension ``d`` and ``N`` settings.

    Without ``kind``, ``N = 4`` with odd ``d`` selects the four-projector
    family and ``N = d + 1`` the rank-one family.
    """
    if kind is None:
        if N == 4 and d % 2 == 1:
            kind = FOUR_PROJECTOR
        elif N == d + 1:
            kind = RANK_ONE
    else:
        if kind not in _KIND_ALIASES:
            raise ValueError(f"unknown family kind {kind!r}")
        kind = _KIND_ALIASES[kind]
    if kind == FOUR_PROJECTOR:
        if N != 4:
            raise ValueError(f"the four-projector family has N = 4, got N = {N}")
        if d % 2 == 0:
            raise ValueError(f"N = 4 yields only odd dimensions d = 2k+1 (x = 4k/(2k+1)); d = {d} is even")
        return four_projector_family((d - 1) // 2)
    if kind == RANK_ONE:
        if N != d + 1:
            raise ValueError(f"the rank-one family has N = d + 1 = {d + 1}, got N = {N}")
        return rank_one_family(d)
    if N == 4 and d % 2 == 0:
        raise ValueError(f"N = 4 yields only odd dimensions d = 2k+1 (x = 4k/(2k+1)); d = {d} is even")
    raise ValueError(f"no configured family for d={d}, N={N}")


@dataclass
class FamilyReport:
    hermiticity: float
    idempotency: float
    sum_deviation: float
    trace_deviation: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.hermiticity, self.idempotency, self.sum_deviation, self.trace_deviation) <= self.tol

    def failures(self) -> list[str]:
        out = []
        for name in ("hermiticity", "idempotency", "sum_deviation", "trace_deviation"):
            val = getattr(self, name)
            if val > self.tol:
                out.append(f"{name} = {val:.3e} exceeds {self.tol:.1e}")
        return out

    def to_json(self) -> dict[str, Any]:
        return {
            "hermiticity": self.hermiticity,
            "idempotency": self.idempotency,
            "sum_deviation": self.sum_deviation,
            "trace_deviation": self.trace_deviation,
            "tol": self.tol,
            "passed": self.passed,
            "failures": self.failures(),
        }


def validate_family(f: ProjectorFamily, tol: float = 1e-12) -> FamilyReport:
    """Max entrywise deviations from the defining properties of ``f``."""
    herm = idem = trace = 0.0
    total = np.zeros((f.d, f.d), dtype=np.result_type(*f.projectors))
    for p in f.projectors:
        herm = max(herm, float(np.max(np.abs(p - p.conj().T))))
        idem = max(idem, float(np.max(np.abs(p @ p - p))))
        trace = max(trace, abs(float(np.real(np.trace(p))) - f.r))
        total = total + p
    dev = float(np.max(np.abs(total - float(f.x) * np.eye(f.d))))
    return FamilyReport(herm, idem, dev, trace, tol)
