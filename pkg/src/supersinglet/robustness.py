"""Robustness budget constants and numerical checks of the approximation lemmas."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .algebra import generated_algebra
from .correlations import (
    FULL,
    NoiseModel,
    Realization,
    canonical_correlation,
    l1_distance,
    noisy_realization,
)
from .families import ProjectorFamily
from .slater import slater_state
from .tensor import apply_local, apply_product, reduced_density

DEFAULT_M = 4
DEFAULT_DELTA_PRIME = 1e-3
CHECK_TOL = 1e-10
CONDITIONAL_NOTE = "conditional on user (m, delta')"


class BudgetInfeasible(ValueError):
    """No positive epsilon' satisfies the budget inequalities."""

    def __init__(self, message: str, binding: str):
        super().__init__(message)
        self.binding = binding


def _k_factor(N: int, d: int, r: int) -> float:
    return math.factorial(d) * d * N / (math.factorial(d - r) * math.factorial(r))


@dataclass
class RobustnessBudget:
    N: int
    d: int
    r: int
    x: Fraction
    lambda_2: float
    epsilon: float
    epsilon_prime: float
    beta: float
    m: int
    delta_prime: float
    delta: float
    C: float
    binding: str

    @property
    def gap(self) -> float:
        return self.N - self.lambda_2

    def inequalities(self) -> dict[str, float]:
        """Slack of each defining inequality, recomputed by direct substitution (positive means satisfied)."""
        K = _k_factor(self.N, self.d, self.r)
        e = self.epsilon_prime
        lhs2 = self.d * e + self.beta * math.sqrt((2 * self.d + 1) * e + 2 * self.d * math.sqrt(e) + self.beta)
        return {
            "eps_prime_gap": self.gap / (K + 1) - e,
            "eps_prime_target": self.epsilon - lhs2,
            "beta": abs(self.beta - math.sqrt((2 * K + 1) * e / self.gap)),
        }

    def verify(self) -> bool:
        s = self.inequalities()
        return (
            s["eps_prime_gap"] > 0
            and s["eps_prime_target"] > 0
            and s["beta"] <= 1e-12 * max(1.0, self.beta)
            and self.delta <= self.epsilon_prime
            and abs(self.C - ((1 + 2 * float(self.x)) * math.sqrt(self.delta) + self.N**2)) <= 1e-12 * self.C
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "N": self.N,
            "d": self.d,
            "r": self.r,
            "x": f"{self.x.numerator}/{self.x.denominator}",
            "lambda_2": self.lambda_2,
            "gap": self.gap,
            "epsilon": self.epsilon,
            "epsilon_prime": self.epsilon_prime,
            "beta": self.beta,
            "m": self.m,
            "delta_prime": self.delta_prime,
            "delta": self.delta,
            "C": self.C,
            "binding": self.binding,
            "slack": self.inequalities(),
            "verified": self.verify(),
            "note": CONDITIONAL_NOTE,
        }


def budget(
    N: int,
    d: int,
    r: int,
    lambda_2: float,
    epsilon: float,
    m: int = DEFAULT_M,
    delta_prime: float = DEFAULT_DELTA_PRIME,
    x: Fraction | None = None,
    rel_precision: float = 1e-6,
) -> RobustnessBudget:
    """Largest epsilon' (to ``rel_precision``) satisfying both budget inequalities, then beta, delta, C."""
    if not lambda_2 < N:
        raise BudgetInfeasible(f"lambda_2 = {lambda_2} is not below N = {N}: no spectral gap", "eps_prime_gap")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if m < 1 or delta_prime <= 0:
        raise ValueError("need m >= 1 and delta' > 0")
    if not 0 < r < d:
        raise ValueError(f"need 0 < r < d, got r={r}, d={d}")
    x = Fraction(N * r, d) if x is None else Fraction(x)
    gap = N - lambda_2
    K = _k_factor(N, d, r)

    def beta_of(e: float) -> float:
        return math.sqrt((2 * K + 1) * e / gap)

    def failing(e: float) -> str | None:
        if not e < gap / (K + 1):
            return "eps_prime_gap"
        b = beta_of(e)
        if not d * e + b * math.sqrt((2 * d + 1) * e + 2 * d * math.sqrt(e) + b) < epsilon:
            return "eps_prime_target"
        return None

    lo, hi = 0.0, gap / (K + 1)
    binding = "eps_prime_gap"
    for _ in range(4000):
        mid = 0.5 * (lo + hi)
        if mid <= 0.0 or mid == lo or mid == hi:
            break
        why = failing(mid)
        if why is None:
            lo = mid
        else:
            hi, binding = mid, why
        if lo > 0 and hi - lo <= rel_precision * lo:
            break
    if lo <= 0.0:
        raise BudgetInfeasible(
            f"no epsilon' > 0 satisfies the budget for epsilon = {epsilon} (binding: {binding})", binding
        )
    eps_p = lo
    beta = beta_of(eps_p)
    delta = min(eps_p, (delta_prime / (N + 1)) ** 4, (delta_prime / (2 * m)) ** 2)
    C = (1 + 2 * float(x)) * math.sqrt(delta) + N**2
    out = RobustnessBudget(N, d, r, x, float(lambda_2), epsilon, eps_p, beta, m, delta_prime, delta, C, binding)
    if not out.verify():
        raise ArithmeticError("budget failed its own re-verification")
    return out


def measured_delta(real: Realization, f: ProjectorFamily) -> float:
    """``|| p - p_canonical ||_1`` over the full table."""
    return l1_distance(real.correlation(FULL), canonical_correlation(f, FULL))


def _resolve_delta(real: Realization, f: ProjectorFamily | None, delta: float | None, measured: float | None) -> tuple[float, float]:
    if measured is None:
        if f is None:
            raise ValueError("need the family to measure delta")
        measured = measured_delta(real, f)
    if delta is None:
        delta = measured
    elif measured > delta + 1e-12:
        raise ValueError(f"delta precondition violated: measured {measured:.3e} exceeds {delta:.3e}")
    return delta, measured


def _weighted_sq(real: Realization, op: Callable[[np.ndarray], np.ndarray]) -> float:
    """``Tr(rho X* X)`` for the realization state, with ``X`` given by its action."""
    total = 0.0
    if real.v > 0:
        total += real.v * float(np.linalg.norm(op(real.psi)) ** 2)
    if real.v < 1:
        total += (1 - real.v) / real.dim * float(np.linalg.norm(op(np.eye(real.dim))) ** 2)
    return total


def _q_apply(real: Realization, mu: int, party: int, vec: np.ndarray) -> np.ndarray:
    """Sum of outcome operators on the other parties with ``d - r`` ones among them."""
    others = [k for k in range(real.d) if k != party]
    target = real.d - _rank(real)
    eye = np.eye(real.d)
    out = np.zeros(vec.shape, dtype=complex)
    for a in itertools.product((0, 1), repeat=len(others)):
        if sum(a) != target:
            continue
        ops = {}
        for k, bit in zip(others, a):
            p = real.measurements[k][mu]
            ops[k] = p if bit == 0 else eye - p
        out += apply_product(vec, ops)
    return out


def _rank(real: Realization) -> int:
    r = float(np.real(np.trace(real.measurements[0][0])))
    return int(round(r))


@dataclass
class SyncDefect:
    mu: int
    party: int
    lhs_1: float
    lhs_2: float
    bound: float
    delta: float

    @property
    def passed(self) -> bool:
        return max(self.lhs_1, self.lhs_2) <= self.bound + CHECK_TOL

    def to_json(self) -> dict[str, Any]:
        return {"mu": self.mu, "party": self.party, "lhs_1": self.lhs_1, "lhs_2": self.lhs_2,
                "bound": self.bound, "delta": self.delta, "passed": self.passed}


def sync_defect(
    real: Realization, mu: int, f: ProjectorFamily | None = None, delta: float | None = None,
    party: int = 0, measured: float | None = None,
) -> SyncDefect:
    """Norms of ``(E_mu,0 x I - I x Q) Psi`` and ``(E_mu,0 x I - E_mu,0 x Q) Psi`` against ``sqrt(delta)``."""
    delta, _ = _resolve_delta(real, f, delta, measured)
    e = real.measurements[party][mu]

    def x1(v):
        return apply_local(v, e, party) - _q_apply(real, mu, party, v)

    def x2(v):
        ev = apply_local(v, e, party)
        return ev - _q_apply(real, mu, party, ev)

    return SyncDefect(mu, party, math.sqrt(_weighted_sq(real, x1)), math.sqrt(_weighted_sq(real, x2)),
                      math.sqrt(delta), delta)


def reduced_state(real: Realization, party: int) -> np.ndarray:
    rho = reduced_density(real.psi, party, real.d)
    return real.v * rho + (1 - real.v) * np.eye(real.d) / real.d


def _rho_norm(rho: np.ndarray, x: np.ndarray) -> float:
    val = float(np.real(np.trace(rho @ x.conj().T @ x)))
    return math.sqrt(max(val, 0.0))


@dataclass
class SumDefect:
    defects: list[float]
    bound: float
    alt_bound: float
    C: float
    delta: float

    @property
    def passed(self) -> bool:
        return max(self.defects) <= self.bound + CHECK_TOL

    def to_json(self) -> dict[str, Any]:
        return {"defects": self.defects, "bound": self.bound, "alt_bound": self.alt_bound,
                "C": self.C, "delta": self.delta, "passed": self.passed}


def sum_defect(
    real: Realization, x: Fraction | float, f: ProjectorFamily | None = None, delta: float | None = None,
    measured: float | None = None,
) -> SumDefect:
    """Per-party ``|| x I - sum_mu E_mu,0 ||_{rho_k}`` against ``C delta^(1/4)``.

    ``alt_bound`` is ``sqrt((1 + 2x) delta + N^2 sqrt(delta))``, the square
    root of the bound reached at the end of the lemma's argument.
    """
    delta, _ = _resolve_delta(real, f, delta, measured)
    x = float(x)
    C = (1 + 2 * x) * math.sqrt(delta) + real.N**2
    defects = []
    for k in range(real.d):
        rho = reduced_state(real, k)
        op = x * np.eye(real.d) - sum(real.measurements[k])
        defects.append(_rho_norm(rho, op))
    alt = math.sqrt((1 + 2 * x) * delta + real.N**2 * math.sqrt(delta))
    return SumDefect(defects, C * delta**0.25, alt, C, delta)


@dataclass
class TracialDefect:
    ell: int
    trials: int
    seed: int
    words: list[list[int]]
    defect: float
    bound: float
    delta: float

    @property
    def passed(self) -> bool:
        return self.defect <= self.bound + CHECK_TOL

    def to_json(self) -> dict[str, Any]:
        return {"ell": self.ell, "trials": self.trials, "seed": self.seed, "words": self.words,
                "defect": self.defect, "bound": self.bound, "delta": self.delta, "passed": self.passed}


def tracial_defect(
    real: Realization, ell: int, trials: int = 50, seed: int = 0, f: ProjectorFamily | None = None,
    delta: float | None = None, party: int = 0, measured: float | None = None,
) -> TracialDefect:
    """Max ``|tr(rho_0 (W X - X W))|`` over random words ``W`` of length ``ell`` and contractions ``X``.

    ``X`` is a random combination of a basis of the algebra generated by the
    effects, scaled to operator norm 1.
    """
    if ell < 0:
        raise ValueError("word length must be nonnegative")
    delta, _ = _resolve_delta(real, f, delta, measured)
    effects = real.measurements[party]
    rho = reduced_state(real, party)
    alg = generated_algebra(effects)
    rng = np.random.default_rng(seed)
    words = []
    worst = 0.0
    for _ in range(trials):
        word = [int(i) for i in rng.integers(0, real.N, size=ell)]
        words.append(word)
        w = np.eye(real.d, dtype=complex)
        for i in word:
            w = w @ effects[i]
        c = rng.standard_normal(alg.dim) + 1j * rng.standard_normal(alg.dim)
        x = sum(ci * b for ci, b in zip(c, alg.basis))
        x = x / np.linalg.norm(x, 2)
        worst = max(worst, abs(np.trace(rho @ (w @ x - x @ w))))
    return TracialDefect(ell, trials, seed, words, float(worst), 2 * ell * math.sqrt(delta), delta)


@dataclass
class ExtractionReport:
    supported: bool
    alpha: float | None = None
    state_distance: float | None = None
    direct_distance: float | None = None
    vector_distance: float | None = None
    beta_bound: float | None = None
    measured_delta: float | None = None
    note: str = ""

    @property
    def passed(self) -> bool:
        if not self.supported:
            return False
        ok = abs(self.state_distance - self.direct_distance) <= CHECK_TOL
        ok = ok and self.vector_distance <= self.state_distance + CHECK_TOL
        if self.beta_bound is not None:
            ok = ok and self.state_distance <= self.beta_bound
        return ok

    def to_json(self) -> dict[str, Any]:
        return {
            "supported": self.supported,
            "alpha": self.alpha,
            "state_distance": self.state_distance,
            "direct_distance": self.direct_distance,
            "vector_distance": self.vector_distance,
            "beta_bound": self.beta_bound,
            "measured_delta": self.measured_delta,
            "note": self.note,
            "passed": self.passed,
        }


def projector_distance(u: np.ndarray, w: np.ndarray) -> float:
    """Frobenius norm of ``|u><u| - |w><w|`` for unit vectors, evaluated on their joint span."""
    q, _ = np.linalg.qr(np.stack([w, u], axis=1))
    a, b = q.conj().T @ u, q.conj().T @ w
    return float(np.linalg.norm(np.outer(a, a.conj()) - np.outer(b, b.conj())))


def extraction_check(
    real: Realization, f: ProjectorFamily, budget: RobustnessBudget | None = None
) -> ExtractionReport:
    """Overlap ``alpha = |<Psi_S|psi>|^2`` of a pure realization and the implied distances.

    ``state_distance = sqrt(2(1 - alpha))`` is the Frobenius distance between
    the two rank-one projectors; ``vector_distance`` is the phase-optimized
    vector distance ``sqrt(2(1 - sqrt(alpha)))``.
    """
    if real.dim > 3125:
        raise ValueError("extraction check is limited to d^d <= 3125")
    if not real.is_pure:
        return ExtractionReport(False, note="mixed state: no single overlap; extraction of mixed states is not supported")
    psi = real.psi / np.linalg.norm(real.psi)
    target = slater_state(f.d)
    alpha = float(abs(np.vdot(target, psi)) ** 2)
    dist = math.sqrt(max(2 * (1 - alpha), 0.0))
    direct = projector_distance(psi, target)
    vec = math.sqrt(max(2 * (1 - math.sqrt(alpha)), 0.0))
    bound = None
    delta = None
    if budget is not None:
        delta = measured_delta(real, f)
        if delta <= budget.delta:
            bound = budget.beta
    return ExtractionReport(True, alpha, dist, direct, vec, bound, delta)


def perturbed_realization(f: ProjectorFamily, amount: float, seed: int = 0) -> Realization:
    """Pure realization ``Psi_S + amount * u`` (normalized) with ``u`` a seeded unit vector orthogonal to ``Psi_S``."""
    psi = slater_state(f.d)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(psi.size)
    u -= np.dot(psi, u) * psi
    u /= np.linalg.norm(u)
    phi = psi + amount * u
    phi /= np.linalg.norm(phi)
    return Realization(phi, 1.0, [list(f.projectors) for _ in range(f.d)], f.d, f.N)


@dataclass
class SweepRecord:
    noise: NoiseModel
    delta: float
    sync: list[SyncDefect]
    sums: SumDefect
    tracial: list[TracialDefect]

    @property
    def pass_flags(self) -> dict[str, bool]:
        return {
            "sync_defect": all(s.passed for s in self.sync),
            "sum_defect": self.sums.passed,
            "tracial_defect": all(t.passed for t in self.tracial),
        }

    @property
    def passed(self) -> bool:
        return all(self.pass_flags.values())

    def to_json(self) -> dict[str, Any]:
        return {
            "noise": self.noise.to_json(),
            "delta": self.delta,
            "sync_defect": max(max(s.lhs_1, s.lhs_2) for s in self.sync),
            "sum_defect": max(self.sums.defects),
            "tracial_defect": {str(t.ell): t.defect for t in self.tracial},
            "bounds": {
                "sync": math.sqrt(self.delta),
                "sum": self.sums.bound,
                "sum_alt": self.sums.alt_bound,
                "tracial": {str(t.ell): t.bound for t in self.tracial},
            },
            "pass_flags": self.pass_flags,
        }


def run_noise_point(
    f: ProjectorFamily, noise: NoiseModel, ells: Sequence[int] = (0, 1, 2, 3), trials: int = 50
) -> SweepRecord:
    real = noisy_realization(f, noise)
    delta = measured_delta(real, f)
    sync = [sync_defect(real, mu, measured=delta, party=k) for mu in range(f.N) for k in range(f.d)]
    sums = sum_defect(real, f.x, measured=delta)
    trac = [tracial_defect(real, ell, trials, noise.seed, measured=delta) for ell in ells]
    return SweepRecord(noise, delta, sync, sums, trac)


@dataclass
class SweepReport:
    records: list[SweepRecord] = field(default_factory=list)

    def monotone_in_v(self) -> bool:
        """For each jitter level, delta does not increase as the visibility grows."""
        by_eps: dict[float, list[tuple[float, float]]] = {}
        for rec in self.records:
            by_eps.setdefault(rec.noise.eps_m, []).append((rec.noise.v, rec.delta))
        for pts in by_eps.values():
            pts.sort()
            if any(b[1] > a[1] + 1e-12 for a, b in zip(pts, pts[1:])):
                return False
        return True

    @property
    def passed(self) -> bool:
        return self.monotone_in_v() and all(r.passed for r in self.records)

    def to_json(self) -> dict[str, Any]:
        return {
            "records": [r.to_json() for r in self.records],
            "monotone_in_v": self.monotone_in_v(),
            "passed": self.passed,
        }


def sweep(
    f: ProjectorFamily,
    visibilities: Sequence[float] = (0.9, 0.99, 0.999, 1.0),
    jitters: Sequence[float] = (0.0, 0.01),
    seed: int = 0,
    ells: Sequence[int] = (0, 1, 2, 3),
    trials: int = 50,
) -> SweepReport:
    """Defect checks over a grid of noise parameters, ordered by ``(eps_M, v)``."""
    records = []
    for eps in sorted(jitters):
        for v in sorted(visibilities):
            records.append(run_noise_point(f, NoiseModel(v, eps, seed), ells, trials))
    return SweepReport(records)
