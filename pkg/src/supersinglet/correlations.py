"""Bell correlation tables: canonical and noisy realizations, synchronous checks, LHV test."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse

from .families import ProjectorFamily
from .slater import slater_state
from .tensor import apply_local

FULL = "full"
DIAGONAL = "diagonal"
MAX_FULL_ENTRIES = 10**6
MAX_LHV_VARIABLES = 10**5
MAX_DENSITY_DIM = 729
POVM_TOL = 1e-10
LHV_TOL = 1e-8

Key = tuple[tuple[int, ...], tuple[int, ...]]


class SizeCapError(ValueError):
    """Requested computation exceeds a documented size cap."""


def _fmt(p: float) -> str:
    return "%.17g" % p


@dataclass
class CorrelationTable:
    """``p(a | mu)`` keyed by ``(mu, a)`` tuples, ``mu`` in ``[N]^d`` and ``a`` in ``{0,1}^d``."""

    d: int
    N: int
    mode: str
    entries: dict[Key, float]
    provenance: str = "external"

    def inputs(self) -> list[tuple[int, ...]]:
        return sorted({mu for mu, _ in self.entries})

    def keys(self) -> list[Key]:
        return sorted(self.entries)

    def row(self, mu: Sequence[int]) -> dict[tuple[int, ...], float]:
        mu = tuple(mu)
        return {a: p for (m, a), p in self.entries.items() if m == mu}

    def row_sums(self) -> dict[tuple[int, ...], float]:
        sums: dict[tuple[int, ...], float] = {}
        for (mu, _), p in self.entries.items():
            sums[mu] = sums.get(mu, 0.0) + p
        return sums

    def validate(self, tol: float = POVM_TOL) -> list[str]:
        problems = []
        for key, p in self.entries.items():
            if not -1e-12 <= p <= 1 + 1e-12:
                problems.append(f"probability {p!r} at {key} outside [0, 1]")
        for mu, s in self.row_sums().items():
            if abs(s - 1.0) > tol:
                problems.append(f"row {mu} sums to {s!r}")
        if self.mode == DIAGONAL:
            diag = {tuple([m] * self.d) for m in range(self.N)}
            if set(self.inputs()) != diag:
                problems.append("diagonal table must contain exactly the constant input tuples")
        return problems

    def to_json(self) -> dict[str, Any]:
        return {
            "d": self.d,
            "N": self.N,
            "mode": self.mode,
            "provenance": self.provenance,
            "entries": [{"mu": list(mu), "a": list(a), "p": self.entries[(mu, a)]} for mu, a in self.keys()],
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "CorrelationTable":
        entries = {(tuple(e["mu"]), tuple(e["a"])): float(e["p"]) for e in doc["entries"]}
        return cls(int(doc["d"]), int(doc["N"]), doc["mode"], entries, doc.get("provenance", "external"))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"mu_{i}" for i in range(self.d)] + [f"a_{i}" for i in range(self.d)] + ["p"])
        for mu, a in self.keys():
            w.writerow(list(mu) + list(a) + [_fmt(self.entries[(mu, a)])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, N: int, mode: str = FULL, provenance: str = "external") -> "CorrelationTable":
        rows = list(csv.reader(io.StringIO(text)))
        d = (len(rows[0]) - 1) // 2
        entries = {}
        for row in rows[1:]:
            vals = [int(v) for v in row[: 2 * d]]
            entries[(tuple(vals[:d]), tuple(vals[d:]))] = float(row[-1])
        return cls(d, N, mode, entries, provenance)


def input_tuples(d: int, N: int, mode: str) -> list[tuple[int, ...]]:
    if mode == FULL:
        return list(itertools.product(range(N), repeat=d))
    if mode == DIAGONAL:
        return [tuple([m] * d) for m in range(N)]
    raise ValueError(f"unknown mode {mode!r}")


def check_size(d: int, N: int, mode: str) -> None:
    if mode == FULL and N**d * 2**d > MAX_FULL_ENTRIES:
        raise SizeCapError(
            f"full mode needs N^d * 2^d = {N**d * 2**d} entries, cap is {MAX_FULL_ENTRIES}; use diagonal mode"
        )
    if mode not in (FULL, DIAGONAL):
        raise ValueError(f"unknown mode {mode!r}")


def _effects(measurements: Sequence[Sequence[Any]], d_local: int) -> list[list[tuple[np.ndarray, np.ndarray]]]:
    """Normalize per-party measurements to ``(E0, E1)`` pairs and check completeness."""
    out = []
    eye = np.eye(d_local)
    for k, party in enumerate(measurements):
        pairs = []
        for mu, m in enumerate(party):
            if isinstance(m, (tuple, list)):
                e0, e1 = (np.asarray(x) for x in m)
            else:
                e0 = np.asarray(m)
                e1 = eye - e0
            if e0.shape != (d_local, d_local) or e1.shape != (d_local, d_local):
                raise ValueError(f"party {k}, setting {mu}: effects must be {d_local}x{d_local}")
            dev = float(np.max(np.abs(e0 + e1 - eye)))
            if dev > POVM_TOL:
                raise ValueError(f"party {k}, setting {mu}: E0 + E1 deviates from I by {dev:.3e}")
            pairs.append((e0, e1))
        out.append(pairs)
    return out


def _tree_table(
    state: np.ndarray,
    effects: list[list[tuple[np.ndarray, np.ndarray]]],
    inputs: list[tuple[int, ...]],
    density: bool,
) -> dict[Key, float]:
    """Depth-first evaluation over a prefix tree of ``(mu_k, a_k)`` choices."""
    n = len(effects)
    entries: dict[Key, float] = {}
    # group inputs by prefix so shared partial products are reused
    allowed = [sorted({mu[k] for mu in inputs}) for k in range(n)]
    wanted = set(inputs)
    prefixes = [set(mu[:k] for mu in inputs) for k in range(n + 1)]

    def leaf(vec: np.ndarray) -> float:
        if density:
            return float(np.real(np.trace(vec)))
        return float(np.real(np.vdot(state, vec)))

    def descend(k: int, vec: np.ndarray, mu: tuple[int, ...], a: tuple[int, ...]) -> None:
        if k == n:
            if mu in wanted:
                entries[(mu, a)] = leaf(vec)
            return
        for m in allowed[k]:
            if mu + (m,) not in prefixes[k + 1]:
                continue
            for out in (0, 1):
                descend(k + 1, apply_local(vec, effects[k][m][out], k), mu + (m,), a + (out,))

    descend(0, state, (), ())
    return dict(sorted(entries.items()))


def correlation_from(
    state: np.ndarray, measurements: Sequence[Sequence[Any]], mode: str = FULL, provenance: str = "external"
) -> CorrelationTable:
    """Table of ``<psi| E^(0) x ... x E^(d-1) |psi>`` (or ``tr(rho E)`` for a density matrix).

    ``measurements[k][mu]`` is either the effect ``E_{mu,0}`` (with
    ``E_{mu,1} = I - E_{mu,0}``) or an explicit pair ``(E_{mu,0}, E_{mu,1})``.
    """
    n = len(measurements)
    if n == 0:
        raise ValueError("need at least one party")
    N = len(measurements[0])
    if any(len(p) != N for p in measurements):
        raise ValueError("every party needs the same number of settings")
    first = measurements[0][0]
    d_local = np.asarray(first[0] if isinstance(first, (tuple, list)) else first).shape[0]
    check_size(n, N, mode)
    effects = _effects(measurements, d_local)
    state = np.asarray(state)
    density = state.ndim == 2
    if state.shape[0] != d_local**n:
        raise ValueError(f"state dimension {state.shape[0]} does not match {n} parties of dimension {d_local}")
    if density and state.shape[0] > MAX_DENSITY_DIM:
        raise SizeCapError(f"density matrices are limited to dimension {MAX_DENSITY_DIM}")
    entries = _tree_table(state, effects, input_tuples(n, N, mode), density)
    return CorrelationTable(n, N, mode, entries, provenance)


def _mixed_table(measurements: list[list[np.ndarray]], inputs: list[tuple[int, ...]], d_local: int) -> dict[Key, float]:
    """Table of the maximally mixed state: product of ``tr(E)/d`` over parties."""
    traces = [[(float(np.real(np.trace(p))) / d_local, 1.0 - float(np.real(np.trace(p))) / d_local) for p in party]
              for party in measurements]
    entries = {}
    n = len(measurements)
    for mu in inputs:
        for a in itertools.product((0, 1), repeat=n):
            entries[(mu, a)] = math.prod(traces[k][mu[k]][a[k]] for k in range(n))
    return dict(sorted(entries.items()))


@dataclass
class NoiseModel:
    """White noise on the state (visibility ``v``) and unitary jitter on the projectors."""

    v: float = 1.0
    eps_m: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.v <= 1.0:
            raise ValueError(f"visibility must lie in [0, 1], got {self.v}")
        if self.eps_m < 0:
            raise ValueError(f"jitter must be nonnegative, got {self.eps_m}")

    def to_json(self) -> dict[str, Any]:
        return {"v": self.v, "eps_M": self.eps_m, "seed": self.seed}


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian matrix with unit Frobenius norm."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = (g + g.conj().T) / 2
    return h / np.linalg.norm(h)


def jitter_projectors(projectors: Sequence[np.ndarray], parties: int, eps: float, seed: int) -> list[list[np.ndarray]]:
    """Per-party copies of ``projectors`` conjugated by ``exp(i eps H)``.

    ``H`` is drawn independently for each (party, setting) pair, party-major.
    """
    if eps == 0:
        return [[np.array(p) for p in projectors] for _ in range(parties)]
    rng = np.random.default_rng(seed)
    dim = projectors[0].shape[0]
    out = []
    for _ in range(parties):
        row = []
        for p in projectors:
            u = scipy.linalg.expm(1j * eps * random_hermitian(dim, rng))
            row.append(u @ p @ u.conj().T)
        out.append(row)
    return out


@dataclass
class Realization:
    """State ``v |psi><psi| + (1 - v) I / D`` measured with per-party projectors ``E_{mu,0}``."""

    psi: np.ndarray
    v: float
    measurements: list[list[np.ndarray]]
    d: int
    N: int
    noise: NoiseModel = field(default_factory=NoiseModel)

    @property
    def dim(self) -> int:
        return self.psi.shape[0]

    @property
    def is_pure(self) -> bool:
        return self.v == 1.0

    def density(self) -> np.ndarray:
        rho = self.v * np.outer(self.psi, self.psi.conj())
        return rho + (1.0 - self.v) * np.eye(self.dim) / self.dim

    def ensemble(self) -> list[tuple[float, np.ndarray]]:
        """Pure-state decomposition: ``psi`` plus the computational basis for the noise."""
        out = [(self.v, self.psi)] if self.v > 0 else []
        if self.v < 1:
            w = (1.0 - self.v) / self.dim
            for i in range(self.dim):
                e = np.zeros(self.dim)
                e[i] = 1.0
                out.append((w, e))
        return out

    def correlation(self, mode: str = FULL) -> CorrelationTable:
        """Evaluated by linearity in the state, so only pure-state trees are needed."""
        check_size(self.d, self.N, mode)
        inputs = input_tuples(self.d, self.N, mode)
        effects = _effects(self.measurements, self.d)
        provenance = "canonical" if self.v == 1 and self.noise.eps_m == 0 else "noisy"
        if self.v == 0:
            return CorrelationTable(self.d, self.N, mode, _mixed_table(self.measurements, inputs, self.d), provenance)
        pure = _tree_table(self.psi, effects, inputs, density=False)
        if self.v < 1:
            mixed = _mixed_table(self.measurements, inputs, self.d)
            pure = {k: self.v * p + (1.0 - self.v) * mixed[k] for k, p in pure.items()}
        return CorrelationTable(self.d, self.N, mode, pure, provenance)


def canonical_realization(f: ProjectorFamily) -> Realization:
    return Realization(slater_state(f.d), 1.0, [list(f.projectors) for _ in range(f.d)], f.d, f.N)


def noisy_realization(f: ProjectorFamily, noise: NoiseModel) -> Realization:
    meas = jitter_projectors(f.projectors, f.d, noise.eps_m, noise.seed)
    return Realization(slater_state(f.d), noise.v, meas, f.d, f.N, noise)


def canonical_correlation(f: ProjectorFamily, mode: str = FULL) -> CorrelationTable:
    """``p(a | mu) = <Psi_S| E_{mu,a} |Psi_S>`` with ``E_{mu,0} = P_mu``."""
    check_size(f.d, f.N, mode)
    return canonical_realization(f).correlation(mode)


@dataclass
class SyncReport:
    passed: bool
    max_forbidden: float
    worst: Key | None
    max_allowed_deviation: float
    checked_inputs: int
    tol: float
    note: str = ""

    def to_json(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "max_forbidden": self.max_forbidden,
            "worst": None if self.worst is None else {"mu": list(self.worst[0]), "a": list(self.worst[1])},
            "max_allowed_deviation": self.max_allowed_deviation,
            "checked_inputs": self.checked_inputs,
            "tol": self.tol,
            "note": self.note,
        }


def check_synchronous(t: CorrelationTable, r: int, tol: float = 1e-12, sum_tol: float = 1e-10) -> SyncReport:
    """On constant inputs only outcomes with ``sum(a) = d - r`` may occur."""
    target = t.d - r
    worst_val, worst_key = 0.0, None
    allowed: dict[tuple[int, ...], float] = {}
    checked = set()
    for (mu, a), p in t.entries.items():
        if len(set(mu)) != 1:
            continue
        checked.add(mu)
        if sum(a) == target:
            allowed[mu] = allowed.get(mu, 0.0) + p
        elif worst_key is None or p > worst_val:
            worst_val, worst_key = p, (mu, a)
    dev = max((abs(s - 1.0) for s in allowed.values()), default=0.0)
    note = "" if checked else "no constant input tuples present; passes vacuously"
    passed = worst_val <= tol and dev <= sum_tol
    return SyncReport(passed, worst_val, worst_key, dev, len(checked), tol, note)


def l1_distance(p: CorrelationTable, q: CorrelationTable) -> float:
    if (p.d, p.N, p.mode) != (q.d, q.N, q.mode):
        raise ValueError("tables differ in (d, N, mode)")
    if set(p.entries) != set(q.entries):
        raise ValueError("tables have different key sets")
    return float(sum(abs(p.entries[k] - q.entries[k]) for k in sorted(p.entries)))


def marginal(t: CorrelationTable, parties: Sequence[int], mu: Sequence[int]) -> dict[tuple[int, ...], float]:
    """Marginal on ``parties`` given the full input tuple ``mu``."""
    mu = tuple(mu)
    out: dict[tuple[int, ...], float] = {}
    for a, p in t.row(mu).items():
        sub = tuple(a[k] for k in parties)
        out[sub] = out.get(sub, 0.0) + p
    return out


def no_signalling_defect(t: CorrelationTable) -> float:
    """Largest change of any marginal when the discarded parties' inputs vary."""
    if t.mode != FULL:
        raise ValueError("no-signalling needs a full table")
    worst = 0.0
    for size in range(1, t.d):
        for parties in itertools.combinations(range(t.d), size):
            groups: dict[tuple[int, ...], dict] = {}
            for mu in t.inputs():
                key = tuple(mu[k] for k in parties)
                m = marginal(t, parties, mu)
                if key not in groups:
                    groups[key] = m
                    continue
                ref = groups[key]
                for a in set(ref) | set(m):
                    worst = max(worst, abs(ref.get(a, 0.0) - m.get(a, 0.0)))
    return worst


def response_functions(N: int) -> list[tuple[int, ...]]:
    """All maps ``[N] -> {0,1}`` as output tuples, lexicographic."""
    return list(itertools.product((0, 1), repeat=N))


def deterministic_vertices(d: int, N: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Deterministic product strategies, lexicographic over per-party response functions."""
    return itertools.product(response_functions(N), repeat=d)


def deterministic_table(responses: Sequence[Sequence[int]], N: int) -> CorrelationTable:
    d = len(responses)
    entries = {}
    for mu in itertools.product(range(N), repeat=d):
        out = tuple(int(responses[k][mu[k]]) for k in range(d))
        for a in itertools.product((0, 1), repeat=d):
            entries[(mu, a)] = 1.0 if a == out else 0.0
    return CorrelationTable(d, N, FULL, entries, "external")


def _vertex_matrix(d: int, N: int) -> scipy.sparse.csc_matrix:
    """Columns are deterministic strategies; rows are ``(mu, a)`` in lexicographic order."""
    funcs = np.array(response_functions(N))  # (2^N, N)
    F = funcs.shape[0]
    mus = np.array(list(itertools.product(range(N), repeat=d)))  # (N^d, d)
    verts = np.array(list(itertools.product(range(F), repeat=d)))  # (F^d, d)
    # a_k = funcs[vert_k, mu_k]; row index = mu_index * 2^d + a as big-endian bits
    a_bits = np.zeros((verts.shape[0], mus.shape[0]), dtype=np.int64)
    for k in range(d):
        a_bits = a_bits * 2 + funcs[verts[:, k][:, None], mus[:, k][None, :]]
    rows = np.arange(mus.shape[0])[None, :] * 2**d + a_bits
    cols = np.repeat(np.arange(verts.shape[0]), mus.shape[0])
    data = np.ones(rows.size)
    return scipy.sparse.csc_matrix((data, (rows.ravel(), cols)), shape=(mus.shape[0] * 2**d, verts.shape[0]))


@dataclass
class LHVResult:
    local: bool
    deviation: float
    weights: dict[int, float]
    n_vertices: int
    witness: list[float] | None = None
    quantum_value: float | None = None
    local_bound: float | None = None
    tol: float = LHV_TOL

    @property
    def violation(self) -> float | None:
        if self.witness is None:
            return None
        return self.quantum_value - self.local_bound

    def vertex_labels(self, d: int, N: int) -> dict[int, list[list[int]]]:
        funcs = response_functions(N)
        F = len(funcs)
        out = {}
        for idx in self.weights:
            digits = []
            rest = idx
            for _ in range(d):
                digits.append(rest % F)
                rest //= F
            out[idx] = [list(funcs[j]) for j in reversed(digits)]
        return out

    def to_json(self) -> dict[str, Any]:
        return {
            "local": self.local,
            "deviation": self.deviation,
            "tol": self.tol,
            "n_vertices": self.n_vertices,
            "weights": {str(k): v for k, v in sorted(self.weights.items())},
            "witness_nonzero": None if self.witness is None else sum(1 for c in self.witness if c != 0.0),
            "quantum_value": self.quantum_value,
            "local_bound": self.local_bound,
            "violation": self.violation,
        }


def lhv_membership(t: CorrelationTable, tol: float = LHV_TOL) -> LHVResult:
    """Decide whether ``t`` is a convex mixture of deterministic product strategies.

    Solves ``min s`` subject to ``|M w - p| <= s`` entrywise, ``w >= 0``,
    ``sum w = 1``. The table is local iff the optimum is at most ``tol``.
    When it is not, the dual solution gives a linear functional whose value
    on ``t`` exceeds its maximum over all deterministic strategies.
    """
    if t.mode != FULL:
        raise ValueError("LHV membership needs a full table")
    n_vars = (2**t.N) ** t.d
    if n_vars > MAX_LHV_VARIABLES:
        raise SizeCapError(f"(2^N)^d = {n_vars} LP variables exceeds cap {MAX_LHV_VARIABLES}")
    expected = [(mu, a) for mu in itertools.product(range(t.N), repeat=t.d)
                for a in itertools.product((0, 1), repeat=t.d)]
    if set(expected) != set(t.entries):
        raise ValueError("malformed table: key set is not the full product of inputs and outcomes")
    p = np.array([t.entries[k] for k in expected])
    M = _vertex_matrix(t.d, t.N)
    R, V = M.shape
    ones = np.ones((R, 1))
    A_ub = scipy.sparse.vstack([
        scipy.sparse.hstack([M, -ones]),
        scipy.sparse.hstack([-M, -ones]),
    ]).tocsc()
    b_ub = np.concatenate([p, -p])
    A_eq = scipy.sparse.csc_matrix(np.concatenate([np.ones(V), [0.0]])[None, :])
    c = np.zeros(V + 1)
    c[-1] = 1.0
    res = scipy.optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                                 bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    dev = float(res.x[-1])
    if dev <= tol:
        w = res.x[:V]
        weights = {int(i): float(w[i]) for i in np.flatnonzero(w > 1e-12)}
        return LHVResult(True, dev, weights, V, tol=tol)
    y = res.ineqlin.marginals
    coeff = y[:R] - y[R:]
    best = None
    for sign in (1.0, -1.0):
        cvec = sign * coeff
        q_val = float(cvec @ p)
        bound = float(np.max(M.T @ cvec))
        if best is None or q_val - bound > best[1] - best[2]:
            best = (cvec, q_val, bound)
    cvec, q_val, bound = best
    return LHVResult(False, dev, {}, V, [float(v) for v in cvec], q_val, bound, tol)
