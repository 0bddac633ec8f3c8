"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import itertools
import math
import sys
import time

import numpy as np
import pytest

from supersinglet.algebra import (
    commutant,
    commutator_sequence_defects,
    lie_closure,
    schur_weyl_check,
    spectral_certificate,
    span_of,
    subspace_distance,
)
from supersinglet.cli import main
from supersinglet.correlations import (
    DIAGONAL,
    FULL,
    NoiseModel,
    canonical_correlation,
    canonical_realization,
    deterministic_table,
    lhv_membership,
    noisy_realization,
)
from supersinglet.families import family_for, four_projector_family, rank_one_family, validate_family
from supersinglet.robustness import (
    budget,
    extraction_check,
    measured_delta,
    perturbed_realization,
    sum_defect,
    sync_defect,
    tracial_defect,
)
from supersinglet.slater import apply_s_mu, check_singlet, permutation_operator, slater_state, t_mu
from supersinglet.tensor import apply_product

CONFIGS = [("d=3 N=4 four", lambda: family_for(3, 4)),
           ("d=3 N=4 rank-one", lambda: rank_one_family(3)),
           ("d=5 N=4 four", lambda: four_projector_family(2))]
_spectra = {}


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


def spectrum_for(name, make):
    if name not in _spectra:
        t0 = time.perf_counter()
        cert = spectral_certificate(make())
        _spectra[name] = (cert, time.perf_counter() - t0)
    return _spectra[name]


def test_criterion_01_family_sums(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    fams = [rank_one_family(d) for d in range(3, 9)] + [four_projector_family(k) for k in range(1, 11)]
    for f in fams:
        rep = validate_family(f, 1e-12)
        worst = max(worst, rep.sum_deviation, rep.idempotency, rep.hermiticity)
    dt = time.perf_counter() - t0
    verdict(1, worst <= 1e-12 and dt < 5, f"{len(fams)} families, max deviation {worst:.2e}, {dt:.2f}s")


def test_criterion_02_stabilization(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for _, make in CONFIGS:
        f = make()
        psi = slater_state(f.d)
        for mu in range(f.N):
            worst = max(worst, float(np.linalg.norm(apply_s_mu(f, mu, psi) - psi)))
    dt = time.perf_counter() - t0
    verdict(2, worst <= 1e-10 and dt < 60, f"max ||S_mu Psi - Psi|| = {worst:.2e}, {dt:.2f}s")


def test_criterion_03_exact_expectation(verdict):
    errs = []
    for f, expected in ((family_for(3, 4), 1 / 3), (four_projector_family(2), 1 / 10)):
        psi = slater_state(f.d)
        assert math.factorial(f.r) * math.factorial(f.d - f.r) / math.factorial(f.d) == pytest.approx(expected)
        for mu in range(f.N):
            p = f.projectors[mu]
            q = np.eye(f.d) - p
            val = float(psi @ apply_product(psi, [p] * f.r + [q] * (f.d - f.r)))
            errs.append(abs(val - expected))
    verdict(3, max(errs) <= 1e-12, f"max |<R_mu> - r!(d-r)!/d!| = {max(errs):.2e}")


def test_criterion_04_synchronous_zeros(verdict):
    details = []
    ok = True
    for d, mode in ((3, FULL), (5, FULL), (7, DIAGONAL)):
        f = family_for(d, 4)
        t0 = time.perf_counter()
        t = canonical_correlation(f, mode)
        dt = time.perf_counter() - t0
        forbidden, mass_err = 0.0, 0.0
        for m in range(f.N):
            mu = (m,) * d
            allowed = 0.0
            for a in itertools.product((0, 1), repeat=d):
                p = t.entries[(mu, a)]
                if sum(a) == d - f.r:
                    allowed += p
                else:
                    forbidden = max(forbidden, p)
            mass_err = max(mass_err, abs(allowed - 1))
        ok = ok and forbidden <= 1e-12 and mass_err <= 1e-10 and (d != 7 or dt < 600)
        details.append(f"d={d} {mode}: forbidden {forbidden:.1e}, mass err {mass_err:.1e}, {dt:.1f}s")
    verdict(4, ok, "; ".join(details))


def test_criterion_05_singlet(verdict):
    dev = check_singlet(slater_state(3), trials=100, seed=0)
    verdict(5, dev <= 1e-10, f"max deviation over 100 Haar unitaries = {dev:.2e}")


def test_criterion_06_lie_closure(verdict):
    t0 = time.perf_counter()
    dims = []
    ok = True
    for f in [rank_one_family(d) for d in range(3, 7)] + [four_projector_family(k) for k in (1, 2, 3)]:
        dim = lie_closure(f.projectors + [np.eye(f.d)]).dim
        dims.append(f"{f.kind}:{f.d}->{dim}")
        ok = ok and dim == f.d**2
    zdef = max(max(commutator_sequence_defects(four_projector_family(k), 6)) for k in (1, 2))
    dt = time.perf_counter() - t0
    verdict(6, ok and zdef <= 1e-10 and dt < 300, f"{', '.join(dims)}; Z^(n<=6) defect {zdef:.1e}; {dt:.2f}s")


def test_criterion_07_commutant_schur_weyl(verdict):
    f = family_for(3, 4)
    comm = commutant([t_mu(f, mu) for mu in range(4)])
    perms = span_of([permutation_operator(s, 3) for s in itertools.permutations(range(3))])
    dist = subspace_distance(comm, perms)
    totals_ok = all(schur_weyl_check(d, d).total == d**d for d in range(2, 7))
    totals_ok = totals_ok and schur_weyl_check(3, 2).total == 9 and schur_weyl_check(4, 3).total == 64
    unit_ok = all(len(schur_weyl_check(d, d).unit_sym_partitions) == 1 for d in range(2, 7))
    ok = comm.dim == 6 and dist <= 1e-8 and totals_ok and unit_ok
    verdict(7, ok, f"commutant dim {comm.dim}, distance {dist:.1e}, totals ok {totals_ok}, unique antisymmetric {unit_ok}")


@pytest.mark.parametrize("name,make", CONFIGS, ids=[c[0] for c in CONFIGS])
def test_criterion_08_spectral_certificate(verdict, name, make):
    cert, dt = spectrum_for(name, make)
    ok = abs(cert.lambda_max - cert.N) <= 1e-10 and cert.multiplicity == 1 and cert.overlap >= 1 - 1e-8 and dt < 600
    verdict(8, ok, f"{name}: lambda_max {cert.lambda_max:.12f}, mult {cert.multiplicity}, "
                   f"lambda_2 {cert.lambda_2:.6f}, overlap {cert.overlap:.12f}, {dt:.1f}s")


def test_criterion_09_lhv(verdict):
    t0 = time.perf_counter()
    f = family_for(3, 4)
    canon = lhv_membership(canonical_correlation(f))
    det = lhv_membership(deterministic_table([(0, 1, 1, 0), (1, 0, 0, 0), (1, 1, 1, 0)], 4))
    mixed = lhv_membership(noisy_realization(f, NoiseModel(v=0.0)).correlation(FULL))
    dt = time.perf_counter() - t0
    ok = (not canon.local) and det.local and mixed.local and dt < 60
    verdict(9, ok, f"canonical deviation {canon.deviation:.3e} (nonlocal), witness violation {canon.violation:.3e}; "
                   f"deterministic local {det.local}; v=0 local {mixed.local}; {dt:.1f}s")


def test_criterion_10_robustness_lemmas(verdict):
    f = family_for(3, 4)
    x = f.x
    rows = []
    ok = True
    deltas = {}
    for eps in (0.0, 0.01):
        for v in (1.0, 0.999, 0.99, 0.9):
            real = noisy_realization(f, NoiseModel(v, eps, seed=0))
            delta = measured_delta(real, f)
            deltas[(v, eps)] = delta
            syncs = [sync_defect(real, mu, measured=delta) for mu in range(4)]
            sync = max(max(s.lhs_1, s.lhs_2) for s in syncs)
            sums = sum_defect(real, x, measured=delta)
            bound_sum = ((1 + 2 * float(x)) * math.sqrt(delta) + 16) * delta**0.25
            trac = [tracial_defect(real, ell, 50, seed=0, measured=delta) for ell in range(4)]
            point_ok = sync <= math.sqrt(delta) + 1e-10 and max(sums.defects) <= bound_sum + 1e-10
            point_ok = point_ok and all(t.defect <= 2 * t.ell * math.sqrt(delta) + 1e-10 for t in trac)
            if v == 1.0 and eps == 0.0:
                zero = max([delta, sync, max(sums.defects)] + [t.defect for t in trac])
                point_ok = point_ok and zero <= 1e-10
            ok = ok and point_ok
            rows.append(f"(v={v}, eps={eps}) delta={delta:.3e}")
    vs = (1.0, 0.999, 0.99, 0.9)
    for eps in (0.0, 0.01):
        ok = ok and all(deltas[(a, eps)] <= deltas[(b, eps)] + 1e-12 for a, b in zip(vs, vs[1:]))
    ok = ok and all(deltas[(v, 0.0)] <= deltas[(v, 0.01)] + 1e-12 for v in vs)
    verdict(10, ok, "; ".join(rows))


def test_criterion_11_budget_and_extraction(verdict):
    f = family_for(3, 4)
    cert, _ = spectrum_for(CONFIGS[0][0], CONFIGS[0][1])
    b = budget(4, 3, 1, cert.lambda_2, 0.1, m=4, delta_prime=1e-3)
    slack = b.inequalities()
    rep = extraction_check(perturbed_realization(f, 0.01, seed=0), f)
    gap = abs(rep.state_distance - rep.direct_distance)
    ok = b.epsilon_prime > 0 and slack["eps_prime_gap"] > 0 and slack["eps_prime_target"] > 0 and gap <= 1e-10
    verdict(11, ok, f"eps' = {b.epsilon_prime:.6e} (binding {b.binding}), slacks {slack['eps_prime_gap']:.2e}/"
                    f"{slack['eps_prime_target']:.2e}; alpha {rep.alpha:.12f}, |distance - direct| {gap:.1e}")


DETERMINISM_RUNS = [
    ["family", "--d", "8", "--kind", "rank-one"],
    ["family", "--k", "10"],
    ["slater", "--d", "3", "--N", "4"],
    ["slater", "--d", "5", "--N", "4"],
    ["verify-sync", "--d", "3", "--N", "4"],
    ["correlate", "--d", "3", "--N", "4", "--v", "0.9", "--eps-m", "0.01", "--seed", "2"],
    ["correlate", "--d", "3", "--N", "4", "--v", "0.9", "--eps-m", "0.01", "--seed", "2", "--format", "csv"],
    ["lie-closure", "--k", "3"],
    ["commutant", "--d", "3", "--N", "4"],
    ["schur-weyl", "--d", "4", "--n", "3"],
    ["spectrum", "--d", "3", "--N", "4"],
    ["lhv", "--d", "3", "--N", "4"],
    ["budget", "--d", "3", "--N", "4"],
    ["noise-sweep", "--d", "3", "--N", "4"],
]


def test_criterion_12_determinism(verdict, tmp_path):
    mismatched = []
    for i, argv in enumerate(DETERMINISM_RUNS):
        blobs = []
        for rep in range(2):
            path = tmp_path / f"{i}_{rep}.out"
            main(argv + ["--out", str(path)])
            blobs.append(path.read_bytes())
        if blobs[0] != blobs[1] or not blobs[0]:
            mismatched.append(" ".join(argv))
    verdict(12, not mismatched, f"{len(DETERMINISM_RUNS)} configurations repeated; mismatches: {mismatched or 'none'}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
