"""Command-line entry point: ``supersinglet <command> [options]``.

Exit codes: 0 all checks passed, 1 a verification failed (the report is
still written), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
from typing import Any, Callable

import numpy as np

from . import __version__
from . import algebra, correlations, families, report, robustness, slater

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
THREADS_ENV = "SUPERSINGLET_THREADS"


class ConfigError(ValueError):
    pass


def _family_from(args) -> families.ProjectorFamily:
    kind = getattr(args, "kind", None)
    if getattr(args, "k", None) is not None:
        if kind not in (None, "four", families.FOUR_PROJECTOR):
            raise ConfigError("--k selects the four-projector family")
        return families.four_projector_family(args.k)
    if args.d is None:
        raise ConfigError("give --d (with --N) or --k")
    N = args.N
    if N is None:
        N = 4 if (args.d % 2 == 1 and kind in (None, "four", families.FOUR_PROJECTOR)) else args.d + 1
    return families.family_for(args.d, N, kind)


def _family_config(f: families.ProjectorFamily) -> dict[str, Any]:
    return {"N": f.N, "d": f.d, "kind": f.kind, "r": f.r, "x": f"{f.x.numerator}/{f.x.denominator}"}


def cmd_family(args) -> tuple[dict, bool]:
    f = _family_from(args)
    rep = families.validate_family(f, args.tol or 1e-12)
    doc = f.to_json()
    doc["validation"] = rep.to_json()
    return doc, rep.passed


def cmd_slater(args) -> tuple[dict, bool]:
    if args.d is None:
        raise ConfigError("--d is required")
    psi = slater.slater_state(args.d)
    tol = args.tol or 1e-10
    out: dict[str, Any] = {
        "d": args.d,
        "norm_deviation": abs(float(np.linalg.norm(psi)) - 1.0),
        "nonzero_amplitudes": int(np.count_nonzero(psi)),
    }
    failures = []
    anti = 0.0
    if args.d <= 6:
        for i, j in itertools.combinations(range(args.d), 2):
            sigma = list(range(args.d))
            sigma[i], sigma[j] = sigma[j], sigma[i]
            anti = max(anti, float(np.max(np.abs(slater.permute_state(psi, sigma, args.d) + psi))))
        out["antisymmetry_defect"] = anti
        if anti > tol:
            failures.append(f"antisymmetry defect {anti:.3e} exceeds {tol:.1e}")
    if args.d <= 5:
        dev = slater.check_singlet(psi, args.trials, args.seed)
        out["singlet_deviation"] = dev
        if dev > tol:
            failures.append(f"singlet deviation {dev:.3e} exceeds {tol:.1e}")
    if args.N is not None or args.kind is not None:
        f = _family_from(args)
        stab = [float(np.linalg.norm(slater.apply_s_mu(f, mu, psi) - psi)) for mu in range(f.N)]
        out["family"] = _family_config(f)
        out["stabilization_defects"] = stab
        if max(stab) > tol:
            failures.append(f"max ||S_mu Psi - Psi|| = {max(stab):.3e} exceeds {tol:.1e}")
    if out["nonzero_amplitudes"] != math.factorial(args.d):
        failures.append(f"{out['nonzero_amplitudes']} nonzero amplitudes, expected d! = {math.factorial(args.d)}")
    out["failures"] = failures
    return out, not failures


def _realization(args, f):
    noise = correlations.NoiseModel(args.v, args.eps_m, args.seed)
    return correlations.noisy_realization(f, noise), noise


def cmd_correlate(args) -> tuple[dict | str, bool]:
    f = _family_from(args)
    correlations.check_size(f.d, f.N, args.mode)
    real, noise = _realization(args, f)
    table = real.correlation(args.mode)
    problems = table.validate()
    if args.format == "csv":
        return table.to_csv(), not problems
    doc = table.to_json()
    doc["noise"] = noise.to_json()
    doc["failures"] = problems
    return doc, not problems


def _default_mode(f) -> str:
    return correlations.FULL if f.N**f.d * 2**f.d <= correlations.MAX_FULL_ENTRIES else correlations.DIAGONAL


def cmd_verify_sync(args) -> tuple[dict, bool]:
    f = _family_from(args)
    mode = args.mode or _default_mode(f)
    correlations.check_size(f.d, f.N, mode)
    real, noise = _realization(args, f)
    table = real.correlation(mode)
    rep = correlations.check_synchronous(table, f.r, args.tol or 1e-12)
    out = {"family": _family_config(f), "mode": mode, "noise": noise.to_json(), "synchronous": rep.to_json()}
    failures = []
    if not rep.passed:
        failures.append(
            f"forbidden probability {rep.max_forbidden:.3e} (tol {rep.tol:.1e}) or allowed-mass deviation "
            f"{rep.max_allowed_deviation:.3e}"
        )
    out["failures"] = failures
    return out, rep.passed


def cmd_lhv(args) -> tuple[dict, bool]:
    if args.table:
        with open(args.table) as fh:
            doc = json.load(fh)
        table = correlations.CorrelationTable.from_json(doc.get("result", doc))
        source: dict[str, Any] = {"table": args.table}
    else:
        f = _family_from(args)
        correlations.check_size(f.d, f.N, correlations.FULL)
        real, noise = _realization(args, f)
        table = real.correlation(correlations.FULL)
        source = {"family": _family_config(f), "noise": noise.to_json()}
    res = correlations.lhv_membership(table)
    out = dict(source)
    out["lhv"] = res.to_json()
    out["verdict"] = "local" if res.local else "nonlocal"
    ok = True
    if args.expect and args.expect != out["verdict"]:
        ok = False
        out["failures"] = [f"expected {args.expect}, LP deviation {res.deviation:.3e} gives {out['verdict']}"]
    return out, ok


def cmd_lie_closure(args) -> tuple[dict, bool]:
    f = _family_from(args)
    gens = list(f.projectors) + [np.eye(f.d)]
    span = algebra.lie_closure(gens, args.tol or algebra.CLOSURE_TOL, label=f"{f.kind} projectors + identity")
    out = span.to_json()
    out["family"] = _family_config(f)
    out["closure_residual"] = algebra.closure_residual(span) if span.dim <= 64 else None
    failures = []
    if span.dim != f.d**2:
        failures.append(f"closure dimension {span.dim} differs from d^2 = {f.d**2}")
    if f.kind == families.FOUR_PROJECTOR:
        defects = algebra.commutator_sequence_defects(f, args.n_max)
        out["iterated_commutator_defects"] = defects
        if max(defects) > 1e-10:
            failures.append(f"iterated commutator defect {max(defects):.3e} exceeds 1e-10")
    out["failures"] = failures
    return out, not failures


def cmd_commutant(args) -> tuple[dict, bool]:
    f = _family_from(args)
    D = f.d**f.d
    if D > algebra.MAX_COMMUTANT_DIM:
        raise ConfigError(f"commutant of T_mu needs D = d^d <= {algebra.MAX_COMMUTANT_DIM}, got {D}")
    ts = [slater.t_mu(f, mu) for mu in range(f.N)]
    comm = algebra.commutant(ts, args.tol or algebra.CLOSURE_TOL, label="T_mu")
    perms = algebra.span_of([slater.permutation_operator(s, f.d) for s in itertools.permutations(range(f.d))])
    dist = algebra.subspace_distance(comm, perms)
    sw = algebra.schur_weyl_check(f.d, f.d)
    perm_dim, sym_dim = sw.algebra_dims
    out: dict[str, Any] = {
        "family": _family_config(f),
        "commutant_dim": comm.dim,
        "permutation_span_dim": perms.dim,
        "expected_dim": perm_dim,
        "subspace_distance": dist,
    }
    failures = []
    if comm.dim != perm_dim:
        failures.append(f"commutant dimension {comm.dim} differs from {perm_dim}")
    if dist > 1e-8:
        failures.append(f"subspace distance {dist:.3e} exceeds 1e-8")
    if args.bicommutant:
        bic = algebra.commutant(comm.basis, args.tol or algebra.CLOSURE_TOL)
        out["bicommutant_dim"] = bic.dim
        out["expected_bicommutant_dim"] = sym_dim
        if bic.dim != sym_dim:
            failures.append(f"bicommutant dimension {bic.dim} differs from {sym_dim}")
    out["failures"] = failures
    return out, not failures


def cmd_schur_weyl(args) -> tuple[dict, bool]:
    if args.d is None:
        raise ConfigError("--d is required")
    n = args.n if args.n is not None else args.d
    rep = algebra.schur_weyl_check(args.d, n)
    out = rep.to_json()
    failures = []
    if rep.total != args.d**n:
        failures.append(f"total {rep.total} differs from d^n = {args.d**n}")
    if args.d == n and len(rep.unit_sym_partitions) != 1:
        failures.append(f"{len(rep.unit_sym_partitions)} partitions have dim_sym = 1")
    out["failures"] = failures
    return out, rep.passed


def cmd_spectrum(args) -> tuple[dict, bool]:
    f = _family_from(args)
    cert = algebra.spectral_certificate(f)
    out = cert.to_json()
    out["family"] = _family_config(f)
    failures = []
    if not cert.passed:
        failures.append(
            f"lambda_max = {cert.lambda_max!r}, multiplicity {cert.multiplicity}, overlap {cert.overlap!r}"
        )
    out["failures"] = failures
    return out, cert.passed


def cmd_budget(args) -> tuple[dict, bool]:
    f = _family_from(args)
    lam2 = args.lambda2
    if lam2 is None:
        lam2 = algebra.spectral_certificate(f).lambda_2
    try:
        b = robustness.budget(f.N, f.d, f.r, lam2, args.epsilon, args.m, args.delta_prime, f.x)
    except robustness.BudgetInfeasible as exc:
        return {"family": _family_config(f), "lambda_2": lam2, "failures": [str(exc)], "binding": exc.binding}, False
    out = b.to_json()
    out["family"] = _family_config(f)
    out["failures"] = [] if b.verify() else ["budget inequalities fail direct substitution"]
    return out, b.verify()


def cmd_noise_sweep(args) -> tuple[dict, bool]:
    f = _family_from(args)
    if f.d**f.d > correlations.MAX_DENSITY_DIM:
        raise ConfigError(f"noise sweeps are limited to d^d <= {correlations.MAX_DENSITY_DIM}")
    rep = robustness.sweep(f, args.v, args.eps_m, args.seed, args.ells, args.trials)
    out = rep.to_json()
    out["family"] = _family_config(f)
    failures = []
    if not rep.monotone_in_v():
        failures.append("measured delta is not monotone in the visibility")
    for rec in rep.records:
        for name, ok in rec.pass_flags.items():
            if not ok:
                failures.append(f"{name} bound violated at {rec.noise.to_json()}")
    out["failures"] = failures
    return out, rep.passed


def _add_family_args(p, default_N=None):
    p.add_argument("--d", type=int, help="local dimension (= number of parties)")
    p.add_argument("--N", type=int, default=default_N, help="number of projections")
    p.add_argument("--k", type=int, help="four-projector family index (d = 2k + 1)")
    p.add_argument("--kind", choices=["four", "rank-one", families.FOUR_PROJECTOR, families.RANK_ONE])


def _add_noise_args(p):
    p.add_argument("--v", type=float, default=1.0, help="visibility of the white-noise mixture")
    p.add_argument("--eps-m", type=float, default=0.0, help="measurement jitter strength")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="supersinglet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None, help="override the check tolerance")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, fn: Callable, help_: str):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("family", cmd_family, "build and validate a projector family")
    _add_family_args(p)
    p = add("slater", cmd_slater, "build the Slater state and check its properties")
    _add_family_args(p)
    p.add_argument("--trials", type=int, default=100)
    p = add("correlate", cmd_correlate, "canonical or noisy correlation table")
    _add_family_args(p)
    _add_noise_args(p)
    p.add_argument("--mode", choices=[correlations.FULL, correlations.DIAGONAL], default=correlations.FULL)
    p = add("verify-sync", cmd_verify_sync, "check the synchronous vanishing pattern")
    _add_family_args(p)
    _add_noise_args(p)
    p.add_argument("--mode", choices=[correlations.FULL, correlations.DIAGONAL], default=None)
    p = add("lhv", cmd_lhv, "local hidden variable membership by linear programming")
    _add_family_args(p)
    _add_noise_args(p)
    p.add_argument("--table", help="correlation table JSON to test instead of a generated one")
    p.add_argument("--expect", choices=["local", "nonlocal"])
    p = add("lie-closure", cmd_lie_closure, "Lie closure of the projectors and the identity")
    _add_family_args(p)
    p.add_argument("--n-max", type=int, default=6, help="iterated commutators to compare (four-projector)")
    p = add("commutant", cmd_commutant, "commutant of the T_mu against the permutation span")
    _add_family_args(p)
    p.add_argument("--bicommutant", action="store_true")
    p = add("schur-weyl", cmd_schur_weyl, "Schur-Weyl dimension counts")
    p.add_argument("--d", type=int)
    p.add_argument("--n", type=int)
    p = add("spectrum", cmd_spectrum, "top of the spectrum of R = sum S_mu")
    _add_family_args(p)
    p = add("budget", cmd_budget, "robustness budget constants")
    _add_family_args(p)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--m", type=int, default=robustness.DEFAULT_M)
    p.add_argument("--delta-prime", type=float, default=robustness.DEFAULT_DELTA_PRIME)
    p.add_argument("--lambda2", type=float, default=None, help="skip the eigensolve and use this value")
    p = add("noise-sweep", cmd_noise_sweep, "approximation-lemma checks over a noise grid")
    _add_family_args(p)
    p.add_argument("--v", type=float, nargs="+", default=[0.9, 0.99, 0.999, 1.0])
    p.add_argument("--eps-m", type=float, nargs="+", default=[0.0, 0.01])
    p.add_argument("--ells", type=int, nargs="+", default=[0, 1, 2, 3])
    p.add_argument("--trials", type=int, default=50)
    return parser


def _config(args) -> dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(raw))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.format == "csv" and args.command != "correlate":
        print("error: --format csv is only available for correlate", file=sys.stderr)
        return EXIT_USAGE
    try:
        limiter = _thread_limit()
    except ValueError:
        print(f"error: {THREADS_ENV} must be an integer", file=sys.stderr)
        return EXIT_USAGE
    try:
        result, passed = args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if limiter is not None:
            limiter.restore_original_limits()
    if isinstance(result, str):
        _emit(result, args.out)
    else:
        doc = report.envelope(args.command, _config(args), result, passed)
        if args.command == "family":
            # keep the family fields at top level so the file loads as a family document
            doc = {**doc.pop("result"), **doc}
        _emit(report.dumps(doc), args.out)
    if not passed and isinstance(result, dict):
        for msg in result.get("failures", []):
            print(f"FAILED: {msg}", file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
