"""Command-line entry point: ``spinad {verify,derive,count,bench}``.

Exit codes: 0 pass, 1 failed check, 2 usage error, 3 degenerate spectrum.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from spinad import constants
from spinad.ansatz import PoolMode, PoolSpec, count_parameters
from spinad.closedform import (
    ClosedFormFamily,
    DegenerateSpectrumError,
    PolynomialRelation,
    apply_exponential,
    derive_closed_form,
    exponential_matrix,
    family_relation,
    golden_coefficients,
    verify_relation,
)
from spinad.fock import Spin, SpinOrbital, all_sectors, block_diagonal, build_sector_basis
from spinad.operators import Generator, GeneratorId, GeneratorKind, build_generator, build_spin_operators, make_id
from spinad.oracle import expm_dense

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DEGENERATE = 0, 1, 2, 3
MAX_ORBITALS = 6

CASES = ("single", "aiai", "aiaj", "aibi", "aibj", "prime-aibj", "fermionic-single", "fermionic-double")


class UsageError(Exception):
    pass


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self) -> None:
        self.residual = float(self.residual)
        self.passed = bool(self.residual <= self.tolerance)


@dataclass
class RunReport:
    command: list[str]
    inputs: dict
    checks: list[Check] = field(default_factory=list)
    wall_time_ms: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, residual: float, tolerance: float) -> None:
        self.checks.append(Check(name, residual, tolerance))

    def to_dict(self) -> dict:
        out = {
            "command": self.command,
            "inputs": self.inputs,
            "checks": [asdict(c) for c in self.checks],
            "passed": self.passed,
            "wall_time_ms": self.wall_time_ms,
        }
        out.update(self.extra)
        return out


def case_generator_id(case: str, n_orb: int) -> GeneratorId:
    """Representative generator for ``case``: occupied labels from orbital 0, virtual from the top."""
    need = {"aibj": 4, "prime-aibj": 4, "aiaj": 3, "aibi": 3}.get(case, 2)
    if n_orb < need:
        raise UsageError(f"case {case} needs at least {need} orbitals, got {n_orb}")
    top = n_orb - 1
    if case == "single":
        return make_id(GeneratorKind.SA_SINGLE, top, 0)
    if case == "aiai":
        return make_id(GeneratorKind.SA_DOUBLE_AIAI, top, 0)
    if case == "aiaj":
        return make_id(GeneratorKind.SA_DOUBLE_AIAJ, top, 0, 1)
    if case == "aibi":
        return make_id(GeneratorKind.SA_DOUBLE_AIBI, top - 1, top, 0)
    if case == "aibj":
        return make_id(GeneratorKind.SA_DOUBLE_AIBJ, top - 1, top, 0, 1)
    if case == "prime-aibj":
        return make_id(GeneratorKind.SA_DOUBLE_PRIME_AIBJ, top - 1, top, 0, 1)
    if case == "fermionic-single":
        return GeneratorId(GeneratorKind.FERMIONIC_SINGLE, (SpinOrbital(top, Spin.ALPHA), SpinOrbital(0, Spin.ALPHA)))
    if case == "fermionic-double":
        b, j = (top - 1, 1) if n_orb >= 4 else (top, 0)
        return GeneratorId(
            GeneratorKind.FERMIONIC_DOUBLE,
            (SpinOrbital(top, Spin.ALPHA), SpinOrbital(b, Spin.BETA), SpinOrbital(0, Spin.ALPHA), SpinOrbital(j, Spin.BETA)),
        )
    raise UsageError(f"unknown case {case!r}; choose from {', '.join(CASES)}")


def _worker_count() -> int:
    raw = os.environ.get("SPINAD_THREADS")
    if not raw:
        return min(4, os.cpu_count() or 1)
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _sector_checks(G: Generator, thetas: list[float], seed: int) -> list[tuple[str, float, float]]:
    basis = G.basis
    label = f"({basis.n_alpha},{basis.n_beta})"
    rng = np.random.default_rng([seed, basis.n_alpha, basis.n_beta])
    dense = G.matrix.toarray()
    out = []
    oracle_err = unitary_err = 0.0
    for theta in thetas:
        U = exponential_matrix(G, theta)
        ref = expm_dense(theta * dense)
        probe = rng.normal(size=basis.size)
        probe /= np.linalg.norm(probe) or 1.0
        err = max(np.max(np.linalg.norm(U - ref, axis=0)), np.linalg.norm(apply_exponential(G, theta, probe) - ref @ probe))
        oracle_err = max(oracle_err, err)
        unitary_err = max(unitary_err, np.max(np.abs(U.T @ U - np.eye(basis.size))))
    out.append((f"oracle {label}", oracle_err, constants.ORACLE_TOL))
    out.append((f"unitarity {label}", unitary_err, constants.UNITARITY_TOL))
    if G.id.kind.spin_adapted:
        spin = build_spin_operators(basis)
        comm = max(G.matrix.commutator(spin.S_squared).max_abs(), G.matrix.commutator(spin.S_z).max_abs())
        out.append((f"[G,S2],[G,Sz] {label}", comm, constants.COMMUTATOR_TOL))
        s2 = spin.S_squared.toarray()
        evals, evecs = np.linalg.eigh(s2)
        worst = 0.0
        for theta in thetas:
            U = exponential_matrix(G, theta) @ evecs
            worst = max(worst, np.max(np.linalg.norm(s2 @ U - U * evals, axis=0)))
        out.append((f"spin preservation {label}", worst, constants.SPIN_TOL))
    return out


def cmd_verify(case: str, n_orb: int, thetas: list[float], seed: int, argv: list[str]) -> RunReport:
    """Relation, oracle, unitarity and spin checks for one case on every sector."""
    if not 1 <= n_orb <= MAX_ORBITALS:
        raise UsageError(f"--orbitals must lie in [1, {MAX_ORBITALS}]")
    gid = case_generator_id(case, n_orb)
    report = RunReport(argv, {"case": case, "orbitals": n_orb, "theta": thetas, "seed": seed, "generator": str(gid)})
    start = time.perf_counter()
    sectors = all_sectors(n_orb)
    gens = [build_generator(gid, b) for b in sectors]

    if gid.family is ClosedFormFamily.SA_SINGLE_PAIR:
        for s, part in zip("ab", (0, 1)):
            union = block_diagonal([g.parts[part].matrix for g in gens])
            report.add(f"relation order 3 ({s} part, all sectors)", verify_relation(union, family_relation("cubic"), relative=True), constants.RELATION_RTOL)
        comm = max(g.parts[0].matrix.commutator(g.parts[1].matrix).max_abs() for g in gens)
        report.add("[G_alpha, G_beta] (all sectors)", comm, constants.COMMUTATOR_TOL)
    else:
        rel = family_relation(gid.family)
        union = block_diagonal([g.matrix for g in gens])
        report.add(f"relation order {rel.order} (all sectors)", verify_relation(union, rel, relative=True), constants.RELATION_RTOL)
    skew = max((g.matrix + g.matrix.T).max_abs() for g in gens)
    report.add("skew symmetry", skew, constants.SKEW_TOL)

    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        results = list(pool.map(lambda g: _sector_checks(g, thetas, seed), gens))
    for rows in results:
        for name, res, tol in rows:
            report.add(name, res, tol)
    report.wall_time_ms = 1e3 * (time.perf_counter() - start)
    return report


def cmd_derive(family: str | None, coeffs: str | None, argv: list[str]) -> tuple[RunReport, dict]:
    """Synthesize coefficients; with a tabulated family, also diff against the table."""
    start = time.perf_counter()
    if family is not None:
        fam = ClosedFormFamily(family)
        rel = family_relation(fam)
    else:
        fam = None
        rel = PolynomialRelation.parse(coeffs)
    report = RunReport(argv, {"family": family, "coeffs": list(rel.coeffs)})
    derived = derive_closed_form(rel, fam)
    report.add("taylor match through order 2m", derived.taylor_residual(), 1e-10)
    report.add("first-order sum rule", abs(float(derived.amplitudes(1) @ derived.S) - 1.0), 1e-12)
    if fam in (ClosedFormFamily.QUINTIC, ClosedFormFamily.NINTH, ClosedFormFamily.ELEVENTH):
        golden = golden_coefficients(fam)
        report.add("frequencies vs table", np.max(np.abs(derived.S - golden.S)), constants.COEFF_ATOL)
        report.add("amplitudes vs table", np.max(np.abs(derived.k - golden.k)), constants.COEFF_ATOL)
    report.wall_time_ms = 1e3 * (time.perf_counter() - start)
    return report, derived.to_dict()


def parse_active(text: str) -> tuple[int, int]:
    """``"ne,no"`` -> ``(n_occ, n_virt)`` for a closed-shell active space."""
    try:
        ne, no = (int(t) for t in text.replace("(", "").replace(")", "").split(","))
    except ValueError as exc:
        raise UsageError(f"malformed active space {text!r}; expected 'ne,no'") from exc
    if ne <= 0 or ne % 2 or ne >= 2 * no:
        raise UsageError(f"active space ({ne},{no}) needs an even, positive electron count below 2*no")
    return ne // 2, no - ne // 2


DEFAULT_ACTIVE_SPACES = ["2,2", "4,4", "6,6", "8,8", "10,10", "12,12", "14,14", "16,16"]


def cmd_count(actives: list[str], mode: PoolMode, argv: list[str]) -> RunReport:
    report = RunReport(argv, {"active": actives, "mode": mode.value})
    rows = []
    for text in actives:
        o, v = parse_active(text)
        ferm = count_parameters(PoolSpec(o, v, PoolMode.FERMIONIC_SD))
        sa = count_parameters(PoolSpec(o, v, mode))
        rows.append({"active": text, "n_occ": o, "n_virt": v, "fermionic": ferm, "spin_adapted": sa, "reduction": 1 - sa / ferm})
    report.extra["rows"] = rows
    return report


def _median_time(fn, repetitions: int) -> float:
    times = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def cmd_bench(case: str, n_orb: int, repetitions: int, theta: float, seed: int, argv: list[str]) -> RunReport:
    """Median time per application: closed form vs dense exponential then multiply.

    Timed on the half-filled sector, the largest one.
    """
    if repetitions < 1:
        raise UsageError("--repetitions must be >= 1")
    if not 1 <= n_orb <= MAX_ORBITALS:
        raise UsageError(f"--orbitals must lie in [1, {MAX_ORBITALS}]")
    gid = case_generator_id(case, n_orb)
    basis = build_sector_basis(n_orb, n_orb // 2, n_orb // 2)
    G = build_generator(gid, basis)
    v = np.random.default_rng(seed).normal(size=basis.size)
    v /= np.linalg.norm(v)
    dense = G.matrix.toarray()
    apply_exponential(G, theta, v)  # populate the power cache before timing
    closed = _median_time(lambda: apply_exponential(G, theta, v), repetitions)
    oracle = _median_time(lambda: expm_dense(theta * dense) @ v, repetitions)
    report = RunReport(argv, {"case": case, "orbitals": n_orb, "repetitions": repetitions, "theta": theta, "seed": seed})
    report.extra["sector"] = [basis.n_alpha, basis.n_beta]
    report.extra["dim"] = basis.size
    report.extra["closed_form_s"] = closed
    report.extra["dense_expm_s"] = oracle
    report.extra["ratio"] = closed / oracle
    report.add("closed form agrees with dense", np.linalg.norm(apply_exponential(G, theta, v) - expm_dense(theta * dense) @ v), constants.ORACLE_TOL)
    report.wall_time_ms = 1e3 * (closed + oracle) * repetitions
    return report


def _parse_thetas(values: list[str]) -> list[float]:
    out = []
    for value in values:
        for tok in value.split(","):
            tok = tok.strip().lower()
            if not tok:
                continue
            sign = -1.0 if tok.startswith("-") else 1.0
            body = tok.lstrip("+-")
            try:
                out.append(sign * (math.pi if body == "pi" else float(body)))
            except ValueError as exc:
                raise UsageError(f"cannot parse angle {tok!r}") from exc
    return out


def _fmt(x) -> str:
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def _print_report(report: RunReport, as_json: bool, stream=None) -> None:
    stream = sys.stdout if stream is None else stream
    if as_json:
        json.dump(report.to_dict(), stream, indent=2)
        stream.write("\n")
        return
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<44} {_fmt(c.residual):>12}  (tol {_fmt(c.tolerance)})", file=stream)
    print(f"{'PASS' if report.passed else 'FAIL'}  overall  [{_fmt(report.wall_time_ms)} ms]", file=stream)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check relations, exactness, unitarity and spin symmetry")
    p.add_argument("--case", required=True, choices=CASES)
    p.add_argument("--orbitals", type=int, required=True)
    p.add_argument("--theta", action="append", default=None, help="angle(s), comma separated; 'pi' allowed")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("derive", help="synthesize closed-form coefficients")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--family", choices=[f.value for f in ClosedFormFamily if f is not ClosedFormFamily.SA_SINGLE_PAIR])
    g.add_argument("--coeffs", help="c_0,...,c_(m-1) of G^(2m+1) = sum c_j G^(2j+1)")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("count", help="fUCCSD parameter counts, fermionic vs spin-adapted")
    p.add_argument("--active", action="append", default=None, help="'ne,no' active space; repeatable")
    p.add_argument("--mode", choices=["with-prime", "singlet-only"], default="with-prime")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("bench", help="time closed-form application against the dense oracle")
    p.add_argument("--case", required=True, choices=CASES)
    p.add_argument("--orbitals", type=int, required=True)
    p.add_argument("--repetitions", type=int, default=50)
    p.add_argument("--theta", type=float, default=0.37)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--json", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            thetas = _parse_thetas(args.theta) if args.theta else list(constants.THETA_GRID)
            report = cmd_verify(args.case, args.orbitals, thetas, args.seed, argv)
            _print_report(report, args.json)
            return EXIT_OK if report.passed else EXIT_FAIL
        if args.command == "derive":
            try:
                report, coeffs = cmd_derive(args.family, args.coeffs, argv)
            except DegenerateSpectrumError as exc:
                print(f"degenerate spectrum: {exc}", file=sys.stderr)
                if args.json:
                    json.dump({"command": argv, "error": "degenerate", "roots": [str(r) for r in exc.roots]}, sys.stdout)
                    sys.stdout.write("\n")
                return EXIT_DEGENERATE
            if args.json:
                out = report.to_dict()
                out["coefficients"] = coeffs
                json.dump(out, sys.stdout, indent=2)
                sys.stdout.write("\n")
            else:
                m = len(coeffs["entries"])
                print("S_n".rjust(12) + "".join(f"k^({p})".rjust(12) for p in range(1, 2 * m + 1)))
                for e in coeffs["entries"]:
                    print(_fmt(e["S"]).rjust(12) + "".join(_fmt(x).rjust(12) for x in e["k"]))
                _print_report(report, False)
            return EXIT_OK if report.passed else EXIT_FAIL
        if args.command == "count":
            mode = PoolMode.SA_SD_WITH_PRIME if args.mode == "with-prime" else PoolMode.SA_SD_SINGLET_ONLY
            report = cmd_count(args.active or DEFAULT_ACTIVE_SPACES, mode, argv)
            if args.json:
                _print_report(report, True)
            else:
                print(f"{'active':>10} {'fermionic':>10} {'spin-adapted':>13} {'reduction':>10}")
                for r in report.extra["rows"]:
                    print(f"{r['active']:>10} {r['fermionic']:>10} {r['spin_adapted']:>13} {100 * r['reduction']:>9.4g}%")
            return EXIT_OK
        if args.command == "bench":
            report = cmd_bench(args.case, args.orbitals, args.repetitions, args.theta, args.seed, argv)
            if args.json:
                _print_report(report, True)
            else:
                x = report.extra
                print(f"sector {tuple(x['sector'])}, dim {x['dim']}")
                print(f"closed form  {x['closed_form_s'] * 1e6:10.4g} us")
                print(f"dense expm   {x['dense_expm_s'] * 1e6:10.4g} us")
                print(f"ratio        {x['ratio']:10.4g}")
                _print_report(report, False)
            return EXIT_OK if report.passed else EXIT_FAIL
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"spinad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"spinad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
