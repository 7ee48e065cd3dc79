"""Command-line interface for verification, reduction and solving runs."""
import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .config import COMMANDS, FORMATS, Config, RunConfig, parse_window
from .errors import ConfigurationError, DomainError, NotReducible, PoleError, SuperSinhError
from .experiment import CommandRun
from .fieldcalc import Superfield, residual_on_grid, skdv_components, verify_operator_algebra
from .grassmann import Supernumber, set_body_tolerance
from .reduction import (
    SOLVABLE_IDS,
    ReducedSolution,
    certify,
    energy,
    implicit_relation_residual,
    null_solution,
    reduced_residuals,
    reduced_sign_map,
    s4_constraint_residual,
    s8_constraint_residual,
    solve_run,
)
from .special import (
    complete_elliptic_K,
    elliptic_F,
    elliptic_params,
    jacobi_sncndn,
    quartic_invariants,
    weierstrass_p,
)
from .superspace import SuperPolynomial
from .symalg import (
    NONSTANDARD_IDS,
    STANDARD_IDS,
    check_invariants,
    kdv_bracket_table,
    kdv_nonstandard_cases,
    planar_qx_px_reduction,
    s5_transformed_equation_demo,
    semidirect_check,
    standard_generators,
    subalgebra,
    verify_jacobi,
    verify_supercommutators,
)
from .utils import list_presets, parse_literal, plot_solution_svg, resolve_path, save_frame

OPERATOR_SAMPLES = 20
ELLIPTIC_POINTS = (0.25, 0.5, 1.0, 1.5, 2.0)
ELLIPTIC_C1 = 1.0
SKDV_A = 1.0


def _mark(ok: bool) -> str:
    return "✓" if ok else "✗"


def _odd_defaults(run: RunConfig) -> Tuple[Supernumber, Supernumber]:
    """mu = xi_1 and nu = xi_2 unless the run sets them."""
    n = run.generators
    mu = run.literal("mu") if run.mu is not None else Supernumber.generator(1, n)
    nu = run.literal("nu") if run.nu is not None else Supernumber.generator(2, n)
    return mu, nu


# -- verification commands -----------------------------------------------------


def cmd_verify_algebra(run: RunConfig, settings: Config) -> Tuple[int, Dict[str, Any]]:
    """Supercommutators, operator anticommutators, KdV brackets, Jacobi and the ideal."""
    rng = np.random.default_rng(run.seed)
    table = verify_supercommutators(run.generators, sentinel=run.sentinel)
    print(f"  {_mark(table.passed)} supercommutators: "
          f"{len(table.cells) - len(table.failures)}/{len(table.cells)} cells")
    for cell in table.failures:
        print(f"    ✗ {cell.pair}: expected {cell.expected}, got {cell.computed}")

    operators = verify_operator_algebra(rng, samples=OPERATOR_SAMPLES, generators=run.generators)
    operators_ok = all(c.passed for c in operators)
    print(f"  {_mark(operators_ok)} operator anticommutators: "
          f"max deviation {max(c.max_error for c in operators):.2e}")

    kdv = kdv_bracket_table(run.generators)
    print(f"  {_mark(kdv.passed)} KdV brackets: {len(kdv.cells) - len(kdv.failures)}/{len(kdv.cells)} cells")

    jacobi_ok, jacobi_worst = verify_jacobi(standard_generators(run.generators, sentinel=run.sentinel))
    print(f"  {_mark(jacobi_ok)} super-Jacobi identity: worst {jacobi_worst:.2e}")
    ideal_ok, ideal_worst = semidirect_check(run.generators)
    print(f"  {_mark(ideal_ok)} translation/supersymmetry ideal: worst {ideal_worst:.2e}")

    ok = table.passed and operators_ok and kdv.passed and jacobi_ok and ideal_ok
    report = {
        "supercommutators": table.to_dict(),
        "operators": [c.to_dict() for c in operators],
        "kdv_brackets": kdv.to_dict(),
        "jacobi": {"pass": jacobi_ok, "worst": jacobi_worst},
        "semidirect": {"pass": ideal_ok, "worst": ideal_worst},
        "passed": ok,
    }
    return (0 if ok else 1), report


def cmd_verify_invariants(run: RunConfig, settings: Config) -> Tuple[int, Dict[str, Any]]:
    """Annihilation checks for all sixteen classes with both signs of eps."""
    mu, nu = _odd_defaults(run)
    results: Dict[str, Dict] = {}
    ok = True
    for sid in STANDARD_IDS + NONSTANDARD_IDS:
        for eps in (1, -1):
            rep = subalgebra(sid, eps, mu, nu, run.generators)
            checks = check_invariants(rep)
            passed = all(c.passed for c in checks)
            ok = ok and passed
            results[f"{sid},eps={eps:+d}"] = {"pass": passed, "checks": [c.to_dict() for c in checks]}
            if not passed:
                for c in checks:
                    if not c.passed:
                        print(f"    ✗ {sid} (eps {eps:+d}) {c.invariant}: residual {c.residual:.2e}")
    passed_classes = sum(1 for r in results.values() if r["pass"])
    print(f"  {_mark(ok)} invariants: {passed_classes}/{len(results)} class/sign pairs")

    demo = s5_transformed_equation_demo(mu, run.generators)
    demo_ok = demo.annihilated and not demo.reducible
    ok = ok and demo_ok
    print(f"  {_mark(demo_ok)} S5 with tau = mu x theta1: annihilated={demo.annihilated}, "
          f"explicit x dependence={demo.explicit_x_dependence} (not reducible)")

    planar = planar_qx_px_reduction(run.generators)
    ok = ok and planar.null_only
    print(f"  {_mark(planar.null_only)} {{Px, Qx}} reduction leaves only Phi = 0")

    report = {"subalgebras": results, "s5_demo": demo.to_dict(), "planar": planar.to_dict(), "passed": ok}
    return (0 if ok else 1), report


def cmd_kdv_check(run: RunConfig, settings: Config) -> Tuple[int, Dict[str, Any]]:
    """KdV bracket fixture, nonstandard invariants and super-KdV residual sanity checks."""
    mu, nu = _odd_defaults(run)
    brackets = kdv_bracket_table(run.generators)
    print(f"  {_mark(brackets.passed)} KdV brackets ({{A1,A1}} = {brackets.cell('A1', 'A1').computed})")

    cases = {}
    cases_ok = True
    for rep in kdv_nonstandard_cases(mu, nu, run.generators):
        checks = check_invariants(rep)
        passed = all(c.passed for c in checks)
        cases_ok = cases_ok and passed
        cases[rep.id] = {"pass": passed, "checks": [c.to_dict() for c in checks]}
        print(f"  {_mark(passed)} {rep.id}: {len(checks)} invariant checks")

    window = parse_window(run.window)
    zero = residual_on_grid(Superfield.zero(run.generators), window, "skdv", a=SKDV_A,
                            threads=settings.get_threads(), tolerance=run.tolerance)
    print(f"  {_mark(zero.passed)} super-KdV residual of A = 0: {zero.max_abs:.2e}")

    # theta-free A = x^2 t: only the bosonic row u_t + u_xxx - 3a u^2 u_x survives
    poly = SuperPolynomial.monomial(1.0, x=2, t=1, generators=run.generators)
    X, T = window.mesh()
    got = skdv_components(Superfield.from_polynomial(poly), X, T, SKDV_A)
    bosonic = X ** 2 - 6.0 * SKDV_A * X ** 5 * T ** 3
    scale = max(1.0, float(np.max(np.abs(bosonic))))
    bosonic_error = float(np.max(np.abs(got.c[0][..., 0] - bosonic))) / scale
    odd_rows = max(float(np.max(np.abs(got.c[m]))) for m in (1, 2, 3))
    theta_free_ok = bosonic_error < run.tolerance and odd_rows < run.tolerance
    print(f"  {_mark(theta_free_ok)} theta-free field: bosonic error {bosonic_error:.2e}, "
          f"theta rows {odd_rows:.2e}")

    ok = brackets.passed and cases_ok and zero.passed and theta_free_ok
    report = {
        "brackets": brackets.to_dict(),
        "nonstandard": cases,
        "zero_field": zero.to_dict(),
        "theta_free": {"bosonic_relative_error": bosonic_error, "theta_rows_max": odd_rows,
                       "pass": theta_free_ok},
        "passed": ok,
    }
    return (0 if ok else 1), report


# -- reduction and solving -------------------------------------------------------


def _output_base(run: RunConfig, results_dir: Path, name: str) -> Path:
    if run.out:
        return resolve_path(run.out).with_suffix("")
    return results_dir / f"{run.run_id}_{name}"


def _write_solution(solution: ReducedSolution, run: RunConfig, results_dir: Path) -> Dict[str, str]:
    base = _output_base(run, results_dir, "solution")
    written = {}
    for fmt in run.formats:
        path = base.with_suffix(f".{fmt}")
        if fmt == "json":
            solution.save_json(path)
        elif fmt == "csv":
            solution.save_csv(path)
        elif fmt == "svg":
            plot_solution_svg(solution, path)
        written[fmt] = str(path)
        print(f"  Wrote {fmt}: {path}")
    return written


def _solution_checks(solution: ReducedSolution) -> Dict[str, Any]:
    """Conserved quantities and constraints that apply to the solution's class."""
    extras: Dict[str, Any] = {}
    alg = solution.algebra
    sid = solution.subalgebra
    if sid in ("S4", "S8", "S12"):
        _, drift = energy(solution)
        extras["energy_drift"] = drift
        print(f"  Energy drift: {drift:.2e}")
        relation = implicit_relation_residual(solution)
        extras["implicit_relation"] = relation.to_dict()
        print(f"  Quadrature relation: max relative error {relation.max_relative_error:.2e} "
              f"over {len(relation.segments)} segment(s)")
    if sid in ("S1", "S4") and "f" not in solution.aux:
        extras["constraint_max"] = alg.max_abs(s4_constraint_residual(solution))
        print(f"  eta lambda constraint: {extras['constraint_max']:.2e}")
    if sid == "S8":
        extras["constraint_max"] = alg.max_abs(s8_constraint_residual(solution))
        print(f"  S8 constraint: {extras['constraint_max']:.2e}")
    return extras


def _reduced_solution(run: RunConfig, settings: Config) -> Tuple[ReducedSolution, bool]:
    """Stored solution, fresh solve, or Phi = 0 for the null-only classes."""
    if run.solution:
        return ReducedSolution.load_json(resolve_path(run.solution)), False
    reduced_sign_map(run.subalgebra)
    if run.subalgebra in SOLVABLE_IDS:
        return solve_run(run, settings.rk4_substeps), False
    mu, nu = run.literal("mu"), run.literal("nu")
    return null_solution(run.subalgebra, run.grid, run.epsilon, run.generators, mu, nu), True


def cmd_reduce(run: RunConfig, settings: Config, results_dir: Path) -> Tuple[int, Dict[str, Any]]:
    """Reduced-equation residuals of a stored or freshly solved configuration."""
    solution, null_only = _reduced_solution(run, settings)
    if null_only:
        print(f"  {solution.subalgebra} admits only the null solution; checking Phi = 0")
    reduced = reduced_residuals(solution, run.reduced_tolerance)
    for eq in reduced.equations:
        ok = eq.max_abs < run.reduced_tolerance
        print(f"    {_mark(ok)} ({eq.index}) {eq.expression}: {eq.max_abs:.2e}")
    print(f"  {_mark(reduced.passed)} reduced equations: max {reduced.max_abs:.2e}")
    report = {"reduced": reduced.to_dict(), "null_only": null_only,
              "sign_map": list(reduced_sign_map(solution.subalgebra))}
    if run.out and not run.solution:
        report["outputs"] = _write_solution(solution, run, results_dir)
    return (0 if reduced.passed else 1), report


def _certify_solution(solution: ReducedSolution, run: RunConfig,
                      settings: Config) -> Tuple[bool, Dict[str, Any]]:
    reduced = reduced_residuals(solution, run.reduced_tolerance)
    print(f"  {_mark(reduced.passed)} reduced equations: max {reduced.max_abs:.2e}")
    window = parse_window(run.window)
    threads = settings.get_threads()
    print(f"  Certifying on {window} with {threads} thread(s)")
    residual = certify(solution, window, run.tolerance, threads, settings.fd_step)
    for comp in residual.failures():
        print(f"    ✗ theta mask {comp.theta_mask}: {comp.max_abs:.2e} at {comp.argmax_point}")
    print(f"  {_mark(residual.passed)} sinh-Gordon residual: max {residual.max_abs:.2e} "
          f"(tolerance {run.tolerance:g}, {residual.scheme})")
    ok = reduced.passed and residual.passed
    return ok, {"reduced": reduced.to_dict(), "certification": residual.to_dict(), "certified": ok}


def cmd_solve(run: RunConfig, settings: Config, results_dir: Path) -> Tuple[int, Dict[str, Any]]:
    """Solve the reduced system, write outputs and certify the reconstructed field."""
    if run.subalgebra not in SOLVABLE_IDS:
        reduced_sign_map(run.subalgebra)
        raise NotReducible(f"{run.subalgebra} reduces to the null solution only")
    solution = solve_run(run, settings.rk4_substeps)
    print(f"  Solved {solution.subalgebra} on {len(solution.sigma)} points "
          f"[{solution.sigma[0]:g}, {solution.sigma[-1]:g}]")
    report: Dict[str, Any] = {"outputs": _write_solution(solution, run, results_dir)}
    report["checks"] = _solution_checks(solution)
    ok, certification = _certify_solution(solution, run, settings)
    report.update(certification)
    return (0 if ok else 1), report


def cmd_certify(run: RunConfig, settings: Config, results_dir: Path) -> Tuple[int, Dict[str, Any]]:
    """Certify a stored solution JSON on the run's window."""
    if not run.solution:
        raise ConfigurationError("certify needs --solution")
    solution = ReducedSolution.load_json(resolve_path(run.solution))
    ok, report = _certify_solution(solution, run, settings)
    return (0 if ok else 1), report


# -- elliptic tables -----------------------------------------------------------


def _amplitude_integral(u: float, k: float) -> float:
    try:
        return elliptic_F(u, k, "amplitude")
    except DomainError:
        return np.inf


def cmd_elliptic(run: RunConfig, settings: Config, results_dir: Path) -> Tuple[int, Dict[str, Any]]:
    """sn, cn, dn, F and P at the requested points; K and the quartic invariants once."""
    k = run.modulus
    c1 = run.c1 if run.c1 is not None else ELLIPTIC_C1
    c0 = run.literal("c0")
    params = elliptic_params(c0, c1, run.epsilon)
    invariants = quartic_invariants(c0, c1)
    points = np.asarray(run.points or ELLIPTIC_POINTS, dtype=float)
    sn, cn, dn = jacobi_sncndn(points, k)
    K = complete_elliptic_K(k) if abs(k) < 1.0 else np.inf

    rows: List[Dict[str, Any]] = []
    poles = 0
    for u, s, c, d in zip(points, sn, cn, dn):
        row = {"u": u, "sn": s, "cn": c, "dn": d, "F_amplitude": _amplitude_integral(u, k)}
        try:
            P, dP = weierstrass_p(u, params.g2, params.g3, derivative=True)
            row.update({"wp": P.body, "wp_prime": dP.body})
            for mask, value in P.terms.items():
                if mask:
                    row[f"wp_m{mask}"] = value
        except PoleError as e:
            poles += 1
            row.update({"wp": np.nan, "wp_prime": np.nan})
            print(f"    ✗ P({u:g}): {e}")
        rows.append(row)
    frame = pd.DataFrame(rows)

    path = _output_base(run, results_dir, "elliptic").with_suffix(".csv")
    save_frame(frame, path)
    identity = float(np.max(np.abs(sn ** 2 + cn ** 2 - 1.0)))
    print(f"  k = {k:g}, K(k) = {K:.12g}, C1 = {c1:g}")
    print(f"  {_mark(identity < 1e-12)} sn^2 + cn^2 = 1: {identity:.2e}")
    g2_ok, g3_ok = invariants.agree()
    print(f"  g2 {'agrees' if g2_ok else 'differs'}, g3 {'agrees' if g3_ok else 'differs'} "
          f"with the quoted closed form")
    print(f"  Wrote table: {path}")
    report = {"k": k, "K": None if np.isinf(K) else K, "c1": c1, "params": params.to_dict(), "invariants": invariants.to_dict(),
              "table": str(path), "rows": frame.to_dict(orient="records"), "poles": poles}
    return 0, report


# -- entry point -----------------------------------------------------------------


def list_runs(runs_dir: Path) -> int:
    """List preset run configurations."""
    presets = list_presets(runs_dir)
    if not presets:
        print(f"No presets found under {runs_dir}")
        return 0
    print("Available runs:")
    for preset in presets:
        print(f"  - {preset['name']}")
        if 'error' in preset:
            print(f"    ✗ {preset['error']}")
            continue
        print(f"    Command: {preset.get('command', 'solve')}, subalgebra: {preset.get('subalgebra', 'S4')}")
    return 0


HANDLERS = {
    'verify-algebra': cmd_verify_algebra,
    'verify-invariants': cmd_verify_invariants,
    'kdv-check': cmd_kdv_check,
    'reduce': cmd_reduce,
    'solve': cmd_solve,
    'certify': cmd_certify,
    'elliptic': cmd_elliptic,
}
WRITES_FILES = {'reduce', 'solve', 'certify', 'elliptic'}


def _add_run_arguments(parser: argparse.ArgumentParser):
    parser.add_argument('--config', type=str, help='Run file (JSON or YAML); flags override it')
    parser.add_argument('--subalgebra', type=str, help='Subalgebra id S1..S16')
    parser.add_argument('--eps', type=int, choices=[1, -1], help='Sign epsilon')
    parser.add_argument('--c0', type=str, help='Even literal C0, e.g. "[[12, 0.5]]"')
    parser.add_argument('--c1', type=float, help='Real constant C1')
    parser.add_argument('--c2', type=float, help='Real constant C2')
    parser.add_argument('--mu', type=str, help='Odd literal mu')
    parser.add_argument('--nu', type=str, help='Odd literal nu')
    parser.add_argument('--k', type=str, help='Odd literal K (S4 with lambda = K f)')
    for name in ('alpha', 'dalpha', 'eta', 'lambda', 'dlambda', 'f', 'df'):
        parser.add_argument(f'--ic-{name}', type=str, dest=f'ic_{name}',
                            help=f'Initial value of {name} (literal)')
    parser.add_argument('--branch', type=int, choices=[1, -1], help='Sign of the initial slope')
    parser.add_argument('--grid', type=str, help='Sigma grid lo:hi:n')
    parser.add_argument('--window', type=str, help='Certification window xlo:xhi:tlo:thi[:n]')
    parser.add_argument('--tolerance', type=float, help='Full-equation residual tolerance')
    parser.add_argument('--generators', type=int, help='Number of Grassmann generators')
    parser.add_argument('--solution', type=str, help='Stored solution JSON')
    parser.add_argument('--out', type=str, help='Output path (suffix replaced per format)')
    parser.add_argument('--format', action='append', choices=FORMATS, dest='formats',
                        help='Output format; repeat for several')
    parser.add_argument('--seed', type=int, help='RNG seed for randomized checks')
    parser.add_argument('--sentinel', action='store_true', default=None,
                        help='Flip the sign of the t-derivative in Qt (fault injection)')
    parser.add_argument('--points', type=float, nargs='+', help='Evaluation points for elliptic')
    parser.add_argument('--modulus', type=float, help='Jacobi modulus k for elliptic')
    parser.add_argument('--results-dir', type=str, help='Report directory (default: from config)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Symmetry reductions and solutions of the supersymmetric sinh-Gordon equation"
    )
    subparsers = parser.add_subparsers(dest='command', help='Command to run')

    list_parser = subparsers.add_parser('list', help='List preset runs')
    list_parser.add_argument('--runs-dir', type=str, default='runs', help='Directory containing presets')

    helps = {
        'verify-algebra': 'Check the superalgebra brackets and operator identities',
        'verify-invariants': 'Check invariants of all sixteen subalgebra classes',
        'reduce': 'Evaluate reduced-equation residuals',
        'solve': 'Solve a reduced system and certify the reconstructed superfield',
        'certify': 'Certify a stored solution on a window',
        'elliptic': 'Tabulate Jacobi and Weierstrass functions',
        'kdv-check': 'Check the super-KdV brackets, invariants and residual',
    }
    for command in COMMANDS:
        _add_run_arguments(subparsers.add_parser(command, help=helps[command]))
    return parser


def run_config_from_args(args: argparse.Namespace, settings: Config) -> RunConfig:
    """Run file (if any), then explicit flags, then defaults; validated."""
    base = RunConfig.from_file(resolve_path(args.config)) if args.config else RunConfig()
    ic = {name: parse_literal(getattr(args, f'ic_{name}'))
          for name in ('alpha', 'dalpha', 'eta', 'lambda', 'dlambda', 'f', 'df')}
    run = base.with_overrides(
        command=args.command,
        subalgebra=args.subalgebra,
        epsilon=args.eps,
        c0=parse_literal(args.c0),
        c1=args.c1,
        c2=args.c2,
        mu=parse_literal(args.mu),
        nu=parse_literal(args.nu),
        k=parse_literal(args.k),
        ic=ic,
        branch=args.branch,
        grid=args.grid,
        window=args.window,
        tolerance=args.tolerance,
        generators=args.generators,
        solution=args.solution,
        out=args.out,
        formats=args.formats,
        seed=args.seed,
        sentinel=args.sentinel,
        points=args.points,
        modulus=args.modulus,
    )
    return run.resolve(settings).validate()


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        return 0
    if args.command == 'list':
        return list_runs(resolve_path(args.runs_dir))

    try:
        settings = Config()
        set_body_tolerance(settings.body_tolerance)
        run = run_config_from_args(args, settings)
    except SuperSinhError as e:
        print(f"✗ {type(e).__name__}: {e}")
        return e.exit_code

    results_dir = resolve_path(args.results_dir) if args.results_dir else None
    handler = HANDLERS[args.command]
    command_run = CommandRun(run, None, config=settings, results_dir=results_dir)
    if args.command in WRITES_FILES:
        command_run.handler = lambda r: handler(r, settings, command_run.results_dir)
    else:
        command_run.handler = lambda r: handler(r, settings)
    exit_code, _ = command_run.execute()
    return exit_code


if __name__ == '__main__':
    sys.exit(main())
