"""Command line front end: frequency sweeps, convergence studies, single
solves with VTK export, and the structural invariant check.

Exit codes: 0 success, 2 configuration error, 3 singular matrix on a
method listed as required, 4 I/O failure.  Output files are byte-identical
across runs by default; wall-clock columns are zero unless --timing is
given.
"""
from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .gauge import UnsupportedTopologyError
from .mesh import UncoveredRegionError
from .physics import METHODS, hcurl_error, run_two_step
from .scenario import ConfigError, Scenario, load_scenario
from .solve import SingularMatrixError, condition_estimate
from .system import (StaticSingularityError, build_curl_matrix,
                     build_lagrange_system, build_scaled_divergence,
                     build_stabilized_system, scaling_factors)
from .vtk_io import export_vtk

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SINGULAR = 3
EXIT_IO = 4

SWEEP_QUANTITIES = ("condition", "delta_D", "solve_residual")
SWEEP_HEADER = "f_hz,method,cond_estimate,cond_method,delta_D,rel_residual,n_dofs,wall_ms"
CONVERGE_HEADER = "s_h,method,hcurl_error,rate"


def _num(x: float) -> str:
    if x != x:  # nan
        return "nan"
    if np.isinf(x):
        return "inf"
    return f"{x:.12g}"


def parse_frequencies(spec: str) -> list[float]:
    """Comma list of Hz values, or 'logspace:<start_exp>,<stop_exp>,<num>'."""
    if spec.startswith("logspace:"):
        parts = spec[len("logspace:"):].split(",")
        if len(parts) != 3:
            raise ValueError("logspace spec needs start_exp,stop_exp,num")
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        return [float(f) for f in np.logspace(start, stop, num)]
    freqs = [float(t) for t in spec.split(",") if t.strip()]
    if not freqs:
        raise ValueError("empty frequency list")
    if any(f < 0 for f in freqs):
        raise ValueError("frequencies must be >= 0")
    return freqs


def method_system(built, omega: float):
    """The per-method system matrices of one frequency point."""
    W = build_curl_matrix(built.bundle, omega)
    factors = scaling_factors(omega, built.material)
    D = build_scaled_divergence(built.bundle, omega, factors, built.gauge)
    systems = {"original": W}
    S_tc, _ = build_stabilized_system(W, D, np.zeros(W.shape[0], dtype=complex),
                                      built.partition)
    systems["tree-cotree"] = S_tc
    S_lm, _ = build_lagrange_system(W, D, np.zeros(W.shape[0], dtype=complex))
    systems["lagrange"] = S_lm
    return systems


def _sweep_row(built, f: float, method: str, quantities: set[str],
               timing: bool) -> tuple[str, bool]:
    t0 = time.perf_counter()
    omega = 2.0 * np.pi * f
    cond_cell = cond_method_cell = delta_cell = resid_cell = ""
    singular = False
    if "condition" in quantities:
        est = condition_estimate(method_system(built, omega)[method])
        cond_cell = _num(est.value)
        cond_method_cell = est.method
    n_dofs = {"original": built.edge.n_free,
              "tree-cotree": built.edge.n_free,
              "lagrange": built.edge.n_free + built.partition.tree.size}[method]
    if quantities & {"delta_D", "solve_residual"}:
        try:
            sol = run_two_step(built, f, method)
            if "delta_D" in quantities:
                delta_cell = _num(sol.delta_D)
            if "solve_residual" in quantities:
                resid_cell = _num(sol.curl_report.rel_residual)
        except (SingularMatrixError, StaticSingularityError):
            singular = True
            if "delta_D" in quantities:
                delta_cell = "singular"
            if "solve_residual" in quantities:
                resid_cell = "singular"
    wall_ms = int(round(1000 * (time.perf_counter() - t0))) if timing else 0
    row = f"{_num(f)},{method},{cond_cell},{cond_method_cell}," \
          f"{delta_cell},{resid_cell},{n_dofs},{wall_ms}"
    return row, singular


def run_sweep(scenario: Scenario, freqs: list[float], methods: list[str],
              quantities: set[str], timing: bool = False, jobs: int = 1) -> tuple[list[str], set[str]]:
    """One CSV row per (frequency, method); singular solves are recorded,
    never raised.  Returns (rows, methods that hit a singular solve)."""
    built = scenario.build()
    tasks = [(f, m) for f in freqs for m in methods]
    singular_methods: set[str] = set()
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(
                lambda t: _sweep_row(built, t[0], t[1], quantities, timing), tasks))
    else:
        results = [_sweep_row(built, f, m, quantities, timing) for f, m in tasks]
    rows = []
    for (f, m), (row, singular) in zip(tasks, results):
        rows.append(row)
        if singular:
            singular_methods.add(m)
    return rows, singular_methods


def run_convergence(scenario: Scenario, subdivs: list[int], f: float,
                    methods: list[str]) -> list[str]:
    """H(curl) errors and observed rates over mesh refinement."""
    rows = []
    errors: dict[str, list[tuple[int, float]]] = {m: [] for m in methods}
    for s in subdivs:
        built = scenario.with_subdivisions((s, s, s)).build()
        if built.mms is None:
            raise ConfigError(0, "convergence study needs a manufactured source")
        for m in methods:
            try:
                sol = run_two_step(built, f, m)
                err = hcurl_error(built, sol.a, built.mms)
            except (SingularMatrixError, StaticSingularityError):
                err = None
            if err is None:
                rows.append(f"{s},{m},singular,")
            else:
                prev = errors[m][-1] if errors[m] else None
                rate = ""
                if prev is not None and err > 0:
                    rate = _num(np.log(prev[1] / err) / np.log(s / prev[0]))
                rows.append(f"{s},{m},{_num(err)},{rate}")
                errors[m].append((s, err))
    return rows


def run_check(built) -> list[tuple[str, bool]]:
    """Structural invariants of one built scenario (see the check command)."""
    from .spaces import gradient_incidence

    results = []
    bundle = built.bundle
    P = gradient_incidence(built.mesh)
    curl_grad = abs(bundle.C_nu @ P).max()
    scale = max(abs(bundle.C_nu).max(), 1.0)
    results.append((f"curl o grad = 0 (max |C_nu P| = {curl_grad:.2e})",
                    curl_grad <= 1e-12 * scale))
    for name in ("K_sigma", "K_eps", "M_sigma", "M_eps", "C_nu"):
        A = getattr(bundle, name)
        asym = abs(A - A.T).max()
        bound = 1e-13 * max(abs(A).max(), 1e-300)
        results.append((f"{name} symmetric (|A - A^T| = {asym:.2e})", asym <= bound))
    air_edges = ~built.material.tags.conductor_edges
    m_sigma_air = abs(bundle.M_sigma[air_edges]).max() if air_edges.any() else 0.0
    results.append(("M_sigma vanishes on air rows", m_sigma_air == 0.0))
    fw = built.edge.free
    C_free = bundle.C_nu[fw][:, fw].toarray()
    s = np.linalg.svd(C_free, compute_uv=False)
    tol = max(s[0], 1.0) * 1e-10
    kernel = int(np.sum(s <= tol))
    results.append((f"tree count {built.partition.tree.size} = curl kernel {kernel}",
                    kernel == built.partition.tree.size))
    RR = built.partition.permute_matrix(bundle.C_nu[fw][:, fw].tocsr())
    nR = built.partition.cotree.size
    sRR = np.linalg.svd(RR.toarray()[:nR, :nR], compute_uv=False)
    full = bool(sRR.size == 0 or sRR[-1] > 1e-10 * max(sRR[0], 1.0))
    results.append(("cotree block of the static curl matrix has full rank", full))
    return results


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="solver",
        description="Frequency-domain Maxwell solver (two-step potential "
                    "formulation with tree-cotree stabilization)")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="frequency sweep to CSV")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--freqs", required=True,
                       help="comma list of Hz or logspace:start_exp,stop_exp,num")
    sweep.add_argument("--methods", default=None,
                       help="comma list (default: methods from the config)")
    sweep.add_argument("--quantities", default=",".join(SWEEP_QUANTITIES),
                       help=f"comma subset of {SWEEP_QUANTITIES}")
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--require", default="",
                       help="methods whose singular solves fail the run (exit 3)")
    sweep.add_argument("--subdivs", default=None,
                       help="override mesh subdivisions, e.g. 3,3,3")
    sweep.add_argument("--timing", action="store_true",
                       help="fill wall_ms (breaks byte reproducibility)")
    sweep.add_argument("--jobs", type=int, default=1)

    conv = sub.add_parser("converge", help="mesh-refinement study to CSV")
    conv.add_argument("--config", required=True)
    conv.add_argument("--subdivs", required=True, help="comma list, e.g. 2,4,8")
    conv.add_argument("--freq", required=True, type=float)
    conv.add_argument("--methods", default=None)
    conv.add_argument("--out", required=True)

    solve = sub.add_parser("solve", help="single run, optional VTK export")
    solve.add_argument("--config", required=True)
    solve.add_argument("--freq", required=True, type=float)
    solve.add_argument("--method", required=True, choices=METHODS)
    solve.add_argument("--vtk", default=None)
    solve.add_argument("--density", type=int, default=1)
    solve.add_argument("--subdivs", default=None)

    check = sub.add_parser("check", help="run the structural invariant suite")
    check.add_argument("--config", required=True)
    check.add_argument("--subdivs", default=None)
    return parser


def _load(args) -> Scenario:
    scenario = load_scenario(args.config)
    if getattr(args, "subdivs", None):
        scenario = scenario.with_subdivisions(
            [int(t) for t in args.subdivs.split(",")])
    return scenario


def _methods(args, scenario: Scenario) -> list[str]:
    if args.methods:
        methods = [t.strip() for t in args.methods.split(",") if t.strip()]
        for m in methods:
            if m not in METHODS:
                raise ConfigError(0, f"unknown method {m!r}")
        return methods
    return list(scenario.methods)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, UncoveredRegionError, UnsupportedTopologyError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def _dispatch(args) -> int:
    if args.command == "sweep":
        scenario = _load(args)
        methods = _methods(args, scenario)
        quantities = {q.strip() for q in args.quantities.split(",") if q.strip()}
        unknown = quantities - set(SWEEP_QUANTITIES)
        if unknown:
            raise ConfigError(0, f"unknown sweep quantities {sorted(unknown)}")
        freqs = parse_frequencies(args.freqs)
        rows, singular = run_sweep(scenario, freqs, methods, quantities,
                                   timing=args.timing, jobs=args.jobs)
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(f"# aphi sweep v1 columns: {SWEEP_HEADER}\n")
            fh.write(SWEEP_HEADER + "\n")
            fh.write("\n".join(rows) + "\n")
        required = {t.strip() for t in args.require.split(",") if t.strip()}
        if required & singular:
            print(f"required method(s) singular: {sorted(required & singular)}",
                  file=sys.stderr)
            return EXIT_SINGULAR
        return EXIT_OK

    if args.command == "converge":
        scenario = _load(args)
        methods = _methods(args, scenario)
        subdivs = [int(t) for t in args.subdivs.split(",")]
        rows = run_convergence(scenario, subdivs, args.freq, methods)
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(f"# aphi converge v1 columns: {CONVERGE_HEADER}\n")
            fh.write(CONVERGE_HEADER + "\n")
            fh.write("\n".join(rows) + "\n")
        return EXIT_OK

    if args.command == "solve":
        scenario = _load(args)
        built = scenario.build()
        try:
            sol = run_two_step(built, args.freq, args.method)
        except (SingularMatrixError, StaticSingularityError) as exc:
            print(f"singular: {exc}", file=sys.stderr)
            return EXIT_SINGULAR
        print(f"f = {args.freq:g} Hz, method = {args.method}")
        print(f"  delta_D      = {sol.delta_D:.6e}")
        print(f"  rel_residual = {sol.curl_report.rel_residual:.6e}")
        print(f"  |a|          = {np.linalg.norm(sol.a):.6e}")
        if built.mms is not None:
            print(f"  hcurl_error  = {hcurl_error(built, sol.a, built.mms):.6e}")
        if args.vtk:
            export_vtk(args.vtk, built, sol, density=args.density)
            print(f"  wrote {args.vtk}")
        return EXIT_OK

    if args.command == "check":
        scenario = _load(args)
        built = scenario.build()
        results = run_check(built)
        ok = True
        for label, passed in results:
            print(f"{'PASS' if passed else 'FAIL'}  {label}")
            ok = ok and passed
        return EXIT_OK if ok else 1

    raise AssertionError(f"unhandled command {args.command}")  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
