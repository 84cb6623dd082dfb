"""Command-line entry point.

Exit codes: 0 success, 1 negative verdict, 2 input error, 3 the optimizer
did not converge.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .duality import scan_field_axis, spectrum, verify_duality
from .dynamics import (
    EvolutionSpec,
    GieParams,
    NotFactorizedError,
    gie_bipartite_state,
    gie_tripartite_state,
    phase_condition,
    single_outcome_measure,
    tps_entropy_trajectory,
)
from .factorize import construct_product_tps, schmidt, search_product_tps
from .linalg import HilbertSpace, load_array, save_array
from .pauli import build_hamiltonian, locality_weight, parse_terms, pauli_decompose
from .scenario import ScenarioError, load_scenario
from .tps import Tps, tps_equivalent
from .validation import check_hermitian, check_state

EXIT_OK, EXIT_VERDICT, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2, 3


class InputError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _dump_json(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


def _dump_csv(header: list[str], rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


class Output:
    """Collects a JSON report and optional CSV tables, then writes them."""

    def __init__(self, args, command: str):
        self.args = args
        self.command = command
        self.report: dict = {"command": command}
        self.tables: dict[str, tuple[list[str], list]] = {}
        self.files: dict[str, object] = {}

    def table(self, name: str, header: list[str], rows: list) -> None:
        self.tables[name] = (header, rows)

    def emit(self) -> None:
        out_dir = getattr(self.args, "out_dir", None)
        if out_dir:
            d = Path(out_dir)
            d.mkdir(parents=True, exist_ok=True)
            (d / f"{self.command}.json").write_text(_dump_json(self.report), encoding="utf-8")
            for name, (header, rows) in self.tables.items():
                (d / f"{name}.csv").write_text(_dump_csv(header, rows), encoding="utf-8")
            for name, arr in self.files.items():
                save_array(d / name, arr)
        csv_path = getattr(self.args, "out", None)
        if csv_path and self.tables:
            header, rows = next(iter(self.tables.values()))
            Path(csv_path).write_text(_dump_csv(header, rows), encoding="utf-8")
        if self.args.format == "csv" and self.tables:
            header, rows = next(iter(self.tables.values()))
            sys.stdout.write(_dump_csv(header, rows))
        else:
            sys.stdout.write(_dump_json(self.report))


# -- input helpers -----------------------------------------------------------


def _floats(text: str, n: int | None = None, what: str = "value") -> list[float]:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise InputError(f"cannot parse {what} list {text!r}") from None
    if n is not None and len(vals) != n:
        raise InputError(f"expected {n} comma-separated {what}s, got {len(vals)}")
    return vals


def _ints(text: str, what: str = "dimension") -> list[int]:
    try:
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise InputError(f"cannot parse {what} list {text!r}") from None


def _load(path: str, what: str) -> np.ndarray:
    try:
        return load_array(path)
    except OSError as exc:
        raise InputError(f"cannot read {what} {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise InputError(f"{what} {path}: {exc}") from None


def _load_operator(path: str) -> np.ndarray:
    """Read a term-list file or, failing that, a matrix in the array format."""
    try:
        text = Path(path).read_text(encoding="ascii")
    except OSError as exc:
        raise InputError(f"cannot read operator {path}: {exc.strerror}") from None
    first = next((ln.split("#", 1)[0].split() for ln in text.splitlines() if ln.split("#", 1)[0].strip()), [])
    if len(first) == 2 and first[1].isalpha():
        try:
            return build_hamiltonian(parse_terms(text))
        except ValueError as exc:
            raise InputError(f"operator {path}: {exc}") from None
    H = _load(path, "operator")
    try:
        return check_hermitian(H, name=f"operator {path}")
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _require_seed(seed, why: str) -> int:
    if seed is None:
        raise InputError(f"{why} is stochastic; pass --seed (or run.seed in the scenario)")
    return seed


def _default_cut(dim: int, cut_arg: str | None) -> tuple[int, int]:
    if cut_arg:
        cut = _ints(cut_arg)
        if len(cut) != 2 or cut[0] * cut[1] != dim or min(cut) < 1:
            raise InputError(f"cut {cut_arg} does not factor dimension {dim}")
        return cut[0], cut[1]
    if dim % 2:
        raise InputError("pass --cut for odd dimensions")
    return 2, dim // 2


def _scenario_hamiltonian(args) -> np.ndarray:
    if getattr(args, "scenario", None):
        return load_scenario(args.scenario, args.seed).H
    if getattr(args, "terms", None):
        return _load_operator(args.terms)
    if getattr(args, "matrix", None):
        return _load_operator(args.matrix)
    raise InputError("give one of --scenario, --terms or --matrix")


# -- commands ----------------------------------------------------------------


def cmd_spectrum(args, out: Output) -> int:
    H = _scenario_hamiltonian(args)
    w = spectrum(H)
    out.report.update({"dimension": H.shape[0], "eigenvalues": w})
    out.table("spectrum", ["index", "eigenvalue"], [(i, float(v)) for i, v in enumerate(w)])
    return EXIT_OK


def cmd_dual_verify(args, out: Output) -> int:
    rep = verify_duality(args.J, args.h, tol=args.tol if args.tol is not None else 1e-10)
    out.report.update(rep.to_dict())
    ok = rep.algebra_ok and rep.verdict["x"]
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_tps_equiv(args, out: Output) -> int:
    dims = _ints(args.dims)
    T1 = _load(args.t1, "TPS matrix")
    T2 = _load(args.t2, "TPS matrix")
    try:
        space = HilbertSpace(tuple(dims))
        res = tps_equivalent(Tps(space, T1), Tps(space, T2), tol=args.tol if args.tol is not None else 1e-8)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out.report.update({
        "dims": dims,
        "equivalent": res.equivalent,
        "permutation": list(res.permutation) if res.permutation is not None else None,
        "reason": res.reason,
    })
    if res.factors is not None:
        for k, f in enumerate(res.factors):
            out.files[f"factor_{k}.mat"] = f
    return EXIT_OK if res.equivalent else EXIT_VERDICT


def cmd_klocal(args, out: Output) -> int:
    H = _scenario_hamiltonian(args)
    n = H.shape[0].bit_length() - 1
    if 2**n != H.shape[0]:
        raise InputError(f"dimension {H.shape[0]} is not a power of two")
    thr = args.tol if args.tol is not None else 1e-12
    coeffs = pauli_decompose(H, n, threshold=thr)
    k, edges = locality_weight(coeffs, thr)
    out.report.update({
        "n_sites": n,
        "k": k,
        "edges": sorted(list(e) for e in edges),
        "coefficients": {ps.letters: c for ps, c in coeffs.items()},
    })
    out.table("klocal", ["string", "weight", "coefficient"], [(ps.letters, ps.weight, c) for ps, c in coeffs.items()])
    return EXIT_OK


def cmd_schmidt(args, out: Output) -> int:
    psi = _load(args.state, "state")
    try:
        psi = check_state(psi)
        cut = _default_cut(psi.shape[0], args.cut)
        sd = schmidt(psi, cut)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out.report.update({"cut": list(cut), "coefficients": sd.p, "rank": sd.rank, "entropy": sd.entropy()})
    out.table("schmidt", ["n", "p"], [(i, float(p)) for i, p in enumerate(sd.p)])
    out.files["schmidt_u.mat"] = sd.u
    out.files["schmidt_v.mat"] = sd.v
    return EXIT_OK


def cmd_find_tps(args, out: Output) -> int:
    psi = _load(args.state, "state")
    try:
        psi = check_state(psi)
        cut = _default_cut(psi.shape[0], args.cut)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    H = _load_operator(args.ham) if args.ham else None
    seed = _require_seed(args.seed, "find-tps")
    tol = args.tol if args.tol is not None else 1e-6
    try:
        res = search_product_tps(psi, cut, H=H, lam=args.lam, budget=args.budget, tol=tol, seed=seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out.report.update({
        "cut": list(cut),
        "lambda": args.lam,
        "budget": args.budget,
        "seed": seed,
        "tol": tol,
        "converged": res.converged,
        "entropy": res.entropy,
        "excess_locality": res.excess,
        "objective": res.objective,
        "n_evals": res.n_evals,
        "iterations": res.iterations,
        "generator": {ps.letters: t for ps, t in zip(res.basis, res.generator)},
    })
    out.table("find_tps_trace", ["iteration", "best_objective"], list(enumerate(res.objective_trace)))
    out.files["tps.mat"] = res.tps.T
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def _scenario_tps(sc, psi, cut, seed):
    mode = sc.run.tps
    if mode == "construct":
        return construct_product_tps(psi, cut)
    if mode == "identity":
        return Tps(HilbertSpace(cut))
    if mode == "search":
        res = search_product_tps(psi, cut, budget=sc.run.budget, tol=sc.run.tol, seed=_require_seed(seed, "tps search"))
        return Tps(HilbertSpace(cut), res.tps.T)
    T = load_array(sc.path(mode))
    return Tps(HilbertSpace(cut), T)


def cmd_measure(args, out: Output) -> int:
    sc = load_scenario(args.scenario, args.seed)
    if sc.state is None or sc.cut is None or sc.run.apparatus is None:
        raise InputError("measure needs 'state', 'cut' and 'run.apparatus' in the scenario")
    seed = sc.seed
    if sc.run.policy == "born-random":
        seed = _require_seed(seed, "the born-random policy")
    try:
        T = _scenario_tps(sc, sc.state, sc.cut, seed)
    except (OSError, ValueError) as exc:
        raise InputError(f"field 'run.tps': {exc}") from None
    O = sc.observables[sc.run.apparatus]
    out.report.update({"scenario": sc.name, "cut": list(sc.cut), "policy": sc.run.policy, "tps": sc.run.tps})
    try:
        rec = single_outcome_measure(sc.state, T, O, sc.cut, policy=sc.run.policy, seed=seed)
    except NotFactorizedError as exc:
        out.report.update({"refused": True, "entropy": exc.entropy, "reason": str(exc)})
        return EXIT_VERDICT
    out.report.update({
        "refused": False,
        "index": rec.index,
        "value": rec.value,
        "residual": rec.residual,
        "entropy": rec.entropy,
        "tie": rec.tie,
        "degenerate": rec.degenerate,
        "probabilities": rec.probabilities,
    })
    out.files["U_align.mat"] = rec.U_align
    out.files["tps.mat"] = T.T
    return EXIT_OK


def cmd_trajectory(args, out: Output) -> int:
    sc = load_scenario(args.scenario, args.seed)
    if sc.state is None or sc.cut is None:
        raise InputError("trajectory needs 'state' and 'cut' in the scenario")
    seed = _require_seed(sc.seed, "the trajectory search")
    try:
        spec = EvolutionSpec(sc.H, sc.state, tuple(sc.tau_grid()), schrodinger=sc.run.schrodinger)
        points, _ = tps_entropy_trajectory(
            spec, sc.cut, lam=sc.run.lam, budget_per_step=sc.run.budget, tol=sc.run.tol, seed=seed
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise InputError(str(exc)) from None
    header = ["tau", "entropy_before", "entropy_after", "converged", "n_evals", "generator_step"]
    rows = [(p.tau, p.entropy_before, p.entropy_after, int(p.converged), p.n_evals, p.generator_step) for p in points]
    out.table("trajectory", header, rows)
    all_ok = all(p.converged for p in points)
    out.report.update({
        "scenario": sc.name,
        "cut": list(sc.cut),
        "seed": seed,
        "points": len(points),
        "all_converged": all_ok,
        "max_entropy_after": max(p.entropy_after for p in points),
    })
    return EXIT_OK if all_ok else EXIT_NONCONVERGED


def cmd_gie(args, out: Output) -> int:
    try:
        if args.phases:
            params = GieParams.from_phases(_floats(args.phases, 4, "phase"))
            source = "phases"
        else:
            if not (args.masses and args.tf is not None and args.seps):
                raise InputError("give --phases, or all of --masses, --tf and --seps")
            m1, m2 = _floats(args.masses, 2, "mass")
            params = GieParams.from_physical(m1, m2, args.tf, _floats(args.seps, 4, "separation"))
            source = "physical"
    except ValueError as exc:
        raise InputError(str(exc)) from None
    tol = args.tol if args.tol is not None else 1e-9
    bi = gie_bipartite_state(params)
    report = {
        "source": source,
        "phases": params.phases,
        "phase_mismatch": params.phase_mismatch,
        "phase_condition": phase_condition(params, tol),
        "bipartite_negativity": bi.negativity,
        "entangled": bi.negativity > tol,
    }
    rows = [("bipartite", "", bi.negativity)]
    if args.mediator != "none":
        try:
            tri = gie_tripartite_state(params, args.mediator, args.overlap)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        report.update({"mediator": args.mediator, "overlap": args.overlap, "mass_mass_negativity": tri.negativity})
        rows.append(("tripartite", args.mediator, tri.negativity))
    out.report.update(report)
    out.table("gie", ["model", "mediator", "negativity"], rows)
    return EXIT_OK


def cmd_scan(args, out: Output) -> int:
    lo_J, hi_J = _floats(args.J_range, 2, "bound")
    lo_h, hi_h = _floats(args.h_range, 2, "bound")
    if args.points < 1:
        raise InputError("--points must be positive")
    Js = np.linspace(lo_J, hi_J, args.points)
    hs = np.linspace(lo_h, hi_h, args.points)
    tol = args.tol if args.tol is not None else 1e-10
    if args.workers > 1:
        with ThreadPoolExecutor(args.workers) as pool:
            chunks = list(pool.map(lambda J: scan_field_axis([J], hs, tol), Js))
        rows = [r for chunk in chunks for r in chunk]
    else:
        rows = scan_field_axis(Js, hs, tol)
    header = ["J", "h", "match_x", "max_deviation_x", "match_z", "max_deviation_z"]
    out.table("scan", header, [
        (r["J"], r["h"], int(r["match_x"]), r["max_deviation_x"], int(r["match_z"]), r["max_deviation_z"])
        for r in rows
    ])
    z_matches = [[r["J"], r["h"]] for r in rows if r["match_z"]]
    out.report.update({
        "grid": {"J": [lo_J, hi_J], "h": [lo_h, hi_h], "points": args.points},
        "tol": tol,
        "n_points": len(rows),
        "x_axis_all_match": all(r["match_x"] for r in rows),
        "z_axis_match_count": len(z_matches),
        "z_axis_matches": z_matches,
        "z_axis_max_deviation": max(r["max_deviation_z"] for r in rows),
    })
    return EXIT_OK if all(r["match_x"] for r in rows) else EXIT_VERDICT


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", help="directory for the JSON report, CSV tables and matrices")
    common.add_argument("--seed", type=int, default=None, help="seed for stochastic steps")
    common.add_argument("--tol", type=float, default=None, help="override the command's tolerance")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="stdout format")

    p = argparse.ArgumentParser(prog="tpskit", description=__doc__.splitlines()[0], parents=[common])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, parents=[common])
        sp.set_defaults(func=func)
        return sp

    def operator_source(sp):
        g = sp.add_mutually_exclusive_group(required=True)
        g.add_argument("--scenario")
        g.add_argument("--terms", help="term-list file ('coefficient LETTERS' per line)")
        g.add_argument("--matrix", help="matrix file in the array text format")

    sp = add("spectrum", cmd_spectrum, "ascending eigenvalues of a Hamiltonian")
    operator_source(sp)

    sp = add("dual-verify", cmd_dual_verify, "check the mu/sigma chain duality at (J, h)")
    sp.add_argument("--J", type=float, required=True)
    sp.add_argument("--h", type=float, required=True)

    sp = add("tps-equiv", cmd_tps_equiv, "test two TPS representatives for equivalence")
    sp.add_argument("--t1", required=True)
    sp.add_argument("--t2", required=True)
    sp.add_argument("--dims", required=True, help="comma-separated factor dimensions")

    sp = add("klocal", cmd_klocal, "Pauli locality and interaction graph")
    operator_source(sp)

    sp = add("schmidt", cmd_schmidt, "Schmidt decomposition of a pure state")
    sp.add_argument("--state", required=True)
    sp.add_argument("--cut", help="d,D (default 2,rest)")

    sp = add("find-tps", cmd_find_tps, "search a frame in which the state factorizes")
    sp.add_argument("--state", required=True)
    sp.add_argument("--ham", help="Hamiltonian (term list or matrix) for the locality penalty")
    sp.add_argument("--lambda", dest="lam", type=float, default=0.0)
    sp.add_argument("--budget", type=int, default=5000)
    sp.add_argument("--cut", help="d,D (default 2,rest)")

    sp = add("measure", cmd_measure, "single-outcome measurement from a scenario")
    sp.add_argument("--scenario", required=True)

    sp = add("trajectory", cmd_trajectory, "entropy along the evolution and after frame search")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--out", help="CSV output path")

    sp = add("gie", cmd_gie, "entanglement of the two-mass superposition")
    sp.add_argument("--phases", help="phi_LL,phi_LR,phi_RL,phi_RR in radians")
    sp.add_argument("--masses", help="m1,m2 in kg")
    sp.add_argument("--tf", type=float, help="interaction time in s")
    sp.add_argument("--seps", help="d_LL,d_LR,d_RL,d_RR in m")
    sp.add_argument("--mediator", choices=("none", "quantum", "classical"), default="none")
    sp.add_argument("--overlap", type=float, default=0.0, help="pairwise mediator-state overlap")

    sp = add("scan", cmd_scan, "spectral comparison of both field axes over a (J, h) grid")
    sp.add_argument("--J-range", dest="J_range", default="-2,2")
    sp.add_argument("--h-range", dest="h_range", default="-2,2")
    sp.add_argument("--points", type=int, default=41)
    sp.add_argument("--workers", type=int, default=1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    out = Output(args, args.command)
    try:
        code = args.func(args, out)
    except (InputError, ScenarioError) as exc:
        print(f"tpskit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out.emit()
    return code


if __name__ == "__main__":
    sys.exit(main())
