"""Command-line front end.

Subcommands: analyze, cd, verify, spectral, simulate, oracle.  JSON is the
canonical output format (numbers carry 17 significant digits so a report can
be consumed as reproducible input); --text renders the same content for
humans.  Exit codes: 0 success, 1 verification failure, 2 input error,
3 internal-consistency error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from . import cdcore, diffusion, invariants, spectral
from .connection import cocurvature_trace_residual, compute_connection
from .errors import (
    InputError,
    InternalConsistencyError,
    NumericalBlowup,
    ParseError,
    SchemaError,
    SrcdError,
    ValidationError,
)
from .invariants import UNBOUNDED, compute_constants
from .kernels import BACKEND
from .liealg import (
    EXAMPLE_NAMES,
    LieSRStructure,
    MatrixRealization,
    adapted_orthonormal_frame,
    build_example,
    validate_structure,
)

ORACLE_SLACK = 1e-8


# ---------------------------------------------------------------------------
# canonical JSON
# ---------------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0.0:
        return "0"          # avoid the "-0" token, which reparses as int
    return format(float(x), ".17g")


def canonical_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    pad = " " * indent
    if obj is None:
        return "null"
    if obj is True or obj is False:
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return canonical_json(obj.tolist(), indent)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join(pad + "  " + canonical_json(v, indent + 2) for v in obj)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            items.append(pad + "  " + json.dumps(str(key)) + ": "
                         + canonical_json(obj[key], indent + 2))
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj)!r}")


# ---------------------------------------------------------------------------
# structure files
# ---------------------------------------------------------------------------

_TOP_KEYS = {"name", "n", "nu", "brackets", "gram_h", "gram_v", "matrix_realization"}
_BRACKET_KEYS = {"i", "j", "coeffs"}
_REALIZATION_KEYS = {"dim", "field", "generators"}


def _schema(cond: bool, msg: str):
    if not cond:
        raise SchemaError(msg)


def _matrix_from_flat(values, size: int, what: str) -> np.ndarray:
    _schema(isinstance(values, list) and len(values) == size * size,
            f"{what} must be a flat row-major array of {size * size} numbers")
    _schema(all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values),
            f"{what} entries must be numbers")
    return np.array(values, dtype=float).reshape(size, size)


def parse_structure_file(path: str) -> LieSRStructure:
    """Read and validate a JSON structure file.

    Bracket entries are sparse with i < j only (the reverse entries follow by
    antisymmetry, making its violation unrepresentable); unknown keys are
    rejected everywhere.
    """
    try:
        with open(path) as fh:
            raw = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc

    _schema(isinstance(data, dict), "top level must be an object")
    unknown = set(data) - _TOP_KEYS
    _schema(not unknown, f"unknown top-level keys: {sorted(unknown)}")
    for key in ("name", "n", "nu", "brackets", "gram_h", "gram_v"):
        _schema(key in data, f"missing required key '{key}'")
    _schema(isinstance(data["name"], str), "name must be a string")
    _schema(isinstance(data["n"], int) and isinstance(data["nu"], int),
            "n and nu must be integers")
    n, nu = data["n"], data["nu"]
    _schema(n >= 1 and nu >= 0, "need n >= 1 and nu >= 0")
    d = n + nu

    c = np.zeros((d, d, d))
    seen = set()
    _schema(isinstance(data["brackets"], list), "brackets must be a list")
    for entry in data["brackets"]:
        _schema(isinstance(entry, dict), "bracket entries must be objects")
        unknown = set(entry) - _BRACKET_KEYS
        _schema(not unknown, f"unknown bracket keys: {sorted(unknown)}")
        _schema(all(k in entry for k in _BRACKET_KEYS),
                "bracket entries need i, j, coeffs")
        i, j = entry["i"], entry["j"]
        _schema(isinstance(i, int) and isinstance(j, int), "bracket indices must be integers")
        _schema(0 <= i < d and 0 <= j < d, f"bracket index out of range in ({i},{j})")
        _schema(i < j, f"bracket entries require i < j, got ({i},{j}); "
                       "the reverse entry is implied by antisymmetry")
        _schema((i, j) not in seen, f"redundant bracket entry ({i},{j})")
        seen.add((i, j))
        _schema(isinstance(entry["coeffs"], dict), "coeffs must be an object")
        for ks, val in entry["coeffs"].items():
            try:
                k = int(ks)
            except ValueError:
                raise SchemaError(f"coefficient key '{ks}' is not an integer index")
            _schema(0 <= k < d, f"coefficient index {k} out of range")
            _schema(isinstance(val, (int, float)) and not isinstance(val, bool),
                    "coefficient values must be numbers")
            c[i, j, k] = float(val)
            c[j, i, k] = -float(val)

    gram_h = _matrix_from_flat(data["gram_h"], n, "gram_h")
    gram_v = _matrix_from_flat(data["gram_v"], nu, "gram_v")

    realization = None
    if "matrix_realization" in data:
        real = data["matrix_realization"]
        _schema(isinstance(real, dict), "matrix_realization must be an object")
        unknown = set(real) - _REALIZATION_KEYS
        _schema(not unknown, f"unknown realization keys: {sorted(unknown)}")
        _schema(all(k in real for k in _REALIZATION_KEYS),
                "matrix_realization needs dim, field, generators")
        dim = real["dim"]
        _schema(isinstance(dim, int) and dim >= 1, "realization dim must be a positive integer")
        fieldtag = real["field"]
        _schema(fieldtag in ("real", "complex"), "realization field must be 'real' or 'complex'")
        gens_raw = real["generators"]
        _schema(isinstance(gens_raw, list) and len(gens_raw) == d,
                f"generators must list {d} matrices")
        gens = np.zeros((d, dim, dim), dtype=complex if fieldtag == "complex" else float)
        for gi, flat in enumerate(gens_raw):
            _schema(isinstance(flat, list) and len(flat) == dim * dim,
                    f"generator {gi} must be a flat row-major list of {dim * dim} entries")
            for ei, v in enumerate(flat):
                if fieldtag == "complex":
                    _schema(isinstance(v, list) and len(v) == 2
                            and all(isinstance(t, (int, float)) for t in v),
                            "complex entries must be [re, im] pairs")
                    gens[gi, ei // dim, ei % dim] = complex(v[0], v[1])
                else:
                    _schema(isinstance(v, (int, float)) and not isinstance(v, bool),
                            "real entries must be numbers")
                    gens[gi, ei // dim, ei % dim] = float(v)
        realization = MatrixRealization(dim, fieldtag, gens)

    s = LieSRStructure(name=data["name"], n=n, nu=nu, c=c,
                       gram_h=gram_h, gram_v=gram_v, realization=realization)
    validate_structure(s).require()
    return s


def serialize_structure(s: LieSRStructure) -> dict:
    """Inverse of parse_structure_file (brackets sparse, i < j)."""
    brackets = []
    d = s.dim
    for i in range(d):
        for j in range(i + 1, d):
            coeffs = {str(k): float(s.c[i, j, k]) for k in range(d)
                      if abs(s.c[i, j, k]) > 0.0}
            if coeffs:
                brackets.append({"i": i, "j": j, "coeffs": coeffs})
    out = {
        "name": s.name,
        "n": s.n,
        "nu": s.nu,
        "brackets": brackets,
        "gram_h": [float(v) for v in np.asarray(s.gram_h).ravel()],
        "gram_v": [float(v) for v in np.asarray(s.gram_v).ravel()],
    }
    if s.realization is not None:
        r = s.realization
        gens = []
        for g in r.generators:
            if r.field == "complex":
                gens.append([[float(v.real), float(v.imag)] for v in g.ravel()])
            else:
                gens.append([float(v.real) for v in g.ravel()])
        out["matrix_realization"] = {"dim": r.dim, "field": r.field, "generators": gens}
    return out


# ---------------------------------------------------------------------------
# shared pipeline
# ---------------------------------------------------------------------------

def _parse_example_spec(spec: str) -> LieSRStructure:
    name, _, paramstr = spec.partition(":")
    params = {}
    if paramstr:
        for piece in paramstr.split(","):
            key, _, val = piece.partition("=")
            if not val:
                raise SchemaError(f"bad example parameter '{piece}' (expected key=value)")
            params[key.strip()] = float(val) if "." in val or "e" in val.lower() else int(val)
    return build_example(name, params)


def _load_structure(args) -> LieSRStructure:
    if getattr(args, "example", None):
        return _parse_example_spec(args.example)
    if getattr(args, "structure", None):
        return parse_structure_file(args.structure)
    raise SchemaError("provide --example NAME[:params] or --structure PATH")


def _trace_condition_max(conn, seed: int = 0, samples: int = 100) -> float:
    rng = np.random.Generator(np.random.Philox(key=seed))
    worst = 0.0
    for _ in range(samples):
        v = rng.standard_normal(conn.dim)
        worst = max(worst, abs(cocurvature_trace_residual(conn, v)))
    return worst


def _pipeline(s: LieSRStructure, require_theory: bool = True):
    """Validate, orthonormalize, normalize the vertical metric, and compute
    everything the analysis commands share."""
    report = validate_structure(s)
    report.require()
    son = adapted_orthonormal_frame(s)
    conn = compute_connection(son)
    k = compute_constants(son, conn)
    normalization = 1.0
    if k.M_R > 1e-12 and abs(k.M_R - 1.0) > 1e-9:
        normalization = 1.0 / k.M_R ** 2
        son = adapted_orthonormal_frame(invariants.normalize_vertical(son, conn))
        conn = compute_connection(son)
        k = compute_constants(son, conn)
    trace_cond = None
    if not report.vertical_integrable:
        trace_cond = _trace_condition_max(conn)
    if require_theory:
        if not report.metric_preserving:
            raise ValidationError(
                "complement is not metric-preserving; the curvature-dimension "
                "machinery does not apply")
        if trace_cond is not None and trace_cond > 1e-10:
            raise ValidationError(
                f"non-integrable complement violates the co-curvature trace "
                f"condition (max residual {trace_cond:.3e})")
    return report, son, conn, k, normalization, trace_cond


def _constants_block(k) -> dict:
    return {
        "M_R": k.M_R,
        "m_R": k.m_R,
        "rho_H": k.rho_H,
        "M_HV": "unbounded" if k.M_HV == UNBOUNDED else k.M_HV,
        "M_nabla_v": k.M_nabla_v,
        "rho_delta_v": k.rho_delta_v,
    }


def _structure_block(s: LieSRStructure, report, conn) -> dict:
    flag = report.growth
    return {
        "name": s.name,
        "n": s.n,
        "nu": s.nu,
        "dim": s.dim,
        "growth": list(flag.dims),
        "step": flag.step,
        "bracket_generating": flag.bracket_generating,
        "metric_preserving": report.metric_preserving,
        "vertical_integrable": report.vertical_integrable,
        "vertical_metric_parallel": conn.vertical_metric_parallel,
        "drift_zero": bool(np.abs(conn.drift).max(initial=0.0) < 1e-12),
    }


def _base_report(args, seed=None) -> dict:
    return {
        "tool": {"name": "srcd", "version": __version__, "backend": BACKEND},
        "seed": seed if seed is not None else getattr(args, "seed", None),
    }


def _parse_c_list(text: str, k, n_dim) -> list[float]:
    if text == "auto":
        c_opt, _ = cdcore.optimize_c(k, n_dim)
        return [c_opt]
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        if piece == "auto":
            c_opt, _ = cdcore.optimize_c(k, n_dim)
            out.append(c_opt)
        elif piece in ("inf", "infinity"):
            out.append(math.inf)
        else:
            out.append(float(piece))
    return out


def _parse_ell_list(text: str) -> list[float]:
    return [float(p) for p in text.split(",")]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_analyze(args) -> tuple[int, dict]:
    s = _load_structure(args)
    report, son, conn, k, normalization, trace_cond = _pipeline(s, require_theory=False)
    out = _base_report(args)
    out["structure"] = _structure_block(s, report, conn)
    out["constants"] = _constants_block(k)
    out["vertical_normalization_applied"] = normalization
    out["ric_h"] = k.ric_h
    out["ric_hv"] = k.ric_hv
    out["drift"] = conn.drift
    out["mean_curvature_defect"] = conn.N
    if trace_cond is not None:
        out["cocurvature_trace_max"] = trace_cond
    return 0, out


def cmd_cd(args) -> tuple[int, dict]:
    s = _load_structure(args)
    report, son, conn, k, normalization, _ = _pipeline(s)
    n_dim = float(k.n)
    ells = _parse_ell_list(args.ell)
    cs = _parse_c_list(args.c, k, n_dim)
    grid = []
    for c in cs:
        params = cdcore.cd_parameters(k, c, n_dim)
        for ell in ells:
            grid.append({
                "c": c, "ell": ell, "n": params.n_dim,
                "rho1": params.rho1, "rho20": params.rho20, "rho21": params.rho21,
            })
    out = _base_report(args)
    out["structure"] = _structure_block(s, report, conn)
    out["constants"] = _constants_block(k)
    out["cd_grid"] = grid
    return 0, out


def cmd_verify(args) -> tuple[int, dict]:
    s = _load_structure(args)
    report, son, conn, k, normalization, _ = _pipeline(s)
    ells = tuple(_parse_ell_list(args.ell))
    cs = tuple(_parse_c_list(args.c, k, float(k.n)))
    summary = cdcore.verify_cd_batch(conn, k, samples=args.samples, seed=args.seed,
                                     ells=ells, cs=cs, tol=args.tol)
    ok = summary.passed
    double_gamma = None
    if conn.vertical_metric_parallel:
        batch = cdcore.sample_jet_batch(conn, args.samples, args.seed)
        terms = cdcore.gamma2_terms(batch, conn, k)
        c_dg = next((c for c in cs if not math.isinf(c) or k.M_HV <= 1e-14), cs[0])
        worst1 = worst2 = math.inf
        for ell in ells:
            m1, m2 = cdcore.double_gamma_margins(terms, k, c_dg, ell)
            worst1 = min(worst1, float(m1.min()))
            worst2 = min(worst2, float(m2.min()))
        double_gamma = {"c": c_dg, "min_margin1": worst1, "min_margin2": worst2}
        ok = ok and worst1 >= -args.tol and worst2 >= -args.tol
        if summary.condition_b_max is not None:
            ok = ok and summary.condition_b_max <= 1e-12
    out = _base_report(args)
    out["structure"] = _structure_block(s, report, conn)
    out["constants"] = _constants_block(k)
    out["verification"] = {
        "samples": summary.samples,
        "ells": list(summary.ells),
        "cs": list(summary.cs),
        "min_margin": summary.min_margin,
        "argmin": {"ell": summary.argmin[0], "c": summary.argmin[1],
                   "jet": summary.argmin[2]},
        "tolerance": summary.tolerance,
        "condition_b_max": summary.condition_b_max,
        "double_gamma": double_gamma,
        "passed": ok,
    }
    return (0 if ok else 1), out


def cmd_spectral(args) -> tuple[int, dict]:
    s = _load_structure(args)
    report, son, conn, k, normalization, _ = _pipeline(s)
    bounds = []
    notes = []
    try:
        bounds.append(spectral.gap_bound_best(k))
    except SrcdError as exc:
        notes.append(f"direct route unavailable: {exc}")
    try:
        bounds.append(spectral.gap_bound_kappa(k, conn))
    except SrcdError as exc:
        notes.append(f"kappa route unavailable: {exc}")
    try:
        gb2, b = spectral.gap_bound_step2(s)
        bounds.append(gb2)
    except SrcdError as exc:
        b = None
        notes.append(f"step-2 route unavailable: {exc}")
    oracle = None
    if son.su2 is not None:
        res = spectral.irrep_spectrum_oracle(son, j_max=args.jmax)
        oracle = {"gap": res.gap, "j_max": res.j_max,
                  "eigenvalues_head": res.eigenvalues[
                      np.argsort(np.abs(res.eigenvalues))][:16]}
    out = _base_report(args)
    out["structure"] = _structure_block(s, report, conn)
    out["constants"] = _constants_block(k)
    out["bounds"] = [{
        "source": gb.source, "bound": gb.bound, "k2": gb.k2,
        "c_opt": gb.c_opt, "kappa": gb.kappa,
    } for gb in bounds]
    if b is not None:
        out["privileged_b"] = b
    if notes:
        out["notes"] = notes
    out["oracle"] = oracle
    ok = bool(bounds)
    if oracle is not None:
        ok = ok and all(gb.bound <= oracle["gap"] + ORACLE_SLACK for gb in bounds)
    return (0 if ok else 1), out


def cmd_simulate(args) -> tuple[int, dict]:
    s = _load_structure(args)
    report, son, conn, k, normalization, _ = _pipeline(s, require_theory=False)
    cfg = diffusion.SimConfig(t_final=args.t, steps=args.steps, paths=args.paths,
                              seed=args.seed)
    f = diffusion.observable(args.function)
    sample = diffusion.simulate_paths(son, conn, cfg)
    vals = np.array([f(g) for g in sample.final])
    consistency = None
    passed = True
    if cfg.steps % 8 == 0:
        rep = diffusion.generator_consistency(son, conn, cfg, f)
        consistency = rep.summary()
        passed = rep.passed
    if args.out_csv:
        diffusion.export_csv(sample, args.out_csv)
    out = _base_report(args)
    out["structure"] = _structure_block(s, report, conn)
    out["simulation"] = {
        "t_final": cfg.t_final, "steps": cfg.steps, "paths": cfg.paths,
        "seed": cfg.seed, "scheme": cfg.scheme, "function": args.function,
        "mean": float(vals.mean()),
        "stderr": float(vals.std(ddof=1) / math.sqrt(len(vals))),
        "unitary_defect": sample.unitary_defect,
        "consistency": consistency,
    }
    return (0 if passed else 1), out


def cmd_oracle(args) -> tuple[int, dict]:
    s = _load_structure(args)
    son = adapted_orthonormal_frame(s)
    res = spectral.irrep_spectrum_oracle(son, j_max=args.jmax)
    out = _base_report(args)
    out["structure"] = {"name": s.name, "n": s.n, "nu": s.nu}
    out["oracle"] = {
        "j_max": res.j_max,
        "gap": res.gap,
        "blocks": [list(b) for b in res.blocks],
        "eigenvalues": res.eigenvalues,
    }
    return 0, out


# ---------------------------------------------------------------------------
# rendering and entry point
# ---------------------------------------------------------------------------

def _render_text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for key in sorted(obj):
            val = obj[key]
            if isinstance(val, (dict, list, np.ndarray)):
                lines.append(f"{pad}{key}:")
                lines.append(_render_text(val, indent + 1))
            else:
                rendered = _fmt_float(val) if isinstance(val, float) else str(val)
                lines.append(f"{pad}{key}: {rendered}")
    elif isinstance(obj, np.ndarray):
        lines.append(_render_text(obj.tolist(), indent))
    elif isinstance(obj, list):
        for val in obj:
            if isinstance(val, (dict, list, np.ndarray)):
                lines.append(_render_text(val, indent))
            else:
                lines.append(f"{pad}- {val}")
    else:
        lines.append(f"{pad}{obj}")
    return "\n".join(line for line in lines if line)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srcd",
        description="curvature-dimension analysis for left-invariant "
                    "sub-Riemannian structures")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_default=0):
        p.add_argument("--structure", help="path to a JSON structure file")
        p.add_argument("--example",
                       help=f"catalog name, optionally NAME:key=value,... "
                            f"({', '.join(EXAMPLE_NAMES)})")
        p.add_argument("--seed", type=int, default=seed_default)
        p.add_argument("--json", dest="as_json", action="store_true", default=True)
        p.add_argument("--text", dest="as_json", action="store_false")
        p.add_argument("--out", help="write the report to this path")

    p = sub.add_parser("analyze", help="tensors, constants and flags")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("cd", help="inequality parameter grid")
    common(p)
    p.add_argument("--ell", default="0.1,1,10")
    p.add_argument("--c", default="auto")
    p.set_defaults(func=cmd_cd)

    p = sub.add_parser("verify", help="pointwise inequality verification on random jets")
    common(p)
    p.add_argument("--ell", default="0.1,1,10")
    p.add_argument("--c", default="auto,1")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("spectral", help="spectral-gap bounds and oracle comparison")
    common(p)
    p.add_argument("--jmax", type=float, default=None)
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("simulate", help="diffusion simulation and consistency check")
    common(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--function", default="trace_re")
    p.add_argument("--out-csv", dest="out_csv", help="write recorded states as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="irreducible-representation eigenvalue table")
    common(p)
    p.add_argument("--jmax", type=float, default=None)
    p.set_defaults(func=cmd_oracle)

    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code, report = args.func(args)
    except InternalConsistencyError as exc:
        print(f"internal consistency error: {exc}", file=sys.stderr)
        return 3
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalBlowup as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return 1
    text = canonical_json(report) if args.as_json else _render_text(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
