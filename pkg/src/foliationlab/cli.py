"""Command line front end.

One subcommand per laboratory operation.  Reports go to stdout as a
single JSON document (complex numbers as [re, im] pairs) or, with
--format csv, as a flat table whose columns are listed in the
subcommand's --help.  Output bytes are a deterministic function of argv,
including --seed and --jobs.

Exit codes: 0 success, 1 a certified value failed verification,
2 invalid input, 3 an iteration failed to converge.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys

import numpy as np

from . import __version__
from .errors import ConvergenceError, InputError, VerificationError
from .jouanolou import (
    FoliationParams,
    counts,
    family_field,
    group_elements,
    pushforward_factor,
    unit_root,
)
from .solver import RunConfig, track_singularities
from .spectral import min_separation, spectrum_report
from .genericity import (
    SUBMERSION_RTOL,
    RANK_GAP,
    alignment_census,
    coeff_derivative_table,
    defect_experiment,
    genericity_sample,
    hyperplane_set,
    submersion_all,
    submersion_report,
)

_CFG_DEFAULTS = RunConfig()


def _parse_complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(
            f"expected 're,im' with two comma-separated reals, got {text!r}"
        )
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _parse_mu_grid(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.complexfloating,)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: _jsonable(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
            if not f.name.startswith("_")
        }
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _complex_cols(name: str, value: complex) -> list[tuple[str, str]]:
    return [(f"{name}_re", repr(value.real)), (f"{name}_im", repr(value.imag))]


def _make_cfg(args) -> RunConfig:
    return RunConfig(
        newton_tol=args.newton_tol,
        max_iters=args.max_iters,
        continuation_steps=args.continuation_steps,
        dedup_tol=args.dedup_tol,
        radius=args.radius,
        fd_step=args.fd_step,
        tol_hyp=args.tol_hyp,
        tol_nd=args.tol_nd,
        align_tol=args.align_tol,
        delta=args.delta,
        max_order=args.max_order,
        seed=args.seed,
        samples=args.samples,
    )


def _alpha_from(args, n: int) -> tuple[complex, ...]:
    alpha = tuple(args.alpha or ())
    if not alpha:
        return (0j,) * n
    if len(alpha) != n:
        raise InputError(f"--alpha given {len(alpha)} times, expected {n} (one per coordinate)")
    return alpha


def _params_from(args) -> FoliationParams:
    return FoliationParams(args.n, args.d, _alpha_from(args, args.n))


# ---------------------------------------------------------------------------
# subcommand handlers: each returns (payload, rows, warnings, exit_code)
# where rows is the CSV form [(header...), (row...), ...]


def _cmd_counts(args, cfg):
    c = counts(args.n, args.d)
    payload = {"N": c.N, "M": c.M, "K": c.K}
    rows = [("n", "d", "N", "M", "K"),
            tuple(map(str, (args.n, args.d, c.N, c.M, c.K)))]
    return payload, rows, [], 0


def _point_rows(points, n):
    header = ["m", "converged", "newton_iters", "residual"]
    for i in range(1, n + 1):
        header += [f"x{i}_re", f"x{i}_im"]
    rows = [tuple(header)]
    for p in points:
        row = [str(p.m), _fmt(p.converged), str(p.newton_iters), repr(p.residual)]
        for z in p.coords:
            row += [repr(z.real), repr(z.imag)]
        rows.append(tuple(row))
    return rows


def _cmd_sing(args, cfg):
    params = _params_from(args)
    points = track_singularities(params, cfg)
    payload = [dataclasses.asdict(p) for p in points]
    return payload, _point_rows(points, params.n), [], 0


def _cmd_spectrum(args, cfg):
    params = _params_from(args)
    points = track_singularities(params, cfg)
    if args.m != "all":
        wanted = int(args.m)
        points = [p for p in points if p.m == wanted]
        if not points:
            raise InputError(f"no zero with index m={wanted}")
    field = family_field(params)
    reports = [spectrum_report(field, p, cfg) for p in points]
    warnings = []
    for rep in reports:
        sep = min_separation(rep.eigenvalues)
        if sep < 1e-6:
            warnings.append(
                f"m={rep.m}: eigenvalues nearly repeated (separation {sep:.3e}); "
                "root conditioning is poor near the discriminant"
            )
    header = ["m", "classification", "resonant", "c_min", "worst_j", "worst_m"]
    n = params.n
    for i in range(1, n + 1):
        header += [f"sigma{i}_re", f"sigma{i}_im"]
    for i in range(1, n + 1):
        header += [f"lambda{i}_re", f"lambda{i}_im"]
    rows = [tuple(header)]
    for rep in reports:
        row = [str(rep.m), rep.classification, _fmt(rep.divisor.resonant),
               repr(rep.divisor.c_min), str(rep.divisor.worst_j),
               ";".join(map(str, rep.divisor.worst_m))]
        for z in rep.sigma:
            row += [repr(float(z.real)), repr(float(z.imag))]
        for z in rep.eigenvalues:
            row += [repr(float(z.real)), repr(float(z.imag))]
        rows.append(tuple(row))
    return [_jsonable(r) for r in reports], rows, warnings, 0


def _submersion_rows(reports, n):
    header = ["m", "abs_det", "expected_modulus", "rel_error", "fd_step", "sv_min", "sv_max"]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            header += [f"jac{i}{j}_re", f"jac{i}{j}_im"]
    rows = [tuple(header)]
    for rep in reports:
        row = [str(rep.m), repr(abs(rep.det)), repr(rep.expected_modulus),
               repr(rep.rel_error), repr(rep.fd_step), repr(rep.sv_min), repr(rep.sv_max)]
        for i in range(n):
            for j in range(n):
                z = rep.jac[i, j]
                row += [repr(float(z.real)), repr(float(z.imag))]
        rows.append(tuple(row))
    return rows


def _cmd_submersion(args, cfg):
    if args.m == "all":
        reports = submersion_all(args.n, args.d, cfg, stencil=args.stencil)
    else:
        reports = [submersion_report(args.n, args.d, int(args.m), cfg, stencil=args.stencil)]
    warnings = []
    code = 0
    for rep in reports:
        if rep.rel_error > SUBMERSION_RTOL:
            warnings.append(
                f"m={rep.m}: determinant modulus off by relative {rep.rel_error:.3e}"
            )
            code = 1
        if rep.sv_min <= RANK_GAP * rep.sv_max:
            warnings.append(f"m={rep.m}: rank certificate failed (singular value gap)")
            code = 1
    return [_jsonable(r) for r in reports], _submersion_rows(reports, args.n), warnings, code


def _cmd_derivs(args, cfg):
    entries = coeff_derivative_table(args.n, args.d, cfg)
    rows = [("i", "j", "explicit", "fd_re", "fd_im", "formula_re", "formula_im", "rel_error")]
    for e in entries:
        explicit = e.formula is not None
        rows.append((
            str(e.i), str(e.j), _fmt(explicit),
            repr(e.fd.real), repr(e.fd.imag),
            repr(e.formula.real) if explicit else "",
            repr(e.formula.imag) if explicit else "",
            repr(e.rel_error) if explicit else "",
        ))
    return [_jsonable(e) for e in entries], rows, [], 0


def _cmd_align(args, cfg):
    params = _params_from(args)
    points = track_singularities(params, cfg)
    records = alignment_census(points, params.d, cfg)
    rows = [("record", "size", "indices", "residual")]
    for idx, rec in enumerate(records):
        rows.append((str(idx), str(len(rec.indices)),
                     ";".join(map(str, rec.indices)), repr(rec.residual)))
    payload = {"count": len(records), "records": [_jsonable(r) for r in records]}
    return payload, rows, [], 0


def _cmd_hyperplanes(args, cfg):
    hs = hyperplane_set(args.n, args.d)
    header = ["k"]
    for i in range(1, args.n + 1):
        header += [f"normal{i}_re", f"normal{i}_im"]
    rows = [tuple(header)]
    for k, normal in zip(hs.element_powers, hs.images):
        row = [str(k)]
        for z in normal:
            row += [repr(float(z.real)), repr(float(z.imag))]
        rows.append(tuple(row))
    payload = {
        "base_normal": _jsonable(hs.base_normal),
        "images": [_jsonable(v) for v in hs.images],
        "element_powers": hs.element_powers,
    }
    return payload, rows, [], 0


def _cmd_defect(args, cfg):
    if args.nu is None:
        raise InputError("--nu is required (repeat once per coordinate)")
    if len(args.nu) != args.n:
        raise InputError(f"--nu given {len(args.nu)} times, expected {args.n}")
    coord_pair = None
    if args.coord_pair:
        parts = args.coord_pair.split(",")
        if len(parts) != 2:
            raise InputError("--coord-pair expects 'i,j'")
        coord_pair = (int(parts[0]), int(parts[1]))
    result = defect_experiment(args.n, args.d, tuple(args.nu), args.mu_grid, cfg,
                               coord_pair=coord_pair)
    rows = [("mu", "defect", "slope")]
    for mu, defect in zip(result.mus, result.defects):
        rows.append((repr(mu), repr(defect), repr(result.slope)))
    warnings = []
    if min(result.defects) < 1e-13:
        warnings.append(
            "some defects sit at rounding-noise level; the tracked pattern "
            "appears exactly aligned along this ray and the slope means nothing"
        )
    return _jsonable(result), rows, warnings, 0


def _cmd_pushforward(args, cfg):
    params = _params_from(args)
    elements = group_elements(args.n, args.d)
    k = args.k % len(elements)
    g = elements[k]
    c, alpha_t, residual = pushforward_factor(g, params)
    # closed diagonal guess xi^(-d) * (element scaling applied to alpha); the
    # factored values are authoritative whenever the two disagree
    big_n = g.order
    guess = tuple(
        unit_root(-args.d * k, big_n) * unit_root(w, big_n) * a
        for w, a in zip(g.weights, params.alpha)
    )
    matches = all(abs(x - y) <= 1e-9 for x, y in zip(alpha_t, guess))
    warnings = []
    if not matches:
        warnings.append(
            "factored parameter differs from the closed diagonal guess; "
            "coefficient matching is authoritative"
        )
    payload = {
        "k": g.k,
        "weights": list(g.weights),
        "c": _jsonable(c),
        "alpha_tilde": [_jsonable(a) for a in alpha_t],
        "residual": residual,
        "matches_diagonal_guess": matches,
    }
    header = ["k", "c_re", "c_im", "residual", "matches_diagonal_guess"]
    for i in range(1, args.n + 1):
        header += [f"alpha_tilde{i}_re", f"alpha_tilde{i}_im"]
    row = [str(g.k), repr(c.real), repr(c.imag), repr(residual), _fmt(matches)]
    for a in alpha_t:
        row += [repr(a.real), repr(a.imag)]
    return payload, [tuple(header), tuple(row)], warnings, 0


def _cmd_sample(args, cfg):
    stats = genericity_sample(args.n, args.d, cfg, jobs=args.jobs)
    payload = _jsonable(stats)
    fields = ["n", "d", "samples", "seed", "radius", "delta", "max_order",
              "n_failed", "n_all_hyperbolic", "n_any_resonant",
              "frac_failures", "frac_all_hyperbolic", "frac_any_resonant"]
    rows = [tuple(fields),
            tuple(_fmt(getattr(stats, f)) for f in fields)]
    return payload, rows, [], 0


_HANDLERS = {
    "counts": _cmd_counts,
    "sing": _cmd_sing,
    "spectrum": _cmd_spectrum,
    "submersion": _cmd_submersion,
    "derivs": _cmd_derivs,
    "align": _cmd_align,
    "hyperplanes": _cmd_hyperplanes,
    "defect": _cmd_defect,
    "pushforward": _cmd_pushforward,
    "sample": _cmd_sample,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="foliationlab",
        description="Numerical laboratory for a perturbed family of degree-d "
                    "foliations: zero tracking, spectra, and genericity experiments.",
    )
    parser.add_argument("--version", action="version", version=__version__)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, required=True, help="ambient dimension (>= 2)")
    common.add_argument("--d", type=int, required=True, help="degree (>= 1)")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="output format (default json)")
    common.add_argument("--newton-tol", type=float, default=_CFG_DEFAULTS.newton_tol)
    common.add_argument("--max-iters", type=int, default=_CFG_DEFAULTS.max_iters)
    common.add_argument("--continuation-steps", type=int,
                        default=_CFG_DEFAULTS.continuation_steps)
    common.add_argument("--dedup-tol", type=float, default=_CFG_DEFAULTS.dedup_tol)
    common.add_argument("--radius", type=float, default=_CFG_DEFAULTS.radius)
    common.add_argument("--fd-step", type=float, default=_CFG_DEFAULTS.fd_step)
    common.add_argument("--tol-hyp", type=float, default=_CFG_DEFAULTS.tol_hyp)
    common.add_argument("--tol-nd", type=float, default=_CFG_DEFAULTS.tol_nd)
    common.add_argument("--align-tol", type=float, default=_CFG_DEFAULTS.align_tol)
    common.add_argument("--delta", type=float, default=_CFG_DEFAULTS.delta)
    common.add_argument("--max-order", type=int, default=_CFG_DEFAULTS.max_order)
    common.add_argument("--seed", type=int, default=_CFG_DEFAULTS.seed)
    common.add_argument("--samples", type=int, default=_CFG_DEFAULTS.samples)

    alpha_parent = argparse.ArgumentParser(add_help=False)
    alpha_parent.add_argument(
        "--alpha", action="append", type=_parse_complex, metavar="RE,IM",
        help="one perturbation coordinate as 're,im'; repeat n times (default 0)",
    )

    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser(
        "counts", parents=[common],
        help="exact integer invariants N, M, K",
        description="Exact counts for (n, d). CSV columns: n,d,N,M,K.",
    )
    sub.add_parser(
        "sing", parents=[common, alpha_parent],
        help="track all zeros of the perturbed member",
        description="Tracked zeros. CSV columns: m,converged,newton_iters,"
                    "residual,x1_re,x1_im,...,xn_re,xn_im.",
    )
    spectrum = sub.add_parser(
        "spectrum", parents=[common, alpha_parent],
        help="spectral reports at tracked zeros",
        description="Spectral reports. CSV columns: m,classification,resonant,"
                    "c_min,worst_j,worst_m,sigma*_re/im,lambda*_re/im.",
    )
    spectrum.add_argument("--m", default="all", help="zero index, or 'all' (default)")
    submersion = sub.add_parser(
        "submersion", parents=[common],
        help="parameter Jacobian of the coefficient map with certificates",
        description="Submersion reports. CSV columns: m,abs_det,expected_modulus,"
                    "rel_error,fd_step,sv_min,sv_max,jacij_re/im.",
    )
    submersion.add_argument("--m", default="all", help="zero index, or 'all' (default)")
    submersion.add_argument("--stencil", choices=("central", "cauchy4"),
                            default="central",
                            help="finite-difference stencil (default central)")
    sub.add_parser(
        "derivs", parents=[common],
        help="derivative table at the all-ones zero vs closed formulas",
        description="Derivative table. CSV columns: i,j,explicit,fd_re,fd_im,"
                    "formula_re,formula_im,rel_error.",
    )
    sub.add_parser(
        "align", parents=[common, alpha_parent],
        help="census of aligned zero subsets",
        description="Alignment census. CSV columns: record,size,indices(';'-joined),residual.",
    )
    sub.add_parser(
        "hyperplanes", parents=[common],
        help="base alignment hyperplane and its group images",
        description="Hyperplane normals. CSV columns: k,normal*_re,normal*_im.",
    )
    defect = sub.add_parser(
        "defect", parents=[common],
        help="log-log slope of the alignment defect along a ray",
        description="Defect growth. CSV columns: mu,defect,slope (slope repeated).",
    )
    defect.add_argument("--nu", action="append", type=_parse_complex, metavar="RE,IM",
                        help="ray direction coordinate as 're,im'; repeat n times")
    defect.add_argument("--mu-grid", type=_parse_mu_grid,
                        default=(1e-2, 3e-3, 1e-3, 3e-4),
                        help="comma-separated mu values (default 1e-2,3e-3,1e-3,3e-4)")
    defect.add_argument("--coord-pair", default=None, metavar="I,J",
                        help="1-based coordinate pair for the defect determinant "
                             "(default first,last)")
    pushforward = sub.add_parser(
        "pushforward", parents=[common, alpha_parent],
        help="factor the pushforward along a symmetry element",
        description="Pushforward factorization. CSV columns: k,c_re,c_im,residual,"
                    "matches_diagonal_guess,alpha_tilde*_re/im.",
    )
    pushforward.add_argument("--k", type=int, default=1,
                             help="generator power (default 1)")
    sample = sub.add_parser(
        "sample", parents=[common],
        help="Monte Carlo sweep of the perturbation polydisk",
        description="Sampling summary. CSV columns: n,d,samples,seed,radius,delta,"
                    "max_order,n_failed,n_all_hyperbolic,n_any_resonant,"
                    "frac_failures,frac_all_hyperbolic,frac_any_resonant.",
    )
    sample.add_argument("--jobs", type=int, default=1,
                        help="worker processes (results do not depend on this)")
    return parser


def _emit(args, payload, rows, warnings) -> None:
    if args.format == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerows(rows)
        return
    report = {
        "tool_version": __version__,
        "command": args.command,
        "params": {"n": args.n, "d": args.d},
        "cfg": _jsonable(_make_cfg(args)),
        "payload": _jsonable(payload),
        "warnings": warnings,
    }
    alpha = getattr(args, "alpha", None)
    if alpha is not None:
        report["params"]["alpha"] = [_jsonable(a) for a in alpha]
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")


def run(argv) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _make_cfg(args)
        payload, rows, warnings, code = _HANDLERS[args.command](args, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except VerificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        payload = _jsonable(exc.payload) if exc.payload is not None else None
        _emit(args, payload, [("error",), (str(exc),)], [str(exc)])
        return 1
    _emit(args, payload, rows, warnings)
    return code


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
