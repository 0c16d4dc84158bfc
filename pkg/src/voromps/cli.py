"""Command-line front end.

Six subcommands: ``generate`` writes a site cloud, ``validate`` checks the
standing assumptions at a focal site, ``apply-op`` evaluates one operator,
``bounds`` prints the constants and budgets, ``study`` runs the empirical
error study, and ``corollary71`` prints the worked closed-form regimes.

Exit codes: 0 on success, 1 when a check fails or the configuration is
unusable, 2 for malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bounds import (
    compute_constants,
    operator_budget,
    reference_budgets,
    scenario_parameters,
    simplified_budgets,
)
from .errors import VoroMpsError
from .functions import FIELD_NAMES, field_catalog
from .geometry import DomainSpec, build_voronoi, validate_standing_assumptions
from .harness import (
    GENERATORS,
    StudyConfig,
    load_sites,
    make_weight,
    pick_focal,
    run_study,
    save_sites,
    sites_on,
)
from .operators import (
    OPERATOR_KINDS,
    cell_stage_operator,
    continuous_operator,
    discrete_operator,
    make_context,
)

FINE_PRESET = "corollary71-i"
COARSE_PRESET = "corollary71-ii"

_COARSE_STUDY = StudyConfig(
    generator="jittered",
    spacings=(0.012,),
    jitter=0.15,
    seed=7,
    c_star=4.0,
    lam=0.5,
    delta_fraction=0.5,
    weight="indicator",
    omega_min=(0.0, 0.0),
    omega_max=(0.4, 0.4),
)


def _add_cloud_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sites", required=True, help="site cloud JSON file")
    p.add_argument("--c-star", type=float, default=4.0,
                   help="interaction radius as a multiple of the cell radius")
    p.add_argument("--delta-fraction", type=float, default=0.5,
                   help="inner exclusion as a fraction of the cell radius")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5,
                   help="reduced-neighborhood fraction")
    p.add_argument("--weight", choices=("indicator", "taper"), default="indicator")
    p.add_argument("--focal-index", type=int, default=None)


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="voromps")
    sub = top.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a site cloud JSON file")
    g.add_argument("--generator", choices=GENERATORS, default="jittered")
    g.add_argument("--spacing", type=float, required=True)
    g.add_argument("--jitter", type=float, default=0.15)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--omega-min", type=float, nargs=2, default=(0.0, 0.0))
    g.add_argument("--omega-max", type=float, nargs=2, default=(1.0, 1.0))
    g.add_argument("--padding", type=float, default=None,
                   help="padded margin width; twice the spacing when omitted")
    g.add_argument("--moat-band", type=float, nargs=2, default=None,
                   help="vacated radius band for the moat generator")
    g.add_argument("--out", required=True)

    v = sub.add_parser("validate", help="check the standing assumptions")
    _add_cloud_args(v)

    a = sub.add_parser("apply-op", help="evaluate one operator at the focal site")
    _add_cloud_args(a)
    a.add_argument("--operator", choices=OPERATOR_KINDS, required=True)
    a.add_argument("--stage", choices=("continuous", "hat", "breve", "tilde"),
                   default="tilde")
    a.add_argument("--function", choices=FIELD_NAMES, required=True)

    b = sub.add_parser("bounds", help="print bound constants and budgets")
    _add_cloud_args(b)
    b.add_argument("--out", default=None, help="write JSON here instead of stdout")

    s = sub.add_parser("study", help="run the empirical error study")
    s.add_argument("--config", default=None, help="study configuration JSON")
    s.add_argument("--preset", default=None, choices=(FINE_PRESET, COARSE_PRESET))
    s.add_argument("--out", default=None, help="artifact directory")
    s.add_argument("--plots", action="store_true")
    s.add_argument("--seed", type=int, default=None, help="override the config seed")
    s.add_argument("--strict-assumptions", choices=("skip", "record"), default=None)

    c = sub.add_parser("corollary71", help="print the worked closed-form budgets")
    c.add_argument("--preset", required=True, choices=(FINE_PRESET, COARSE_PRESET))
    c.add_argument("--m", type=int, default=1,
                   help="refinement index for the fine regime")
    c.add_argument("--json", action="store_true", dest="as_json")
    return top


# ---------------------------------------------------------------------------
# per-command drivers


def _cmd_generate(args) -> int:
    padding = args.padding if args.padding is not None else 2.0 * args.spacing
    domain = DomainSpec(args.omega_min, args.omega_max, padding)
    cfg = StudyConfig(
        generator=args.generator,
        spacings=(args.spacing,),
        jitter=args.jitter,
        seed=args.seed,
        omega_min=tuple(args.omega_min),
        omega_max=tuple(args.omega_max),
        padding=padding,
        moat_band=tuple(args.moat_band) if args.moat_band else None,
    )
    sites = sites_on(domain, cfg, args.spacing)
    save_sites(args.out, domain, sites)
    print(f"wrote {len(sites)} sites to {args.out}")
    return 0


def _focal_setup(args):
    domain, sites = load_sites(args.sites)
    decomp = build_voronoi(sites, domain)
    h = args.c_star * decomp.r_sigma
    k_probe = (
        args.focal_index if args.focal_index is not None
        else decomp.nearest_site(domain.center)
    )
    delta = min(
        args.delta_fraction * decomp.r_sigma,
        0.995 * decomp.cells[k_probe].inradius_at(decomp.sites[k_probe]),
    )
    return decomp, h, delta


def _cmd_validate(args) -> int:
    decomp, h, delta = _focal_setup(args)
    k = (
        args.focal_index if args.focal_index is not None
        else decomp.nearest_site(decomp.domain.center)
    )
    report = validate_standing_assumptions(decomp, k, h, delta, lam=args.lam)
    print(f"focal site {k} at {decomp.sites[k].tolist()} "
          f"(r_sigma={decomp.r_sigma:.6g}, h={h:.6g}, delta={delta:.6g})")
    for clause in report.clauses:
        mark = "PASS" if clause.passed else "FAIL"
        print(f"  {mark} {clause.name}: {clause.detail}")
    print(report.summary())
    return 0 if report.passed else 1


def _cmd_apply_op(args) -> int:
    decomp, h, delta = _focal_setup(args)
    focal, _ = pick_focal(decomp, h, delta, args.lam, args.focal_index)
    weight = make_weight(args.weight, delta, h)
    ctx = make_context(decomp, focal, weight, lam=args.lam)
    f = field_catalog(decomp.domain)[args.function]
    if args.stage == "tilde":
        res = discrete_operator(ctx, f, args.operator)
    elif args.stage == "continuous":
        res = continuous_operator(ctx, f, args.operator)
    else:
        res = cell_stage_operator(ctx, f, args.operator, args.stage)
    value = res.value.tolist() if isinstance(res.value, np.ndarray) else res.value
    print(json.dumps({
        "operator": res.kind,
        "stage": res.stage,
        "function": args.function,
        "value": value,
        "denominator": res.denominator,
        "focal": focal,
        "r_sigma": decomp.r_sigma,
        "h": h,
        "delta": delta,
    }, indent=2, sort_keys=True))
    return 0


def _cmd_bounds(args) -> int:
    decomp, h, delta = _focal_setup(args)
    focal, _ = pick_focal(decomp, h, delta, args.lam, args.focal_index)
    weight = make_weight(args.weight, delta, h)
    ctx = make_context(decomp, focal, weight, lam=args.lam)
    bundle = compute_constants(ctx)
    payload = {
        "focal": focal,
        "r_sigma": decomp.r_sigma,
        "h": h,
        "delta": delta,
        "lambda": args.lam,
        "constants": {
            name: {"value": bc.value, "parts": bc.parts}
            for name, bc in sorted(bundle.constants.items())
        },
        "budgets": {
            kind: operator_budget(kind, bundle).to_dict() for kind in OPERATOR_KINDS
        },
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _cmd_study(args) -> int:
    if (args.config is None) == (args.preset is None):
        print("study needs exactly one of --config or --preset", file=sys.stderr)
        return 2
    if args.preset == FINE_PRESET:
        print(
            f"the {FINE_PRESET} regime shrinks the cell radius by five orders of "
            "magnitude per step; realizing it as a particle study would need on "
            "the order of 10^8 sites. Its budgets are closed forms; print them "
            f"with: voromps corollary71 --preset {FINE_PRESET} --m 1",
            file=sys.stderr,
        )
        return 1
    if args.preset == COARSE_PRESET:
        config = _COARSE_STUDY
    else:
        config = StudyConfig.from_json(args.config)
    if args.seed is not None:
        config = StudyConfig(**{**config.__dict__, "seed": args.seed})
    if args.strict_assumptions is not None:
        config = StudyConfig(
            **{**config.__dict__, "strict_assumptions": args.strict_assumptions}
        )
    result = run_study(config, out_dir=args.out, plots=args.plots)
    rows = result.rows
    passed = sum(1 for r in rows if r["pass"])
    for run in result.runs:
        soft = [name for name, ok in run.clauses.items() if not ok]
        note = f" (recorded clause failures: {', '.join(soft)})" if soft else ""
        print(
            f"spacing {run.spacing:g}: {run.n_sites} sites, r_sigma={run.r_sigma:.6g}, "
            f"h={run.h:.6g}, focal={run.focal}{note}"
        )
    print(f"{passed}/{len(rows)} rows within budget")
    if args.out:
        print(f"artifacts in {args.out}")
    return 0 if passed == len(rows) else 1


def _format_coeffs(coeffs: dict[int, float]) -> str:
    return " + ".join(
        f"{coeff:.6g}*|f|_{order}" for order, coeff in sorted(coeffs.items(), reverse=True)
    )


def _cmd_corollary71(args) -> int:
    if args.preset == FINE_PRESET:
        if args.m < 1:
            print("--m must be a positive integer", file=sys.stderr)
            return 2
        params = scenario_parameters("fine", args.m)
        simp = simplified_budgets("fine", args.m)
    else:
        params = scenario_parameters("coarse")
        simp = simplified_budgets("coarse")
    ref = reference_budgets(params["c_star"], params["lam"], params["r_sigma"])
    if args.as_json:
        print(json.dumps({
            "preset": args.preset,
            "parameters": params,
            "simplified": {k: {str(o): c for o, c in v.items()} for k, v in simp.items()},
            "general": {k: {str(o): c for o, c in v.items()} for k, v in ref.items()},
        }, indent=2, sort_keys=True))
        return 0
    print(f"preset {args.preset}: r_sigma={params['r_sigma']:g}, "
          f"h={params['c_star'] * params['r_sigma']:g} "
          f"(multiple {params['c_star']:g}), lambda={params['lam']:g}")
    print(f"{'operator':10s} {'quoted budget':42s} general form")
    for kind in OPERATOR_KINDS:
        print(f"{kind:10s} {_format_coeffs(simp[kind]):42s} {_format_coeffs(ref[kind])}")
    return 0


_DRIVERS = {
    "generate": _cmd_generate,
    "validate": _cmd_validate,
    "apply-op": _cmd_apply_op,
    "bounds": _cmd_bounds,
    "study": _cmd_study,
    "corollary71": _cmd_corollary71,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _DRIVERS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VoroMpsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
