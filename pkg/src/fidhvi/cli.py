"""Command-line front end.

Subcommands:
  check    estimate hypothesis constants and test the smallness conditions
  solve    run the fixed-point solver and the residual certificate
  perturb  perturbation-convergence study for a preset
  contact  rod contact application (solve, continuation, perturbation)
  bench    grid-refinement study against the finest configured grid

Exit codes: 0 success, 2 configuration error, 3 violated hypothesis constant,
4 solver non-convergence.  Failures print one JSON line to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .contact import (
    CONTACT_MODELS,
    friction_continuation,
    get_contact_model,
    run_contact_perturbation,
    to_problem_spec,
)
from .errors import ConfigError, ConstantViolation, NonConvergence
from .hypotheses import check_HO, hypotheses_report
from .io import ensure_dir, write_json, write_table
from .perturbation import run_perturbation_study
from .presets import PRESETS, get_preset
from .solver import contraction_factor, picard_solve, residual_check
from .trajectory import trajectory_to_csv

_CONFIG_KEYS = {
    "preset", "model", "cells", "kappa", "impulse_times",
    "tol", "inner_tol", "max_sweeps", "deltas", "sample_count", "radius",
    "threads", "factors", "relative_rate", "perturb", "continuation",
    "cells_list",
}


def _load_config(path) -> dict:
    if path is None:
        raise ConfigError("a --config file is required")
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(cfg) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _build_spec(cfg, cells):
    """Build the problem instance named by the config (preset or model)."""
    preset = cfg.get("preset")
    model = cfg.get("model")
    if (preset is None) == (model is None):
        raise ConfigError("config must name exactly one of 'preset' or 'model'")
    kappa = cfg.get("kappa")
    if model is not None:
        spec = to_problem_spec(
            get_contact_model(model), cells=cells, kappa=kappa
        )
        return model, spec
    kwargs = {"cells": cells}
    if kappa is not None:
        kwargs["kappa"] = float(kappa)
    if cfg.get("impulse_times") is not None:
        kwargs["impulse_times"] = tuple(cfg["impulse_times"])
    return preset, get_preset(preset).build(**kwargs)


def _gate(spec):
    """Reject the instance before solving when the smallness conditions fail."""
    margin_ok, contraction_ok, rho = check_HO(spec)
    if not margin_ok:
        # re-raise with the violating numbers attached
        contraction_factor(spec)
    if not contraction_ok:
        raise ConstantViolation(
            "contraction factor must be below one", lhs=rho, rhs=1.0
        )
    return rho


def _solve_outputs(out, name, spec, rep, check):
    from . import plots

    trajectory_to_csv(rep.z, os.path.join(out, "trajectory.csv"))
    write_table(
        os.path.join(out, "inner.csv"),
        ["t"] + [f"y_{k + 1}" for k in range(rep.y.dim)],
        [
            (float(t),) + tuple(float(v) for v in row)
            for t, row in zip(rep.y.grid.nodes, rep.y.values)
        ],
    )
    write_table(
        os.path.join(out, "convergence.csv"),
        ["sweep", "sup_delta", "max_inner_residual"],
        [
            (k + 1, float(d), float(r))
            for k, (d, r) in enumerate(zip(rep.sweep_deltas, rep.sweep_inner_residuals))
        ],
    )
    plots.save_trajectory_plot(
        rep.z, os.path.join(out, "trajectory.png"), title=f"{name}: state"
    )
    plots.save_convergence_plot(
        rep.sweep_deltas, rep.contraction_factor, os.path.join(out, "convergence.png")
    )
    write_json(
        os.path.join(out, "report.json"),
        {
            "problem": name,
            "cells": rep.z.grid.n_nodes - 1,
            "kappa": spec.kappa,
            "contraction_factor": rep.contraction_factor,
            "sweeps": rep.picard_iterations,
            "final_delta": rep.sweep_deltas[-1] if rep.sweep_deltas else None,
            "max_inclusion_residual": rep.max_inclusion_residual,
            "integral_equation_residual": rep.integral_equation_residual,
            "r_z": check.r_z,
            "r_y": check.r_y,
            "caputo_residual": check.caputo_residual,
            "notes": list(rep.notes),
        },
    )


def _cmd_check(args):
    cfg = _load_config(args.config)
    out = ensure_dir(args.out)
    name, spec = _build_spec(cfg, args.nodes or cfg.get("cells", 1024))
    margin_ok, contraction_ok, rho = check_HO(spec)
    estimates = hypotheses_report(
        spec,
        sample_count=int(cfg.get("sample_count", 200)),
        radius=float(cfg.get("radius", 1.0)),
        seed=args.seed,
    )
    write_table(
        os.path.join(out, "hypotheses.csv"),
        ["constant", "declared", "observed", "samples", "verdict"],
        [
            (e.name, e.declared, e.observed_extremum, e.samples, e.verdict)
            for e in estimates
        ],
    )
    from . import plots

    plots.save_hypotheses_plot(estimates, os.path.join(out, "hypotheses.png"))
    refuted = [e.name for e in estimates if e.verdict != "consistent"]
    write_json(
        os.path.join(out, "summary.json"),
        {
            "problem": name,
            "margin_ok": margin_ok,
            "contraction_ok": contraction_ok,
            "contraction_factor": None if math.isnan(rho) else rho,
            "refuted": refuted,
        },
    )
    print(
        f"check {name}: margin_ok={margin_ok} contraction_ok={contraction_ok} "
        f"refuted={refuted or 'none'} -> {out}"
    )
    if not margin_ok:
        contraction_factor(spec)  # raises with the violating numbers
    if not contraction_ok:
        raise ConstantViolation(
            "contraction factor must be below one", lhs=rho, rhs=1.0
        )
    if refuted:
        raise ConstantViolation(
            "randomized sampling refuted declared constants: " + ", ".join(refuted)
        )
    return 0


def _cmd_solve(args):
    cfg = _load_config(args.config)
    out = ensure_dir(args.out)
    name, spec = _build_spec(cfg, args.nodes or cfg.get("cells", 1024))
    _gate(spec)
    rep = picard_solve(
        spec,
        tol=float(cfg.get("tol", 1e-10)),
        max_sweeps=int(cfg.get("max_sweeps", 200)),
        inner_tol=float(cfg.get("inner_tol", 1e-10)),
    )
    check = residual_check(spec, rep)
    _solve_outputs(out, name, spec, rep, check)
    print(
        f"solve {name}: sweeps={rep.picard_iterations} "
        f"final_delta={rep.sweep_deltas[-1]:.3e} r_z={check.r_z:.3e} "
        f"r_y={check.r_y:.3e} -> {out}"
    )
    return 0


def _cmd_perturb(args):
    cfg = _load_config(args.config)
    out = ensure_dir(args.out)
    name, spec = _build_spec(cfg, args.nodes or cfg.get("cells", 512))
    _gate(spec)
    deltas = args.deltas or cfg.get("deltas") or (1e-1, 1e-2, 1e-3, 1e-4)
    study = run_perturbation_study(
        spec,
        deltas=tuple(float(d) for d in deltas),
        tol=float(cfg.get("tol", 1e-10)),
        inner_tol=float(cfg.get("inner_tol", 1e-10)),
        threads=cfg.get("threads"),
    )
    _write_study(out, name, study, "perturbation")
    print(f"perturb {name}: slope={study.slope:.4f} -> {out}")
    return 0


def _write_study(out, name, study, stem):
    from . import plots

    write_table(
        os.path.join(out, f"{stem}.csv"),
        ["delta", "V_delta", "sup_z_err", "sup_y_err", "gronwall_ceiling", "y_bound"],
        [
            (r.delta, r.v_delta, r.sup_z_err, r.sup_y_err, r.gronwall_ceiling, r.y_bound)
            for r in study.rows
        ],
    )
    plots.save_perturbation_plot(
        study.rows, os.path.join(out, f"{stem}.png"), title=f"{name}: {stem}"
    )
    write_json(
        os.path.join(out, f"{stem}_summary.json"),
        {"problem": name, "slope": study.slope, "k2": study.k2},
    )


def _cmd_contact(args):
    cfg = _load_config(args.config)
    out = ensure_dir(args.out)
    model_name = cfg.get("model")
    if model_name is None:
        raise ConfigError("contact config must name a 'model'")
    model = get_contact_model(model_name)
    cells = int(args.nodes or cfg.get("cells", 512))
    spec = to_problem_spec(model, cells=cells, kappa=cfg.get("kappa"))
    _gate(spec)
    tol = float(cfg.get("tol", 1e-10))
    inner_tol = float(cfg.get("inner_tol", 1e-10))
    rep = picard_solve(
        spec, tol=tol, max_sweeps=int(cfg.get("max_sweeps", 200)), inner_tol=inner_tol
    )
    check = residual_check(spec, rep)

    write_table(
        os.path.join(out, "displacement.csv"),
        ["t"] + [f"u_{k + 1}" for k in range(rep.y.dim)],
        [
            (float(t),) + tuple(float(v) for v in row)
            for t, row in zip(rep.y.grid.nodes, rep.y.values)
        ],
    )
    state_rows = []
    imp_by_node = {
        int(i): j for j, i in enumerate(rep.z.grid.impulse_indices)
    }
    for k, t in enumerate(rep.z.grid.nodes):
        state_rows.append((float(t), float(rep.z.values[k, 0]), 0))
        if k in imp_by_node:
            state_rows.append(
                (float(t), float(rep.z.right_values[imp_by_node[k], 0]), 1)
            )
    write_table(
        os.path.join(out, "state.csv"), ["t", "f2", "is_right_limit"], state_rows
    )
    from . import plots

    plots.save_trajectory_plot(
        rep.y, os.path.join(out, "displacement.png"),
        title=f"{model_name}: nodal displacements", ylabel="u",
    )
    plots.save_trajectory_plot(
        rep.z, os.path.join(out, "state.png"),
        title=f"{model_name}: internal force state", ylabel="f2",
    )
    summary = {
        "model": model_name,
        "cells": cells,
        "contraction_factor": rep.contraction_factor,
        "sweeps": rep.picard_iterations,
        "r_z": check.r_z,
        "r_y": check.r_y,
        "caputo_residual": check.caputo_residual,
    }

    if cfg.get("continuation"):
        factors = cfg.get("factors") or (1.0, 0.1, 0.01, 1e-3, 1e-4, 1e-5, 1e-6)
        rows = friction_continuation(
            model, factors=tuple(float(s) for s in factors), cells=cells,
            tol=tol, inner_tol=inner_tol,
        )
        write_table(
            os.path.join(out, "continuation.csv"),
            ["factor", "state_gap", "field_gap"],
            rows,
        )
        summary["continuation_final_gap"] = rows[-1][1]

    if cfg.get("perturb"):
        deltas = args.deltas or cfg.get("deltas") or (1e-1, 1e-2, 1e-3, 1e-4)
        study = run_contact_perturbation(
            model,
            deltas=tuple(float(d) for d in deltas),
            cells=cells,
            relative_rate=float(cfg.get("relative_rate", 0.1)),
            tol=tol,
            inner_tol=inner_tol,
            threads=cfg.get("threads"),
        )
        _write_study(out, model_name, study, "contact_perturbation")
        summary["perturbation_slope"] = study.slope

    write_json(os.path.join(out, "report.json"), summary)
    print(
        f"contact {model_name}: sweeps={rep.picard_iterations} r_z={check.r_z:.3e} "
        f"r_y={check.r_y:.3e} -> {out}"
    )
    return 0


def _cmd_bench(args):
    cfg = _load_config(args.config)
    out = ensure_dir(args.out)
    cells_list = [int(c) for c in cfg.get("cells_list", (128, 256, 512, 1024))]
    if len(cells_list) < 2:
        raise ConfigError("bench needs at least two cell counts")
    if sorted(cells_list) != cells_list:
        raise ConfigError("bench cell counts must be increasing")
    tol = float(cfg.get("tol", 1e-10))
    inner_tol = float(cfg.get("inner_tol", 1e-10))
    reports = []
    name = None
    for cells in cells_list:
        name, spec = _build_spec(cfg, cells)
        _gate(spec)
        rep = picard_solve(spec, tol=tol, inner_tol=inner_tol)
        reports.append((cells, spec, rep))
    ref_cells, _, ref = reports[-1]
    rows = []
    gaps = []
    for cells, spec, rep in reports[:-1]:
        stride = ref_cells // cells
        gap = float(
            np.abs(rep.z.values - ref.z.values[::stride]).max()
        )
        rows.append((cells, gap, rep.picard_iterations, rep.max_inclusion_residual))
        gaps.append(gap)
    write_table(
        os.path.join(out, "bench.csv"),
        ["cells", "sup_gap_to_reference", "sweeps", "max_inner_residual"],
        rows,
    )
    from . import plots

    plots.save_accuracy_plot(
        [r[0] for r in rows], gaps, os.path.join(out, "bench.png"),
        title=f"{name}: refinement towards {ref_cells} cells",
    )
    ratios = [
        gaps[i] / gaps[i + 1] for i in range(len(gaps) - 1) if gaps[i + 1] > 0
    ]
    write_json(
        os.path.join(out, "bench_summary.json"),
        {
            "problem": name,
            "reference_cells": ref_cells,
            "refinement_ratios": ratios,
        },
    )
    print(f"bench {name}: gaps={['%.3e' % g for g in gaps]} -> {out}")
    return 0


def _parser():
    p = argparse.ArgumentParser(
        prog="fidhvi",
        description="fractional impulsive solver with a nonsmooth inner inclusion",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("check", _cmd_check),
        ("solve", _cmd_solve),
        ("perturb", _cmd_perturb),
        ("contact", _cmd_contact),
        ("bench", _cmd_bench),
    ):
        q = sub.add_parser(name)
        q.add_argument("--config", required=True, help="JSON configuration file")
        q.add_argument("--out", default="./fidhvi_out", help="output directory")
        q.add_argument("--seed", type=int, default=0, help="sampling seed")
        q.add_argument("--nodes", type=int, default=None, help="override cell count")
        q.add_argument(
            "--deltas", type=float, nargs="+", default=None,
            help="override perturbation sizes",
        )
        q.set_defaults(handler=fn)
    return p


def _fail(exc, code):
    payload = {"error": type(exc).__name__, "message": str(exc)}
    lhs = getattr(exc, "lhs", None)
    rhs = getattr(exc, "rhs", None)
    if lhs is not None:
        payload["lhs"] = lhs
    if rhs is not None:
        payload["rhs"] = rhs
    residual = getattr(exc, "residual", None)
    if residual is not None:
        payload["residual"] = residual
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def entry(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        return _fail(exc, 2)
    except ConstantViolation as exc:
        return _fail(exc, 3)
    except NonConvergence as exc:
        return _fail(exc, 4)


if __name__ == "__main__":
    sys.exit(entry())
