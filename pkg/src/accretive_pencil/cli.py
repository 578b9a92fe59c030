"""Command-line entry point: JSON in, JSON report and CSV out.

Exit status is 0 when every check passes, 1 when a check fails or a
numerical error occurs, and 2 on usage or input errors.
"""

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import bvp, operator_core, pde_example, pencil, semigroup
from .exceptions import PencilError
from .schemas import validate_input, validate_report

__all__ = ["RunConfig", "run", "main", "fixture_path"]

COMMANDS = ("check", "factorize", "numrange", "semigroup", "solve", "pde-example")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: str = None
    out: str = None
    report: str = None
    seed: int = 0
    tol: float = None
    convention: str = "auto"
    samples: int = None
    grid: int = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.seed is None:
            self.seed = 0
        if not 0 <= int(self.seed) < 2**64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        if self.convention not in ("auto", "real", "rotated", "real_root", "rotated_root"):
            raise UsageError(f"unknown convention {self.convention!r}")


def fixture_path(name):
    """Path of a bundled fixture, e.g. ``fixture_path("ex35.json")``."""
    return resources.files("accretive_pencil") / "fixtures" / name


def _load(config):
    if config.input is None:
        if config.command == "pde-example":
            path = fixture_path("default_pde.json")
        else:
            raise UsageError(f"{config.command} needs --input")
    else:
        path = Path(config.input)
        if not path.exists():
            bundled = fixture_path(path.name)
            if not bundled.is_file():
                raise UsageError(f"input file {config.input} not found")
            path = bundled
    text = path.read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        validate_input(config.command, obj)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from exc
    return obj


def _clean(v):
    """Recursively convert to plain JSON, mapping non-finite floats to strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [_clean(v.real), _clean(v.imag)]
    return v


def _convention(config, default="real_root"):
    return default if config.convention == "auto" else pencil.Convention.parse(config.convention).value


# --------------------------------------------------------------------------
# commands


def _cmd_check(obj, config):
    p = pencil.pencil_from_json(obj)
    B, B2 = p.B, p.B2
    H, _ = operator_core.hermitian_split(B)
    ok_b, m_b = operator_core.sector_test(B, operator_core.Sector(np.pi / 4), config.tol)
    ok_b2, m_b2 = operator_core.sector_test(B2, operator_core.Sector(np.pi / 2), config.tol)
    e1 = np.zeros(p.dim)
    e1[0] = 1.0
    outcomes = {
        "B_sector_pi_4": ok_b,
        "B2_right_half_plane": ok_b2,
        "B_accretive": operator_core.accretivity_margin(B) >= -operator_core.scale_tol(B, 1e-10),
    }
    b_quad, a_est, c2 = pencil.estimate_c2(p)
    samples = 100_000 if config.samples is None else config.samples
    reports = [c2]
    if c2.passed:
        # constants that (C.2) hands to (C.1)
        c1_params = pencil.ConditionC1Params(a_est / 2, (b_quad + 1) / 2, 0.0)
        reports.append(pencil.check_c1(p, c1_params, samples=samples, seed=config.seed))
    reports += [
        pencil.check_c3(p),
        pencil.check_c4_c5(p),
        pencil.build_lambda(p)[1],
        pencil.kernel_inclusion_lambda(p, float(obj.get("theta", np.pi / 4))),
        pencil.eigenvalue_localization_check(p),
    ]
    for r in reports:
        if r.mode != "hypothesis_unmet":
            outcomes[r.condition] = r.passed
    expected = obj.get("expected", {})
    mismatches = sorted(k for k, v in outcomes.items() if v != expected.get(k, True))
    missing = sorted(k for k in expected if k not in outcomes)
    results = {
        "hermitian_part_B": operator_core.operator_to_json(H),
        "sector_B_pi_4": {"pass": ok_b, "margin": m_b},
        "sector_B2_pi_2": {"pass": ok_b2, "margin": m_b2},
        "B2_e1_e1": complex(np.vdot(e1, B2 @ e1)),
        "conditions": [r.to_dict() for r in reports],
        "outcomes": outcomes,
        "expected": expected,
        "mismatches": mismatches + missing,
    }
    return not (mismatches or missing), results, None


def _cmd_factorize(obj, config):
    p = pencil.pencil_from_json(obj)
    conv = _convention(config)
    try:
        f = pencil.factorize(p, conv)
    except PencilError:
        if config.convention != "auto":
            raise
        conv = "rotated_root"
        f = pencil.factorize(p, conv)
    rng = np.random.default_rng(config.seed)
    n_lam = 100 if config.samples is None else config.samples
    lams = rng.standard_normal(n_lam) + 1j * rng.standard_normal(n_lam)
    sym = np.array([pencil.symmetrized_residual(f, p, lam) / (abs(lam) ** 2 + p.scale()) for lam in lams])
    ordr = np.array([pencil.ordered_residual(f, p, lam) for lam in lams])
    rtol = 1e-10 if config.tol is None else config.tol
    results = {
        "convention": f.convention.value,
        "Z1": operator_core.operator_to_json(f.Z1),
        "Z2": operator_core.operator_to_json(f.Z2),
        "S": operator_core.operator_to_json(f.S),
        "root_residual": f.root_residual(),
        "commutator_norm": f.commutator_norm,
        "lambda_margin": f.lambda_margin,
        "symmetrized_residual_max": float(sym.max()),
        "ordered_residual_mean": float(ordr.mean()),
        "ordered_residual_std": float(ordr.std()),
        "lambda_samples": n_lam,
    }
    rows = [("lambda_re", "lambda_im", "symmetrized", "ordered")]
    rows += [(lam.real, lam.imag, s, o) for lam, s, o in zip(lams, sym, ordr)]
    return bool(sym.max() <= rtol), results, rows


def _cmd_numrange(obj, config):
    A = operator_core.operator_from_json(obj["A"])
    m = 720 if config.grid is None else config.grid
    sample = operator_core.numerical_range(A, m)
    ok_spec, worst = operator_core.spectral_inclusion_check(A, m, config.tol)
    results = {
        "angles": m,
        "accretivity_margin": operator_core.accretivity_margin(A),
        "spectral_inclusion": {"pass": ok_spec, "worst": worst},
        "kernel_equality": dict(zip(("pass", "gap"), operator_core.kernel_equality_check(A))),
    }
    passed = ok_spec
    if "sector" in obj:
        ok, margin = operator_core.sector_test(A, operator_core.Sector(float(obj["sector"])), config.tol)
        results["sector"] = {"half_angle": float(obj["sector"]), "pass": ok, "margin": margin}
        passed = passed and ok
    rows = [("angle", "support", "re_boundary", "im_boundary")]
    rows += [(a, s, z.real, z.imag) for a, s, z in zip(sample.angles, sample.support_values,
                                                      sample.boundary_points)]
    return passed, results, rows


def _cmd_semigroup(obj, config):
    T = operator_core.operator_from_json(obj["T"])
    ts = tuple(obj.get("t_samples", semigroup.DEFAULT_T_SAMPLES))
    worst = semigroup.contraction_check(T, ts)
    tol = 1e-12 if config.tol is None else config.tol
    results = {"contraction_worst_norm": worst, "t_samples": list(ts)}
    passed = worst <= 1 + tol
    reports = []
    if "psi" in obj:
        reports.append(semigroup.holomorphic_sector_check(T, float(obj["psi"])))
    if "omega" in obj:
        m = 720 if config.grid is None else config.grid
        reports.append(semigroup.quasi_sectorial_check(T, float(obj["omega"]), ts, m))
    results["reports"] = [r.to_dict() for r in reports]
    passed = passed and all(r.passed for r in reports if r.mode != "hypothesis_unmet")
    rows = [("t", "norm")] + [(t, operator_core.opnorm(semigroup.propagator(T, t))) for t in ts]
    return passed, results, rows


def _cmd_solve(obj, config):
    prob = bvp.problem_from_json(obj)
    if config.grid is not None:
        prob = bvp.BvpProblem(prob.pencil, prob.u0, prob.u1, prob.f,
                              np.linspace(0.0, 1.0, config.grid), prob.p_exponent)
    conv = _convention(config)
    f = pencil.factorize(prob.pencil, conv)
    sol = bvp.solve_bvp(prob, f)
    scale = max(1.0, prob.pencil.scale())
    rtol = 1e-8 if config.tol is None else config.tol
    results = sol.to_dict()
    results["ordered_residual"] = pencil.ordered_residual(f, prob.pencil, 1.0) / (1.0 + scale)
    passed = max(sol.residual_bc) <= rtol * max(scale, np.abs(sol.u).max(initial=1.0))
    rows = [("x", "component_index", "re_u", "im_u")]
    rows += [(xi, k, z.real, z.imag) for xi, row in zip(sol.x, sol.u) for k, z in enumerate(row)]
    return passed, results, rows


def _cmd_pde(obj, config):
    c = pde_example.PdeCoefficients.from_json(obj)
    if config.grid is not None:
        c = c.with_grid(config.grid)
    n_x = int(obj.get("n_x", c.n_y)) if config.grid is None else config.grid
    claims = pde_example.verify_claims(c)
    if obj.get("manufactured", True):
        f, u0, u1, exact = pde_example.manufactured_case(c)
    else:
        f, u0, u1, exact = 0.0, np.zeros(c.n_y), np.zeros(c.n_y), None
    res = pde_example.solve_example(c, f, u0, u1, n_x, config.convention, exact)
    results = {"claims": [r.to_dict() for r in claims], "solve": res.to_dict()}
    passed = all(r.passed for r in claims) and len(res.adjudication["factoring"]) == 1
    rows = [("x", "y", "re_u", "im_u")]
    rows += [(xi, yj, res.u_formula[i, j].real, res.u_formula[i, j].imag)
             for i, xi in enumerate(res.x) for j, yj in enumerate(res.y)]
    return passed, results, rows


HANDLERS = {
    "check": _cmd_check,
    "factorize": _cmd_factorize,
    "numrange": _cmd_numrange,
    "semigroup": _cmd_semigroup,
    "solve": _cmd_solve,
    "pde-example": _cmd_pde,
}


def _write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(rows[0])
        for row in rows[1:]:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def dumps(report):
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def run(config):
    """Execute one command; returns ``(exit_code, report_dict)``."""
    obj = _load(config)
    report = {"command": config.command, "seed": int(config.seed), "input": config.input,
              "pass": False, "results": {}, "error": None}
    try:
        passed, results, rows = HANDLERS[config.command](obj, config)
    except (PencilError, np.linalg.LinAlgError, ValueError) as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        return 1, _clean(report)
    report["pass"] = bool(passed)
    report["results"] = results
    if rows is not None and config.out is not None:
        _write_csv(rows, config.out)
    report = _clean(report)
    validate_report(report)
    return (0 if passed else 1), report


def build_parser():
    parser = argparse.ArgumentParser(prog="accretive-pencil", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--input", "--config", dest="input", help="JSON input file")
        sp.add_argument("--out", help="CSV output path")
        sp.add_argument("--report", help="JSON report path (default: stdout)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--convention", default="auto",
                        choices=["auto", "real", "rotated", "real_root", "rotated_root"])
        sp.add_argument("--samples", type=int)
        sp.add_argument("--grid", type=int)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        config = RunConfig(**vars(args))
        code, report = run(config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = dumps(report)
    if config.report:
        Path(config.report).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
