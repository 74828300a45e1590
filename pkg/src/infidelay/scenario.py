"""Scenario files: a JSON description of one problem plus a list of checks.

Schema (all floats unless noted):

    {
      "name": "classic-delay",
      "problem": {
        "a": 0.0,
        "family": {
          "kind": "finite-support" | "geometric" | "power-law" | "explicit-list",
          "coeffs": [..],            # finite-support / explicit-list
          "beta": .., "rho": ..,     # geometric
          "p": ..,                   # power-law
          "tail_abs_bound": ..,      # explicit-list
          "tau": {"c": 0.0, "delta": 1.0, "prefix": [..]}
        },
        "history": {"preset": "constant", "depth": 8.0, "resolution": 0.05}
                   # or {"core": {"breakpoints": [...], "coeffs": [[c0,c1,c2,c3],..]},
                   #     "tail": {"kind": "constant", "value": ..}
                   #             | {"kind": "cos", "amp": .., "omega": .., "phase": ..}
                   #             | {"kind": "exp-decay", "amp": .., "rate": ..}
                   #             | {"kind": "g-envelope", "scale": .., "shift": ..,
                   #                "weight": {"form": "exponential", "base": 2.0}}}
      },
      "horizon": 10.0,
      "solver": {"h": .., "quad": "gauss4", "eps_forcing": .., "eps_tail_seminorm": ..},
      "checks": ["solve", {"name": "membership", "expect": "member"}, ...]
    }

Schema problems raise ScenarioError with a file:line anchor; check failures
are ordinary results.  Runners write one JSON report per check plus a
summary, all deterministic (sorted keys, no timestamps, atomic replace).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coefficients import (
    CoefficientFamily,
    DelaySchedule,
    DivergentTailError,
    TruncationDepthError,
    UnknownTailError,
    WeightFunction,
)
from .history import (
    ConstantTail,
    CosTail,
    ExpTail,
    HistoryFunction,
    WeightEnvelopeTail,
    check_cg_embedding,
    membership_in_F,
    p_seminorm,
    sup_norm_k,
)
from .oracle import OracleConfig, compare_trajectories, oracle_solve
from .semigroup import (
    check_mild_solution,
    check_semigroup_law,
    check_strong_continuity,
)
from .stepper import (
    NotInPhaseSpaceError,
    ProblemSpec,
    SolverConfig,
    estimate_certificate,
    solve,
)


class ScenarioError(Exception):
    """Schema problem in a scenario file, formatted as path:line: message."""

    def __init__(self, message: str, path: str = "<scenario>", line: int = 1):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line
        self.bare_message = message


def _line_of(raw: Optional[str], key: str) -> int:
    if not raw:
        return 1
    needle = f'"{key}"'
    for i, ln in enumerate(raw.splitlines(), start=1):
        if needle in ln:
            return i
    return 1


class _Anchored:
    """Field access over a parsed scenario with line-anchored errors."""

    def __init__(self, data: dict, raw: Optional[str], path: str):
        self.data = data
        self.raw = raw
        self.path = path

    def fail(self, message: str, key: str) -> ScenarioError:
        return ScenarioError(message, self.path, _line_of(self.raw, key))

    def need(self, obj: dict, key: str, types, where: str):
        if key not in obj:
            raise self.fail(f"missing required key {key!r} in {where}", key if self.raw and f'"{key}"' in self.raw else where)
        v = obj[key]
        if not isinstance(v, types):
            tn = types.__name__ if isinstance(types, type) else "/".join(t.__name__ for t in types)
            raise self.fail(f"{where}.{key} must be {tn}, got {type(v).__name__}", key)
        return v

    def opt(self, obj: dict, key: str, types, default):
        if key not in obj:
            return default
        v = obj[key]
        if not isinstance(v, types):
            tn = types.__name__ if isinstance(types, type) else "/".join(t.__name__ for t in types)
            raise self.fail(f"{key} must be {tn}, got {type(v).__name__}", key)
        return v


_NUM = (int, float)


def _build_weight(cfg: dict, anch: _Anchored) -> WeightFunction:
    form = anch.need(cfg, "form", str, "weight")
    if form == "constant":
        return WeightFunction.constant(float(anch.opt(cfg, "level", _NUM, 1.0)))
    if form == "exponential":
        if "base" in cfg:
            return WeightFunction.exponential(base=float(anch.need(cfg, "base", _NUM, "weight")))
        return WeightFunction.exponential(gamma=float(anch.need(cfg, "gamma", _NUM, "weight")))
    if form == "polynomial":
        return WeightFunction.polynomial(int(anch.need(cfg, "degree", _NUM, "weight")))
    raise anch.fail(f"unknown weight form {form!r}", "form")


def _build_family(cfg: dict, anch: _Anchored) -> CoefficientFamily:
    kind = anch.need(cfg, "kind", str, "family")
    tau_cfg = anch.need(cfg, "tau", dict, "family")
    delays = DelaySchedule(
        c=float(anch.opt(tau_cfg, "c", _NUM, 0.0)),
        delta=float(anch.opt(tau_cfg, "delta", _NUM, 1.0)),
        prefix=tuple(float(v) for v in anch.opt(tau_cfg, "prefix", list, [])),
    )
    try:
        if kind == "finite-support":
            return CoefficientFamily.finite_support(anch.need(cfg, "coeffs", list, "family"), delays)
        if kind == "geometric":
            return CoefficientFamily.geometric(
                float(anch.need(cfg, "beta", _NUM, "family")),
                float(anch.need(cfg, "rho", _NUM, "family")),
                delays,
            )
        if kind == "power-law":
            return CoefficientFamily.power_law(
                float(anch.need(cfg, "beta", _NUM, "family")),
                float(anch.need(cfg, "p", _NUM, "family")),
                delays,
            )
        if kind == "explicit-list":
            return CoefficientFamily.explicit_list(
                anch.need(cfg, "coeffs", list, "family"),
                float(anch.need(cfg, "tail_abs_bound", _NUM, "family")),
                delays,
            )
    except ValueError as exc:
        raise anch.fail(str(exc), "family") from exc
    raise anch.fail(f"unknown family kind {kind!r}", "kind")


def _build_tail(cfg: dict, anch: _Anchored):
    kind = anch.need(cfg, "kind", str, "tail")
    if kind == "bounded":
        # bounded oscillating / decaying tails carry an explicit formula
        kind = anch.need(cfg, "form", str, "tail")
    if kind == "constant":
        return ConstantTail(float(anch.need(cfg, "value", _NUM, "tail")))
    if kind == "cos":
        return CosTail(
            float(anch.need(cfg, "amp", _NUM, "tail")),
            float(anch.need(cfg, "omega", _NUM, "tail")),
            float(anch.opt(cfg, "phase", _NUM, 0.0)),
        )
    if kind == "exp-decay":
        return ExpTail(
            float(anch.need(cfg, "amp", _NUM, "tail")),
            float(anch.need(cfg, "rate", _NUM, "tail")),
        )
    if kind == "g-envelope":
        return WeightEnvelopeTail(
            float(anch.need(cfg, "scale", _NUM, "tail")),
            _build_weight(anch.need(cfg, "weight", dict, "tail"), anch),
            float(anch.opt(cfg, "shift", _NUM, 0.0)),
        )
    raise anch.fail(f"unknown tail kind {kind!r}", "kind")


def _build_history(cfg: dict, anch: _Anchored) -> HistoryFunction:
    from .history import history_preset

    if "preset" in cfg:
        name = anch.need(cfg, "preset", str, "history")
        try:
            return history_preset(
                name,
                depth=float(anch.opt(cfg, "depth", _NUM, 8.0)),
                resolution=float(anch.opt(cfg, "resolution", _NUM, 0.05)),
            )
        except ValueError as exc:
            raise anch.fail(str(exc), "preset") from exc
    core = anch.need(cfg, "core", dict, "history")
    tail_cfg = anch.need(cfg, "tail", dict, "history")
    bp = anch.need(core, "breakpoints", list, "history.core")
    coef = anch.need(core, "coeffs", list, "history.core")
    try:
        return HistoryFunction(np.array(bp, dtype=float), np.array(coef, dtype=float), _build_tail(tail_cfg, anch))
    except ValueError as exc:
        raise anch.fail(str(exc), "core") from exc


def _build_solver(cfg: dict, anch: _Anchored) -> SolverConfig:
    try:
        return SolverConfig(
            h=anch.opt(cfg, "h", _NUM, None),
            quad=anch.opt(cfg, "quad", str, "gauss4"),
            eps_forcing=anch.opt(cfg, "eps_forcing", _NUM, None),
            eps_tail_seminorm=float(anch.opt(cfg, "eps_tail_seminorm", _NUM, 1e-10)),
        )
    except ValueError as exc:
        raise anch.fail(str(exc), "solver") from exc


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


class _Ctx:
    """Shared lazy state for one scenario run."""

    def __init__(self, problem: ProblemSpec, horizon: float, solver: SolverConfig, tol_scale: float, seed: Optional[int]):
        self.problem = problem
        self.horizon = horizon
        self.solver = solver
        self.tol_scale = tol_scale
        self.seed = seed
        self._traj = None

    def traj(self):
        if self._traj is None:
            self._traj = solve(self.problem, self.horizon, self.solver)
        return self._traj


def _sv_dict(sv) -> dict:
    return {
        "value": sv.value,
        "truncation_bound": sv.truncation_bound,
        "index_first": sv.index_first,
        "index_last": sv.index_last,
        "verdict": sv.verdict,
        "upper": sv.upper(),
    }


def _run_solve(ctx: _Ctx, p: dict, outdir: str) -> dict:
    try:
        traj = ctx.traj()
    except NotInPhaseSpaceError as exc:
        ok = p.get("expect") == "not-in-phase-space"
        return {"passed": ok, "error": str(exc), "expect": p.get("expect")}
    traj.write_csv(os.path.join(outdir, "trajectory.csv"))
    _write_json(os.path.join(outdir, "trajectory.json"), traj.to_json_dict())
    points = []
    ok = True
    for pt in p.get("expect_points", []):
        t, want = float(pt["t"]), float(pt["x"])
        tol = float(pt.get("tol", 1e-8)) * ctx.tol_scale
        got = traj.eval(t)
        hit = abs(got - want) <= tol
        ok = ok and hit
        points.append({"t": t, "want": want, "got": got, "tol": tol, "ok": hit})
    return {
        "passed": ok,
        "horizon": traj.horizon,
        "n_nodes": int(len(traj.grid)),
        "n_forcing": traj.n_forcing,
        "points": points,
    }


def _run_seminorms(ctx: _Ctx, p: dict, outdir: str) -> dict:
    k_max = int(p.get("k_max", 3))
    eps = ctx.solver.eps_tail_seminorm
    rows = []
    for k in range(1, k_max + 1):
        sv = p_seminorm(ctx.problem.history, ctx.problem.family, k, eps)
        rows.append({"k": k, "sup_norm": sup_norm_k(ctx.problem.history, k), "p": _sv_dict(sv)})
    return {"passed": True, "rows": rows}


def _run_membership(ctx: _Ctx, p: dict, outdir: str) -> dict:
    k_max = int(p.get("k_max", 5))
    expect = p.get("expect", "member")
    rep = membership_in_F(ctx.problem.history, ctx.problem.family, k_max, ctx.solver.eps_tail_seminorm)
    return {
        "passed": rep.verdict == expect,
        "verdict": rep.verdict,
        "expect": expect,
        "per_k": {str(k): _sv_dict(v) for k, v in rep.seminorms.items()},
    }


def _run_semigroup_law(ctx: _Ctx, p: dict, outdir: str) -> dict:
    tau1 = ctx.problem.family.delays.tau1
    t = float(p.get("t", 0.75 * tau1))
    s = float(p.get("s", 1.25 * tau1))
    k_list = [int(k) for k in p.get("k_list", [1, 2, 3])]
    tol = float(p.get("tolerance", 1e-6)) * ctx.tol_scale
    rep = check_semigroup_law(ctx.problem, t, s, k_list, ctx.solver, ctx.solver.eps_tail_seminorm)
    out = rep.to_json_dict()
    out["tolerance"] = tol
    out["passed"] = rep.max_discrepancy <= tol
    return out


def _run_strong_continuity(ctx: _Ctx, p: dict, outdir: str) -> dict:
    tau1 = ctx.problem.family.delays.tau1
    k = int(p.get("k", 2))
    times = [float(v) for v in p.get("times", p.get("t_sequence", [0.1 * tau1, 0.01 * tau1, 0.001 * tau1]))]
    thr = p.get("threshold")
    rep = check_strong_continuity(ctx.problem, k, times, ctx.solver, thr if thr is None else float(thr))
    out = rep.to_json_dict()
    out["passed"] = rep.passed
    return out


def _run_mild_solution(ctx: _Ctx, p: dict, outdir: str) -> dict:
    tau1 = ctx.problem.family.delays.tau1
    span = min(ctx.horizon, 2.0 * tau1)
    ts = [float(v) for v in p.get("t_grid", list(np.linspace(0.0, span, 5)))]
    thetas = [float(v) for v in p.get("theta_grid", [-2.0 * tau1, -tau1, -0.5 * tau1, -0.1 * tau1, 0.0])]
    tol = float(p.get("tolerance", 1e-6)) * ctx.tol_scale
    rep = check_mild_solution(ctx.problem, ts, thetas, ctx.solver, tol)
    out = rep.to_json_dict()
    out["passed"] = rep.passed
    return out


def _run_estimates(ctx: _Ctx, p: dict, outdir: str) -> dict:
    tau1 = ctx.problem.family.delays.tau1
    k_top = int(p.get("k", p.get("k_max", min(3, int(math.floor(ctx.horizon / tau1 + 1e-12))))))
    k_list = [int(k) for k in p.get("k_list", range(1, k_top + 1))]
    traj = ctx.traj()
    certs = [estimate_certificate(traj, k) for k in k_list]
    return {
        "passed": all(c.valid for c in certs),
        "certificates": [c.to_json_dict() for c in certs],
    }


def _run_cg_embedding(ctx: _Ctx, p: dict, outdir: str) -> dict:
    anch = _Anchored({}, None, "<params>")
    wcfg = p.get("weight", p.get("g", {"form": "exponential", "base": 2.0}))
    g = _build_weight(wcfg, anch)
    k_max = int(p.get("k", p.get("k_max", 3)))
    tol = float(p.get("tolerance", 1e-8)) * ctx.tol_scale
    expect = p.get("expect", "holds")
    rep = check_cg_embedding(ctx.problem.history, ctx.problem.family, g, k_max, tol, ctx.solver.eps_tail_seminorm)
    if not rep.applicable:
        passed = expect == "not-applicable"
    else:
        passed = bool(rep.holds) if expect == "holds" else expect == "any"
    return {
        "passed": passed,
        "applicable": rep.applicable,
        "holds": rep.holds,
        "cg_norm": rep.cg,
        "expect": expect,
        "rows": [{"k": r.k, "lhs": r.lhs, "rhs": r.rhs, "holds": r.holds} for r in rep.rows],
    }


def _run_oracle_compare(ctx: _Ctx, p: dict, outdir: str) -> dict:
    tol = float(p.get("tolerance", 1e-6)) * ctx.tol_scale
    ocfg = OracleConfig(
        h_fine=p.get("h_fine"),
        n_trunc=int(p.get("N_trunc", p.get("n_trunc", 40))),
    )
    traj = ctx.traj()
    ref = oracle_solve(ctx.problem, ctx.horizon, ocfg)
    diff = compare_trajectories(traj, ref, (0.0, ctx.horizon))
    return {"passed": diff <= tol, "max_difference": diff, "tolerance": tol, "oracle_h": ref.h_used, "oracle_n_trunc": ref.n_forcing}


CHECKS = [
    ("solve", "integrate the problem and pin optional reference points", _run_solve),
    ("seminorms", "evaluate the sup and p seminorms of the history", _run_seminorms),
    ("membership", "phase-space membership verdict for the history", _run_membership),
    ("semigroup-law", "compare S_t S_s phi with S_{t+s} phi in the seminorms", _run_semigroup_law),
    ("strong-continuity", "distance of S_t phi from phi as t decreases to 0", _run_strong_continuity),
    ("mild-solution", "integral form of the equation driven by the functional L", _run_mild_solution),
    ("estimates", "a-priori window bounds against observed sups", _run_estimates),
    ("cg-embedding", "weighted-norm domination of the p seminorms", _run_cg_embedding),
    ("oracle-compare", "agreement with the independent RK4 integrator", _run_oracle_compare),
]

CHECK_RUNNERS = {name: fn for name, _, fn in CHECKS}


def list_checks() -> list[tuple[str, str]]:
    """The supported checks as (name, description) pairs."""
    return [(name, desc) for name, desc, _ in CHECKS]


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def _write_json(path: str, data) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    os.replace(tmp, path)


def _safe_name(name: str) -> str:
    out = "".join(ch if ch.isalnum() or ch in "-_" else "-" for ch in name)
    return out or "scenario"


@dataclass(frozen=True)
class ScenarioResult:
    name: str
    passed: bool
    check_results: tuple
    out_dir: str


def load_scenario(path: str) -> tuple[dict, str]:
    """Parse a scenario file; raises ScenarioError with a line anchor."""
    with open(path) as fh:
        raw = fh.read()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", path, exc.lineno) from exc
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object", path, 1)
    return data, raw


def run_scenario(
    data: dict,
    out_root: str,
    raw: Optional[str] = None,
    path: str = "<scenario>",
    seed: Optional[int] = None,
    tolerance_scale: float = 1.0,
) -> ScenarioResult:
    """Validate, run every listed check, and write the report tree.

    Raises ScenarioError for schema problems; check failures only lower
    the result's passed flag.
    """
    anch = _Anchored(data, raw, path)
    name = anch.need(data, "name", str, "scenario")
    prob_cfg = anch.need(data, "problem", dict, "scenario")
    horizon = float(anch.need(data, "horizon", _NUM, "scenario"))
    if not horizon > 0.0:
        raise anch.fail(f"horizon must be positive, got {horizon}", "horizon")
    checks_cfg = anch.need(data, "checks", list, "scenario")
    a = float(anch.need(prob_cfg, "a", _NUM, "problem"))
    family = _build_family(anch.need(prob_cfg, "family", dict, "problem"), anch)
    history = _build_history(anch.need(prob_cfg, "history", dict, "problem"), anch)
    solver = _build_solver(anch.opt(data, "solver", dict, {}), anch)

    normalized = []
    for entry in checks_cfg:
        if isinstance(entry, str):
            cname, params = entry, {}
        elif isinstance(entry, dict) and "name" in entry:
            cname = entry["name"]
            params = {k: v for k, v in entry.items() if k != "name"}
        else:
            raise anch.fail(f"check entries must be a name or an object with a name, got {entry!r}", "checks")
        if cname not in CHECK_RUNNERS:
            raise anch.fail(f"unknown check {cname!r}", "checks")
        normalized.append((cname, params))

    outdir = os.path.join(out_root, _safe_name(name))
    os.makedirs(outdir, exist_ok=True)
    ctx = _Ctx(ProblemSpec(a, family, history), horizon, solver, tolerance_scale, seed)

    results = []
    for idx, (cname, params) in enumerate(normalized, start=1):
        try:
            res = CHECK_RUNNERS[cname](ctx, params, outdir)
        except (NotInPhaseSpaceError, DivergentTailError, UnknownTailError, TruncationDepthError, ValueError) as exc:
            res = {"passed": False, "error": f"{type(exc).__name__}: {exc}"}
        fname = f"{idx:02d}-{cname}.json"
        _write_json(os.path.join(outdir, fname), res)
        results.append({"name": cname, "passed": bool(res.get("passed", False)), "file": fname})

    passed = all(r["passed"] for r in results)
    summary = {
        "name": name,
        "passed": passed,
        "checks": results,
        "horizon": horizon,
        "seed": seed,
        "tolerance_scale": tolerance_scale,
        "scenario": data,
    }
    _write_json(os.path.join(outdir, "summary.json"), summary)
    return ScenarioResult(name, passed, tuple(r["name"] for r in results), outdir)
