"""Command-line entry point: ``conekit <command> [--config FILE] [options]``.

Commands
--------
describe-cone  geometry report for one cone (dual, sigma, fixed point, duality constants)
selftest       invariant suite at a reduced budget; writes ``selftest.xml``
verify         run every configured inequality case once; writes ``verify.csv`` and ``verify.md``
sweep          grid over gamma (or alpha) across the condition boundary; ``sweep.csv`` and ``sweep.md``
sigma          estimate the critical exponent bracket; writes ``sigma.json``

Exit codes: 0 success, 1 invariant or verification failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import charfn, cones, harness, selftest, star
from .errors import ConeKitError, ConfigError, ConstructionError
from .functions import from_spec
from .mc import McConfig

log = logging.getLogger("conekit")

SCHEMA_VERSION = 1
COMMANDS = ("describe-cone", "selftest", "verify", "sweep", "sigma")
CSV_COLUMNS = ("theorem", "cone", "p", "q", "gamma", "alpha", "r", "function_id", "lhs",
               "lhs_stderr", "rhs", "rhs_stderr", "ratio", "verdict", "note")
SWEEP_COLUMNS = ("theorem", "cone", "p", "q", "gamma", "alpha", "r", "margin", "growth",
                 "function_id", "lhs", "lhs_stderr", "rhs", "rhs_stderr", "ratio", "verdict", "note")
DEFAULT_ALPHAS = tuple(float(a) for a in np.round(np.linspace(-1.5, -0.1, 15), 10))


class UsageError(Exception):
    """Bad command line or config; exit code 2."""


# ---------------------------------------------------------------- config schema

class McModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    samples: int = Field(100_000, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    chunk: int = Field(8192, ge=1)
    max_rejections: int = Field(1_000_000, ge=1)
    threads: int = Field(1, ge=1)


class CaseModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    theorem: str
    cone: str | dict[str, Any] | None = None
    p: float = 2.0
    q: float = 2.0
    gamma: float = 0.0
    delta: float | None = None
    alpha: float | None = None
    r: float = 1.0
    kernel: str | None = None
    family: list[dict[str, Any]] | None = None
    grid: list[float] | None = None


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = SCHEMA_VERSION
    command: Literal["describe-cone", "selftest", "verify", "sweep", "sigma"] | None = None
    cone: str | dict[str, Any] | None = None
    cases: list[CaseModel] = Field(default_factory=list)
    family: list[dict[str, Any]] | None = None
    alphas: list[float] | None = None
    mc: McModel = Field(default_factory=McModel)
    out_dir: str = "conekit-out"


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict) or "schema_version" not in data:
        raise UsageError(f"config {path} must be an object with a schema_version field")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise UsageError(f"invalid config {path}:\n{exc}") from None


def _mc(cfg: RunConfig) -> McConfig:
    return McConfig(**cfg.mc.model_dump())


def _cone(spec, what: str = "cone") -> cones.ConeModel:
    if spec is None:
        raise UsageError(f"no {what} given; use --cone or the config's cone field")
    try:
        return cones.from_json(spec)
    except ConstructionError:
        raise
    except (ConeKitError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot parse {what} {spec!r}: {exc}") from None


def _case(cfg: RunConfig, c: CaseModel) -> harness.InequalityCase:
    cone = _cone(c.cone if c.cone is not None else cfg.cone, f"cone of case {c.theorem}")
    return harness.InequalityCase(c.theorem, cone, p=c.p, q=c.q, gamma=c.gamma, delta=c.delta,
                                  alpha=c.alpha, r=c.r, kernel=c.kernel)


def _family(cfg: RunConfig, c: CaseModel, case: harness.InequalityCase):
    specs = c.family if c.family is not None else cfg.family
    if specs is None:
        return None
    return [from_spec(case.cone, s) for s in specs]


# ---------------------------------------------------------------- formatting

def _num(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _case_cells(case: harness.InequalityCase) -> dict:
    return {"theorem": case.theorem, "cone": case.cone.label, "p": _num(case.p), "q": _num(case.q),
            "gamma": "" if case.theorem[-1] in "bc" else _num(case.gamma),
            "alpha": _num(case.alpha), "r": _num(case.r)}


def report_rows(rep: harness.VerificationReport) -> list[dict]:
    rows = []
    for fr in rep.per_function:
        rows.append({**_case_cells(rep.case), "function_id": fr.function_id,
                     "lhs": _num(fr.lhs.value), "lhs_stderr": _num(fr.lhs.stderr),
                     "rhs": _num(fr.rhs.value), "rhs_stderr": _num(fr.rhs.stderr),
                     "ratio": _num(fr.ratio), "verdict": fr.verdict, "note": fr.note or ""})
    return rows


def error_row(c: CaseModel, exc: Exception, default_cone=None) -> dict:
    spec = c.cone if c.cone is not None else default_cone
    cone = spec if isinstance(spec, str) else json.dumps(spec, sort_keys=True) if spec else ""
    return {"theorem": c.theorem, "cone": cone, "p": _num(c.p), "q": _num(c.q),
            "gamma": _num(c.gamma), "alpha": _num(c.alpha), "r": _num(c.r), "function_id": "",
            "lhs": "", "lhs_stderr": "", "rhs": "", "rhs_stderr": "", "ratio": "",
            "verdict": "error", "note": f"{type(exc).__name__}: {exc}"}


def write_csv(path: Path, columns, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\r\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k, "") for k in columns})


def _md_table(header, rows) -> list[str]:
    out = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    out += ["| " + " | ".join(str(c) for c in r) + " |" for r in rows]
    return out


# ---------------------------------------------------------------- commands

def cmd_describe_cone(cfg: RunConfig, out: Path) -> int:
    V = _cone(cfg.cone)
    mc = _mc(cfg)
    Vd = cones.dual(V)
    closed = charfn.sigma0(V)
    est = charfn.sigma0_estimate(V, cfg.alphas or DEFAULT_ALPHAS, mc)
    lines = [f"# Cone {V.label}", "", f"- kind: {V.kind}", f"- dimension: {V.dim}",
             f"- model: `{json.dumps(cones.to_json(V), sort_keys=True)}`",
             f"- dual: {Vd.label} `{json.dumps(cones.to_json(Vd), sort_keys=True)}`",
             f"- self-dual: {'yes' if Vd == V else 'no'}", "", "## Critical exponent", "",
             f"- closed form: sigma0 = {_num(closed.sigma0)}, sigma = {_num(closed.sigma)}",
             f"- estimate: bracket {est.bracket}, sigma0 ~ {_num(est.sigma0)}"
             + (f" ({est.warning})" if est.warning else ""), "", "## Fixed point", ""]
    if Vd == V:
        x = star.fixed_point(V)
        lines.append("- x = x* at (" + ", ".join(f"{v:.10g}" for v in x) + ")")
    else:
        lines.append("- none: the cone is not self-dual")
    rng = np.random.default_rng(mc.seed)
    X = cones.random_points(V, rng, 100)
    dd, pp = star.duality_products(V, X)
    c = cones.center(V)
    d_mc = charfn.delta_mc(V, c, mc)
    dd_mc = charfn.delta_mc(Vd, star.star_points(V, c), mc)
    prod = d_mc.value * dd_mc.value
    prod_se = prod * math.hypot(d_mc.stderr / d_mc.value, dd_mc.stderr / dd_mc.value)
    lines += ["", "## Duality constants", "",
              "Closed forms over 100 random interior points (mean, relative spread), and a "
              "Monte Carlo cross-check of the interval-volume constant at the cone centre.", ""]
    lines += _md_table(["quantity", "value", "error bar"], [
        ["delta(x) delta*(x*)", f"{np.mean(dd):.12g}", f"spread {np.ptp(dd) / np.mean(dd):.2e}"],
        ["phi(x) phi*(x*)", f"{np.mean(pp):.12g}", f"spread {np.ptp(pp) / np.mean(pp):.2e}"],
        ["delta(x) delta*(x*) (MC)", f"{prod:.6g}", f"+- {prod_se:.2g}"],
    ])
    text = "\n".join(lines) + "\n"
    out.mkdir(parents=True, exist_ok=True)
    (out / "describe_cone.md").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_selftest(cfg: RunConfig, out: Path, samples: int | None) -> int:
    mc = _mc(cfg).with_samples(samples or selftest.SELFTEST_SAMPLES)
    results = selftest.run_selftest(mc, log=log.info)
    selftest.write_junit(results, out / "selftest.xml")
    failed = [r.id for r in results if not r.passed]
    for r in results:
        if not r.passed:
            log.error("invariant %s failed: %s", r.id, r.message.splitlines()[0])
    print(f"selftest: {len(results) - len(failed)}/{len(results)} passed"
          + (f"; failed: {', '.join(failed)}" if failed else ""))
    return 1 if failed else 0


def _condition_line(case, cond) -> list:
    return [case.label, cond.quantity, f"{cond.relation} {_num(cond.bound)}", f"{cond.margin:.6g}",
            "yes" if cond.satisfied else "no"]


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    if not cfg.cases:
        raise UsageError("no cases to verify; add a non-empty 'cases' list to the config")
    mc = _mc(cfg)
    rows, md_rows, notes, failed = [], [], [], False
    for c in cfg.cases:
        try:
            case = _case(cfg, c)
            rep = harness.verify(case, _family(cfg, c, case), mc)
        except (ConeKitError, ValueError, RuntimeError) as exc:
            log.error("case %s failed: %s", c.theorem, exc)
            rows.append(error_row(c, exc, cfg.cone))
            md_rows.append([c.theorem, "", "", "", "", "error", str(exc)])
            failed = True
            continue
        log.info("%s: %s (max ratio %s)", case.label, rep.verdict, _num(rep.max_ratio))
        rows += report_rows(rep)
        md_rows.append(_condition_line(case, rep.conditions) + [rep.verdict, _num(rep.max_ratio)])
        notes += [f"- {case.label}: {n}" for n in rep.notes]
        if rep.verdict == "violated" and rep.conditions.satisfied:
            failed = True
    write_csv(out / "verify.csv", CSV_COLUMNS, rows)
    md = ["# Verification report", "", f"Monte Carlo: {mc.samples} samples (and 4x), seed {mc.seed}.", ""]
    md += _md_table(["case", "exponent", "condition", "margin", "satisfied", "verdict", "max ratio"], md_rows)
    if notes:
        md += ["", "## Notes", ""] + notes
    (out / "verify.md").write_text("\n".join(md) + "\n")
    print(f"verify: {len(cfg.cases)} case(s), results in {out / 'verify.csv'}")
    return 1 if failed else 0


def _default_grid(case: harness.InequalityCase) -> list[float]:
    bound = harness.check_conditions(case).bound
    return [float(v) for v in np.round(bound + np.linspace(-1.0, 1.0, 9), 10)]


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    if not cfg.cases:
        raise UsageError("no cases to sweep; add a non-empty 'cases' list to the config")
    mc = _mc(cfg)
    rows, md_rows, failed = [], [], False
    for c in cfg.cases:
        try:
            case = _case(cfg, c)
            grid = c.grid if c.grid is not None else _default_grid(case)
            results = harness.sweep(case, grid, mc, _family(cfg, c, case))
        except (ConeKitError, ValueError, RuntimeError) as exc:
            log.error("sweep %s failed: %s", c.theorem, exc)
            rows.append(error_row(c, exc, cfg.cone))
            failed = True
            continue
        for res in results:
            rep, cond = res["report"], res["conditions"]
            extra = {"margin": _num(cond.margin),
                     "growth": "" if res.get("growth") is None else str(res["growth"]).lower()}
            if isinstance(rep, harness.VerificationReport):
                rows += [{**r, **extra} for r in report_rows(rep)]
                ratio = rep.max_ratio
            else:
                total = sum(s.value for s in rep.shells)
                se = math.sqrt(sum(s.stderr**2 for s in rep.shells))
                lhs = total ** (1.0 / rep.case.q) if rep.shells else math.nan
                lhs_se = lhs * se / (rep.case.q * total) if total > 0 else math.nan
                rhs = rep.rhs.value if rep.rhs else math.nan
                ratio = lhs / rhs if rhs and math.isfinite(rhs) and rhs > 0 else math.nan
                rows.append({**_case_cells(rep.case), **extra, "function_id": rep.function_id or "",
                             "lhs": _num(lhs), "lhs_stderr": _num(lhs_se), "rhs": _num(rhs),
                             "rhs_stderr": _num(rep.rhs.stderr if rep.rhs else None),
                             "ratio": _num(ratio), "verdict": rep.verdict, "note": rep.note})
            md_rows.append(_condition_line(res["case"], cond) + [extra["growth"], rep.verdict, _num(ratio)])
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
    md = ["# Sweep report", "",
          "Points inside the condition region are verified; points outside are probed with a "
          "truncated power and the left side is split into radial decades (growth column).", ""]
    md += _md_table(["case", "exponent", "condition", "margin", "satisfied", "growth", "verdict",
                     "ratio"], md_rows)
    (out / "sweep.md").write_text("\n".join(md) + "\n")
    print(f"sweep: results in {out / 'sweep.csv'}")
    return 1 if failed else 0


def cmd_sigma(cfg: RunConfig, out: Path) -> int:
    V = _cone(cfg.cone)
    rep = charfn.sigma0_estimate(V, cfg.alphas or DEFAULT_ALPHAS, _mc(cfg))
    closed = charfn.sigma0(V)
    data = {"cone": cones.to_json(V), "estimate": rep.to_dict(), "closed_form": closed.to_dict(),
            "agrees": rep.contains(closed.sigma0)}
    out.mkdir(parents=True, exist_ok=True)
    (out / "sigma.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(f"sigma0({V.label}): bracket {rep.bracket}, closed form {_num(closed.sigma0)}"
          + ("" if data["agrees"] else " (outside the bracket)"))
    return 0


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="conekit", description=__doc__.split("\n")[0],
                                epilog="Exit codes: 0 ok, 1 failure, 2 usage error.")
    p.add_argument("command", nargs="?", choices=COMMANDS,
                   help="what to run (default: the config's command field)")
    p.add_argument("--config", help="JSON run configuration (see README for the schema)")
    p.add_argument("--cone", help='cone spec, e.g. "lorentz(3)" or a JSON model; overrides the config')
    p.add_argument("--seed", type=int, help="override mc.seed")
    p.add_argument("--samples", type=int, help="override mc.samples")
    p.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
    p.add_argument("--out", help="output directory (default: the config's out_dir)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    mc = cfg.mc.model_dump()
    for name in ("seed", "samples", "threads"):
        v = getattr(args, name)
        if v is not None:
            mc[name] = v
    update: dict[str, Any] = {}
    try:
        update["mc"] = McModel(**mc)
    except ValidationError as exc:
        raise UsageError(f"invalid option: {exc.errors()[0]['loc'][0]} {exc.errors()[0]['msg']}") from None
    if args.cone is not None:
        text = args.cone.strip()
        update["cone"] = json.loads(text) if text.startswith("{") else text
    if args.out is not None:
        update["out_dir"] = args.out
    if args.command is not None:
        update["command"] = args.command
    return cfg.model_copy(update=update)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        if cfg.command is None:
            raise UsageError("no command given")
        out = Path(cfg.out_dir)
        if cfg.command == "describe-cone":
            return cmd_describe_cone(cfg, out)
        if cfg.command == "selftest":
            return cmd_selftest(cfg, out, args.samples)
        if cfg.command == "verify":
            return cmd_verify(cfg, out)
        if cfg.command == "sweep":
            return cmd_sweep(cfg, out)
        return cmd_sigma(cfg, out)
    except (UsageError, ConfigError, json.JSONDecodeError) as exc:
        print(f"conekit: error: {exc}", file=sys.stderr)
        return 2
    except ConstructionError as exc:
        print(f"conekit: invalid cone: {exc}", file=sys.stderr)
        return 2
    except ConeKitError as exc:
        print(f"conekit: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
