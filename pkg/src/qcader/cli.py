"""Command line driver: run, convergence and defect studies."""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .cases import CASE_NAMES, case
from .diagnostics import VAR_NAMES, compute_defect, convergence, fit_slope, write_convergence_csv, write_defect_csv
from .mesh import read_mesh
from .output import write_scatter_csv, write_vtk
from .solver import LIMITER_MODES, RunAborted, Solver


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Flat run configuration; every default resolves from the case."""

    case: str = "sod-circular"
    order: int = 2
    h: float | None = None
    mesh: str | None = None
    t_end: float | None = None
    cfl: float = 0.5
    cfl_warmup: float = 0.1
    warmup_steps: int = 10
    m1: float | None = None
    eos: str | None = None
    limiter: str = "auto"
    eno: str = "parent"
    output_every: int = 0
    record_traces: bool = False
    out: str | None = None
    seed: int = 0
    perturb: float = 0.0
    workers: int = 1
    mach: float | None = None
    profile: str | None = None
    scatter_axis: int = 0

    def validate(self) -> "RunConfig":
        name = self.case.split("(")[0].strip()
        if name not in CASE_NAMES:
            raise ConfigError(f"unknown case {self.case!r}; registered: {', '.join(CASE_NAMES)}")
        if self.order not in (1, 2, 3):
            raise ConfigError("order must be 1, 2 or 3")
        if self.eos not in (None, "A", "B"):
            raise ConfigError("eos must be A or B")
        if self.limiter not in LIMITER_MODES:
            raise ConfigError(f"limiter must be one of {', '.join(LIMITER_MODES)}")
        if self.h is not None and self.h <= 0:
            raise ConfigError("h must be positive")
        if not 0 < self.cfl <= 1 or not 0 < self.cfl_warmup <= 1:
            raise ConfigError("cfl values must lie in (0, 1]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self

    def case_params(self) -> dict:
        out = {}
        if self.eos is not None:
            out["eos"] = self.eos
        if self.mach is not None:
            out["M"] = self.mach
        if self.profile is not None:
            out["profile"] = self.profile
        return out

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {'' if v is None else (repr(v) if isinstance(v, float) else v)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: "RunConfig | None" = None) -> "RunConfig":
        cfg = dataclasses.replace(base) if base is not None else cls()
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {n}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            cfg = cfg.with_value(key, val, f"line {n}")
        return cfg

    def with_value(self, key: str, val, where: str = "") -> "RunConfig":
        types = {f.name: f.type for f in fields(self)}
        if key not in types:
            raise ConfigError(f"{where}: unknown key {key!r}".lstrip(": "))
        return dataclasses.replace(self, **{key: _coerce(types[key], val, key)})

    @classmethod
    def read(cls, path) -> "RunConfig":
        return cls.from_text(Path(path).read_text())

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())


def _coerce(typ: str, val, key):
    if not isinstance(val, str):
        return val
    optional = "None" in typ
    if val == "" or (optional and val.lower() == "none"):
        if optional:
            return None
        raise ConfigError(f"{key} needs a value")
    try:
        if typ.startswith("bool"):
            if val.lower() in ("1", "true", "yes", "on"):
                return True
            if val.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(val)
        if typ.startswith("int"):
            return int(val)
        if typ.startswith("float"):
            return float(val)
    except ValueError:
        raise ConfigError(f"bad value {val!r} for {key}") from None
    return val


@dataclass
class RunSummary:
    case: str
    order: int
    n_cells: int
    steps: int
    t_final: float
    wall_time: float
    flag_counts: list
    final_norms: dict | None = None
    defect_sup: dict | None = None
    out_dir: str | None = None

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=1)


def default_out_root() -> Path:
    return Path(os.environ.get("QC_OUT_DIR", "qc_out"))


def build_solver(cfg: RunConfig) -> Solver:
    cfg.validate()
    spec = case(cfg.case, **cfg.case_params())
    mesh = read_mesh(cfg.mesh) if cfg.mesh else spec.mesh(cfg.h, cfg.perturb, cfg.seed)
    return Solver(spec, cfg.order, mesh=mesh, cfl=cfg.cfl, cfl_warmup=cfg.cfl_warmup,
                  warmup_steps=cfg.warmup_steps, m1=cfg.m1, limiter=cfg.limiter, record=cfg.record_traces,
                  eno=cfg.eno, t_end=cfg.t_end)


def _out_dir(cfg: RunConfig, spec_name: str) -> Path:
    if cfg.out:
        return Path(cfg.out)
    tag = f"h{cfg.h:g}" if cfg.h is not None else ("mesh" if cfg.mesh else "default")
    return default_out_root() / f"{spec_name}-N{cfg.order}-{tag}"


def _write_state(solver: Solver, out: Path, stem: str, axis: int) -> None:
    U = solver.subcell_averages()
    flags = solver.lim.state
    write_vtk(out / f"{stem}.vtk", solver.disc.subcells, U, flags, f"{solver.spec.name} t={solver.t!r}")
    write_scatter_csv(out / f"{stem}_scatter.csv", solver.disc.subcells, U, flags, axis)


def run(cfg: RunConfig, write: bool = True, log=None) -> tuple[RunSummary, Solver]:
    """Run one case to completion and write the final state, summary and config."""
    solver = build_solver(cfg)
    out = _out_dir(cfg, solver.spec.name)
    if write:
        out.mkdir(parents=True, exist_ok=True)
        cfg.write(out / "config.txt")
    defect_sup = {"appendix": np.zeros(5)}

    def callback(s, info):
        if info.defect_appendix is not None:
            defect_sup["appendix"] = np.maximum(defect_sup["appendix"], info.defect_appendix)
        if write and cfg.output_every and info.step % cfg.output_every == 0:
            _write_state(s, out, f"state_{info.step:06d}", cfg.scatter_axis)
        if log is not None:
            log(info)

    try:
        solver.run(callback=callback)
    except RunAborted as exc:
        if write:
            dump = {"error": str(exc), "step": exc.step, "t": exc.t,
                    "cells": None if exc.cells is None else np.asarray(exc.cells).tolist(),
                    "states": None if exc.states is None else np.asarray(exc.states).tolist()}
            (out / "abort_dump.json").write_text(json.dumps(dump, indent=1))
        raise
    norms = None
    if solver.spec.exact is not None:
        norms = {k: list(v) for k, v in solver.errors().items()}
    dsup = None
    if cfg.record_traces and solver.last_record is not None:
        dsup = {"appendix_max_over_steps": defect_sup["appendix"].tolist()}
        rep = compute_defect(solver.last_record, solver.mesh.cell_area, solver.eos, "appendix")
        if write:
            write_defect_csv(out / "defect.csv", rep)
    summary = RunSummary(solver.spec.name, cfg.order, solver.mesh.n_cells, solver.nstep, solver.t, solver.wall,
                         solver.flag_counts().tolist(), norms, dsup, str(out) if write else None)
    if write:
        _write_state(solver, out, "final", cfg.scatter_axis)
        (out / "summary.json").write_text(summary.to_json())
    return summary, solver


def run_convergence(cfg: RunConfig, hs, write: bool = True):
    hs = [float(h) for h in hs]
    if len(hs) < 2 or any(b >= a for a, b in zip(hs, hs[1:])):
        raise ConfigError("convergence needs >= 2 strictly decreasing h values")
    errors = []
    for h in hs:
        summary, _ = run(dataclasses.replace(cfg, h=h, out=None), write=False)
        if summary.final_norms is None:
            raise ConfigError(f"case {cfg.case} has no exact solution")
        errors.append({k: tuple(v) for k, v in summary.final_norms.items()})
    table = convergence(hs, errors)
    if write:
        out = Path(cfg.out) if cfg.out else default_out_root() / f"{cfg.case}-N{cfg.order}-convergence"
        out.mkdir(parents=True, exist_ok=True)
        write_convergence_csv(out / "convergence.csv", table)
    return table


def run_defect_study(cfg: RunConfig, hs, write: bool = True):
    """Sup-norm of the appendix-flux defect over all steps and cells, per mesh, with fitted slopes."""
    hs = [float(h) for h in hs]
    sups = []
    for h in hs:
        summary, _ = run(dataclasses.replace(cfg, h=h, out=None, record_traces=True), write=False)
        sups.append(summary.defect_sup["appendix_max_over_steps"])
    sups = np.array(sups)
    slopes = [fit_slope(hs, sups[:, k]) if len(hs) > 1 and np.all(sups[:, k] > 0) else float("nan")
              for k in range(5)]
    if write:
        out = Path(cfg.out) if cfg.out else default_out_root() / f"{cfg.case}-N{cfg.order}-defect"
        out.mkdir(parents=True, exist_ok=True)
        with (out / "defect_study.csv").open("w") as fh:
            fh.write("h,delta_rho,delta_rhou,delta_rhov,delta_rhoE,delta_rhochi\n")
            for h, s in zip(hs, sups):
                fh.write(",".join([repr(h)] + [repr(float(x)) for x in s]) + "\n")
            fh.write(",".join(["slope"] + [repr(x) for x in slopes]) + "\n")
    return hs, sups, slopes


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcader", description="Quasi-conservative ADER-DG solver")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, single_h: bool):
        sp.add_argument("--config", help="flat key = value file; flags override it")
        sp.add_argument("--case")
        sp.add_argument("--order", type=int)
        if single_h:
            sp.add_argument("--h", type=float)
            sp.add_argument("--mesh")
        else:
            sp.add_argument("--h", required=True, help="comma separated, strictly decreasing")
        sp.add_argument("--t-end", type=float)
        sp.add_argument("--cfl", type=float)
        sp.add_argument("--m1", type=float)
        sp.add_argument("--eos", choices=["A", "B"])
        sp.add_argument("--limiter", choices=LIMITER_MODES)
        sp.add_argument("--mach", type=float)
        sp.add_argument("--profile", choices=["smooth", "jump"])
        sp.add_argument("--out")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--perturb", type=float)
        sp.add_argument("--workers", type=int)

    r = sub.add_parser("run", help="run one case")
    common(r, True)
    r.add_argument("--record-traces", action="store_true", default=None)
    r.add_argument("--output-every", type=int)
    r.add_argument("--quiet", action="store_true")
    common(sub.add_parser("convergence", help="observed orders over several meshes"), False)
    common(sub.add_parser("defect", help="conservation-defect scaling over several meshes"), False)
    return p


def config_from_args(args) -> RunConfig:
    cfg = RunConfig.read(args.config) if getattr(args, "config", None) else RunConfig()
    mapping = {"case": "case", "order": "order", "t_end": "t_end", "cfl": "cfl", "m1": "m1", "eos": "eos",
               "limiter": "limiter", "mach": "mach", "profile": "profile", "out": "out", "seed": "seed",
               "perturb": "perturb", "workers": "workers", "record_traces": "record_traces",
               "output_every": "output_every", "mesh": "mesh"}
    for a, k in mapping.items():
        v = getattr(args, a, None)
        if v is not None:
            cfg = dataclasses.replace(cfg, **{k: v})
    if args.command == "run" and args.h is not None:
        cfg = dataclasses.replace(cfg, h=args.h)
    return cfg.validate()


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "run":
            def log(info):
                if not args.quiet and (info.step % 50 == 0 or info.step <= 1):
                    print(f"step {info.step:6d} t={info.t:.6g} dt={info.dt:.3e} "
                          f"flags ok/troubled/shock={info.n_ok}/{info.n_troubled}/{info.n_shock}", flush=True)
            t0 = time.perf_counter()
            summary, _ = run(cfg, log=log)
            print(f"done: {summary.steps} steps to t={summary.t_final:.6g} in {time.perf_counter() - t0:.1f}s; "
                  f"output in {summary.out_dir}")
            if summary.final_norms:
                print("L1/L2/Linf errors: " + ", ".join(f"{k}={v[1]:.3e}" for k, v in summary.final_norms.items()))
        elif args.command == "convergence":
            hs = [float(x) for x in args.h.split(",")]
            table = run_convergence(cfg, hs)
            print("h        " + "  ".join(f"L2({v})   order" for v in ("rho", "p")))
            for i, h in enumerate(table.h):
                row = [f"{h:<8.4g}"]
                for v in ("rho", "p"):
                    o = f"{table.orders[i - 1][v][1]:5.2f}" if i else "    -"
                    row.append(f"{table.errors[i][v][1]:.3e} {o}")
                print(" ".join(row))
        else:
            hs = [float(x) for x in args.h.split(",")]
            hs, sups, slopes = run_defect_study(cfg, hs)
            for h, s in zip(hs, sups):
                print(f"h={h:<8.4g} sup|delta| = " + " ".join(f"{x:.3e}" for x in s))
            print("fitted slopes: " + " ".join(f"{x:.2f}" for x in slopes))
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RunAborted as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 3
    return 0


__all__ = ["RunConfig", "RunSummary", "run", "run_convergence", "run_defect_study", "main", "VAR_NAMES"]

if __name__ == "__main__":
    sys.exit(main())
