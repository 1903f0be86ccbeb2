"""Command-line front end: strict config ingestion, run orchestration, file emission.

Configs are INI files with a ``[problem]`` section shared by every subcommand
plus one section per subcommand; unknown sections or keys are hard errors, so
a typo can never silently fall back to a default.  Numeric CSV output uses 17
significant digits and LF line endings, which makes reruns of the same config
byte-identical.

Exit codes: 0 success, 2 config or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import __version__
from .bridge import gaussian_log_normalizer, gaussian_measure, sample_bridge
from .functionals import (
    closed_form_A,
    ginzburg_landau,
    kl_objective,
    quadratic_penalty,
    quasipotential_minimizer,
)
from .greens import IndefiniteOperatorError, assemble_operator, green_diagonal
from .grids import FieldGrid, PathGrid, constant_field, straight_line_path
from .optimize import OptimizerConfig, alternate_minimize, gamma_sweep
from .potentials import PotentialModel, builtin_potential

__all__ = ["ConfigError", "RunConfig", "RunSummary", "load_config", "run", "main"]

SUBCOMMANDS = ("minimize", "kl-eval", "sample-bridge", "green-diag",
               "gamma-sweep", "quasipotential")

_PROBLEM_KEYS = {
    "potential", "lam", "kappa", "d", "x_minus", "x_plus", "n", "eps",
    "gamma", "floor_a", "quad_order", "seed", "objective",
}
_OPTIMIZER_KEYS = {
    "max_outer", "max_inner", "armijo_c", "step_init", "step_shrink",
    "grad_tol", "outer_tol", "stagnation_rtol", "stagnation_window",
    "kl_a_refine_steps",
}
_SECTION_KEYS = {
    "problem": _PROBLEM_KEYS,
    "minimize": _OPTIMIZER_KEYS,
    "gamma-sweep": {"eps_list", "saddle_radius", "qp_horizon", "qp_intervals"},
    "sample-bridge": {"count", "field", "constant_a"},
    "kl-eval": {"field", "constant_a", "path_csv"},
    "green-diag": {"field", "constant_a"},
    "quasipotential": {"x_from", "x_to", "horizon", "intervals"},
}


class ConfigError(ValueError):
    """Malformed or invalid run configuration."""


@dataclass
class RunConfig:
    subcommand: str
    potential_name: str
    potential_params: dict
    x_minus: np.ndarray
    x_plus: np.ndarray
    n: int
    eps: float
    eps_list: list[float]
    gamma: float
    floor_a: float
    quad_order: int
    seed: int
    objective: str
    optimizer_overrides: dict
    options: dict = dc_field(default_factory=dict)

    def potential(self) -> PotentialModel:
        return builtin_potential(self.potential_name, self.potential_params)

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            floor_a=self.floor_a, gamma=self.gamma, quad_order=self.quad_order,
            objective=self.objective, **self.optimizer_overrides)

    def echo(self) -> dict:
        out = {
            "subcommand": self.subcommand,
            "potential": self.potential_name,
            "potential_params": self.potential_params,
            "x_minus": list(self.x_minus),
            "x_plus": list(self.x_plus),
            "n": self.n,
            "eps": self.eps,
            "eps_list": self.eps_list,
            "gamma": self.gamma,
            "floor_a": self.floor_a,
            "quad_order": self.quad_order,
            "seed": self.seed,
            "objective": self.objective,
            "optimizer_overrides": self.optimizer_overrides,
            "options": {k: (list(v) if isinstance(v, np.ndarray) else v)
                        for k, v in self.options.items()},
        }
        return out


@dataclass
class RunSummary:
    config: dict
    wall_time_s: float
    breakdown: dict
    manifest: dict
    version: str
    config_sha256: str
    flags: dict


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(tok) for tok in text.replace(",", " ").split()])
    except ValueError as exc:
        raise ConfigError(f"cannot parse vector {text!r}") from exc


def _get(section, key, cast, default):
    if key not in section:
        return default
    raw = section[key]
    try:
        if cast is int:
            return int(raw)
        if cast is float:
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def load_config(config_path: str | Path, subcommand: str,
                seed_override: int | None = None) -> RunConfig:
    """Parse and validate an INI config for one subcommand; strict on unknowns."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    path = Path(config_path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if "problem" not in parser:
        raise ConfigError("config needs a [problem] section")
    for sec in parser.sections():
        if sec not in _SECTION_KEYS:
            raise ConfigError(f"unknown section [{sec}]")
        unknown = set(parser[sec]) - _SECTION_KEYS[sec]
        if unknown:
            raise ConfigError(f"unknown keys in [{sec}]: {sorted(unknown)}")

    prob = parser["problem"]
    name = _get(prob, "potential", str, None)
    if name is None:
        raise ConfigError("[problem] must set potential")
    params = {}
    if "lam" in prob:
        params["lam"] = _get(prob, "lam", float, None)
    if "kappa" in prob:
        params["kappa"] = _get(prob, "kappa", float, None)
    if "d" in prob:
        params["d"] = _get(prob, "d", int, None)
    try:
        potential = builtin_potential(name, params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    x_minus = _parse_vector(prob.get("x_minus", "0"))
    x_plus = _parse_vector(prob.get("x_plus", "1"))
    if x_minus.size != potential.dim or x_plus.size != potential.dim:
        raise ConfigError(
            f"endpoints must have dimension {potential.dim}, got "
            f"{x_minus.size} and {x_plus.size}")
    n = _get(prob, "n", int, 400)
    eps = _get(prob, "eps", float, 0.1)
    gamma = _get(prob, "gamma", float, 0.25)
    floor_a = _get(prob, "floor_a", float, 1e-3)
    quad_order = _get(prob, "quad_order", int, 20)
    seed = _get(prob, "seed", int, 0)
    objective = _get(prob, "objective", str, "fbar")
    if seed_override is not None:
        seed = int(seed_override)
    if n < 4:
        raise ConfigError("n must be at least 4")
    if eps <= 0:
        raise ConfigError("eps must be positive")
    if not 0.0 < gamma < 0.5:
        raise ConfigError("gamma must lie in (0, 1/2)")
    if floor_a <= 0:
        raise ConfigError("floor_a must be positive")
    if quad_order < 1:
        raise ConfigError("quad_order must be positive")
    if objective not in ("fbar", "full_kl"):
        raise ConfigError("objective must be fbar or full_kl")

    overrides = {}
    if "minimize" in parser:
        sec = parser["minimize"]
        for key in _OPTIMIZER_KEYS:
            if key in sec:
                cast = float if key in ("armijo_c", "step_init", "step_shrink",
                                        "grad_tol", "outer_tol",
                                        "stagnation_rtol") else int
                overrides[key] = _get(sec, key, cast, None)

    eps_list: list[float] = []
    options: dict = {}
    if subcommand == "gamma-sweep":
        if "gamma-sweep" not in parser or "eps_list" not in parser["gamma-sweep"]:
            raise ConfigError("[gamma-sweep] must set eps_list")
        sec = parser["gamma-sweep"]
        eps_list = [float(v) for v in _parse_vector(sec["eps_list"])]
        if not eps_list or any(e <= 0 for e in eps_list):
            raise ConfigError("eps_list must be positive")
        if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
            raise ConfigError("eps_list must be strictly decreasing")
        options["saddle_radius"] = _get(sec, "saddle_radius", float, 0.1)
        options["qp_horizon"] = _get(sec, "qp_horizon", float, 20.0)
        options["qp_intervals"] = _get(sec, "qp_intervals", int, 2000)
    elif subcommand == "sample-bridge":
        sec = parser["sample-bridge"] if "sample-bridge" in parser else {}
        options["count"] = _get(sec, "count", int, 1000) if sec else 1000
        options["field"] = _get(sec, "field", str, "closed_form") if sec else "closed_form"
        options["constant_a"] = _get(sec, "constant_a", float, 1.0) if sec else 1.0
        if options["count"] < 1:
            raise ConfigError("count must be at least 1")
    elif subcommand in ("kl-eval", "green-diag"):
        sec = parser[subcommand] if subcommand in parser else {}
        options["field"] = _get(sec, "field", str, "closed_form") if sec else "closed_form"
        options["constant_a"] = _get(sec, "constant_a", float, 1.0) if sec else 1.0
        if subcommand == "kl-eval" and sec and "path_csv" in sec:
            options["path_csv"] = sec["path_csv"].strip()
    elif subcommand == "quasipotential":
        if "quasipotential" not in parser:
            raise ConfigError("[quasipotential] section required")
        sec = parser["quasipotential"]
        if "x_from" not in sec or "x_to" not in sec:
            raise ConfigError("[quasipotential] must set x_from and x_to")
        options["x_from"] = _parse_vector(sec["x_from"])
        options["x_to"] = _parse_vector(sec["x_to"])
        options["horizon"] = _get(sec, "horizon", float, 20.0)
        options["intervals"] = _get(sec, "intervals", int, 2000)
        if options["horizon"] <= 0 or options["intervals"] < 4:
            raise ConfigError("horizon must be positive and intervals >= 4")
    if subcommand in ("sample-bridge", "kl-eval", "green-diag"):
        if options.get("field") not in ("closed_form", "constant"):
            raise ConfigError("field must be closed_form or constant")
        if options.get("constant_a", 1.0) <= 0:
            raise ConfigError("constant_a must be positive")

    cfg = RunConfig(
        subcommand=subcommand, potential_name=name, potential_params=params,
        x_minus=x_minus, x_plus=x_plus, n=n, eps=eps, eps_list=eps_list,
        gamma=gamma, floor_a=floor_a, quad_order=quad_order, seed=seed,
        objective=objective, optimizer_overrides=overrides, options=options,
    )
    _validate_endpoints(cfg, potential)
    try:
        cfg.optimizer_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _validate_endpoints(cfg: RunConfig, p: PotentialModel) -> None:
    if cfg.subcommand in ("minimize", "gamma-sweep"):
        for label, x in (("x_minus", cfg.x_minus), ("x_plus", cfg.x_plus)):
            if not p.is_critical_point(x):
                raise ConfigError(
                    f"{label} = {list(x)} must be a declared critical point "
                    f"for {cfg.subcommand}")
    if cfg.subcommand == "quasipotential":
        for label in ("x_from", "x_to"):
            x = cfg.options[label]
            if x.size != p.dim:
                raise ConfigError(f"{label} must have dimension {p.dim}")
            if not p.is_critical_point(x):
                raise ConfigError(f"{label} = {list(x)} must be a declared critical point")


# ---------------------------------------------------------------------------
# emission helpers
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _upper_triangle(mat: np.ndarray) -> list[float]:
    d = mat.shape[0]
    return [mat[i, j] for i in range(d) for j in range(i, d)]


def _path_rows(m: PathGrid):
    t = m.times
    for i in range(m.n + 1):
        yield [t[i], *m.values[i]]


def _field_rows(A: FieldGrid):
    t = A.times
    for i in range(A.n + 1):
        yield [t[i], *_upper_triangle(A.values[i])]


def _path_header(d: int) -> list[str]:
    return ["t"] + [f"m{k + 1}" for k in range(d)]


def _field_header(d: int) -> list[str]:
    return ["t"] + [f"A{i + 1}{j + 1}" for i in range(d) for j in range(i, d)]


def _load_path_csv(path: Path, n: int, d: int) -> PathGrid:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim == 1:
        data = data[None, :]
    if data.shape != (n + 1, d + 1):
        raise ConfigError(
            f"path csv {path} has shape {data.shape}, expected {(n + 1, d + 1)}")
    return PathGrid(data[:, 1:])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _build_field(cfg: RunConfig, p: PotentialModel, m: PathGrid) -> FieldGrid:
    if cfg.options.get("field", "closed_form") == "constant":
        a = cfg.options.get("constant_a", 1.0)
        return constant_field(a * np.eye(p.dim), cfg.n,
                              floor_a=min(cfg.floor_a, a))
    return closed_form_A(p, m, cfg.floor_a)


# ---------------------------------------------------------------------------
# subcommand bodies: each returns (breakdown dict, flags dict, files written)
# ---------------------------------------------------------------------------

def _cmd_minimize(cfg: RunConfig, out: Path):
    p = cfg.potential()
    m0 = straight_line_path(cfg.x_minus, cfg.x_plus, cfg.n)
    m, A, trace = alternate_minimize(p, m0, cfg.eps, cfg.optimizer_config())
    files = []
    _write_csv(out / "path.csv", _path_header(p.dim), _path_rows(m))
    files.append("path.csv")
    _write_csv(out / "field.csv", _field_header(p.dim), _field_rows(A))
    files.append("field.csv")
    with open(out / "trace.jsonl", "w", newline="\n") as fh:
        for r in trace.records:
            fh.write(json.dumps({
                "outer": r.outer, "objective": r.objective,
                "m_grad_norm": r.m_grad_norm, "a_delta_norm": r.a_delta_norm,
                "step": r.step}) + "\n")
    files.append("trace.jsonl")
    breakdown = {
        "objective": trace.records[-1].objective if trace.records else None,
        "energy": ginzburg_landau(p, m, cfg.eps),
        "penalty": quadratic_penalty(p, m, A),
        "outer_iterations": len(trace.records),
    }
    return breakdown, {"converged": trace.converged}, files


def _cmd_kl_eval(cfg: RunConfig, out: Path):
    p = cfg.potential()
    if "path_csv" in cfg.options:
        m = _load_path_csv(Path(cfg.options["path_csv"]), cfg.n, p.dim)
    else:
        m = straight_line_path(cfg.x_minus, cfg.x_plus, cfg.n)
    A = _build_field(cfg, p, m)
    gm = gaussian_measure(m, A, cfg.eps)
    kb = kl_objective(gm, p, cfg.gamma, cfg.quad_order)
    payload = {
        "expectation_psi": kb.expectation_psi,
        "kinetic": kb.kinetic,
        "quad_expect": kb.quad_expect,
        "trace_term": kb.trace_term,
        "logdet_term": kb.logdet_term,
        "regularizer": kb.regularizer,
        "total": kb.total,
        "log_normalizer": gaussian_log_normalizer(gm),
        "inputs": cfg.echo(),
    }
    (out / "kl.json").write_text(json.dumps(payload, indent=2) + "\n")
    print(json.dumps(payload, indent=2))
    files = ["kl.json"]
    _write_csv(out / "path.csv", _path_header(p.dim), _path_rows(m))
    files.append("path.csv")
    _write_csv(out / "field.csv", _field_header(p.dim), _field_rows(A))
    files.append("field.csv")
    return {k: payload[k] for k in ("expectation_psi", "kinetic", "quad_expect",
                                    "trace_term", "logdet_term", "regularizer",
                                    "total")}, {}, files


def _cmd_sample_bridge(cfg: RunConfig, out: Path):
    p = cfg.potential()
    m = straight_line_path(cfg.x_minus, cfg.x_plus, cfg.n)
    A = _build_field(cfg, p, m)
    gm = gaussian_measure(m, A, cfg.eps)
    batch = sample_bridge(gm, cfg.options["count"], cfg.seed)

    def rows():
        for s in range(batch.count):
            for i, t in enumerate(batch.interior_times):
                yield [float(s), t, *batch.z[s, i]]

    header = ["sample_id", "t"] + [f"z{k + 1}" for k in range(p.dim)]
    _write_csv(out / "samples.csv", header, rows())
    mid = batch.z[:, batch.z.shape[1] // 2, :]
    breakdown = {
        "count": batch.count,
        "midpoint_variance": [float(v) for v in mid.var(axis=0)],
    }
    return breakdown, {}, ["samples.csv"]


def _cmd_green_diag(cfg: RunConfig, out: Path):
    p = cfg.potential()
    m = straight_line_path(cfg.x_minus, cfg.x_plus, cfg.n)
    A = _build_field(cfg, p, m)
    op = assemble_operator(A, cfg.eps)
    gd = green_diagonal(op)

    def rows():
        for i, t in enumerate(op.interior_times):
            yield [t, *_upper_triangle(gd.blocks[i])]

    header = ["t"] + [f"G{i + 1}{j + 1}" for i in range(p.dim)
                      for j in range(i, p.dim)]
    _write_csv(out / "green_diag.csv", header, rows())
    return {"max_frobenius": gd.max_frobenius}, {}, ["green_diag.csv"]


def _cmd_gamma_sweep(cfg: RunConfig, out: Path):
    p = cfg.potential()
    m0 = straight_line_path(cfg.x_minus, cfg.x_plus, cfg.n)
    report = gamma_sweep(p, m0, cfg.eps_list, cfg.optimizer_config(),
                         saddle_radius=cfg.options["saddle_radius"],
                         qp_horizon=cfg.options["qp_horizon"],
                         qp_n=cfg.options["qp_intervals"])
    header = ["eps", "energy", "penalty", "fbar", "saddle_fraction",
              "limit_total", "objective"]
    _write_csv(out / "sweep_table.csv", header,
               ([r.eps, r.energy, r.penalty, r.fbar_value, r.saddle_fraction,
                 r.limit_total, r.objective] for r in report.rows))
    files = ["sweep_table.csv"]
    last = report.rows[-1]
    m_last = PathGrid(last.path_values)
    A_last = FieldGrid(last.field_values, cfg.floor_a)
    _write_csv(out / "path.csv", _path_header(p.dim), _path_rows(m_last))
    files.append("path.csv")
    _write_csv(out / "field.csv", _field_header(p.dim), _field_rows(A_last))
    files.append("field.csv")
    breakdown = {"rows": report.as_table()}
    flags = {"converged": all(r.converged for r in report.rows)}
    return breakdown, flags, files


def _cmd_quasipotential(cfg: RunConfig, out: Path):
    p = cfg.potential()
    res = quasipotential_minimizer(
        p, cfg.options["x_from"], cfg.options["x_to"],
        horizon_T=cfg.options["horizon"], n=cfg.options["intervals"])
    payload = {
        "value": res.value,
        "converged": res.converged,
        "grad_norm": res.grad_norm,
        "iterations": res.iterations,
        "x_from": [float(v) for v in cfg.options["x_from"]],
        "x_to": [float(v) for v in cfg.options["x_to"]],
        "horizon": cfg.options["horizon"],
        "intervals": cfg.options["intervals"],
    }
    (out / "quasipotential.json").write_text(json.dumps(payload, indent=2) + "\n")

    def rows():
        for t, x in zip(res.times, res.path):
            yield [t, *x]

    _write_csv(out / "qp_path.csv", _path_header(p.dim), rows())
    return {"value": res.value}, {"converged": res.converged}, [
        "quasipotential.json", "qp_path.csv"]


_BODIES = {
    "minimize": _cmd_minimize,
    "kl-eval": _cmd_kl_eval,
    "sample-bridge": _cmd_sample_bridge,
    "green-diag": _cmd_green_diag,
    "gamma-sweep": _cmd_gamma_sweep,
    "quasipotential": _cmd_quasipotential,
}


def run(subcommand: str, config_path: str | Path, out_dir: str | Path = "./out",
        seed_override: int | None = None, threads: int = 0) -> RunSummary:
    """Run one subcommand; write its files plus summary.json into out_dir.

    ``threads`` is accepted for interface stability; evaluation is
    single-process and deterministic regardless of its value.
    """
    del threads
    cfg = load_config(config_path, subcommand, seed_override)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    breakdown, flags, files = _BODIES[subcommand](cfg, out)
    wall = time.perf_counter() - t0
    manifest = {name: _sha256(out / name) for name in files}
    summary = RunSummary(
        config=cfg.echo(), wall_time_s=wall, breakdown=breakdown,
        manifest=manifest, version=__version__,
        config_sha256=_sha256(Path(config_path)), flags=flags,
    )
    (out / "summary.json").write_text(json.dumps({
        "config": summary.config, "wall_time_s": summary.wall_time_s,
        "breakdown": summary.breakdown, "manifest": summary.manifest,
        "version": summary.version, "config_sha256": summary.config_sha256,
        "flags": summary.flags,
    }, indent=2) + "\n")
    return summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tpgauss",
        description="Gaussian approximation of transition-path distributions")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="INI config file")
    parser.add_argument("--out", default="./out", help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--threads", type=int, default=0,
                        help="0 = auto (accepted for compatibility)")
    args = parser.parse_args(argv)
    try:
        run(args.subcommand, args.config, args.out, args.seed, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IndefiniteOperatorError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
