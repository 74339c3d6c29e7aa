"""Command-line experiment runner.

Every subcommand takes the same flags::

    kamstab <experiment> [--config run.json] [--seed N] [--out DIR] [--set key.path=value ...]

The config is one JSON document mirroring :class:`ExperimentConfig`;
``--set`` overrides any leaf by dotted path.  Each run writes its artifacts
(CSV trajectories, JSON results) plus ``manifest.json`` into the output
directory.  Exit status: 0 success, 1 computation error, 2 config error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, acceptance, dynamics, io, kam, lindblad, matcore, models, spectral, symmetry
from .errors import ConfigError, KamstabError, ParseError

EXPERIMENTS = ("decompose", "kam", "bounds", "evolve", "heisenberg-fig", "lindblad-demo", "verify")


@dataclass
class GridConfig:
    t_max: float | None = None  # None: 50 / epsilon
    points: int = 2000
    spacing: str = "linear"


@dataclass
class BoundsConfig:
    d: int | None = None  # None: taken from the system's resolution
    eta: float | None = None
    normV: float = 1.0


@dataclass
class LindbladConfig:
    omega: float = 1.0
    kappa: float = 1.0
    g: float | None = None  # None: g = kappa
    bloch: list[float] = field(default_factory=lambda: [0.2, 0.0, 0.8])


@dataclass
class ExperimentConfig:
    experiment: str = "kam"
    system: str = "two-level"
    perturbation: str | None = None
    observable: str | None = None
    state: str | None = None
    epsilon: float = 0.1
    beta: float | None = None
    grid: GridConfig = field(default_factory=GridConfig)
    seed: int = 0
    lam: float = 1.0
    output_dir: str = "runs"
    bounds: BoundsConfig = field(default_factory=BoundsConfig)
    lindblad: LindbladConfig = field(default_factory=LindbladConfig)
    criteria: list[int] | None = None  # verify: subset of criteria, None for all

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"unknown experiment {self.experiment!r}")
        if not (isinstance(self.epsilon, (int, float)) and math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ConfigError("epsilon", "must be a finite number >= 0")
        if self.beta is not None and not self.beta >= 0:
            raise ConfigError("beta", "must be >= 0")
        if not (isinstance(self.grid.points, int) and self.grid.points >= 2):
            raise ConfigError("grid.points", "must be an integer >= 2")
        if self.grid.t_max is not None and not self.grid.t_max > 0:
            raise ConfigError("grid.t_max", "must be > 0")
        if self.grid.spacing not in ("linear", "geometric"):
            raise ConfigError("grid.spacing", "must be 'linear' or 'geometric'")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ConfigError("lam", "must be finite and >= 0")
        for name in ("system", "perturbation", "observable"):
            tag = getattr(self, name)
            if tag is not None and _looks_like_path(tag) and not Path(tag).exists():
                raise ConfigError(name, f"file {tag!r} does not exist")
        return self

    def make_grid(self) -> dynamics.TimeGrid:
        t_max = self.grid.t_max
        if t_max is None:
            t_max = dynamics.DEFAULT_T_FACTOR / self.epsilon if self.epsilon > 0 else dynamics.DEFAULT_T_FACTOR
        if self.grid.spacing == "geometric":
            return dynamics.TimeGrid.geometric(t_max, self.grid.points)
        return dynamics.TimeGrid.linear(t_max, self.grid.points)


# ---------------------------------------------------------------------------
# Config loading
# ---------------------------------------------------------------------------

_ALIASES = {"lambda": "lam"}


def _from_dict(cls, data: dict, prefix: str = ""):
    if not isinstance(data, dict):
        raise ConfigError(prefix.rstrip(".") or "<root>", "expected an object")
    kwargs = {}
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key, value in data.items():
        name = _ALIASES.get(key, key)
        if name not in fields:
            raise ConfigError(prefix + key, "unknown field")
        sub = _nested_type(cls, name)
        kwargs[name] = _from_dict(sub, value, prefix + key + ".") if sub else value
    return cls(**kwargs)


def _nested_type(cls, name: str):
    return {
        (ExperimentConfig, "grid"): GridConfig,
        (ExperimentConfig, "bounds"): BoundsConfig,
        (ExperimentConfig, "lindblad"): LindbladConfig,
    }.get((cls, name))


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(data: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(assignment, "override must look like key.path=value")
    path, raw = assignment.split("=", 1)
    keys = path.strip().split(".")
    node = data
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(path, f"{key!r} is not an object")
    node[keys[-1]] = _parse_value(raw)


def load_config(experiment: str, config_path: str | None = None, overrides=(), seed=None,
                out=None) -> ExperimentConfig:
    data: dict = {}
    if config_path:
        try:
            data = json.loads(Path(config_path).read_text())
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {config_path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"line {exc.lineno}: {exc.msg}") from exc
    data["experiment"] = experiment
    for assignment in overrides:
        apply_override(data, assignment)
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data["output_dir"] = out
    try:
        cfg = _from_dict(ExperimentConfig, data)
    except TypeError as exc:
        raise ConfigError("<root>", str(exc)) from exc
    return cfg.validate()


# ---------------------------------------------------------------------------
# Model tags
# ---------------------------------------------------------------------------

def _looks_like_path(tag: str) -> bool:
    return tag.endswith(".json") or "/" in tag


def _tag_params(tag: str) -> tuple[str, dict]:
    name, _, rest = tag.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        if "=" not in item:
            raise ConfigError(tag, f"parameter {item!r} needs key=value")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    return name.strip(), params


def _as_bool(v: str) -> bool:
    return str(v).lower() in ("1", "true", "yes")


def build_operator(tag: str, role: str, seed: int) -> np.ndarray:
    """Matrix for a model tag or a matrix JSON file.

    ``role`` is ``system``, ``perturbation`` or ``observable``; composite
    models (``fragile``, ``two-level``) return the matching member.
    """
    if _looks_like_path(tag):
        return io.parse_matrix_file(tag)
    name, p = _tag_params(tag)
    try:
        if name == "heisenberg":
            return models.heisenberg_chain(int(p.get("N", 4)), float(p.get("J", 1.0)),
                                           _as_bool(p.get("normalize", "false")))
        if name == "gue":
            return models.random_hermitian(int(p.get("dim", 8)), int(p.get("seed", seed)),
                                           _as_bool(p.get("normalize", "true")))
        if name == "degenerate":
            levels = p.get("levels")
            return models.degenerate_hermitian(int(p.get("dim", 8)), int(p.get("seed", seed)),
                                               None if levels is None else int(levels),
                                               float(p.get("min_gap", 0.2)))
        if name == "fragile":
            ex = models.fragile_example(float(p.get("e", 0.0)), float(p.get("m1", 1.0)), float(p.get("m2", -1.0)))
            return {"system": ex.H, "perturbation": ex.V, "observable": ex.M}[role]
        if name == "two-level":
            return {"system": models.SZ, "perturbation": models.SX, "observable": models.SZ}[role]
        if name == "pauli":
            # pauli:N=2,ops=0x1x  -> sigma_x on site 0 times sigma_x on site 1
            N = int(p.get("N", 1))
            ops = p.get("ops", "")
            factors = [(int(ops[k:k + 1]), ops[k + 1:k + 2]) for k in range(0, len(ops), 2)]
            return models.pauli_op(N, factors)
        if name == "magnetization":
            return models.magnetization(int(p.get("N", 4)), p.get("axis", "z"))
        if name == "charge":
            N, n = int(p.get("N", 4)), int(p.get("n", 3))
            if n == 1:
                return models.magnetization(N, "z")
            if n == 2:
                return models.heisenberg_chain(N, float(p.get("J", 1.0)))
            return models.boost_charges(N, n, float(p.get("J", 1.0)))[-1]
    except (ValueError, KeyError) as exc:
        raise ConfigError(role, f"bad model tag {tag!r}: {exc}") from exc
    raise ConfigError(role, f"unknown model {name!r}")


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

class Run:
    """Output directory bookkeeping for one invocation."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.out = Path(cfg.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.artifacts: list[str] = []
        self.summary: dict = {}

    def trajectory(self, name: str, traj: dynamics.Trajectory) -> None:
        traj.meta.setdefault("seed", self.cfg.seed)
        traj.write_csv(self.out / f"{name}.csv")
        self.artifacts += [f"{name}.csv", f"{name}.json"]

    def json(self, name: str, obj) -> None:
        io.dump_json(self.out / f"{name}.json", obj)
        self.artifacts.append(f"{name}.json")

    def manifest(self, status: str) -> None:
        io.dump_json(self.out / "manifest.json", {
            "config": dataclasses.asdict(self.cfg),
            "version": __version__,
            "numpy": np.__version__,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "status": status,
            "artifacts": self.artifacts,
            "summary": self.summary,
        })


def _operators(cfg: ExperimentConfig, need_v: bool = True, need_m: bool = False):
    H = build_operator(cfg.system, "system", cfg.seed)
    V = M = None
    if need_v:
        tag = cfg.perturbation or (cfg.system if cfg.system.split(":")[0] in ("fragile", "two-level") else None)
        if tag is None:
            raise ConfigError("perturbation", "required for this experiment")
        V = build_operator(tag, "perturbation", cfg.seed + 1)
        if V.shape != H.shape:
            raise ConfigError("perturbation", f"dimension {V.shape[0]} != system dimension {H.shape[0]}")
    if need_m or cfg.observable:
        tag = cfg.observable or (cfg.system if cfg.system.split(":")[0] in ("fragile", "two-level") else None)
        if tag is None:
            raise ConfigError("observable", "required for this experiment")
        M = build_operator(tag, "observable", cfg.seed + 2)
        if M.shape != H.shape:
            raise ConfigError("observable", f"dimension {M.shape[0]} != system dimension {H.shape[0]}")
    return H, V, M


def run_decompose(run: Run) -> None:
    H, _, M = _operators(run.cfg, need_v=False, need_m=True)
    res = spectral.resolve(H)
    dec = symmetry.decompose_observable(res, M)
    cls = symmetry.classify(res, M)
    out = {"resolution": io.resolution_to_json(res), "decomposition": io.decomposition_to_json(dec),
           "class": cls.label}
    if cls.label == "Robust":
        pc = spectral.poly_coeffs(res, M)
        out["polynomial"] = {"coefficients": [[c.real, c.imag] for c in pc.coefficients], "residual": pc.residual}
    run.json("decomposition", out)
    run.summary = {"class": cls.label, **dec.norms()}


def run_kam(run: Run) -> None:
    cfg = run.cfg
    H, V, _ = _operators(cfg)
    res = spectral.resolve(H)
    kr = kam.isospectral_blockdiag(res, V, cfg.epsilon)
    out = {"kam": io.kam_to_json(kr), "gap": res.gap, "d": res.d}
    try:
        out["bounds"] = io.bounds_to_json(kam.bounds_for(res, V, cfg.epsilon))
    except KamstabError as exc:
        out["bounds"] = None
        out["bounds_error"] = str(exc)
    run.json("kam", out)
    run.summary = {"residual_blockdiag": kr.residual_blockdiag, "residual_isospectral": kr.residual_isospectral,
                   "w_distance": kr.w_distance}


def run_bounds(run: Run) -> None:
    cfg = run.cfg
    b = cfg.bounds
    d, eta, normV = b.d, b.eta, b.normV
    if d is None or eta is None:
        H, V, _ = _operators(cfg, need_v=cfg.perturbation is not None)
        res = spectral.resolve(H)
        d = res.d if d is None else d
        eta = res.gap if eta is None else eta
        if V is not None:
            normV = float(matcore.op_norm(V))
    report = kam.bounds(int(d), float(eta), float(normV), cfg.epsilon)
    t = cfg.make_grid().times
    out = io.bounds_to_json(report)
    out["zeno_bound_at_t_max"] = float(report.zeno_bound(t[-1]))
    run.json("bounds", out)
    run.summary = {"validity": report.validity, "linear_bound": report.linear_bound}


def run_evolve(run: Run) -> None:
    cfg = run.cfg
    H, V, M = _operators(cfg)
    grid = cfg.make_grid()
    res = spectral.resolve(H)
    meta = {"system": cfg.system, "perturbation": cfg.perturbation}
    kr = kam.isospectral_blockdiag(res, V, cfg.epsilon)
    zeno = dynamics.divergence_traj(H, V, cfg.epsilon, kr.V_Z, grid, meta=meta)
    eternal = dynamics.divergence_traj(H, V, cfg.epsilon, kr.V_resummed, grid, meta=meta)
    run.trajectory("divergence_zeno", zeno)
    run.trajectory("divergence_resummed", eternal)
    run.summary = {"max_divergence_zeno": zeno.max(), "max_divergence_resummed": eternal.max()}
    if M is not None:
        drift = dynamics.observable_drift(H, V, cfg.epsilon, M, grid, meta=meta)
        run.trajectory("observable_drift", drift)
        run.summary["max_observable_drift"] = drift.max()
        if cfg.state is not None:
            psi = _state(cfg, H.shape[0])
            exp = dynamics.expectation_traj(H + cfg.epsilon * V, M, psi, grid, meta=meta)
            run.trajectory("expectation", exp)
    if cfg.beta is not None:
        gd = dynamics.gibbs_drift(H, V, cfg.epsilon, cfg.beta, grid, meta=meta)
        run.trajectory("gibbs_drift", gd)
        run.summary["max_gibbs_drift"] = gd.max()


def _state(cfg: ExperimentConfig, dim: int) -> np.ndarray:
    tag = cfg.state or "random"
    name, p = _tag_params(tag)
    if name == "random":
        return models.random_state(dim, int(p.get("seed", cfg.seed + 3)))
    if name == "basis":
        N = int(round(math.log2(dim)))
        return models.basis_state(N, p.get("bits", "0" * N))
    raise ConfigError("state", f"unknown state {tag!r}")


def run_heisenberg_fig(run: Run) -> None:
    """Expectation deviations for a random observable's three parts, and for H and Q_1."""
    cfg = run.cfg
    name, p = _tag_params(cfg.system if cfg.system.startswith("heisenberg") else "heisenberg:N=4")
    N = int(p.get("N", 4))
    J = float(p.get("J", 1.0))
    dim = 2**N
    eps = cfg.epsilon
    H = models.heisenberg_chain(N, J, normalize=True)
    V = build_operator(cfg.perturbation, "perturbation", cfg.seed + 1) if cfg.perturbation \
        else models.random_hermitian(dim, cfg.seed + 1)
    M = build_operator(cfg.observable, "observable", cfg.seed + 2) if cfg.observable \
        else models.random_hermitian(dim, cfg.seed + 2)
    psi = _state(cfg, dim)
    grid = dynamics.TimeGrid.linear(cfg.grid.t_max or 1000.0, cfg.grid.points)
    res = spectral.resolve(H)
    dec = symmetry.decompose_observable(res, M)
    G = H + eps * V
    meta = {"N": N, "epsilon": eps, "model": f"heisenberg:N={N},J={J},normalize=true"}
    for part, X in zip(("noncons", "robust", "fragile"), dec.parts()):
        run.trajectory(f"M_{part}", dynamics.deviation(dynamics.expectation_traj(G, X, psi, grid, meta={**meta, "part": part})))
    run.trajectory("H", dynamics.deviation(dynamics.expectation_traj(G, H, psi, grid, meta={**meta, "observable": "H"})))
    Q1 = models.magnetization(N, "z")
    Q1 = Q1 / matcore.op_norm(Q1)
    run.trajectory("Q1", dynamics.deviation(dynamics.expectation_traj(G, Q1, psi, grid, meta={**meta, "observable": "Q1"})))
    run.summary = {"decomposition_norms": dec.norms(), "gap": res.gap, "d": res.d}


def run_lindblad_demo(run: Run) -> None:
    cfg = run.cfg
    lc = cfg.lindblad
    L, V, M_r, M_f, _ = acceptance.dephasing_setup(lc.omega, lc.kappa, lc.g)
    rho0 = lindblad.bloch_state(lc.bloch)
    grid = dynamics.TimeGrid.linear(cfg.grid.t_max or acceptance.MONO_T_MAX / lc.kappa, cfg.grid.points)
    summary = {}
    for name, M in (("robust", M_r), ("fragile", M_f)):
        free, pert = lindblad.monotone_traj(L, V, cfg.epsilon, lindblad.MonotoneSpec(M, cfg.lam), rho0, grid)
        run.trajectory(f"monotone_{name}_unperturbed", free)
        run.trajectory(f"monotone_{name}_perturbed", pert)
        summary[name] = {"violation": lindblad.monotone_violation(pert), "max_increase": lindblad.max_increase(pert),
                         "final_gap": float(pert.values[-1] - free.values[-1])}
    run.summary = summary


def run_verify(run: Run) -> int:
    results = acceptance.run(run.cfg.criteria)
    for r in results:
        print(r.report())
    run.json("acceptance", [{"number": r.number, "title": r.title, "passed": r.passed, "seconds": r.seconds,
                             "checks": [dataclasses.asdict(c) for c in r.checks]} for r in results])
    run.summary = {str(r.number): r.passed for r in results}
    return 0 if all(r.passed for r in results) else 1


RUNNERS = {
    "decompose": run_decompose,
    "kam": run_kam,
    "bounds": run_bounds,
    "evolve": run_evolve,
    "heisenberg-fig": run_heisenberg_fig,
    "lindblad-demo": run_lindblad_demo,
    "verify": run_verify,
}


def run(cfg: ExperimentConfig) -> int:
    out = Run(cfg)
    t0 = time.perf_counter()
    try:
        status = RUNNERS[cfg.experiment](out) or 0
    except (KamstabError, ValueError) as exc:
        out.summary = {"error": f"{type(exc).__name__}: {exc}", "experiment": cfg.experiment}
        out.manifest("error")
        raise
    out.summary["seconds"] = round(time.perf_counter() - t0, 3)
    out.manifest("ok" if status == 0 else "failed")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kamstab", description="Robustness of conserved quantities under perturbation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int, help="base seed for random models")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config leaf")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.experiment, args.config, args.set, args.seed, args.out)
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (KamstabError, ValueError) as exc:
        print(f"{args.experiment} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
