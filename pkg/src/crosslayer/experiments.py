"""Experiment configuration and the four CSV-emitting study drivers.

Config files are flat ``key = value`` text (``#`` comments allowed); CLI
flags override file values. Every driver is a pure function of its config
and inputs: repeated runs produce identical CSV bytes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO

import numpy as np

from . import netgen
from .agents import AgentAssignment, AsmtcParams, ControlCostModel, asmtc
from .diffusion import OverheadLedger, TrialPool, estimate_spread
from .errors import DomainError, ParseError
from .graphs import (AdhocGraph, DistanceOracle, LayerMapping, SocialGraph,
                     dump_adhoc, dump_social, load_adhoc, load_social,
                     validate_layers)
from .seeding import (DeploymentCostModel, SeedSelection, celf_select,
                      deployment_profile, greedy_select)


def parse_kv(stream: IO[str]) -> dict[str, str]:
    """Parse ``key = value`` lines; later keys win; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for no, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", line_no=no)
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _limit(raw: str) -> float:
    return math.inf if raw in ("inf", "none", "") else float(raw)


@dataclass
class ExperimentConfig:
    """Everything a run needs: inputs or generator knobs, budgets, prices."""

    social: str = "generate"          # path, or "generate"
    adhoc: str = "generate"
    n: int = 1000
    avg_degree: float = 10.0
    max_degree: int = 15
    degree_exponent: float = 2.0
    community_exponent: float = 1.0
    mixing_topology: float = 0.1
    mixing_weight: float = 0.1
    social_avg_degree: float | None = None   # defaults to avg_degree
    social_max_degree: int | None = None
    mapping: str = "random"           # "random" or "identity"
    prob_model: str = "constant"
    prob_p: float = 0.05
    prob_values: tuple[float, ...] = (0.1, 0.01, 0.001)
    k: int = 10
    trials: int = 1000
    rng_seed: int = 0
    alpha: float = math.inf
    beta: float = math.inf
    max_delegated: float = math.inf
    weight_mode: str = "uniform"
    broadcast_cost: int | None = None
    include_returns: bool = True
    return_mode: str = "agent"
    candidate_cap: int | None = None
    fig4_sizes: tuple[int, ...] = (250, 500, 750, 1000)
    fig6_degrees: tuple[float, ...] = (10.0, 45.0)
    fig6_ks: tuple[int, ...] = (5, 10)
    out: str = "."

    @classmethod
    def from_kv(cls, kv: dict[str, str]) -> "ExperimentConfig":
        cfg = cls()
        casts = {
            "n": int, "max_degree": int, "k": int, "trials": int,
            "rng_seed": int, "social_max_degree": int,
            "avg_degree": float, "degree_exponent": float,
            "community_exponent": float, "mixing_topology": float,
            "mixing_weight": float, "social_avg_degree": float,
            "prob_p": float,
            "alpha": _limit, "beta": _limit, "max_delegated": _limit,
            "broadcast_cost": int, "candidate_cap": int,
            "include_returns": lambda s: s.lower() in ("1", "true", "yes"),
            "prob_values": lambda s: tuple(float(x) for x in s.split(",")),
            "fig4_sizes": lambda s: tuple(int(x) for x in s.split(",")),
            "fig6_degrees": lambda s: tuple(float(x) for x in s.split(",")),
            "fig6_ks": lambda s: tuple(int(x) for x in s.split(",")),
        }
        for key, raw in kv.items():
            if not hasattr(cfg, key):
                raise DomainError(f"unknown config key {key!r}")
            cast = casts.get(key, str)
            try:
                setattr(cfg, key, cast(raw))
            except ValueError:
                raise DomainError(f"bad value for {key!r}: {raw!r}") from None
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_kv(parse_kv(fh))

    def asmtc_params(self) -> AsmtcParams:
        return AsmtcParams(alpha=self.alpha, beta=self.beta,
                           max_delegated=self.max_delegated,
                           weight_mode=self.weight_mode)

    def cost_model(self) -> DeploymentCostModel:
        return DeploymentCostModel(broadcast_cost=self.broadcast_cost,
                                   include_returns=self.include_returns,
                                   return_mode=self.return_mode,
                                   candidate_cap=self.candidate_cap)

    def prob(self) -> netgen.ProbabilityModel:
        return netgen.ProbabilityModel(kind=self.prob_model, p=self.prob_p,
                                       values=self.prob_values,
                                       rng_seed=self.rng_seed)


@dataclass
class Instance:
    social: SocialGraph
    adhoc: AdhocGraph
    mapping: LayerMapping
    oracle: DistanceOracle
    diagnostics: dict = field(default_factory=dict)


def build_instance(cfg: ExperimentConfig) -> Instance:
    """Load or generate both layers plus the mapping, then cross-validate."""
    diag: dict = {}
    if cfg.adhoc == "generate":
        params = netgen.GenParams(
            n=cfg.n, avg_degree=cfg.avg_degree, max_degree=cfg.max_degree,
            degree_exponent=cfg.degree_exponent,
            community_exponent=cfg.community_exponent,
            mixing_topology=cfg.mixing_topology,
            mixing_weight=cfg.mixing_weight, rng_seed=cfg.rng_seed)
        adhoc, gen_diag = netgen.generate_manet(params)
        diag["adhoc"] = gen_diag.to_dict()
    else:
        with open(cfg.adhoc) as fh:
            adhoc = load_adhoc(fh)

    if cfg.social == "generate":
        sp = netgen.GenParams(
            n=adhoc.n,
            avg_degree=cfg.social_avg_degree or cfg.avg_degree,
            max_degree=cfg.social_max_degree or cfg.max_degree,
            degree_exponent=cfg.degree_exponent,
            community_exponent=cfg.community_exponent,
            mixing_topology=cfg.mixing_topology,
            mixing_weight=cfg.mixing_weight,
            rng_seed=cfg.rng_seed + 1)  # distinct stream from the ad-hoc layer
        base, gen_diag = netgen.generate_manet(sp)
        social = netgen.social_from_undirected(base)
        diag["social"] = gen_diag.to_dict()
    else:
        with open(cfg.social) as fh:
            social = load_social(fh)
    if not social.has_probabilities():
        social = netgen.assign_probabilities(social, cfg.prob())

    if cfg.mapping == "identity":
        mapping = LayerMapping.identity(social.n)
    elif cfg.mapping == "random":
        mapping = netgen.random_mapping(social.n, cfg.rng_seed + 2)
    else:
        raise DomainError(f"unknown mapping mode {cfg.mapping!r}")

    layer_diag = validate_layers(social, adhoc, mapping)
    diag["warnings"] = layer_diag.warnings
    return Instance(social=social, adhoc=adhoc, mapping=mapping,
                    oracle=DistanceOracle(adhoc), diagnostics=diag)


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------


def cmd_gen(cfg: ExperimentConfig) -> list[Path]:
    """Generate and persist both layers, the mapping, and diagnostics."""
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    inst = build_instance(cfg)
    written = []
    with open(outdir / "adhoc.edges", "w") as fh:
        dump_adhoc(inst.adhoc, fh)
    written.append(outdir / "adhoc.edges")
    with open(outdir / "social.edges", "w") as fh:
        dump_social(inst.social, fh)
    written.append(outdir / "social.edges")
    with open(outdir / "mapping.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["social", "adhoc"])
        for v in range(len(inst.mapping)):
            w.writerow([v, inst.mapping[v]])
    written.append(outdir / "mapping.csv")
    with open(outdir / "diagnostics.json", "w") as fh:
        json.dump(inst.diagnostics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(outdir / "diagnostics.json")
    return written


def select_seeds(cfg: ExperimentConfig, inst: Instance,
                 algorithm: str = "celf") -> SeedSelection:
    pool = TrialPool(cfg.rng_seed, cfg.trials)
    if algorithm == "celf":
        return celf_select(inst.social, cfg.k, pool)
    if algorithm == "greedy":
        return greedy_select(inst.social, cfg.k, pool)
    raise DomainError(f"unknown selection algorithm {algorithm!r}")


def cmd_seeds(cfg: ExperimentConfig, algorithm: str = "celf") -> Path:
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    inst = build_instance(cfg)
    selection = select_seeds(cfg, inst, algorithm)
    path = outdir / "seeds.csv"
    with open(path, "w", newline="") as fh:
        selection.write_csv(fh)
    return path


def cmd_agents(cfg: ExperimentConfig) -> list[Path]:
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    inst = build_instance(cfg)
    assignment, ledger = asmtc(inst.social, inst.oracle, inst.mapping,
                               cfg.asmtc_params())
    paths = []
    with open(outdir / "agents.csv", "w", newline="") as fh:
        assignment.write_csv(fh)
    paths.append(outdir / "agents.csv")
    with open(outdir / "agents_ledger.csv", "w", newline="") as fh:
        ledger.write_csv(fh)
    paths.append(outdir / "agents_ledger.csv")
    return paths


# ----------------------------------------------------------------------
# Study drivers
# ----------------------------------------------------------------------


def run_fig3(cfg: ExperimentConfig) -> list[tuple]:
    """Spread of the selected seeds with and without agents, per budget."""
    inst = build_instance(cfg)
    pool = TrialPool(cfg.rng_seed, cfg.trials)
    selection = celf_select(inst.social, cfg.k, pool)
    # Agents reroute messages through the ad-hoc layer but never enter the
    # diffusion itself, so both arms share one estimator per budget.
    asmtc(inst.social, inst.oracle, inst.mapping, cfg.asmtc_params())
    rows = []
    for k in range(1, cfg.k + 1):
        seeds = selection.seeds[:k]
        spread = estimate_spread(inst.social, seeds, pool)
        rows.append((k, spread, spread))
    return rows


def run_fig4(cfg: ExperimentConfig) -> list[tuple]:
    """Heuristic control overhead vs deployment overhead as n grows."""
    rows = []
    for n in cfg.fig4_sizes:
        sub = replace(cfg, n=int(n))
        inst = build_instance(sub)
        pool = TrialPool(sub.rng_seed, sub.trials)
        assignment, control = asmtc(inst.social, inst.oracle, inst.mapping,
                                    sub.asmtc_params(), ControlCostModel())
        selection = celf_select(inst.social, sub.k, pool)
        profile = deployment_profile(inst.social, selection, [assignment],
                                     inst.oracle, inst.mapping, pool,
                                     sub.cost_model())
        deploy = OverheadLedger()
        for ledgers in profile:
            deploy.add(ledgers[0])
        rows.append((int(n), control.total, deploy.total))
    return rows


def run_fig5(cfg: ExperimentConfig) -> list[tuple]:
    """Deployment overhead as the delegation budget grows."""
    inst = build_instance(cfg)
    pool = TrialPool(cfg.rng_seed, cfg.trials)
    selection = celf_select(inst.social, cfg.k, pool)
    n = inst.social.n
    caps = [0, n // 8, n // 4, n // 2, n]
    assignments = []
    for cap in caps:
        params = replace(cfg.asmtc_params(), max_delegated=cap)
        assignment, _ = asmtc(inst.social, inst.oracle, inst.mapping, params)
        assignments.append(assignment)
    profile = deployment_profile(inst.social, selection, assignments,
                                 inst.oracle, inst.mapping, pool,
                                 cfg.cost_model())
    rows = []
    for idx, cap in enumerate(caps):
        total = sum(ledgers[idx].total for ledgers in profile)
        rows.append((cap, total))
    return rows


def run_fig6(cfg: ExperimentConfig) -> list[tuple]:
    """Overhead vs ad-hoc density: baseline and heuristic, per budget."""
    if cfg.social == "generate" and cfg.adhoc != "generate":
        raise DomainError("fig6 varies the generated ad-hoc layer")
    kmax = max(cfg.fig6_ks)
    # Pin the friendship-layer knobs so only the ad-hoc density varies.
    base_cfg = replace(cfg, k=kmax,
                       social_avg_degree=cfg.social_avg_degree or cfg.avg_degree,
                       social_max_degree=cfg.social_max_degree or cfg.max_degree)
    rows = []
    social = None
    selection = None
    pool = TrialPool(cfg.rng_seed, cfg.trials)
    for deg in cfg.fig6_degrees:
        sub = replace(base_cfg, avg_degree=float(deg),
                      max_degree=max(cfg.max_degree, int(math.ceil(deg)) + 5))
        inst = build_instance(sub)
        if social is None:
            social = inst.social
            selection = celf_select(social, kmax, pool)
        else:
            # The friendship layer and hence the selection are density-invariant.
            inst = Instance(social=social, adhoc=inst.adhoc,
                            mapping=inst.mapping, oracle=inst.oracle,
                            diagnostics=inst.diagnostics)
        baseline = AgentAssignment.all_self(social.n)
        agented, _ = asmtc(social, inst.oracle, inst.mapping,
                           sub.asmtc_params())
        profile = deployment_profile(social, selection, [baseline, agented],
                                     inst.oracle, inst.mapping, pool,
                                     sub.cost_model())
        for k in cfg.fig6_ks:
            base_total = sum(l[0].total for l in profile[:k])
            asmtc_total = sum(l[1].total for l in profile[:k])
            red = 100.0 * (base_total - asmtc_total) / base_total if base_total else 0.0
            rows.append((k, float(deg), base_total, asmtc_total, red))
    return rows


_FIGS = {
    "fig3": (run_fig3, ["K", "spread_without_agents", "spread_with_agents"]),
    "fig4": (run_fig4, ["n", "asmtc_control_overhead", "deployment_overhead_with_agents"]),
    "fig5": (run_fig5, ["num_delegated_allowed", "deployment_overhead"]),
    "fig6": (run_fig6, ["K", "avg_degree", "overhead_no_agents",
                        "overhead_asmtc", "reduction_pct"]),
}


def cmd_experiment(cfg: ExperimentConfig, which: str) -> Path:
    if which not in _FIGS:
        raise DomainError(f"unknown experiment {which!r}; expected one of {sorted(_FIGS)}")
    runner, header = _FIGS[which]
    rows = runner(cfg)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / f"{which}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(list(row))
    return path
