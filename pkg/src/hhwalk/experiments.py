"""Config-driven experiment pipeline behind the ``hhwalk`` CLI.

Every command is a pure function of the JSON config and the seed: random
numbers come from PCG64 streams keyed by ``(seed, stream, cell)``.
"""

from __future__ import annotations

import copy
import csv
import itertools
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import plotting
from .distribution import tv_distance
from .errors import ConfigError
from .graphs import (
    CommunityTemplate,
    HouseholdGraph,
    UniverseGraph,
    expand_household,
    load_household,
    parse_template,
    sample_poisson_degrees,
    sample_universe_configuration_model,
    validate_household,
    write_communities,
    write_edge_list,
)
from .oracle import balance_residual, build_edge_chain, project_edges_to_nodes, solve_stationary
from .sojourn import (
    assemble_stationary,
    expected_sojourn,
    expected_sojourn_clique,
    expected_sojourn_generic,
    expected_sojourn_ring,
    expected_sojourn_ring6,
    poisson_limit_distribution,
    stationary_household,
    stationary_srw,
)
from .walk import (
    Node2vecParams,
    collapse_to_ystar,
    empirical_node_distribution,
    extract_universe_trace,
    run_walk,
    sample_sojourn,
    ystar_visit_frequencies,
)

log = logging.getLogger(__name__)

SEED_ENV = "HHWALK_SEED"
RNG_NAME = "PCG64"

# stream ids for independent random number streams
GRAPH_STREAM, WALK_STREAM, SOJOURN_STREAM = 0, 1, 2

DEFAULTS = {
    "seed": 42,
    "n_universe": 100,
    "degrees": {"poisson": 4.0},
    "templates": "clique",
    "params": {"alpha": 1.0, "beta": 10.0, "gamma": 1.0},
    "steps": 1_000_000,
    "oracle": {"method": "direct", "tol": 1e-12},
    "compare_tol": 1e-8,
    "max_retries": 100_000,
    "out_dir": "hhwalk-out",
    "trajectory_limit": 0,
    "figures": {
        "alpha": [0.5, 1.0, 10.0],
        "beta": [0.1, 10.0],
        "gamma": 1.0,
        "proxy": 1e6,
        "limit_beta": 10.0,
    },
    "sojourn": {
        "templates": ["C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "C10",
                      "R6", "R7", "R13"],
        "samples": 100_000,
    },
}

_num_list = {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "n_universe": {"type": "integer", "minimum": 2},
        "degrees": {
            "oneOf": [
                {"type": "object", "required": ["poisson"], "additionalProperties": False,
                 "properties": {"poisson": {"type": "number", "exclusiveMinimum": 0}}},
                {"type": "object", "required": ["explicit"], "additionalProperties": False,
                 "properties": {"explicit": {"type": "array", "minItems": 1,
                                             "items": {"type": "integer", "minimum": 1}}}},
                {"type": "object", "required": ["file"], "additionalProperties": False,
                 "properties": {"file": {"type": "string"}}},
            ]
        },
        "templates": {
            "oneOf": [
                {"enum": ["clique", "ring"]},
                {"type": "object", "additionalProperties": False,
                 "properties": {
                     "default": {"enum": ["clique", "ring"]},
                     "by_degree": {"type": "object",
                                   "additionalProperties": {"enum": ["clique", "ring"]}},
                 }},
            ]
        },
        "params": {"type": "object", "required": ["alpha", "beta", "gamma"],
                   "additionalProperties": False,
                   "properties": {k: {"type": "number", "minimum": 0}
                                  for k in ("alpha", "beta", "gamma")}},
        "grid": {"type": "object", "required": ["alpha", "beta", "gamma"],
                 "additionalProperties": False,
                 "properties": {k: _num_list for k in ("alpha", "beta", "gamma")}},
        "steps": {"type": "integer", "minimum": 1},
        "oracle": {"type": "object", "additionalProperties": False,
                   "properties": {"method": {"enum": ["direct", "power"]},
                                  "tol": {"type": "number", "exclusiveMinimum": 0}}},
        "compare_tol": {"type": "number", "minimum": 0},
        "max_retries": {"type": "integer", "minimum": 1},
        "out_dir": {"type": "string"},
        "graph_dir": {"type": "string"},
        "trajectory_limit": {"type": "integer", "minimum": 0},
        "figures": {"type": "object", "additionalProperties": False,
                    "properties": {"alpha": _num_list, "beta": _num_list,
                                   "gamma": {"type": "number", "exclusiveMinimum": 0},
                                   "proxy": {"type": "number", "exclusiveMinimum": 0},
                                   "limit_beta": {"type": "number", "minimum": 0}}},
        "sojourn": {"type": "object", "additionalProperties": False,
                    "properties": {"templates": {"type": "array", "minItems": 1,
                                                 "items": {"type": "string"}},
                                   "samples": {"type": "integer", "minimum": 2}}},
    },
}


@dataclass
class ExperimentConfig:
    raw: dict
    base_dir: Path = field(default_factory=Path.cwd)

    def __getattr__(self, name):
        try:
            return self.raw[name]
        except KeyError:
            raise AttributeError(name) from None

    @property
    def out_path(self) -> Path:
        p = Path(self.raw["out_dir"])
        return p if p.is_absolute() else self.base_dir / p

    def param_cells(self) -> list[Node2vecParams]:
        if "grid" in self.raw:
            g = self.raw["grid"]
            return [Node2vecParams(a, b, c)
                    for a, b, c in itertools.product(g["alpha"], g["beta"], g["gamma"])]
        p = self.raw["params"]
        return [Node2vecParams(p["alpha"], p["beta"], p["gamma"])]


def _merge(base, extra):
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("degrees", "params", "templates", "grid"):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path=None, overrides: dict | None = None, env=None) -> ExperimentConfig:
    """Read a JSON config, apply defaults, env seed and CLI overrides, validate.

    Seed precedence: explicit override > ``HHWALK_SEED`` > config file.
    """
    env = os.environ if env is None else env
    user, base = {}, Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            user = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        base = path.resolve().parent
    raw = _merge(DEFAULTS, user)
    if env.get(SEED_ENV):
        try:
            raw["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k == "tol":
            raw["oracle"] = {**raw["oracle"], "tol": v}
        elif k == "out_dir":
            raw[k] = str(Path(v).resolve())
        else:
            raw[k] = v
    if "grid" in raw and "params" in user and "grid" in user:
        raise ConfigError("give either params or grid, not both")
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from None
    cfg = ExperimentConfig(raw, base)
    for key in ("graph_dir",):
        if key in raw and not (base / raw[key]).exists():
            raise ConfigError(f"{key} {raw[key]} does not exist")
    if "file" in raw["degrees"] and not (base / raw["degrees"]["file"]).exists():
        raise ConfigError(f"degree file {raw['degrees']['file']} does not exist")
    for t in raw["sojourn"]["templates"]:
        try:
            parse_template(t)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return cfg


def make_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _template_for(spec):
    if isinstance(spec, str):
        default, by_degree = spec, {}
    else:
        default, by_degree = spec.get("default", "clique"), spec.get("by_degree", {})

    def choose(d):
        kind = by_degree.get(str(d), default)
        return CommunityTemplate.ring(d) if kind == "ring" else CommunityTemplate.clique(d)
    return choose


def _degrees(cfg: ExperimentConfig, rng):
    src = cfg.degrees
    if "poisson" in src:
        return sample_poisson_degrees(cfg.n_universe, src["poisson"], rng, cfg.max_retries)
    if "explicit" in src:
        return src["explicit"]
    text = (cfg.base_dir / src["file"]).read_text()
    return [int(x) for x in text.split()]


def build_model(cfg: ExperimentConfig) -> tuple[UniverseGraph, HouseholdGraph]:
    if "graph_dir" in cfg.raw:
        gdir = cfg.base_dir / cfg.graph_dir
        h = load_household(gdir / "household.edges", gdir / "communities.txt")
        return h.universe, h
    rng = make_rng(cfg.seed, GRAPH_STREAM)
    universe = sample_universe_configuration_model(_degrees(cfg, rng), rng, cfg.max_retries)
    return universe, expand_household(universe, _template_for(cfg.templates))


def _fmt(x) -> str:
    return f"{x:.17g}" if isinstance(x, (float, np.floating)) else str(x)


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def _write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _cell_tag(p: Node2vecParams) -> str:
    return f"a{p.alpha:g}_b{p.beta:g}_g{p.gamma:g}"


def _meta(cfg, universe, household):
    d = universe.degrees
    return {
        "seed": cfg.seed,
        "rng": RNG_NAME,
        "n_universe": int(universe.n_nodes),
        "universe_edges": int(universe.n_edges),
        "household_nodes": int(household.n_nodes),
        "household_edges": int(household.n_edges),
        "degree_sum": int(d.sum()),
        "degree_sum_even": bool(d.sum() % 2 == 0),
        "degree_mean": float(d.mean()),
        "degree_min": int(d.min()),
        "degree_max": int(d.max()),
        "connected": bool(household.is_connected()),
        "violations": validate_household(household).violations,
        "templates": sorted({c.template.label for c in household.communities},
                            key=lambda s: (s[0], int(s[1:]))),
    }


# -- commands -------------------------------------------------------------------------

def cmd_generate(cfg: ExperimentConfig) -> dict:
    universe, household = build_model(cfg)
    out = cfg.out_path
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(out / "universe.edges", universe)
    write_edge_list(out / "household.edges", household)
    write_communities(out / "communities.txt", household)
    meta = _meta(cfg, universe, household)
    _write_json(out / "metadata.json", meta)
    return meta


@dataclass
class ComparisonReport:
    params: Node2vecParams
    node: np.ndarray
    community: np.ndarray
    degree: np.ndarray
    template: list[str]
    pi_analytic: np.ndarray
    pi_oracle: np.ndarray
    pi_empirical: np.ndarray
    pi_srw: np.ndarray

    @property
    def max_abs_diff(self) -> float:
        return float(np.max(np.abs(self.pi_analytic - self.pi_oracle)))

    @property
    def tv_empirical(self) -> float:
        return tv_distance(self.pi_empirical, self.pi_oracle)

    def sum_violations(self) -> list[str]:
        out = []
        for name, tol in (("pi_analytic", 1e-9), ("pi_oracle", 1e-9),
                          ("pi_srw", 1e-9), ("pi_empirical", 1e-2)):
            s = float(getattr(self, name).sum())
            if abs(s - 1) > tol:
                out.append(f"{name} sums to {s}")
        return out

    def rows(self):
        for i in range(len(self.node)):
            yield (int(self.node[i]), int(self.community[i]), int(self.degree[i]),
                   self.template[i], self.pi_analytic[i], self.pi_oracle[i],
                   self.pi_empirical[i], self.pi_srw[i])

    def summary(self) -> dict:
        return {
            "alpha": self.params.alpha, "beta": self.params.beta, "gamma": self.params.gamma,
            "max_abs_diff_analytic_oracle": self.max_abs_diff,
            "tv_empirical_oracle": self.tv_empirical,
            "sum_violations": self.sum_violations(),
        }


COMPARE_HEADER = ("node", "community", "degree", "community_template", "pi_analytic",
                  "pi_oracle", "pi_empirical", "pi_srw")


def compare_household(household: HouseholdGraph, p: Node2vecParams, steps: int,
                      rng, method="direct", tol=1e-12) -> ComparisonReport:
    analytic = stationary_household(household, p)
    chain = build_edge_chain(household, p)
    oracle = project_edges_to_nodes(solve_stationary(chain, method, tol), household)
    emp = empirical_node_distribution(run_walk(household, p, steps, rng))
    return ComparisonReport(
        params=p,
        node=np.arange(household.n_nodes),
        community=np.asarray(household.community_of),
        degree=household.degrees,
        template=household.node_labels(),
        pi_analytic=analytic.values,
        pi_oracle=oracle.values,
        pi_empirical=emp.values,
        pi_srw=stationary_srw(household).values,
    )


def cmd_compare(cfg: ExperimentConfig) -> list[ComparisonReport]:
    _, household = build_model(cfg)
    out = cfg.out_path
    reports = []
    for i, p in enumerate(cfg.param_cells()):
        rep = compare_household(household, p, cfg.steps, make_rng(cfg.seed, WALK_STREAM, i),
                                cfg.oracle["method"], cfg.oracle["tol"])
        tag = _cell_tag(p)
        _write_csv(out / f"compare_{tag}.csv", COMPARE_HEADER, rep.rows())
        _write_csv(out / f"analytic_{tag}.csv",
                   ("node", "degree", "community_template", "pi_analytic"),
                   ((r[0], r[2], r[3], r[4]) for r in rep.rows()))
        log.info("%s: max|analytic-oracle| = %.3e, TV(empirical, oracle) = %.4f",
                 tag, rep.max_abs_diff, rep.tv_empirical)
        reports.append(rep)
    _write_json(out / "compare_summary.json", {
        "seed": cfg.seed, "rng": RNG_NAME, "steps": cfg.steps,
        "compare_tol": cfg.compare_tol,
        "cells": [r.summary() for r in reports],
    })
    return reports


def cmd_oracle(cfg: ExperimentConfig) -> list[dict]:
    _, household = build_model(cfg)
    out = cfg.out_path
    labels = household.node_labels()
    results = []
    for p in cfg.param_cells():
        chain = build_edge_chain(household, p)
        edge = solve_stationary(chain, cfg.oracle["method"], cfg.oracle["tol"])
        node = project_edges_to_nodes(edge, household)
        tag = _cell_tag(p)
        _write_csv(out / f"oracle_edges_{tag}.csv", ("src", "dst", "pi_edge"),
                   zip(household.edge_src.tolist(), household.indices.tolist(), edge.values))
        _write_csv(out / f"oracle_nodes_{tag}.csv",
                   ("node", "degree", "community_template", "pi_oracle"),
                   ((v, int(household.degree(v)), labels[v], node[v])
                    for v in range(household.n_nodes)))
        results.append({"alpha": p.alpha, "beta": p.beta, "gamma": p.gamma,
                        "method": cfg.oracle["method"], "tol": cfg.oracle["tol"],
                        "balance_residual": balance_residual(chain, edge)})
    _write_json(out / "oracle_summary.json", {"seed": cfg.seed, "cells": results})
    return results


def cmd_walk(cfg: ExperimentConfig) -> list[dict]:
    universe, household = build_model(cfg)
    out = cfg.out_path
    results = []
    ystar_target = universe.degrees / universe.n_directed
    for i, p in enumerate(cfg.param_cells()):
        rng = make_rng(cfg.seed, WALK_STREAM, i)
        counts = run_walk(household, p, cfg.steps, rng, record=cfg.steps)
        tag = _cell_tag(p)
        freq = counts.node_visits / counts.steps_total
        _write_csv(out / f"occupancy_{tag}.csv", ("node", "community", "visits", "frequency"),
                   ((v, int(household.community_of[v]), int(counts.node_visits[v]), freq[v])
                    for v in range(household.n_nodes)))
        nodes = np.concatenate([[counts.start.cur], counts.trajectory])
        limit = cfg.trajectory_limit
        if limit:
            prev = np.concatenate([[counts.start.prev], nodes[:-1]])
            _write_csv(out / f"trajectory_{tag}.csv", ("step", "prev", "cur"),
                       ((s, int(prev[s]), int(nodes[s])) for s in range(min(limit, len(nodes)))))
        ystar = collapse_to_ystar(extract_universe_trace(nodes, household))
        yfreq = ystar_visit_frequencies(ystar, universe.n_nodes)
        results.append({"alpha": p.alpha, "beta": p.beta, "gamma": p.gamma,
                        "steps": cfg.steps, "ystar_transitions": int(len(ystar) - 1),
                        "tv_ystar_uniform_edge": tv_distance(yfreq, ystar_target)})
    _write_json(out / "walk_summary.json", {"seed": cfg.seed, "rng": RNG_NAME, "cells": results})
    return results


SOJOURN_HEADER = ("alpha", "beta", "gamma", "template", "k", "expected_tau", "E_closed_form",
                  "E_generic", "E_montecarlo", "mc_stderr")


def closed_form_sojourn(t: CommunityTemplate, p: Node2vecParams):
    """Closed form (or exact two-state solve for big rings); None for custom shapes."""
    if t.kind == "clique":
        return expected_sojourn_clique(t.size, p)
    if t.kind == "ring":
        return expected_sojourn_ring6(p) if t.size == 6 else expected_sojourn_ring(t.size, p)
    return None


def sojourn_rows(templates, cells, samples, seed):
    rows = []
    for i, p in enumerate(cells):
        for j, t in enumerate(templates):
            cf = closed_form_sojourn(t, p)
            gen = expected_sojourn_generic(t, p)
            mc = sample_sojourn(t, p, samples, make_rng(seed, SOJOURN_STREAM, i, j))
            rows.append((p.alpha, p.beta, p.gamma, t.label, t.size, expected_sojourn(t, p),
                         "" if cf is None else cf, gen, mc.mean, mc.stderr))
    return rows


def cmd_sojourn(cfg: ExperimentConfig) -> list[tuple]:
    templates = [parse_template(s) for s in cfg.sojourn["templates"]]
    cells = cfg.param_cells()
    for p in cells:
        p.require_positive()
    rows = sojourn_rows(templates, cells, cfg.sojourn["samples"], cfg.seed)
    _write_csv(cfg.out_path / "sojourn.csv", SOJOURN_HEADER, rows)
    return rows


@dataclass
class FigurePanel:
    name: str
    title: str
    params: Node2vecParams
    degrees: np.ndarray
    counts: np.ndarray
    pi_node2vec: np.ndarray
    pi_srw: np.ndarray
    pi_limit: np.ndarray | None = None


def _per_degree(household, pi):
    deg = household.degrees
    uniq = np.unique(deg)
    counts = np.array([np.sum(deg == d) for d in uniq])
    means = np.array([pi[deg == d].mean() for d in uniq])
    return uniq, counts, means


def figure_panels(cfg: ExperimentConfig, household: HouseholdGraph) -> list[FigurePanel]:
    fcfg = cfg.figures
    gamma = fcfg["gamma"]
    srw = stationary_srw(household).values
    panels = []

    def panel(name, title, p, pi, limit_case=None):
        deg, cnt, mean_pi = _per_degree(household, pi)
        _, _, mean_srw = _per_degree(household, srw)
        lim = None
        lam = cfg.degrees.get("poisson")
        if limit_case and lam is not None:
            # the gamma->inf and alpha=0 expressions assume clique size >= 2
            lim = np.array([
                np.nan if (l < 2 and limit_case != "alpha_inf") else
                poisson_limit_distribution(limit_case, lam, household.universe.n_nodes,
                                           int(l), beta=p.beta)
                for l in deg])
        panels.append(FigurePanel(name, title, p, deg, cnt, mean_pi, mean_srw, lim))

    for a, b in itertools.product(fcfg["alpha"], fcfg["beta"]):
        p = Node2vecParams(a, b, gamma)
        pi = stationary_household(household, p).values
        panel(f"panel_{_cell_tag(p)}", f"α={a:g}, β={b:g}, γ={gamma:g}", p, pi)

    big, lb = fcfg["proxy"], fcfg["limit_beta"]
    p = Node2vecParams(big, lb, 1.0)
    panel("limit_alpha_inf", f"α={big:g} (α→∞), β={lb:g}", p,
          stationary_household(household, p).values, "alpha_inf")
    p = Node2vecParams(1.0, 1.0, big)
    panel("limit_gamma_inf", f"γ={big:g} (γ→∞)", p,
          stationary_household(household, p).values, "gamma_inf")
    # alpha = 0 is outside the theorem's range; evaluate the sojourn formulas directly
    p = Node2vecParams(0.0, lb, 1.0)
    pi = assemble_stationary(household, lambda t: expected_sojourn(t, p)).values
    panel("limit_alpha0_gamma1", f"α=0, γ=1, β={lb:g}", p, pi, "alpha0_gamma1")
    return panels


FIGURE_HEADER = ("degree", "n_nodes", "pi_node2vec", "pi_srw", "pi_limit")


def cmd_figures(cfg: ExperimentConfig) -> list[FigurePanel]:
    _, household = build_model(cfg)
    out = cfg.out_path
    panels = figure_panels(cfg, household)
    for pn in panels:
        if pn.pi_limit is None:
            lim = [""] * len(pn.degrees)
        else:
            lim = ["" if np.isnan(x) else x for x in pn.pi_limit]
        _write_csv(out / f"{pn.name}.csv", FIGURE_HEADER,
                   zip(pn.degrees.tolist(), pn.counts.tolist(), pn.pi_node2vec, pn.pi_srw, lim))
        plotting.plot_panel(out / f"{pn.name}.svg", pn.degrees, pn.pi_node2vec, pn.pi_srw, pn.title)
    sweep = [pn for pn in panels if pn.name.startswith("panel_")]
    limits = [pn for pn in panels if pn.name.startswith("limit_")]
    plotting.plot_grid(out / "figure_sweep.svg",
                       [(p.degrees, p.pi_node2vec, p.pi_srw, p.title) for p in sweep])
    plotting.plot_grid(out / "figure_limits.svg",
                       [(p.degrees, p.pi_node2vec, p.pi_srw, p.title) for p in limits])
    _write_json(out / "figures_metadata.json", {
        "seed": cfg.seed, "rng": RNG_NAME,
        "alpha_grid": [float(x) for x in cfg.figures["alpha"]],
        "beta_grid": [float(x) for x in cfg.figures["beta"]],
        "alpha_grid_is_representative_choice": True,
        "limit_proxy": cfg.figures["proxy"],
        "panels": [pn.name for pn in panels],
    })
    return panels
