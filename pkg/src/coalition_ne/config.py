"""YAML run configuration: strict loading, validation and round-trip writing."""

from __future__ import annotations

import importlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .errors import InvalidGraph, ParseError, ValidationError
from .game import BoxConstraint, GameSpec, assemble_game
from .graph import make_graph
from .seeker import AlgorithmParams
from .smoothing import SCHEDULE_MODES, SmoothingSchedule

BENCHMARKS = ("cournot",)
GRAPH_KINDS = ("ring", "complete", "matrix")
OUTPUT_FORMATS = ("csv", "json")


@dataclass
class GameSection:
    benchmark: Optional[str] = "cournot"
    box: list = field(default_factory=lambda: [0.0, 60.0])
    # "package.module:function" returning a list of PlayerSpec
    custom: Optional[str] = None
    kwargs: dict = field(default_factory=dict)


@dataclass
class GraphSection:
    kind: str = "ring"
    self_weight: float = 0.5
    matrices: Optional[list] = None


@dataclass
class ParamsSection:
    alpha: float = 0.1
    alphas: list = field(default_factory=lambda: [0.02, 0.03, 0.05, 0.1])
    mu0: float = 0.1
    mu_mode: str = "harmonic"
    mu_min: float = 1e-8
    max_iters: int = 2000
    seeds: list = field(default_factory=lambda: [1])
    record_every: int = 1
    stop_tol: Optional[float] = None


@dataclass
class AnalysisSection:
    chi: Optional[float] = None
    D: Any = None
    mu_ref: float = 0.05
    tol: float = 1e-8
    lipschitz_samples: int = 2000
    chi_samples: int = 200
    analysis_seed: int = 0
    alphas: Optional[list] = None


@dataclass
class OutputSection:
    directory: Optional[str] = None
    formats: list = field(default_factory=lambda: ["csv", "json"])


@dataclass
class RunConfig:
    game: GameSection
    graph: GraphSection
    params: ParamsSection
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_dict(self) -> dict:
        return asdict(self)

    def algorithm_params(self, alpha: Optional[float] = None, seed: Optional[int] = None) -> AlgorithmParams:
        p = self.params
        return AlgorithmParams(
            alpha=p.alpha if alpha is None else alpha,
            mu=SmoothingSchedule(mu0=p.mu0, mode=p.mu_mode, mu_min=p.mu_min),
            max_iters=p.max_iters,
            seed=p.seeds[0] if seed is None else seed,
            record_every=p.record_every,
            stop_tol=p.stop_tol,
        )


SECTIONS = {
    "game": GameSection,
    "graph": GraphSection,
    "params": ParamsSection,
    "analysis": AnalysisSection,
    "output": OutputSection,
}
REQUIRED = ("game", "graph", "params")

_FLOATS = {
    "params": ("alpha", "mu0", "mu_min", "stop_tol"),
    "graph": ("self_weight",),
    "analysis": ("chi", "mu_ref", "tol"),
}
_INTS = {
    "params": ("max_iters", "record_every"),
    "analysis": ("lipschitz_samples", "chi_samples", "analysis_seed"),
}


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _coerce(v):
    # YAML 1.1 reads "1e-8" (no dot) as a string
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            return v
    return v


def from_dict(data) -> RunConfig:
    """Build and validate a :class:`RunConfig`; every violation is reported."""
    problems: list[str] = []
    if not isinstance(data, dict):
        raise ValidationError("configuration must be a mapping of sections")
    for key in data:
        if key not in SECTIONS:
            problems.append(f"unknown section {key!r}")
    for key in REQUIRED:
        if key not in data:
            problems.append(f"missing {key} section")
    built = {}
    for name, cls in SECTIONS.items():
        raw = data.get(name, {})
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            problems.append(f"section {name!r} must be a mapping")
            continue
        known = {f.name for f in fields(cls)}
        for key in raw:
            if key not in known:
                problems.append(f"unknown key {name}.{key}")
        for key in _FLOATS.get(name, ()):
            if key in raw and raw[key] is not None and not _is_number(_coerce(raw[key])):
                problems.append(f"{name}.{key} must be a number")
        for key in _INTS.get(name, ()):
            if key in raw and not _is_int(raw[key]):
                problems.append(f"{name}.{key} must be an integer")
        raw = {k: _coerce(v) if k in _FLOATS.get(name, ()) else v for k, v in raw.items()}
        built[name] = cls(**{k: v for k, v in raw.items() if k in known})
    if problems:
        raise ValidationError(problems)
    cfg = RunConfig(**built)
    _validate_ranges(cfg, problems)
    if problems:
        raise ValidationError(problems)
    return cfg


def _validate_ranges(cfg: RunConfig, problems: list[str]) -> None:
    g, gr, p, a, o = cfg.game, cfg.graph, cfg.params, cfg.analysis, cfg.output
    if (g.benchmark is None) == (g.custom is None):
        problems.append("game needs exactly one of benchmark or custom")
    if g.benchmark is not None and g.benchmark not in BENCHMARKS:
        problems.append(f"unknown benchmark {g.benchmark!r}")
    if not (isinstance(g.box, list) and len(g.box) == 2 and all(_is_number(v) for v in g.box)):
        problems.append("game.box must be [lower, upper]")
    elif not g.box[0] <= g.box[1]:
        problems.append("game.box lower must not exceed upper")
    if gr.kind not in GRAPH_KINDS:
        problems.append(f"graph.kind must be one of {GRAPH_KINDS}")
    if gr.kind == "ring" and not 0 < gr.self_weight < 1:
        problems.append("graph.self_weight must lie in (0, 1)")
    if gr.kind == "matrix" and not gr.matrices:
        problems.append("graph.matrices required when kind is matrix")
    if not p.alpha > 0:
        problems.append("alpha must be > 0")
    if not (isinstance(p.alphas, list) and p.alphas and all(_is_number(v) and v > 0 for v in p.alphas)):
        problems.append("params.alphas must be a non-empty list of positive numbers")
    if not p.mu0 > 0:
        problems.append("mu0 must be > 0")
    if p.mu_mode not in SCHEDULE_MODES:
        problems.append(f"mu_mode must be one of {SCHEDULE_MODES}")
    if not p.mu_min > 0:
        problems.append("mu_min must be > 0")
    if p.max_iters < 0:
        problems.append("max_iters must be >= 0")
    if p.record_every < 1:
        problems.append("record_every must be >= 1")
    if not (isinstance(p.seeds, list) and p.seeds and all(_is_int(s) and s >= 0 for s in p.seeds)):
        problems.append("params.seeds must be a non-empty list of non-negative integers")
    if p.stop_tol is not None and not p.stop_tol > 0:
        problems.append("stop_tol must be > 0")
    if a.chi is not None and not a.chi > 0:
        problems.append("analysis.chi must be > 0")
    if not a.mu_ref > 0:
        problems.append("analysis.mu_ref must be > 0")
    if not a.tol > 0:
        problems.append("analysis.tol must be > 0")
    if a.lipschitz_samples < 2:
        problems.append("analysis.lipschitz_samples must be >= 2")
    if a.chi_samples < 1:
        problems.append("analysis.chi_samples must be >= 1")
    if a.D is not None:
        vals = a.D if isinstance(a.D, list) else [a.D]
        if not all(_is_number(v) and v >= 0 for v in vals):
            problems.append("analysis.D must be a non-negative number or list")
    if a.alphas is not None and not all(_is_number(v) and v > 0 for v in a.alphas):
        problems.append("analysis.alphas must be positive numbers")
    if not all(f in OUTPUT_FORMATS for f in o.formats):
        problems.append(f"output.formats must be drawn from {OUTPUT_FORMATS}")


def load_config(path) -> RunConfig:
    """Parse and validate a YAML config file.

    Raises:
        ParseError: unreadable YAML (with the offending line).
        ValidationError: structural or range violations, all listed.
    """
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
        raise ParseError(f"invalid YAML: {exc.problem}", line=line) from exc
    except yaml.YAMLError as exc:
        raise ParseError(f"invalid YAML: {exc}") from exc
    return from_dict(data)


def write_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))


def _custom_players(spec: str, kwargs: dict):
    module, _, attr = spec.partition(":")
    if not attr:
        raise ValidationError(f"game.custom must look like 'module:function', got {spec!r}")
    try:
        factory = getattr(importlib.import_module(module), attr)
    except (ImportError, AttributeError) as exc:
        raise ValidationError(f"cannot import {spec!r}: {exc}") from exc
    return list(factory(**kwargs))


def raw_graph_matrices(cfg: RunConfig, sizes) -> list[np.ndarray]:
    """Weight matrices as configured, before any validation."""
    gr = cfg.graph
    if gr.kind == "matrix":
        mats = [np.asarray(m, dtype=float) for m in gr.matrices]
        if len(mats) == 1 and len(sizes) > 1:
            mats = mats * len(sizes)
        return mats
    return [make_graph(gr.kind, n, self_weight=gr.self_weight).weights for n in sizes]


def coalition_sizes(cfg: RunConfig) -> list[int]:
    if cfg.game.benchmark == "cournot":
        from .cournot import N_COALITIONS, PLAYERS_PER_COALITION

        return [PLAYERS_PER_COALITION] * N_COALITIONS
    players = _custom_players(cfg.game.custom, cfg.game.kwargs)
    n = max(p.coalition_id for p in players) + 1
    return [sum(1 for p in players if p.coalition_id == i) for i in range(n)]


def build_game(cfg: RunConfig) -> GameSpec:
    """Assemble the configured game (graphs validated on construction)."""
    gr = cfg.graph
    if cfg.game.benchmark == "cournot":
        from .cournot import N_COALITIONS, PLAYERS_PER_COALITION, build_cournot

        box = BoxConstraint(*cfg.game.box)
        mats = raw_graph_matrices(cfg, [PLAYERS_PER_COALITION] * N_COALITIONS)
        try:
            graphs = [make_graph("matrix", m.shape[0], matrix=m) for m in mats]
        except InvalidGraph as exc:
            raise ValidationError(str(exc)) from exc
        return build_cournot(box, graphs=graphs)
    players = _custom_players(cfg.game.custom, cfg.game.kwargs)
    n = max(p.coalition_id for p in players) + 1
    sizes = [sum(1 for p in players if p.coalition_id == i) for i in range(n)]
    mats = raw_graph_matrices(cfg, sizes)
    try:
        graphs = [make_graph("matrix", m.shape[0], matrix=m) for m in mats]
    except InvalidGraph as exc:
        raise ValidationError(str(exc)) from exc
    return assemble_game(players, graphs, name=cfg.game.custom)
