"""Config parsing, instance/solution serialization and the command line.

The config is YAML with a strict schema: every key is known, typed and
range-checked, and errors carry the line and column they came from.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np
import yaml

from .convex_engine import Tolerances
from .core_model import ChannelModel, Instance, SystemParams, UserDemand, VideoConfig, validate_instance
from .experiments import PARAMS, SCHEMES, SweepSpec, run_sweep
from .planner_transcode_dc import DCOptions
from .scenario import MAX_USERS, ScenarioConfig, sample_realization

log = logging.getLogger(__name__)

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


# ---------------------------------------------------------------- schema


@dataclass(frozen=True)
class Key:
    name: str  # key in the document
    attr: str  # attribute on the target dataclass
    kind: str  # int | float | float? | str | str? | floats | ints | strs | numbers | pair | pairs
    unit: str = ""
    check: Callable[[Any], str | None] | None = None


def _positive(v):
    return None if v > 0 else "must be > 0"


def _nonneg(v):
    return None if v >= 0 else "must be >= 0"


def _at_least(lo):
    return lambda v: None if v >= lo else f"must be >= {lo}"


def _each(check):
    def run(vs):
        for v in vs:
            msg = check(v)
            if msg:
                return f"every entry {msg}"
        return None

    return run


def _one_of(options):
    def run(v):
        vs = [v] if isinstance(v, str) else v
        bad = [x for x in vs if x not in options]
        return f"must be one of {', '.join(options)}; got {', '.join(bad)}" if bad else None

    return run


def _user_count(v):
    return None if 1 <= v <= MAX_USERS else f"must be in 1..{MAX_USERS}"


VIDEO_KEYS = (
    Key("rows", "rows", "int", "tiles", _at_least(1)),
    Key("cols", "cols", "int", "tiles", _at_least(1)),
    Key("encoding_rates_bps", "encoding_rates", "floats", "bit/s per tile", _each(_positive)),
)

SCENARIO_KEYS = (
    Key("users", "users", "int", "count", _user_count),
    Key("gamma", "gamma", "float", "Zipf exponent", _nonneg),
    Key("quality_lb", "quality_lb", "int", "level", _at_least(1)),
    Key("quality_ub", "quality_ub", "int", "level", _at_least(1)),
    Key("view_directions_deg", "view_directions", "pairs", "(lat, lon) degrees"),
    Key("fov_deg", "fov", "pair", "(horizontal, vertical) degrees", _each(_positive)),
    Key("margin_deg", "margin", "float", "degrees", _nonneg),
    Key("bandwidth_hz", "bandwidth", "float", "Hz", _positive),
    Key("frame_s", "frame", "float", "s", _positive),
    Key("noise_w", "noise", "float?", "W (null: bandwidth * k_B * temperature)", _positive),
    Key("temperature_k", "temperature", "float", "K", _positive),
    Key("transcode_energy_j", "transcode_energy", "float", "J per tile per level", _nonneg),
    Key("beta", "beta", "float", "weight", _at_least(1)),
    Key("channel_gains", "channel_gains", "floats", "power gain", _each(_positive)),
    Key("channel_probs", "channel_probs", "floats", "probability", _each(_nonneg)),
    Key("realizations", "realizations", "int", "count", _at_least(1)),
    Key("seed", "seed", "int", "", _nonneg),
)

SOLVER_KEYS = (
    Key("feasibility", "feasibility", "float", "relative", _positive),
    Key("stationarity", "stationarity", "float", "relative", _positive),
    Key("max_iter", "max_newton", "int", "iterations", _at_least(1)),
    Key("gap", "gap", "float", "relative", _positive),
)

DC_KEYS = (
    Key("restarts", "restarts", "int", "count", _nonneg),
    Key("max_iter", "max_iter", "int", "iterations", _at_least(1)),
    Key("rel_decrease", "rel_decrease", "float", "relative", _positive),
    Key("rho_factor", "rho_factor", "float", "fraction of the anchor objective", _positive),
    Key("rho_growth", "rho_growth", "float", "factor", lambda v: None if v > 1 else "must be > 1"),
    Key("max_escalations", "max_escalations", "int", "count", _nonneg),
)


@dataclass(frozen=True)
class SweepSection:
    param: str = "K"
    values: tuple = (1, 2, 3, 4)
    schemes: tuple[str, ...] = SCHEMES


@dataclass(frozen=True)
class OutputSection:
    csv: str | None = None
    dump: str | None = None


SWEEP_KEYS = (
    Key("param", "param", "str", "K | gamma | rbar", _one_of(PARAMS)),
    Key("values", "values", "numbers", "swept values"),
    Key("schemes", "schemes", "strs", "", _one_of(SCHEMES)),
)

OUTPUT_KEYS = (
    Key("csv", "csv", "str?", "path"),
    Key("dump", "dump", "str?", "path"),
)


@dataclass(frozen=True)
class ConfigDocument:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    solver: Tolerances = field(default_factory=Tolerances)
    dc: DCOptions = field(default_factory=DCOptions)
    sweep: SweepSection = field(default_factory=SweepSection)
    output: OutputSection = field(default_factory=OutputSection)

    def sweep_spec(self) -> SweepSpec:
        s = self.scenario
        return SweepSpec(
            self.sweep.param, tuple(self.sweep.values), s, tuple(self.sweep.schemes),
            s.realizations, s.seed, self.dc, self.solver,
        )


# ---------------------------------------------------------------- node helpers

_NULL = "tag:yaml.org,2002:null"
_BOOL = "tag:yaml.org,2002:bool"


def _err(node, msg):
    mark = getattr(node, "start_mark", None)
    if mark is None:
        return ConfigError(msg)
    return ConfigError(msg, mark.line + 1, mark.column + 1)


def _scalar(node, path, kind):
    if not isinstance(node, yaml.ScalarNode):
        raise _err(node, f"{path}: expected a scalar")
    text = node.value
    if kind.endswith("?") and node.tag == _NULL:
        return None
    if node.tag == _NULL:
        raise _err(node, f"{path}: value required")
    if node.tag == _BOOL:
        raise _err(node, f"{path}: booleans not allowed here")
    base = kind.rstrip("?")
    if base == "str":
        return text
    try:
        if base == "int":
            return int(text)
        if base == "number":
            try:
                return int(text)
            except ValueError:
                pass
        v = float(text)
    except ValueError:
        raise _err(node, f"{path}: expected {'an integer' if base == 'int' else 'a number'}, got {text!r}") from None
    if not math.isfinite(v):
        raise _err(node, f"{path}: must be finite")
    return v


def _value(node, path, kind):
    if kind in ("floats", "ints", "strs", "numbers", "pair", "pairs"):
        if not isinstance(node, yaml.SequenceNode):
            raise _err(node, f"{path}: expected a list")
        if kind == "pairs":
            out = tuple(_value(n, f"{path}[{i}]", "pair") for i, n in enumerate(node.value))
            if not out:
                raise _err(node, f"{path}: list must be nonempty")
            return out
        elem = {"floats": "float", "ints": "int", "strs": "str", "numbers": "number", "pair": "float"}[kind]
        out = tuple(_scalar(n, f"{path}[{i}]", elem) for i, n in enumerate(node.value))
        if kind == "pair" and len(out) != 2:
            raise _err(node, f"{path}: expected exactly two numbers")
        if not out:
            raise _err(node, f"{path}: list must be nonempty")
        return out
    return _scalar(node, path, kind)


def _mapping(node, path):
    if node is None:
        return {}
    if isinstance(node, yaml.ScalarNode) and node.tag == _NULL:
        return {}
    if not isinstance(node, yaml.MappingNode):
        raise _err(node, f"{path or 'document'}: expected a mapping")
    out = {}
    for k, v in node.value:
        if not isinstance(k, yaml.ScalarNode):
            raise _err(k, f"{path}: keys must be plain strings")
        if k.value in out:
            raise _err(k, f"{path}{'.' if path else ''}{k.value}: duplicate key")
        out[k.value] = (k, v)
    return out


def _read_section(node, path, keys: Sequence[Key], target, skip: Sequence[str] = ()):
    """Apply the keys of mapping ``node`` to dataclass ``target``; ``skip`` names nested sections."""
    entries = _mapping(node, path)
    known = {k.name: k for k in keys}
    updates = {}
    for name, (knode, vnode) in entries.items():
        full = f"{path}.{name}" if path else name
        if name in skip:
            continue
        if name not in known:
            allowed = ", ".join(sorted(list(known) + list(skip)))
            raise _err(knode, f"{full}: unknown key (allowed: {allowed})")
        key = known[name]
        val = _value(vnode, full, key.kind)
        if key.check is not None and val is not None:
            msg = key.check(val)
            if msg:
                raise _err(vnode, f"{full}: {msg}")
        updates[key.attr] = val
    return replace(target, **updates), entries


def _section_node(entries, name):
    return entries[name][1] if name in entries else None


def _document_from_node(root) -> ConfigDocument:
    top = _mapping(root, "")
    sections = {"scenario", "solver", "sweep", "output"}
    for name, (knode, _) in top.items():
        if name not in sections:
            raise _err(knode, f"{name}: unknown section (allowed: {', '.join(sorted(sections))})")
    doc = ConfigDocument()

    scen_node = _section_node(top, "scenario")
    scenario, entries = _read_section(scen_node, "scenario", SCENARIO_KEYS, doc.scenario, skip=("video",))
    if "video" in entries:
        video, _ = _read_section(entries["video"][1], "scenario.video", VIDEO_KEYS, doc.scenario.video)
        rates = video.encoding_rates
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise _err(entries["video"][1], "scenario.video.encoding_rates_bps: encoding rates not strictly increasing")
        scenario = replace(scenario, video=video)
    problems = scenario.check()
    if problems:
        raise _err(scen_node, "scenario: " + "; ".join(problems))

    solver_node = _section_node(top, "solver")
    tol, solver_entries = _read_section(solver_node, "solver", SOLVER_KEYS, doc.solver, skip=("dc",))
    dc = doc.dc
    if "dc" in solver_entries:
        dc, _ = _read_section(solver_entries["dc"][1], "solver.dc", DC_KEYS, doc.dc)

    sweep_node = _section_node(top, "sweep")
    sweep, _ = _read_section(sweep_node, "sweep", SWEEP_KEYS, doc.sweep)
    out, _ = _read_section(_section_node(top, "output"), "output", OUTPUT_KEYS, doc.output)
    result = ConfigDocument(scenario, tol, dc, sweep, out)
    problems = result.sweep_spec().check()
    if problems:
        raise _err(sweep_node, "sweep: " + "; ".join(problems))
    return result


def _compose(text: str, what: str = "config"):
    try:
        return yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line, col = (mark.line + 1, mark.column + 1) if mark else (None, None)
        raise ConfigError(f"{what} syntax error: {exc.problem or exc}", line, col) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{what} syntax error: {exc}") from None


def _walk(node):
    yield node
    if isinstance(node, yaml.SequenceNode):
        for n in node.value:
            yield from _walk(n)
    elif isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            yield from _walk(k)
            yield from _walk(v)


def _apply_override(root, assignment: str):
    """Set ``a.b.c=value`` in a composed node tree; value is parsed as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"--set {assignment!r}: expected key=value")
    path, text = assignment.split("=", 1)
    parts = [p for p in path.strip().split(".") if p]
    if not parts:
        raise ConfigError(f"--set {assignment!r}: empty key")
    value = _compose(text, f"--set {path}")
    if value is None:
        value = yaml.ScalarNode(_NULL, "null")
    for n in _walk(value):
        n.start_mark = None  # positions in the override text would point nowhere useful
    if root is None or (isinstance(root, yaml.ScalarNode) and root.tag == _NULL):
        root = yaml.MappingNode("tag:yaml.org,2002:map", [])
    node = root
    for i, part in enumerate(parts):
        if not isinstance(node, yaml.MappingNode):
            raise ConfigError(f"--set {path}: {'.'.join(parts[:i])} is not a mapping")
        hit = next((pair for pair in node.value if pair[0].value == part), None)
        last = i == len(parts) - 1
        if hit is None:
            child = value if last else yaml.MappingNode("tag:yaml.org,2002:map", [])
            node.value.append((yaml.ScalarNode("tag:yaml.org,2002:str", part), child))
            node = child
        elif last:
            idx = node.value.index(hit)
            node.value[idx] = (hit[0], value)
        else:
            node = hit[1]
    return root


def parse_config(text: str, overrides: Sequence[str] = ()) -> ConfigDocument:
    """Parse a config document; unspecified keys take their defaults."""
    root = _compose(text)
    for assignment in overrides:
        root = _apply_override(root, assignment)
    return _document_from_node(root)


def config_to_dict(doc: ConfigDocument) -> dict:
    s = doc.scenario

    def plain(x):
        if isinstance(x, tuple):
            return [plain(v) for v in x]
        if isinstance(x, np.generic):
            return x.item()
        return x

    def section(obj, keys):
        return {k.name: plain(getattr(obj, k.attr)) for k in keys}

    scen = section(s, SCENARIO_KEYS)
    scen["video"] = section(s.video, VIDEO_KEYS)
    solver = section(doc.solver, SOLVER_KEYS)
    solver["dc"] = section(doc.dc, DC_KEYS)
    return {
        "scenario": scen,
        "solver": solver,
        "sweep": section(doc.sweep, SWEEP_KEYS),
        "output": section(doc.output, OUTPUT_KEYS),
    }


def emit_config(doc: ConfigDocument) -> str:
    return yaml.safe_dump(config_to_dict(doc), sort_keys=False, default_flow_style=None)


def schema_table() -> list[tuple[str, str, str]]:
    """(key, kind, unit) for every config key, for documentation."""
    rows = []
    for prefix, keys in (
        ("scenario", SCENARIO_KEYS), ("scenario.video", VIDEO_KEYS), ("solver", SOLVER_KEYS),
        ("solver.dc", DC_KEYS), ("sweep", SWEEP_KEYS), ("output", OUTPUT_KEYS),
    ):
        rows.extend((f"{prefix}.{k.name}", k.kind, k.unit) for k in keys)
    return rows


# ---------------------------------------------------------------- instances


def instance_to_dict(inst: Instance) -> dict:
    p = inst.params
    return {
        "video": {
            "rows": inst.video.rows,
            "cols": inst.video.cols,
            "encoding_rates_bps": list(inst.video.encoding_rates),
        },
        "users": [
            {"id": d.user, "quality": d.quality, "tiles": [list(t) for t in sorted(d.tiles)]}
            for d in inst.demands
        ],
        "channel": {"gains": [list(g) for g in inst.channel.gains], "probs": [list(q) for q in inst.channel.probs]},
        "params": {
            "bandwidth_hz": p.bandwidth,
            "frame_s": p.frame,
            "noise_w": p.noise,
            "transcode_energy_j": list(p.transcode_energy),
            "beta": p.beta,
        },
    }


def emit_instance(inst: Instance) -> str:
    return yaml.safe_dump(instance_to_dict(inst), sort_keys=False, default_flow_style=None)


def parse_instance(text: str) -> Instance:
    """Read an instance document.

    ``channel`` and ``params`` are optional and default to the simulation
    values; per user, ``quality`` defaults to 1.
    """
    root = _compose(text, "instance")
    top = _mapping(root, "")
    allowed = {"video", "users", "channel", "params"}
    for name, (knode, _) in top.items():
        if name not in allowed:
            raise _err(knode, f"{name}: unknown section (allowed: {', '.join(sorted(allowed))})")
    if "users" not in top:
        raise _err(root, "users: required")
    vid = dict(rows=18, cols=36, encoding_rates=VideoConfig().encoding_rates)
    if "video" in top:
        v, _ = _read_section(top["video"][1], "video", VIDEO_KEYS, VideoConfig())
        vid = dict(rows=v.rows, cols=v.cols, encoding_rates=v.encoding_rates)
    video = VideoConfig(**vid)

    users_node = top["users"][1]
    if not isinstance(users_node, yaml.SequenceNode) or not users_node.value:
        raise _err(users_node, "users: expected a nonempty list")
    demands = []
    for i, unode in enumerate(users_node.value, start=1):
        path = f"users[{i - 1}]"
        entries = _mapping(unode, path)
        for name, (knode, _) in entries.items():
            if name not in ("id", "quality", "tiles"):
                raise _err(knode, f"{path}.{name}: unknown key (allowed: id, quality, tiles)")
        if "tiles" not in entries:
            raise _err(unode, f"{path}.tiles: required")
        uid = _scalar(entries["id"][1], f"{path}.id", "int") if "id" in entries else i
        quality = _scalar(entries["quality"][1], f"{path}.quality", "int") if "quality" in entries else 1
        tnode = entries["tiles"][1]
        if not isinstance(tnode, yaml.SequenceNode):
            raise _err(tnode, f"{path}.tiles: expected a list of [row, col]")
        tiles = []
        for j, tn in enumerate(tnode.value):
            pair = _value(tn, f"{path}.tiles[{j}]", "ints")
            if len(pair) != 2:
                raise _err(tn, f"{path}.tiles[{j}]: expected [row, col]")
            tiles.append(pair)
        demands.append(UserDemand(uid, frozenset(tiles), quality))
    K = len(demands)

    if "channel" in top:
        cnode = top["channel"][1]
        entries = _mapping(cnode, "channel")
        for name, (knode, _) in entries.items():
            if name not in ("gains", "probs"):
                raise _err(knode, f"channel.{name}: unknown key (allowed: gains, probs)")
        rows = {}
        for name in ("gains", "probs"):
            if name not in entries:
                raise _err(cnode, f"channel.{name}: required")
            vnode = entries[name][1]
            if not isinstance(vnode, yaml.SequenceNode):
                raise _err(vnode, f"channel.{name}: expected one list per user")
            rows[name] = tuple(_value(n, f"channel.{name}[{i}]", "floats") for i, n in enumerate(vnode.value))
        try:
            channel = ChannelModel(rows["gains"], rows["probs"])
        except ValueError as exc:
            raise _err(cnode, f"channel: {exc}") from None
    else:
        channel = ChannelModel(((1e-6, 2e-6),) * K, ((0.5, 0.5),) * K)

    params = SystemParams(transcode_energy=(1e-6,) * K)
    if "params" in top:
        pnode = top["params"][1]
        entries = _mapping(pnode, "params")
        names = {"bandwidth_hz": "bandwidth", "frame_s": "frame", "noise_w": "noise", "beta": "beta"}
        upd = {}
        for name, (knode, vnode) in entries.items():
            if name in names:
                upd[names[name]] = _scalar(vnode, f"params.{name}", "float")
            elif name == "transcode_energy_j":
                if isinstance(vnode, yaml.SequenceNode):
                    upd["transcode_energy"] = _value(vnode, "params.transcode_energy_j", "floats")
                else:
                    upd["transcode_energy"] = (_scalar(vnode, "params.transcode_energy_j", "float"),) * K
            else:
                raise _err(knode, f"params.{name}: unknown key")
        params = replace(params, **upd)
    inst = Instance(video, tuple(demands), channel, params)
    problems = validate_instance(inst)
    if problems:
        raise _err(root, "invalid instance: " + "; ".join(problems))
    return inst


# ---------------------------------------------------------------- solutions


def allocation_rows(alloc) -> list[dict]:
    """Full (state, S, l) -> (t, e) table."""
    rows = []
    for (gains, s, l), (t, e) in alloc.table().items():
        rows.append({"state": list(gains), "subset": list(s), "level": l, "t_s": t, "e_j": e})
    return rows


def solution_summary(scheme: str, sol) -> dict:
    out = {"scheme": scheme, "status": sol.report.status}
    if hasattr(sol, "selection"):
        out.update(
            objective_j=sol.objective,
            transmission_energy_j=sol.transmission_energy,
            transcoding_energy_j=sol.transcoding_energy,
            penalty=sol.penalty,
            levels=[{"subset": list(s), "user": k, "level": l} for (s, k), l in sol.selection.levels().items()],
        )
    else:
        out.update(objective_j=sol.energy, transmission_energy_j=sol.energy, transcoding_energy_j=0.0)
    r = sol.report
    out["solver"] = {
        "objective_j": r.objective,
        "max_violation": r.max_violation,
        "kkt_residual": r.kkt_residual,
        "iterations": r.iterations,
    }
    return out


def emit_solution(scheme: str, sol, full: bool = True) -> str:
    doc = solution_summary(scheme, sol)
    if full:
        doc["allocation"] = allocation_rows(sol.allocation)
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def format_partition(inst: Instance) -> str:
    def subset(s):
        return "{" + ",".join(map(str, s)) + "}"

    lines = []
    for s in inst.partition.index_set:
        tiles = ", ".join(f"({m},{n})" for m, n in sorted(inst.partition.groups[s], key=lambda t: (t[1], t[0])))
        lines.append(f"P_{subset(s)} = {{{tiles}}}")
    lines.append("I = {" + ", ".join(subset(s) for s in inst.partition.index_set) + "}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- command line


def _solve(inst: Instance, scheme: str, doc: ConfigDocument, seed: int):
    from .baselines import solve_baseline_max_quality, solve_baseline_unicast
    from .planner_no_transcode import solve_no_transcode
    from .planner_transcode_dc import solve_transcode_dc

    if scheme == "proposed_wo":
        return solve_no_transcode(inst, doc.solver)
    if scheme == "baseline_wo":
        return solve_baseline_unicast(inst, doc.solver)
    if scheme == "baseline_w":
        return solve_baseline_max_quality(inst, doc.solver)
    return solve_transcode_dc(inst, seed, doc.dc, doc.solver)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def _load_doc(args) -> ConfigDocument:
    text = _read(args.config) if args.config else ""
    try:
        return parse_config(text, args.set or ())
    except ConfigError as exc:
        raise ConfigError(f"{args.config or '<defaults>'}: {exc}") from None


def _write(path: str | None, text: str):
    if not path or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_partition(args) -> int:
    inst = parse_instance(_read(args.instance))
    sys.stdout.write(format_partition(inst))
    return EXIT_OK


def cmd_solve(args) -> int:
    doc = _load_doc(args)
    if args.instance:
        inst = parse_instance(_read(args.instance))
    else:
        inst = sample_realization(doc.scenario, args.realization).instance
    sol = _solve(inst, args.scheme, doc, doc.scenario.seed)
    dump = args.dump or doc.output.dump
    summary = emit_solution(args.scheme, sol, full=False)
    sys.stdout.write(summary)
    if dump:
        _write(dump, emit_solution(args.scheme, sol, full=True))
    if not sol.ok:
        print(f"error: solver status {sol.report.status}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_sweep(args) -> int:
    doc = _load_doc(args)
    res = run_sweep(doc.sweep_spec(), args.workers)
    _write(args.out or doc.output.csv, res.to_csv())
    failed = sum(r.n_total - r.n_ok for r in res.rows)
    if failed:
        print(f"warning: {failed} scheme runs did not reach optimal status", file=sys.stderr)
    if any(r.n_ok == 0 for r in res.rows):
        return EXIT_SOLVER
    return EXIT_OK


def cmd_config(args) -> int:
    doc = _load_doc(args)
    if args.schema:
        for key, kind, unit in schema_table():
            print(f"{key:36s} {kind:8s} {unit}")
        return EXIT_OK
    sys.stdout.write(emit_config(doc))
    return EXIT_OK


def cmd_validate(args) -> int:
    from .selfcheck import run_checks

    results = run_checks()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vrmcast", description="Energy-minimal multicast of tiled 360 video.")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("-c", "--config", help="YAML config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key, e.g. scenario.gamma=0.5")

    p = sub.add_parser("partition", help="print the groups P_S and the index set I of an instance")
    p.add_argument("instance", help="instance YAML file ('-' for stdin)")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("solve", help="solve one instance with one scheme")
    with_config(p)
    p.add_argument("--scheme", choices=SCHEMES, default="proposed_w")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--instance", help="instance YAML file")
    src.add_argument("--realization", type=int, default=0, help="index of a sampled realization (default 0)")
    p.add_argument("--dump", help="write the full allocation table here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run a parameter sweep and write the CSV")
    with_config(p)
    p.add_argument("-o", "--out", help="CSV path (default output.csv from the config, else stdout)")
    p.add_argument("-j", "--workers", type=int, help="worker processes (default from VRMCAST_THREADS, else 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("config", help="print the effective config, or the schema")
    with_config(p)
    p.add_argument("--schema", action="store_true", help="list every key with its type and unit")
    p.set_defaults(func=cmd_config)

    p = sub.add_parser("validate", help="run the built-in invariant checks on small instances")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(
        level=(logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)],
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
