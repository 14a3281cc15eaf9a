"""Scenario configs, presets, the runner and an independent trace analyzer.

Config schema (JSON object; unknown keys are rejected)::

    {
      "name": str,                       # optional, echoed in the report
      "seed": int,                       # required
      "security_bits": int,              # default 64
      "latency": {"fog_fog": int, "fog_csp": int, "jitter": int},
      "timeouts": {"vote": int, "retrieval": int, "join": int, "peer": int},
      "max_ticks": int,                  # tick budget for the workload phase
      "cache_max_age": int,              # default max_age for "flush" steps
      "federations": [{"attributes": "<policy expr>",
                       "nodes": [{"label": str, "attributes": [str], "verified": bool}]}],
      "faults": [{"target": label, "behavior": "ForgeSignature" | ..., "at": int}],
      "workload": [{"tick": int, "actor": label, "action": "publish" | "retrieve"
                    | "flush" | "csp_direct", "file": label, "content": str,
                    "policy": str, "max_age": int}]
    }

Nodes join in listed order before the workload starts; workload and fault
ticks are offsets from the end of that join phase.
"""

from __future__ import annotations

import copy
import hashlib
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Any, Optional

from .actors import Declined, FogNode, Timeouts, World
from .group import MAX_BITS, MIN_BITS, REFERENCE_BACKEND
from .policy import PolicyError, parse_policy
from .simnet import CLOUD_ACTORS, Behavior, EventTrace, FaultSpec, LatencyModel, TraceRecord

ACTIONS = ("publish", "retrieve", "flush", "csp_direct")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# -- config validation ---------------------------------------------------------------


@dataclass
class NodeSpec:
    label: str
    attributes: tuple[str, ...]
    verified: bool = True


@dataclass
class FederationSpec:
    attributes: str
    nodes: list[NodeSpec]


@dataclass
class Step:
    tick: int
    actor: str
    action: str
    file: str = ""
    content: str = ""
    policy: str = ""
    max_age: Optional[int] = None


@dataclass
class ScenarioConfig:
    seed: int
    federations: list[FederationSpec]
    name: str = "custom"
    security_bits: int = 64
    latency: LatencyModel = field(default_factory=LatencyModel)
    timeouts: Timeouts = field(default_factory=Timeouts)
    max_ticks: int = 1_000_000
    cache_max_age: int = 1000
    faults: list[dict] = field(default_factory=list)
    workload: list[Step] = field(default_factory=list)

    @property
    def labels(self) -> list[str]:
        return [n.label for f in self.federations for n in f.nodes]


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(path, message)


def _int(obj: dict, key: str, path: str, default=None, minimum: int = 0) -> int:
    if key not in obj:
        _expect(default is not None, f"{path}.{key}", "required field missing")
        return default
    value = obj[key]
    _expect(isinstance(value, int) and not isinstance(value, bool), f"{path}.{key}", "must be an integer")
    _expect(value >= minimum, f"{path}.{key}", f"must be >= {minimum}")
    return value


def _keys(obj: Any, allowed: set[str], path: str) -> None:
    _expect(isinstance(obj, dict), path, "must be an object")
    unknown = sorted(set(obj) - allowed)
    _expect(not unknown, f"{path}.{unknown[0]}" if unknown else path, "unknown field")


def parse_config(raw: dict, seed: Optional[int] = None) -> ScenarioConfig:
    _keys(raw, {"name", "seed", "security_bits", "latency", "timeouts", "max_ticks", "cache_max_age",
                "federations", "faults", "workload"}, "config")
    if seed is None:
        seed = _int(raw, "seed", "config")
    bits = _int(raw, "security_bits", "config", 64, MIN_BITS)
    _expect(bits <= MAX_BITS, "config.security_bits", f"must be <= {MAX_BITS}")

    lat = raw.get("latency", {})
    _keys(lat, {"fog_fog", "fog_csp", "jitter"}, "config.latency")
    latency = LatencyModel(_int(lat, "fog_fog", "config.latency", 5), _int(lat, "fog_csp", "config.latency", 50),
                           _int(lat, "jitter", "config.latency", 0))
    tmo = raw.get("timeouts", {})
    _keys(tmo, {"vote", "retrieval", "join", "peer"}, "config.timeouts")
    d = Timeouts()
    timeouts = Timeouts(*(_int(tmo, k, "config.timeouts", getattr(d, k), 1) for k in ("vote", "retrieval", "join", "peer")))

    feds_raw = raw.get("federations")
    _expect(isinstance(feds_raw, list) and feds_raw, "config.federations", "must be a non-empty list")
    federations, seen = [], set()
    for i, fed in enumerate(feds_raw):
        path = f"config.federations[{i}]"
        _keys(fed, {"attributes", "nodes"}, path)
        expr = fed.get("attributes")
        _expect(isinstance(expr, str), f"{path}.attributes", "must be a policy expression")
        try:
            parse_policy(expr)
        except PolicyError as exc:
            raise ConfigError(f"{path}.attributes", str(exc)) from None
        nodes = []
        _expect(isinstance(fed.get("nodes"), list), f"{path}.nodes", "must be a list")
        for j, node in enumerate(fed["nodes"]):
            npath = f"{path}.nodes[{j}]"
            _keys(node, {"label", "attributes", "verified"}, npath)
            label = node.get("label")
            _expect(isinstance(label, str) and label and " " not in label, f"{npath}.label", "must be a non-empty name")
            _expect(label not in seen, f"{npath}.label", f"duplicate label {label!r}")
            _expect(label not in CLOUD_ACTORS, f"{npath}.label", "reserved name")
            seen.add(label)
            attrs = node.get("attributes")
            _expect(isinstance(attrs, list) and attrs and all(isinstance(a, str) and a for a in attrs),
                    f"{npath}.attributes", "must be a non-empty list of strings")
            verified = node.get("verified", True)
            _expect(isinstance(verified, bool), f"{npath}.verified", "must be a boolean")
            nodes.append(NodeSpec(label, tuple(attrs), verified))
        federations.append(FederationSpec(expr, nodes))

    faults = []
    targets = set()
    for i, fault in enumerate(raw.get("faults", [])):
        path = f"config.faults[{i}]"
        _keys(fault, {"target", "behavior", "at"}, path)
        _expect(fault.get("target") in seen, f"{path}.target", f"unknown actor {fault.get('target')!r}")
        _expect(fault["target"] not in targets, f"{path}.target", "one fault behavior per node")
        targets.add(fault["target"])
        try:
            behavior = Behavior(fault.get("behavior"))
        except ValueError:
            raise ConfigError(f"{path}.behavior", f"unknown behavior {fault.get('behavior')!r}") from None
        faults.append({"target": fault["target"], "behavior": behavior, "at": _int(fault, "at", path, 0)})

    workload, files = [], set()
    for i, step in enumerate(raw.get("workload", [])):
        path = f"config.workload[{i}]"
        _keys(step, {"tick", "actor", "action", "file", "content", "policy", "max_age"}, path)
        action = step.get("action")
        _expect(action in ACTIONS, f"{path}.action", f"must be one of {', '.join(ACTIONS)}")
        _expect(step.get("actor") in seen, f"{path}.actor", f"unknown actor {step.get('actor')!r}")
        file = step.get("file", "")
        if action in ("publish", "retrieve", "csp_direct"):
            _expect(isinstance(file, str) and file, f"{path}.file", "required for this action")
        if action == "publish":
            _expect(file not in files, f"{path}.file", f"file label {file!r} already published")
            files.add(file)
            _expect(isinstance(step.get("content", ""), str), f"{path}.content", "must be a string")
            if "policy" in step:
                try:
                    parse_policy(step["policy"])
                except PolicyError as exc:
                    raise ConfigError(f"{path}.policy", str(exc)) from None
        elif action in ("retrieve", "csp_direct"):
            _expect(file in files, f"{path}.file", f"file label {file!r} is not published earlier in the workload")
        max_age = _int(step, "max_age", path, -1) if "max_age" in step else None
        workload.append(Step(_int(step, "tick", path), step["actor"], action, file,
                             step.get("content", ""), step.get("policy", ""), max_age))

    return ScenarioConfig(
        seed=seed,
        federations=federations,
        name=raw.get("name", "custom"),
        security_bits=bits,
        latency=latency,
        timeouts=timeouts,
        max_ticks=_int(raw, "max_ticks", "config", 1_000_000, 1),
        cache_max_age=_int(raw, "cache_max_age", "config", 1000),
        faults=faults,
        workload=workload,
    )


# -- presets ---------------------------------------------------------------------------------

FF1_POLICY = "(Health OR Education) AND Atlanta"

_FF1_NODES = [
    {"label": "FN1", "attributes": ["Health", "Atlanta"]},
    {"label": "FN2", "attributes": ["Education", "Atlanta"]},
    {"label": "FN3", "attributes": ["Health", "Atlanta"]},
    {"label": "FN4", "attributes": ["Education", "Atlanta"]},
]


def _base(name: str, nodes=None, **extra) -> dict:
    cfg = {
        "name": name,
        "seed": 1,
        "security_bits": 64,
        "latency": {"fog_fog": 5, "fog_csp": 50, "jitter": 0},
        "federations": [{"attributes": FF1_POLICY, "nodes": copy.deepcopy(nodes or _FF1_NODES)}],
        "faults": [],
        "workload": [],
    }
    cfg.update(extra)
    return cfg


def _seven_nodes() -> list[dict]:
    attrs = [["Health", "Atlanta"], ["Education", "Atlanta"]]
    return [{"label": f"FN{i}", "attributes": attrs[(i - 1) % 2]} for i in range(1, 8)]


PRESETS: dict[str, dict] = {
    "scenario1": _base("scenario1", workload=[
        {"tick": 0, "actor": "FN1", "action": "publish", "file": "EF4", "content": "patient summary for EF4"},
        {"tick": 200, "actor": "FN2", "action": "retrieve", "file": "EF4"},
    ]),
    "scenario2": _base("scenario2", workload=[
        {"tick": 0, "actor": "FN3", "action": "publish", "file": "EF2", "content": "lecture notes for EF2"},
        {"tick": 200, "actor": "FN1", "action": "retrieve", "file": "EF2"},
        {"tick": 600, "actor": "FN2", "action": "retrieve", "file": "EF2"},
    ]),
    "scenario3": _base("scenario3", faults=[
        {"target": "FN3", "behavior": "ForgeSignature", "at": 100},
    ], workload=[
        {"tick": 0, "actor": "FN1", "action": "publish", "file": "EF1", "content": "clinic records for EF1"},
        {"tick": 200, "actor": "FN3", "action": "retrieve", "file": "EF1"},
        {"tick": 800, "actor": "FN3", "action": "csp_direct", "file": "EF1"},
    ]),
    "ousting": _base("ousting", nodes=_seven_nodes(), faults=[
        {"target": "FN2", "behavior": "TamperLedger", "at": 200},
        {"target": "FN5", "behavior": "FalsifyTrackingRow", "at": 600},
    ], workload=[
        {"tick": 0, "actor": "FN1", "action": "publish", "file": "EF1", "content": "ledger-protected file"},
        {"tick": 1000, "actor": "FN6", "action": "retrieve", "file": "EF1"},
        {"tick": 1400, "actor": "FN2", "action": "csp_direct", "file": "EF1"},
    ]),
    "consensus-stress": _base("consensus-stress", nodes=_seven_nodes(), faults=[
        {"target": "FN6", "behavior": "Unresponsive", "at": 0},
        {"target": "FN7", "behavior": "Unresponsive", "at": 0},
    ], workload=[
        {"tick": 0, "actor": "FN1", "action": "publish", "file": "EFa", "content": "stress file a"},
        {"tick": 150, "actor": "FN2", "action": "publish", "file": "EFb", "content": "stress file b"},
        {"tick": 300, "actor": "FN3", "action": "publish", "file": "EFc", "content": "stress file c"},
        {"tick": 500, "actor": "FN4", "action": "retrieve", "file": "EFa"},
        {"tick": 800, "actor": "FN4", "action": "retrieve", "file": "EFb"},
        {"tick": 1100, "actor": "FN5", "action": "retrieve", "file": "EFa"},
        {"tick": 1400, "actor": "FN4", "action": "flush", "max_age": 0},
        {"tick": 1700, "actor": "FN1", "action": "retrieve", "file": "EFc"},
    ]),
    "availability-after-oust": _base("availability-after-oust", faults=[
        {"target": "FN1", "behavior": "ForgeSignature", "at": 100},
    ], workload=[
        {"tick": 0, "actor": "FN1", "action": "publish", "file": "EFx", "content": "owner-independent file"},
        {"tick": 200, "actor": "FN1", "action": "retrieve", "file": "EFx"},
        {"tick": 800, "actor": "FN2", "action": "retrieve", "file": "EFx"},
    ]),
}


def preset_config(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    return copy.deepcopy(PRESETS[name])


# -- runner -------------------------------------------------------------------------------------


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    world: World
    report: dict
    trace: EventTrace
    labels: dict[str, str]
    files: dict[str, str]
    contents: dict[str, bytes]

    def report_json(self) -> str:
        return json.dumps(self.report, indent=2, sort_keys=True) + "\n"

    def trace_text(self) -> str:
        return self.trace.dump()


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    world = World(config.seed, config.security_bits, config.latency, config.timeouts, config.max_ticks)
    labels: dict[str, str] = {}
    declined: list[str] = []
    for fed in config.federations:
        world.create_federation(fed.attributes)
    for fed in config.federations:
        for spec in fed.nodes:
            try:
                node = world.join(spec.attributes, spec.verified)
            except Declined:
                declined.append(spec.label)
                continue
            labels[spec.label] = node.fn_id

    base = world.sim.now
    for fault in config.faults:
        if fault["target"] in labels:
            world.inject_fault(FaultSpec(labels[fault["target"]], fault["behavior"], base + fault["at"]))

    files: dict[str, str] = {}
    contents: dict[str, bytes] = {}
    retrieval_labels: dict[str, tuple[str, str]] = {}

    def act(step: Step) -> None:
        fn_id = labels.get(step.actor)
        if fn_id is None:
            world.sim.note("CMI", f"skipped|{step.actor}|{step.action}")
            return
        node = world.nodes[fn_id]
        if step.action == "publish":
            ef_id = node.publish(step.content.encode(), parse_policy(step.policy or _policy_of(config, step.actor)),
                                 step.file)
            if ef_id is not None:
                files[step.file] = ef_id
                contents[step.file] = step.content.encode()
        elif step.action == "retrieve":
            round_id = node.request_file(files.get(step.file, "unpublished:" + step.file), step.file)
            if round_id is not None:
                retrieval_labels[round_id] = (step.actor, step.file)
        elif step.action == "flush":
            node.flush_cache(config.cache_max_age if step.max_age is None else step.max_age)
        elif step.action == "csp_direct":
            node.request_from_csp(files.get(step.file, "unpublished:" + step.file))

    for step in config.workload:
        world.sim.schedule(base + step.tick, lambda step=step: act(step))
    world.sim.run_until_idle(config.max_ticks)

    report = build_report(config, world, labels, declined, files, contents, retrieval_labels)
    return ScenarioResult(config, world, report, world.sim.trace, labels, files, contents)


def _policy_of(config: ScenarioConfig, label: str) -> str:
    for fed in config.federations:
        if any(n.label == label for n in fed.nodes):
            return fed.attributes
    raise KeyError(label)


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def build_report(config, world: World, labels, declined, files, contents, retrieval_labels) -> dict:
    sim = world.sim
    nodes = world.nodes
    by_fn = {fn: label for label, fn in labels.items()}
    faulty = set(sim.faults)

    retrievals = []
    for fn_id, node in sorted(nodes.items()):
        for round_id, r in node.retrievals.items():
            _, file_label = retrieval_labels.get(round_id, ("", ""))
            expected = contents.get(file_label)
            retrievals.append({
                "round": round_id,
                "requester": fn_id,
                "actor": by_fn.get(fn_id, fn_id),
                "file": file_label,
                "ef_id": r.ef_id,
                "status": r.status or "pending",
                "reason": r.reason,
                "path": r.path,
                "peer": r.peer,
                "start": r.start,
                "end": r.end,
                "latency": r.latency,
                "plaintext_sha256": _sha(r.plaintext) if r.plaintext is not None else None,
                "matches_published": (r.plaintext == expected) if r.plaintext is not None else False,
            })
    retrievals.sort(key=lambda r: (r["start"], r["round"]))

    decisions: dict[str, set[str]] = defaultdict(set)
    for node in nodes.values():
        for _, round_id, _, decision in node.decisions:
            decisions[round_id].add(decision)
    committed = sum(1 for d in decisions.values() if "committed" in d)

    rogue = sorted(
        ({"tick": t, "fn_id": fn, "cause": cause} for node in nodes.values() for t, fn, cause in node.rogue_detections),
        key=lambda r: (r["tick"], r["fn_id"]),
    )

    replicas = {}
    for fn_id, node in sorted(nodes.items()):
        replicas[fn_id] = {
            "label": by_fn.get(fn_id, fn_id),
            "height": node.ledger.height,
            "head": node.ledger.head_hash.hex(),
            "table_sha256": _sha(node.table.to_bytes()),
            "rows": sorted(node.table.rows),
            "honest": fn_id not in faulty,
            "ousted_in_own_view": node.ousted,
            "cache": sorted(node.cache),
        }

    file_report = {}
    for label, ef_id in sorted(files.items()):
        owner = next((n for n in nodes.values() if ef_id in n.publishes), None)
        file_report[label] = {
            "ef_id": ef_id,
            "owner": owner.fn_id if owner else None,
            "status": owner.publishes[ef_id].status if owner else "unknown",
        }

    return {
        "scenario": config.name,
        "seed": config.seed,
        "backend": REFERENCE_BACKEND,
        "insecure": world.params.insecure,
        "security_bits": config.security_bits,
        "latency": {"fog_fog": sim.latency.fog_fog, "fog_csp": sim.latency.fog_csp, "jitter": sim.latency.jitter},
        "completed": not sim.trace.budget_exceeded,
        "final_tick": sim.now,
        "warnings": list(sim.warnings),
        "members": dict(sorted(labels.items())),
        "declined": declined,
        "files": file_report,
        "csp_request_count": world.csp.requests_served + len(world.csp.requests_refused),
        "csp_response_count": world.csp.requests_served + len(world.csp.requests_refused),
        "csp_refusals": [{"fn_id": f, "ef_id": e, "reason": r} for f, e, r in world.csp.requests_refused],
        "fog_fog_message_count": sim.fog_fog_messages,
        "messages_sent": sim.sent,
        "messages_delivered": sim.delivered,
        "messages_dropped": sim.dropped,
        "cache_hit_count": sum(1 for r in retrievals if r["status"] == "ok" and r["path"] == "peer"),
        "retrievals": retrievals,
        "rogue_detections": rogue,
        "consensus": {"committed": committed, "discarded": len(decisions) - committed},
        "csp_blacklist": sorted(world.csp.blacklist),
        "csp_replays": [{"fn_id": f, "ef_id": e, "first_presented_by": first} for f, e, first in world.csp.replays],
        "problem_reports": [{"fn_id": f, "detail": d} for f, d in world.cmi.problem_reports],
        "replicas": replicas,
    }


# -- latency comparison ------------------------------------------------------------------------


def _first_retrieval(report: dict, path: str) -> Optional[dict]:
    return next((r for r in report["retrievals"] if r["status"] == "ok" and r["path"] == path), None)


def compare_latency(report_cached: dict, report_uncached: dict) -> str:
    """Order the cached (peer-served) retrieval against the uncached (CSP-served) one.

    Returns ``"cached-faster"``, ``"cached-slower"`` or ``"equal"``; when the
    fog tier is not strictly faster than the cloud tier no claim is made and
    ``"incomparable"`` is returned.
    """
    for report in (report_cached, report_uncached):
        lat = report["latency"]
        if lat["fog_fog"] >= lat["fog_csp"]:
            return "incomparable"
    cached = _first_retrieval(report_cached, "peer")
    uncached = _first_retrieval(report_uncached, "csp")
    if cached is None or uncached is None:
        return "incomparable"
    if cached["latency"] < uncached["latency"]:
        return "cached-faster"
    if cached["latency"] > uncached["latency"]:
        return "cached-slower"
    return "equal"


# -- independent trace analysis ------------------------------------------------------------------


def _is_cloud(name: str) -> bool:
    return name in CLOUD_ACTORS


def recount(trace: EventTrace) -> dict:
    """Recompute report metrics from trace records alone."""
    kinds = Counter()
    fog_fog = 0
    starts: dict[str, int] = {}
    done: dict[str, tuple[int, str, str]] = {}
    rogue = []
    replays = []
    decisions: dict[str, set[str]] = defaultdict(set)
    for rec in trace.records:
        if rec.kind.startswith("!"):
            parts = rec.kind[1:].split("|")
            if parts[0] == "retrieve-start":
                starts[parts[1]] = rec.tick
            elif parts[0] == "retrieve-done":
                done[parts[1]] = (rec.tick, parts[2], parts[3])
            elif parts[0] == "rogue":
                rogue.append({"tick": rec.tick, "fn_id": parts[1], "cause": parts[2]})
            elif parts[0] == "replay":
                replays.append({"fn_id": parts[1], "ef_id": parts[2], "first_presented_by": parts[3]})
            elif parts[0] == "decide":
                decisions[parts[1]].add(parts[2])
            continue
        kinds[rec.kind] += 1
        if not _is_cloud(rec.src) and not _is_cloud(rec.dst):
            fog_fog += 1
    committed = sum(1 for d in decisions.values() if "committed" in d)
    return {
        "csp_request_count": kinds["CspRequest"],
        "csp_response_count": kinds["CspResponse"],
        "fog_fog_message_count": fog_fog,
        "cache_hit_count": sum(1 for _, status, path in done.values() if status == "ok" and path == "peer"),
        "latencies": {rid: done[rid][0] - starts[rid] for rid in done if rid in starts},
        "rogue_detections": sorted(rogue, key=lambda r: (r["tick"], r["fn_id"])),
        "consensus": {"committed": committed, "discarded": len(decisions) - committed},
        "csp_replays": replays,
    }


def hop_cost(rec: TraceRecord, latency: LatencyModel) -> int:
    """Ticks a hop contributes: link delay for messages, wait length for timers."""
    if rec.kind.startswith("!timer|"):
        return int(rec.kind.rsplit("|", 1)[1])
    return latency.base_delay(rec.src, rec.dst)


def critical_path(trace: EventTrace, requester: str, start: int, end: int, latency: LatencyModel) -> Optional[list[TraceRecord]]:
    """Chain of deliveries from the request at ``start`` to completion at ``end``.

    Walks backwards from the requester at ``end``: each hop is a delivery to
    the current actor at the current tick, and its send tick is the delivery
    tick minus the hop's base delay. Local timer expiries appear as timer
    notes and step back by their wait length. Requires jitter-free traces.
    """
    inbound: dict[tuple[str, int], list[TraceRecord]] = defaultdict(list)
    for rec in trace.records:
        if rec.kind.startswith("!timer|"):
            inbound[(rec.dst, rec.tick)].append(rec)
        elif not rec.kind.startswith("!") and not rec.kind.startswith("drop:"):
            inbound[(rec.dst, rec.tick)].append(rec)
    seen = set()

    def walk(actor: str, tick: int) -> Optional[list[TraceRecord]]:
        if actor == requester and tick == start:
            return []
        if tick < start or (actor, tick) in seen:
            return None
        seen.add((actor, tick))
        for rec in reversed(inbound.get((actor, tick), [])):
            sent = tick - hop_cost(rec, latency)
            path = walk(rec.src, sent)
            if path is not None:
                return path + [rec]
        return None

    return walk(requester, end)


def verify_trace(trace: EventTrace, report: Optional[dict] = None) -> list[tuple[str, bool, str]]:
    """Consistency checks; returns ``(check, passed, detail)`` tuples."""
    checks = []
    order_ok = all(
        (a.tick, a.seq) < (b.tick, b.seq) and a.tick <= b.tick for a, b in zip(trace.records, trace.records[1:])
    )
    checks.append(("records totally ordered by (tick, seq)", order_ok, f"{len(trace.records)} records"))
    if report is None:
        return checks
    counted = recount(trace)
    for key in ("csp_request_count", "csp_response_count", "fog_fog_message_count", "cache_hit_count",
                "rogue_detections", "consensus", "csp_replays"):
        checks.append((f"report {key} matches trace", counted[key] == report[key], f"trace={counted[key]!r}"))
    lat = report["latency"]
    model = LatencyModel(lat["fog_fog"], lat["fog_csp"], lat["jitter"])
    for r in report["retrievals"]:
        if r["end"] is None:
            continue
        same = counted["latencies"].get(r["round"]) == r["latency"]
        checks.append((f"latency of {r['round']} matches trace", same, f"trace={counted['latencies'].get(r['round'])}"))
        if r["status"] == "ok" and not model.jitter:
            path = critical_path(trace, r["requester"], r["start"], r["end"], model)
            hop_sum = None if path is None else sum(hop_cost(h, model) for h in path)
            checks.append((f"latency of {r['round']} equals critical-path hop sum", hop_sum == r["latency"],
                           f"hops={[h.kind for h in path] if path else None} sum={hop_sum}"))
    return checks
