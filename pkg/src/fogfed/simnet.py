"""Deterministic discrete-event network with a two-tier latency model.

Trace dump format: one record per line, space separated, fixed field order::

    tick seq from to kind bytes

``kind`` is a message class name for deliveries, ``drop:<Kind>`` for a
message swallowed by an unresponsive node, and ``!<event>`` for protocol
notes (``from`` and ``to`` are then the noting actor and ``bytes`` is 0).
"""

from __future__ import annotations

import enum
import heapq
import logging
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .consensus import fault_budget

log = logging.getLogger(__name__)

CLOUD_ACTORS = frozenset({"CSP", "CMI"})


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class LatencyModel:
    fog_fog: int = 5
    fog_csp: int = 50
    jitter: int = 0

    def __post_init__(self):
        if min(self.fog_fog, self.fog_csp, self.jitter) < 0:
            raise ValueError("latencies must be non-negative")

    def base_delay(self, src: str, dst: str) -> int:
        if src in CLOUD_ACTORS or dst in CLOUD_ACTORS:
            return self.fog_csp
        return self.fog_fog


class Behavior(str, enum.Enum):
    TAMPER_LEDGER = "TamperLedger"
    FORGE_SIGNATURE = "ForgeSignature"
    WRONG_SHARES = "WrongShares"
    UNRESPONSIVE = "Unresponsive"
    FALSIFY_TRACKING_ROW = "FalsifyTrackingRow"


@dataclass(frozen=True)
class FaultSpec:
    target: str
    behavior: Behavior
    at: int = 0


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    seq: int
    src: str
    dst: str
    kind: str
    size: int

    def line(self) -> str:
        return f"{self.tick} {self.seq} {self.src} {self.dst} {self.kind} {self.size}"

    @classmethod
    def parse(cls, line: str) -> "TraceRecord":
        tick, seq, src, dst, kind, size = line.split(" ")
        return cls(int(tick), int(seq), src, dst, kind, int(size))


@dataclass
class EventTrace:
    records: list[TraceRecord] = field(default_factory=list)
    budget_exceeded: bool = False

    def dump(self) -> str:
        return "".join(r.line() + "\n" for r in self.records)

    @classmethod
    def load(cls, text: str) -> "EventTrace":
        return cls([TraceRecord.parse(line) for line in text.splitlines() if line.strip()])


class Simulator:
    def __init__(self, latency: LatencyModel = LatencyModel(), seed: int = 0):
        self.latency = latency
        self.now = 0
        self.actors: dict[str, Any] = {}
        self.faults: dict[str, FaultSpec] = {}
        self.trace = EventTrace()
        self.sent = 0
        self.delivered = 0
        self.dropped = 0
        self.fog_fog_messages = 0
        self.warnings: list[str] = []
        self._queue: list = []
        self._seq = 0
        self._record_seq = 0
        self._jitter_rng = random.Random(seed)

    # -- wiring --------------------------------------------------------------

    def register(self, name: str, actor) -> None:
        if name in self.actors:
            raise SimulationError(f"duplicate actor {name}")
        self.actors[name] = actor

    def inject_fault(self, spec: FaultSpec) -> None:
        if spec.target not in self.actors:
            raise SimulationError(f"unknown fault target {spec.target}")
        if spec.target in self.faults:
            raise SimulationError(f"{spec.target} already has an active fault behavior")
        if spec.at < self.now:
            raise SimulationError("fault activation tick is in the past")
        self.faults[spec.target] = spec
        self._check_budget()
        actor = self.actors[spec.target]
        hook = getattr(actor, "on_fault_activated", None)
        if hook is not None:
            self.schedule(spec.at, lambda: hook(spec))

    def _check_budget(self) -> None:
        fog = [n for n in self.actors if n not in CLOUD_ACTORS]
        by_ff: dict[str, int] = {}
        for target in self.faults:
            ff = target.split(".")[0]
            by_ff[ff] = by_ff.get(ff, 0) + 1
        for ff, count in by_ff.items():
            size = sum(1 for n in fog if n.split(".")[0] == ff)
            if size and count > fault_budget(size):
                msg = f"{count} faulty nodes in {ff} exceed fault budget {fault_budget(size)} for n={size}"
                if msg not in self.warnings:
                    self.warnings.append(msg)
                    log.warning(msg)

    def fault(self, name: str) -> Optional[Behavior]:
        spec = self.faults.get(name)
        if spec is not None and self.now >= spec.at:
            return spec.behavior
        return None

    # -- scheduling ----------------------------------------------------------

    def schedule(self, at: int, callback: Callable[[], None]) -> int:
        if at < self.now:
            raise SimulationError(f"cannot schedule at tick {at} before current tick {self.now}")
        self._seq += 1
        heapq.heappush(self._queue, (at, self._seq, callback))
        return self._seq

    def after(self, delay: int, callback: Callable[[], None]) -> int:
        return self.schedule(self.now + delay, callback)

    def send(self, src: str, dst: str, message) -> None:
        if dst not in self.actors:
            raise SimulationError(f"unknown receiver {dst}")
        delay = self.latency.base_delay(src, dst)
        if self.latency.jitter:
            delay += self._jitter_rng.randint(0, self.latency.jitter)
        self.sent += 1
        self.schedule(self.now + delay, lambda: self._deliver(src, dst, message))

    def broadcast(self, src: str, targets, message) -> None:
        # sorted so that set-valued target lists do not depend on hash salting
        for dst in sorted(targets):
            if dst != src:
                self.send(src, dst, message)

    def note(self, actor: str, text: str) -> None:
        self._record(actor, actor, "!" + text, 0)

    def _record(self, src: str, dst: str, kind: str, size: int) -> None:
        self._record_seq += 1
        self.trace.records.append(TraceRecord(self.now, self._record_seq, src, dst, kind, size))

    def _deliver(self, src: str, dst: str, message) -> None:
        if src not in CLOUD_ACTORS and dst not in CLOUD_ACTORS:
            self.fog_fog_messages += 1
        if self.fault(dst) is Behavior.UNRESPONSIVE:
            self.dropped += 1
            self._record(src, dst, "drop:" + message.kind, message.size)
            return
        self.delivered += 1
        self._record(src, dst, message.kind, message.size)
        self.actors[dst].receive(src, message)

    def run_until_idle(self, max_ticks: Optional[int] = None) -> EventTrace:
        """Process events until the queue drains or ``max_ticks`` elapse from now."""
        limit = None if max_ticks is None else self.now + max_ticks
        while self._queue:
            at = self._queue[0][0]
            if limit is not None and at > limit:
                self.trace.budget_exceeded = True
                log.warning("tick budget exhausted at tick %d with %d events pending", self.now, len(self._queue))
                break
            at, _, callback = heapq.heappop(self._queue)
            self.now = at
            callback()
        return self.trace

    @property
    def idle(self) -> bool:
        return not self._queue
