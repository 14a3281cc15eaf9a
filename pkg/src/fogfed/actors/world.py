"""Synchronous facade over a simulated deployment (CMI, CSP, federations).

Each method schedules one protocol action, runs the simulator until it goes
idle and returns the outcome, which is what tests and the scenario runner
need.
"""

from __future__ import annotations

from typing import Optional, Union

from ..encoding import derive_seed
from ..group import GroupParams, group_setup
from ..policy import AccessTree, parse_policy
from ..simnet import FaultSpec, LatencyModel, Simulator
from .cmi import CMI, Cmi
from .csp import CSP, Csp
from .fognode import FogNode, Retrieval, Timeouts


class Declined(Exception):
    pass


class PublishRejected(Exception):
    pass


class World:
    def __init__(self, seed: int = 0, bits: int = 64, latency: LatencyModel = LatencyModel(),
                 timeouts: Timeouts = Timeouts(), max_ticks: int = 1_000_000):
        self.seed = seed
        self.params: GroupParams = group_setup(bits, derive_seed(seed, "group"))
        self.sim = Simulator(latency, derive_seed(seed, "jitter"))
        self.timeouts = timeouts
        self.max_ticks = max_ticks
        self.cmi = Cmi(self.params, derive_seed(seed, "cmi"), self.sim)
        self.csp = Csp(self.sim)
        self.sim.register(CMI, self.cmi)
        self.sim.register(CSP, self.csp)
        self.nodes: dict[str, FogNode] = {}
        self._joins = 0

    def run(self) -> None:
        self.sim.run_until_idle(self.max_ticks)

    def create_federation(self, expression: str) -> str:
        ff_id = self.cmi.create_federation(expression)
        self.csp.update_verification_list(ff_id, *self._vl_row(ff_id))
        return ff_id

    def _vl_row(self, ff_id: str):
        row = self.cmi.verification_row(ff_id)
        return row.ffpk, row.ff_att

    # -- protocol operations ---------------------------------------------------------

    def spawn(self, attributes, verified: bool = True) -> FogNode:
        self._joins += 1
        name = f"new-{self._joins}"
        node = FogNode(self.sim, name, attributes, self.params, self.seed, self.timeouts, verified)
        self.sim.register(name, node)
        return node

    def join(self, attributes, verified: bool = True) -> FogNode:
        node = self.spawn(attributes, verified)
        node.start_join()
        self.run()
        if node.join_status == "declined":
            raise Declined(node.problem)
        self.nodes[node.fn_id] = node
        return node

    def publish(self, node: FogNode, plaintext: bytes, policy: Union[str, AccessTree]) -> str:
        tree = parse_policy(policy) if isinstance(policy, str) else policy
        ef_id = node.publish(plaintext, tree)
        self.run()
        if ef_id is None or node.publishes[ef_id].status != "published":
            raise PublishRejected(f"{node.address} could not publish")
        return ef_id

    def request(self, node: FogNode, ef_id: str) -> Retrieval:
        round_id = node.request_file(ef_id)
        self.run()
        if round_id is None:
            return Retrieval("", ef_id, self.sim.now, status="denied", reason="unresponsive")
        return node.retrievals[round_id]

    def flush(self, node: FogNode, max_age: int) -> int:
        evicted = node.flush_cache(max_age)
        self.run()
        return evicted

    def inject_fault(self, spec: FaultSpec) -> None:
        self.sim.inject_fault(spec)

    def advance(self, ticks: int) -> None:
        self.sim.schedule(self.sim.now + ticks, lambda: None)
        self.run()

    def honest_nodes(self) -> list[FogNode]:
        return [n for fn, n in sorted(self.nodes.items()) if fn not in self.sim.faults and not n.ousted]
