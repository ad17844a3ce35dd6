"""
Executable run invariants.

Every check raises ``InvariantViolation`` naming the broken property. A
violation means the simulator is wrong, not that the network misbehaved, so
runs abort on the first one.
"""

from collections import Counter
from collections.abc import Iterable, Mapping
from enum import Enum

from loguru import logger

from src.engine.models import ClusterSnapshot, RoundStats
from src.engine.trace import Tracer
from src.protocol import NodeId, NodeState, Role
from src.radio import EnergyLedger

engine_log = logger.bind(module="Engine")


class ViolationType(Enum):
    """Checked properties, as (code, description)."""

    TERMINATION = ("TERMINATION", "phase 2 exceeded its iteration bound")
    COVERAGE = ("COVERAGE", "alive node left without a cluster")
    UNIQUENESS = ("UNIQUENESS", "node belongs to more than one cluster")
    ACH_MEMBERSHIP = ("ACH_MEMBERSHIP", "assistant is not a member of its cluster")
    ACH_CONTINUITY = ("ACH_CONTINUITY", "member lost more than one frame to a covered CH failure")
    ENERGY_CONSERVATION = ("ENERGY_CONSERVATION", "energy debits do not balance")
    DEAD_NODE_TRAFFIC = ("DEAD_NODE_TRAFFIC", "dead node asked to transmit")
    INTER_BAND_LEVEL = ("INTER_BAND_LEVEL", "inter-cluster send below the inter band")
    METRICS_RANGE = ("METRICS_RANGE", "metrics record out of range")
    CLOCK = ("CLOCK", "simulation clock moved backwards")

    def __init__(self, code: str, description: str):
        self.code = code
        self.description = description


class InvariantViolation(RuntimeError):
    """A checked property does not hold."""

    def __init__(self, violation: ViolationType, detail: str):
        self.violation = violation
        self.detail = detail
        super().__init__(f"[{violation.code}] {violation.description}: {detail}")

    def __reduce__(self):
        # Raised inside worker processes; must survive pickling.
        return (self.__class__, (self.violation, self.detail))


class DuplicateInjectionError(ValueError):
    """The same node was scheduled to fail twice at the same time."""

    def __init__(self, node: NodeId, time: float):
        self.node = node
        self.time = time
        super().__init__(f"failure already injected for node {node} at t={time}")

    def __reduce__(self):
        return (self.__class__, (self.node, self.time))


def _fail(violation: ViolationType, detail: str) -> None:
    engine_log.error(f"{violation.code}: {detail}")
    raise InvariantViolation(violation, detail)


# ============================================================
# Clustering
# ============================================================


def check_termination(snapshot: ClusterSnapshot, limit: int) -> None:
    """Every node finished phase 2 within ``limit`` iterations."""
    over = {n: it for n, it in snapshot.iterations.items() if it > limit}
    if over:
        _fail(ViolationType.TERMINATION, f"limit {limit}, observed {over}")


def check_coverage(states: Mapping[NodeId, NodeState], alive: Iterable[NodeId]) -> None:
    """Every alive node is a final CH or a member with a CH."""
    for node in alive:
        state = states.get(node)
        if state is None:
            _fail(ViolationType.COVERAGE, f"node {node} never clustered")
            return
        if state.role == Role.FINAL_CH and state.my_ch == node:
            continue
        if state.role == Role.MEMBER and state.my_ch is not None:
            continue
        _fail(ViolationType.COVERAGE, f"node {node} ended as {state.role}")


def check_uniqueness(states: Mapping[NodeId, NodeState]) -> dict[NodeId, NodeId]:
    """
    Build the global member -> CH mapping and check it is a function.

    A node may be listed by at most one CH, a listed member must not be a CH
    itself, and a listed member must point back at the CH listing it.

    Returns:
        member -> CH as recorded by the members themselves
    """
    listed = Counter(
        member
        for state in states.values()
        if state.role == Role.FINAL_CH
        for member in state.member_ids()
    )
    duplicated = sorted(n for n, count in listed.items() if count > 1)
    if duplicated:
        _fail(ViolationType.UNIQUENESS, f"nodes listed by several CHs: {duplicated}")

    for state in states.values():
        if state.role != Role.FINAL_CH:
            continue
        for member in state.member_ids():
            member_state = states.get(member)
            if member_state is None:
                continue
            if member_state.role == Role.FINAL_CH:
                _fail(
                    ViolationType.UNIQUENESS,
                    f"CH {member} is listed as a member of CH {state.me}",
                )
            if member_state.my_ch != state.me:
                _fail(
                    ViolationType.UNIQUENESS,
                    f"node {member} listed by CH {state.me} but follows {member_state.my_ch}",
                )

    return {
        n: s.my_ch
        for n, s in states.items()
        if s.role == Role.MEMBER and s.my_ch is not None
    }


def check_ach_membership(states: Mapping[NodeId, NodeState]) -> None:
    for state in states.values():
        if state.role == Role.FINAL_CH and state.my_ach is not None:
            if state.my_ach not in state.member_ids():
                _fail(
                    ViolationType.ACH_MEMBERSHIP,
                    f"CH {state.me} names {state.my_ach} outside {state.member_ids()}",
                )


# ============================================================
# Data period
# ============================================================


def check_ach_continuity(stats: RoundStats) -> None:
    """
    Members that could still reach the assistant of their failed CH lost at
    most one frame per failure.
    """
    failures = Counter(
        f.node for f in stats.failures if f.was_ch and f.ach is not None
    )
    for ch, covered in stats.reachable_after_failure.items():
        allowed = failures.get(ch, 0)
        for member in sorted(covered):
            lost = stats.member_losses.get(member, 0)
            if lost > allowed:
                _fail(
                    ViolationType.ACH_CONTINUITY,
                    f"round {stats.round}: member {member} of CH {ch} lost {lost} frames",
                )


def check_energy_conservation(ledger: EnergyLedger, tracer: Tracer | None = None) -> None:
    """
    initial == residual + debited, exactly; and the trace saw every debit.
    """
    if ledger.initial_total_pj != ledger.residual_total_pj + ledger.debited_pj:
        _fail(
            ViolationType.ENERGY_CONSERVATION,
            f"initial {ledger.initial_total_pj} pJ != residual "
            f"{ledger.residual_total_pj} pJ + debited {ledger.debited_pj} pJ",
        )
    if tracer is not None and tracer.debited_pj != ledger.debited_pj:
        _fail(
            ViolationType.ENERGY_CONSERVATION,
            f"trace debits {tracer.debited_pj} pJ, ledger {ledger.debited_pj} pJ",
        )
