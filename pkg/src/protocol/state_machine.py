"""
Per-node clustering state machine.

Transport-agnostic: every operation takes a ``NodeState`` plus inputs and returns
a new state plus the announcements the node wants to send. Nothing here knows
about positions, radios or time; the engine delivers the announcements.

Phases:
    I    init_phase1      neighbor averages, cost, initial CH_prob
    II   step_phase2      one lockstep iteration of candidacy + doubling
    III  finalize_phase3  join the cheapest final CH or become one
    --   select_ach       CH picks its assistant among its members
    IV   handle_send_failure  data-period fallback to the ACH / another CH
"""

from collections.abc import Iterable, Sequence
from dataclasses import replace

from loguru import logger

from src.protocol.errors import (
    NotClusterHeadError,
    NotMemberError,
    PhaseTerminatedError,
    ProtocolError,
)
from src.protocol.formulas import (
    compute_ccf,
    compute_ch_prob,
    compute_va,
    compute_vf,
    least_cost,
    max_iterations,
    node_cost,
)
from src.protocol.models import (
    MAX_COST,
    PROB_EPSILON,
    Announcement,
    AnnouncementKind,
    Candidate,
    ChEntry,
    NeighborEntry,
    NodeId,
    NodeState,
    ProtocolConfig,
    Role,
    RoleTag,
)

protocol_log = logger.bind(module="Protocol")

_DECLARATION_TAGS = {
    AnnouncementKind.TENTATIVE_CH: RoleTag.TENTATIVE_CH,
    AnnouncementKind.FINAL_CH: RoleTag.FINAL_CH,
}


# ============================================================
# Helpers
# ============================================================


def _upsert_ch(l_ch: tuple[ChEntry, ...], entry: ChEntry) -> tuple[ChEntry, ...]:
    """Insert or replace ``entry`` in L_CH; a final tag is never downgraded."""
    entries = {e.id: e for e in l_ch}
    previous = entries.get(entry.id)
    if (
        previous is not None
        and previous.tag == RoleTag.FINAL_CH
        and entry.tag != RoleTag.FINAL_CH
    ):
        return l_ch
    entries[entry.id] = entry
    return tuple(sorted(entries.values(), key=lambda e: e.id))


def _declare(state: NodeState, kind: AnnouncementKind) -> Announcement:
    return Announcement(kind=kind, sender=state.me, cost=state.cost)


def _is_one(prob: float) -> bool:
    return prob >= 1.0 - PROB_EPSILON


# ============================================================
# Message intake
# ============================================================


def merge_declarations(state: NodeState, inbox: Iterable[Announcement]) -> NodeState:
    """
    Record tentative / final CH declarations heard from neighbors into L_CH.

    Other announcement kinds are ignored. A node's own declarations are kept as
    the state machine inserted them.
    """
    l_ch = state.l_ch
    tags: dict[NodeId, RoleTag] = {}
    for ann in inbox:
        tag = _DECLARATION_TAGS.get(ann.kind)
        if tag is None or ann.sender == state.me:
            continue
        l_ch = _upsert_ch(l_ch, ChEntry(ann.sender, ann.cost, tag))
        tags[ann.sender] = next(e.tag for e in l_ch if e.id == ann.sender)

    if not tags:
        return state if l_ch is state.l_ch else replace(state, l_ch=l_ch)

    l_adj = tuple(
        replace(n, role_tag=tags[n.id]) if n.id in tags else n for n in state.l_adj
    )
    return replace(state, l_ch=l_ch, l_adj=l_adj)


def accept_cost_velocity(state: NodeState, ann: Announcement) -> NodeState:
    """Store the cost a neighbor advertised in Phase I."""
    if ann.kind != AnnouncementKind.COST_VELOCITY:
        return state
    l_adj = tuple(
        replace(n, cost=ann.cost) if n.id == ann.sender else n for n in state.l_adj
    )
    return replace(state, l_adj=l_adj)


def accept_join(state: NodeState, ann: Announcement) -> NodeState:
    """
    Add the sender of a join addressed to this node to L_Members.

    Joins reaching a node that is not a final CH are dropped; the sender will
    detect the missing CH through the data-period failure path.
    """
    if ann.kind != AnnouncementKind.JOIN or ann.payload != state.me:
        return state
    if state.role != Role.FINAL_CH:
        protocol_log.debug(f"Node {state.me}: join from {ann.sender} ignored (not CH)")
        return state
    members = {m.id: m for m in state.l_members}
    members[ann.sender] = Candidate(ann.sender, ann.cost)
    return replace(state, l_members=tuple(sorted(members.values())))


def accept_ach_decl(state: NodeState, ann: Announcement) -> NodeState:
    """
    Learn the assistant CH announced by this node's cluster head.

    A declaration coming from the node's current ACH means that ACH took over
    the cluster, so the node first adopts it as CH.
    """
    if ann.kind != AnnouncementKind.ACH_DECL or ann.sender == state.me:
        return state
    if state.role == Role.MEMBER and ann.sender == state.my_ach:
        state = replace(state, my_ch=ann.sender, my_ach=None, ch_failed=False)
    if ann.sender != state.my_ch:
        return state
    if ann.payload == state.me:
        return replace(
            state, my_ach=ann.payload, is_ach=True, ach_roster=ann.roster, ch_failed=False
        )
    return replace(state, my_ach=ann.payload, is_ach=False, ach_roster=(), ch_failed=False)


def adopt_promoted_ch(state: NodeState, ann: Announcement) -> NodeState:
    """A member hearing a final CH declaration from its ACH follows it."""
    if (
        ann.kind != AnnouncementKind.FINAL_CH
        or state.role != Role.MEMBER
        or state.my_ach is None
        or ann.sender != state.my_ach
        or ann.sender == state.me
    ):
        return state
    return replace(state, my_ch=ann.sender, my_ach=None, ch_failed=False, orphan=False)


# ============================================================
# Phase I
# ============================================================


def init_phase1(
    me: NodeId,
    neighbors: Sequence[NeighborEntry],
    cfg: ProtocolConfig,
    e_res: float,
    *,
    velocity: tuple[float, float] | None = None,
) -> tuple[NodeState, Announcement]:
    """
    Build the initial state of a node and its cost/velocity broadcast.

    A node without neighbors uses Va = 0 (VF = 1) and advertises ``MAX_COST``.

    Args:
        me: Node id
        neighbors: L_adj as found by neighbor discovery
        cfg: Protocol parameters
        e_res: Residual energy in joules
        velocity: Sensed velocity carried in the broadcast

    Returns:
        (state, cost_velocity announcement)
    """
    l_adj = tuple(sorted(neighbors, key=lambda n: n.id))
    if l_adj:
        va = compute_va([n.relative_speed for n in l_adj])
        ccf = compute_ccf([n.min_power_mw for n in l_adj])
    else:
        va, ccf = 0.0, MAX_COST

    vf = compute_vf(va, cfg.va_threshold)
    ch_prob = compute_ch_prob(cfg, e_res, vf)
    cost = node_cost(cfg, len(l_adj), ccf)

    state = NodeState(
        me=me,
        l_adj=l_adj,
        ch_prob=ch_prob,
        e_res=e_res,
        cost=cost,
        iteration_limit=max_iterations(cfg.p_min),
    )
    ann = Announcement(
        kind=AnnouncementKind.COST_VELOCITY,
        sender=me,
        cost=cost,
        velocity_info=velocity,
    )
    return state, ann


# ============================================================
# Phase II
# ============================================================


def step_phase2(
    state: NodeState, inbox: Iterable[Announcement], rng_draw: float
) -> tuple[NodeState, list[Announcement], bool]:
    """
    Run one Phase II iteration.

    The node merges the declarations it heard, then:
      - if it is the cheapest entry of L_CH it declares itself final CH when
        CH_prob reached 1, tentative CH otherwise;
      - if L_CH is empty it declares itself tentative with probability CH_prob
        (``rng_draw < ch_prob``).
    CH_prob then doubles (capped at 1) and the node is done once the value it
    entered the iteration with was already 1.

    Returns:
        (new state, announcements to broadcast, done)

    Raises:
        PhaseTerminatedError: if the node already finished Phase II
    """
    if state.phase2_done:
        raise PhaseTerminatedError(state.me)
    if state.role not in (Role.UNDECIDED, Role.TENTATIVE_CH):
        raise ProtocolError(f"node {state.me} cannot run phase 2 as {state.role}")
    if state.iteration >= state.iteration_limit:
        raise ProtocolError(
            f"node {state.me} exceeded {state.iteration_limit} phase 2 iterations"
        )
    if not 0.0 <= rng_draw < 1.0:
        raise ValueError("rng_draw must be in [0, 1)")

    state = merge_declarations(state, inbox)
    out: list[Announcement] = []

    if state.l_ch:
        if least_cost((e.id, e.cost) for e in state.l_ch) == state.me:
            if _is_one(state.ch_prob):
                state = replace(
                    state,
                    role=Role.FINAL_CH,
                    my_ch=state.me,
                    l_ch=_upsert_ch(
                        state.l_ch, ChEntry(state.me, state.cost, RoleTag.FINAL_CH)
                    ),
                )
                out.append(_declare(state, AnnouncementKind.FINAL_CH))
            else:
                state = replace(
                    state,
                    role=Role.TENTATIVE_CH,
                    l_ch=_upsert_ch(
                        state.l_ch, ChEntry(state.me, state.cost, RoleTag.TENTATIVE_CH)
                    ),
                )
                out.append(_declare(state, AnnouncementKind.TENTATIVE_CH))
    elif rng_draw < state.ch_prob:
        state = replace(
            state,
            role=Role.TENTATIVE_CH,
            l_ch=_upsert_ch(
                state.l_ch, ChEntry(state.me, state.cost, RoleTag.TENTATIVE_CH)
            ),
        )
        out.append(_declare(state, AnnouncementKind.TENTATIVE_CH))

    ch_prev = state.ch_prob
    done = _is_one(ch_prev)
    state = replace(
        state,
        ch_prev=ch_prev,
        ch_prob=min(state.ch_prob * 2.0, 1.0),
        iteration=state.iteration + 1,
        phase2_done=done,
    )
    return state, out, done


# ============================================================
# Phase III
# ============================================================


def finalize_phase3(state: NodeState) -> tuple[NodeState, list[Announcement]]:
    """
    Settle the node as final CH or as member of the cheapest final CH it heard.

    A tentative CH that heard a final CH joins it like any other node.
    """
    if not state.phase2_done:
        raise ProtocolError(f"node {state.me} has not finished phase 2")

    if state.role == Role.FINAL_CH:
        return state, [_declare(state, AnnouncementKind.FINAL_CH)]

    finals = [
        (e.id, e.cost)
        for e in state.l_ch
        if e.tag == RoleTag.FINAL_CH and e.id != state.me
    ]
    if finals:
        ch = least_cost(finals)
        state = replace(state, role=Role.MEMBER, my_ch=ch)
        join = Announcement(
            kind=AnnouncementKind.JOIN, sender=state.me, cost=state.cost, payload=ch
        )
        return state, [join]

    state = replace(
        state,
        role=Role.FINAL_CH,
        my_ch=state.me,
        l_ch=_upsert_ch(state.l_ch, ChEntry(state.me, state.cost, RoleTag.FINAL_CH)),
    )
    return state, [_declare(state, AnnouncementKind.FINAL_CH)]


# ============================================================
# Assistant cluster head
# ============================================================


def select_ach(state: NodeState) -> tuple[NodeState, Announcement | None]:
    """
    Pick the cheapest member as assistant CH and announce it with the roster.

    Raises:
        NotClusterHeadError: if the node is not a final CH
    """
    if state.role != Role.FINAL_CH:
        raise NotClusterHeadError(state.me)
    if not state.l_members:
        return replace(state, my_ach=None), None

    ach = least_cost(state.l_members)
    ach_cost = next(m.cost for m in state.l_members if m.id == ach)
    ann = Announcement(
        kind=AnnouncementKind.ACH_DECL,
        sender=state.me,
        cost=ach_cost,
        payload=ach,
        roster=state.l_members,
    )
    return replace(state, my_ach=ach), ann


def promote_to_ch(state: NodeState) -> tuple[NodeState, Announcement]:
    """
    Assistant takes over its failed cluster head.

    The roster the ACH holds becomes its member list (minus itself).
    """
    if not state.is_ach:
        raise ProtocolError(f"node {state.me} is not an assistant cluster head")
    members = tuple(m for m in state.ach_roster if m.id != state.me)
    state = replace(
        state,
        role=Role.FINAL_CH,
        my_ch=state.me,
        my_ach=None,
        is_ach=False,
        ch_failed=False,
        orphan=False,
        l_members=members,
        ach_roster=(),
    )
    protocol_log.debug(f"Node {state.me}: promoted to CH with {len(members)} members")
    return state, _declare(state, AnnouncementKind.FINAL_CH)


# ============================================================
# Phase IV
# ============================================================


def handle_send_failure(
    state: NodeState,
    failed_target: NodeId,
    neighborhood_chs: Iterable[tuple[NodeId, float]],
) -> tuple[NodeState, list[Announcement]]:
    """
    React to a data frame that was not acknowledged.

    - CH failed and an ACH is known: send to the ACH from now on.
    - ACH failed too, or there is no ACH: join the cheapest CH in range.
    - No CH in range: the node is orphaned until the next clustering epoch.

    Args:
        state: Member state
        failed_target: The node that did not acknowledge (my_ch or my_ach)
        neighborhood_chs: (id, cost) of cluster heads currently in range

    Raises:
        NotMemberError: if the node is not a member
    """
    if state.role != Role.MEMBER:
        raise NotMemberError(state.me)
    if failed_target not in (state.my_ch, state.my_ach):
        raise ValueError(
            f"node {state.me}: {failed_target} is neither its CH nor its ACH"
        )

    if failed_target == state.my_ch and state.my_ach is not None and not state.ch_failed:
        if state.my_ach == state.me:
            return state, []
        return replace(state, ch_failed=True), []

    return _join_least_cost(state, neighborhood_chs, lost=failed_target)


def rejoin_cluster(
    state: NodeState, neighborhood_chs: Iterable[tuple[NodeId, float]]
) -> tuple[NodeState, list[Announcement]]:
    """
    A member that drifted away from its cluster asks the cheapest CH in range
    to take it.

    Orphans use the same path to rejoin before the next epoch. A member without
    any CH in range becomes (or stays) an orphan.

    Raises:
        NotMemberError: if the node is not a member
    """
    if state.role != Role.MEMBER:
        raise NotMemberError(state.me)
    return _join_least_cost(state, neighborhood_chs, lost=state.my_ch)


def _join_least_cost(
    state: NodeState,
    neighborhood_chs: Iterable[tuple[NodeId, float]],
    lost: NodeId | None,
) -> tuple[NodeState, list[Announcement]]:
    excluded = {state.me, state.my_ch, state.my_ach}
    candidates = [(n, c) for n, c in neighborhood_chs if n not in excluded]
    if not candidates:
        protocol_log.debug(f"Node {state.me}: orphaned after losing {lost}")
        return (
            replace(
                state,
                my_ch=None,
                my_ach=None,
                is_ach=False,
                ach_roster=(),
                ch_failed=False,
                orphan=True,
            ),
            [],
        )

    ch = least_cost(candidates)
    state = replace(
        state,
        my_ch=ch,
        my_ach=None,
        is_ach=False,
        ach_roster=(),
        ch_failed=False,
        orphan=False,
    )
    join = Announcement(
        kind=AnnouncementKind.JOIN, sender=state.me, cost=state.cost, payload=ch
    )
    return state, [join]
