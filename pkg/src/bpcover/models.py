"""Small b-programs used as fixtures, demos and CLI targets."""

from __future__ import annotations

from .engine import BProgram, BThreadSpec, interrupt, requester, scripted, sync
from .events import ev

A, B = ev("a"), ev("b")


def alternation() -> BProgram:
    """Two producers of three ``a`` and three ``b``; a third thread forces alternation."""
    t1 = requester("T1", A, A, A)
    t2 = requester("T2", B, B, B)
    t3 = scripted("T3", [sync(wait=A, block=B), sync(wait=B, block=A)] * 3)
    return BProgram([t1, t2, t3])


def mutual_block() -> BProgram:
    """Each thread requests what the other blocks: deadlock before the first event."""
    return BProgram([requester("T1", A, block=B), requester("T2", B, block=A)])


UP, DOWN, OPEN, CLOSE, HALT = (ev(n) for n in ("up", "down", "open", "close", "halt"))


def elevator(floors: int = 4) -> BProgram:
    """Elevator over ``floors`` floors; the door must be closed to move.

    ``halt`` parks the elevator and is only possible at floor 0 with the door
    closed; it interrupts every other thread, ending the run.
    """
    top = floors - 1

    def car(floor, cause):
        if cause == UP:
            floor += 1
        elif cause == DOWN:
            floor -= 1
        moves = ([UP] if floor < top else []) + ([DOWN] if floor > 0 else [])
        return sync(request=moves, block=HALT if floor > 0 else None), floor

    def door(state, cause):
        if cause is not None:
            state = "open" if cause == OPEN else "closed"
        if state == "closed":
            return sync(request=OPEN), state
        return sync(request=CLOSE, block=HALT), state

    safety = scripted("door-safety", [sync(wait=OPEN), sync(wait=CLOSE, block=[UP, DOWN])],
                      repeat=True)
    return BProgram([
        interrupt(BThreadSpec("car", car, 0), HALT),
        interrupt(BThreadSpec("door", door, "closed"), HALT),
        interrupt(safety, HALT),
        requester("parking", HALT),
    ])


def elevator_automaton(floors: int = 4):
    """The elevator written directly as an automaton: ``(states, initial, accepting, delta)``."""
    states = [(f, d) for f in range(floors) for d in ("closed", "open")] + ["halted"]
    delta = {}
    for f in range(floors):
        delta[(f, "closed")] = {"open": (f, "open")}
        if f < floors - 1:
            delta[(f, "closed")]["up"] = (f + 1, "closed")
        if f > 0:
            delta[(f, "closed")]["down"] = (f - 1, "closed")
        delta[(f, "open")] = {"close": (f, "closed")}
    delta[(0, "closed")]["halt"] = "halted"
    delta["halted"] = {}
    return states, (0, "closed"), {"halted"}, delta


def philosophers() -> BProgram:
    """Two philosophers taking two forks in opposite order (deadlock-prone)."""

    def fork(label: str, first: str, second: str):
        take1, take2 = ev(f"{first}{label}"), ev(f"{second}{label}")
        rel1, rel2 = ev(f"{first}r"), ev(f"{second}r")

        def step(state, cause):
            if cause == take1:
                state = first
            elif cause == take2:
                state = second
            elif cause is not None:
                state = "free"
            if state == "free":
                return sync(wait=[take1, take2]), state
            if state == first:
                return sync(wait=rel1, block=take2), state
            return sync(wait=rel2, block=take1), state

        return BThreadSpec(f"fork-{label}", step, "free")

    return BProgram([
        requester("p1", ev("p1a"), ev("p1b"), ev("p1r")),
        requester("p2", ev("p2b"), ev("p2a"), ev("p2r")),
        fork("a", "p1", "p2"),
        fork("b", "p1", "p2"),
    ])
