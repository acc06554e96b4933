"""Cyclic scan execution of guarded-transition controllers.

A scan advances timers, latches the input image, then fires enabled edges
to fixpoint: the first enabled edge in declaration order is taken, where
event-labeled edges require every automaton using the event to have an
enabled edge and those fire synchronously.  A scan that keeps firing past
the iteration cap is reported as a livelock naming the repeating edge.
"""

from __future__ import annotations

from typing import Callable, Dict, Iterator, List, Mapping, Optional, Set, Tuple

from .model import (
    Assignment,
    BinOp,
    Edge,
    Expr,
    GtsSpec,
    GtsState,
    InputMissing,
    Lit,
    Livelock,
    Not,
    Num,
    Ref,
    ScanReport,
)

LIVELOCK_CAP = 10_000


def initial_state(spec: GtsSpec) -> GtsState:
    state = GtsState()
    for aut in spec.automata:
        state.locations[aut.name] = aut.initial_location
        for name, init in aut.disc_bools.items():
            state.bools[(aut.name, name)] = init
        for name in aut.timers:
            state.timers[(aut.name, name)] = 0.0
    return state


def _eval(expr: Expr, state: GtsState, inputs: Mapping[str, bool]):
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Ref):
        kind, owner, name = expr.binding  # type: ignore[misc]
        if kind == "disc":
            return state.bools[(owner, name)]
        if kind == "input":
            return inputs[name]
        if kind == "timer":
            return state.timers[(owner, name)]
        return state.locations[owner] == name
    if isinstance(expr, Not):
        return not _eval(expr.operand, state, inputs)
    if isinstance(expr, BinOp):
        left = _eval(expr.left, state, inputs)
        if expr.op == "and":
            return bool(left) and bool(_eval(expr.right, state, inputs))
        if expr.op == "or":
            return bool(left) or bool(_eval(expr.right, state, inputs))
        right = _eval(expr.right, state, inputs)
        if expr.op == "=":
            return left == right
        if expr.op == "!=":
            return left != right
        return left >= right  # ">="
    raise TypeError(f"cannot evaluate {expr!r}")


def _enabled(edge: Edge, state: GtsState, inputs: Mapping[str, bool]) -> bool:
    if state.locations[edge.owner] != edge.location:
        return False
    if edge.guard is None:
        return True
    return bool(_eval(edge.guard, state, inputs))


def _fire(edges: List[Edge], state: GtsState, inputs: Mapping[str, bool]) -> None:
    # Update expressions read the pre-fire state; assignments and gotos
    # then apply atomically (simultaneous semantics).
    staged: List[Tuple[Assignment, object]] = []
    for edge in edges:
        for update in edge.updates:
            staged.append((update, _eval(update.expr, state, inputs)))
    for update, value in staged:
        kind, owner, name = update.target
        if kind == "disc":
            state.bools[(owner, name)] = bool(value)
        else:
            state.timers[(owner, name)] = float(value)
    for edge in edges:
        if edge.goto is not None:
            state.locations[edge.owner] = edge.goto


def scan(
    spec: GtsSpec,
    state: GtsState,
    inputs: Mapping[str, bool],
    dt: float,
    cap: int = LIVELOCK_CAP,
    output_filter: Optional[Set[str]] = None,
) -> Tuple[GtsState, Dict[str, bool], ScanReport]:
    """One PLC scan; returns the new state, output image and a report.

    The output image holds every discrete Boolean, restricted to
    ``output_filter`` keys when given (the actuator-matched subset).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    missing = [n for n in spec.declared_input_names() if n not in inputs]
    if missing:
        raise InputMissing(f"no value for input Boolean(s): {', '.join(missing)}")

    new_state = state.copy()
    new_state.scan_count += 1
    for key in new_state.timers:
        new_state.timers[key] += dt

    before = dict(new_state.bools)
    report = ScanReport()
    all_edges = spec.all_edges
    participants_cache: Dict[Tuple[str, str], List[str]] = {}
    iterations = 0
    while True:
        fired = None
        for edge in all_edges:
            if edge.event is None:
                if _enabled(edge, new_state, inputs):
                    fired = [edge]
                    break
            else:
                if edge.event not in participants_cache:
                    participants_cache[edge.event] = spec.event_participants(edge.event)
                sync: List[Edge] = []
                ok = True
                for aut_name in participants_cache[edge.event]:
                    aut = spec.automaton(aut_name)
                    chosen = None
                    for candidate in aut.edges:
                        if candidate.event == edge.event and _enabled(
                            candidate, new_state, inputs
                        ):
                            chosen = candidate
                            break
                    if chosen is None:
                        ok = False
                        break
                    sync.append(chosen)
                if ok:
                    fired = sync
                    break
        if fired is None:
            break
        _fire(fired, new_state, inputs)
        report.edges_fired.extend(e.label for e in fired)
        iterations += 1
        if iterations >= cap:
            report.livelock = Livelock(edge=fired[0].label, iterations=cap)
            break

    outputs: Dict[str, bool] = {}
    for aut in spec.automata:
        for name in aut.disc_bools:
            key = spec.output_key(aut.name, name)
            if output_filter is not None and key not in output_filter:
                continue
            value = new_state.bools[(aut.name, name)]
            outputs[key] = value
            if before[(aut.name, name)] != value:
                report.outputs_changed.append((key, value))
    return new_state, outputs, report


InputSource = Callable[[int, float], Mapping[str, bool]]


def run_cyclic(
    spec: GtsSpec,
    input_source: InputSource,
    cycle_period: float = 0.01,
    cycles: Optional[int] = None,
    cap: int = LIVELOCK_CAP,
    output_filter: Optional[Set[str]] = None,
    state: Optional[GtsState] = None,
) -> Iterator[ScanReport]:
    """Scan once per cycle with dt=cycle_period, publishing changes only.

    ``input_source(cycle_index, sim_time)`` supplies the latched input
    image.  The stream ends after ``cycles`` scans or at the first
    livelock report.
    """
    if cycle_period <= 0:
        raise ValueError("cycle_period must be positive")
    if state is None:
        state = initial_state(spec)
    cycle = 0
    while cycles is None or cycle < cycles:
        cycle += 1
        sim_time = cycle * cycle_period
        inputs = input_source(cycle, sim_time)
        state, _, report = scan(
            spec, state, inputs, cycle_period, cap=cap, output_filter=output_filter
        )
        yield report
        if report.livelock is not None:
            return
