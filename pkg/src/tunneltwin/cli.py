"""Command line interface.

    tunneltwin run     --world w.json --spec c.gts --scenario s.scn
                       [--plc host:port] [--duration S] [--realtime]
                       [--trace out.csv] [--ws-port N] [--cycle-ms 10]
    tunneltwin codegen --inputs inputs.gvl.txt --state state.struct.txt
                       --out policy.txt [--with-gui-buttons]
    tunneltwin plc     --spec c.gts --policy policy.txt --listen PORT
                       [--cycle-ms 10]
    tunneltwin replay  --trace out.csv <run arguments>

Exit codes for ``run``: 0 all expectations held, 1 an expectation failed,
2 the controller livelocked, 3 configuration or policy error.

``TUNNELTWIN_SEED`` overrides the configured seed, ``TUNNELTWIN_PORT``
the default PLC port.  File arguments accept ``builtin:<name>`` for
bundled assets (e.g. ``builtin:single_barrier.world.json``).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional

from . import harness
from .config import load_world_config, read_text
from .gateway import DEFAULT_PORT, PlcServer, PolicyMismatch
from .gts import GtsError, parse_gts
from .plant.world import WorldConfigError
from .scenario import ScenarioError, ScenarioScript, parse_scenario
from .varlist import (
    FileKind,
    RecordKind,
    classify,
    emit_policy,
    generate_manifest,
    parse_policy,
    parse_varlist,
    source_digest,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tunneltwin")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario against the twin")
    _add_run_args(run_p)

    gen = sub.add_parser("codegen", help="generate the signal policy from PLC variable lists")
    gen.add_argument("--inputs", required=True, help="INPUTS global-variable list file")
    gen.add_argument("--state", required=True, help="STATE structure file")
    gen.add_argument("--out", required=True, help="policy document to write")
    gen.add_argument("--with-gui-buttons", action="store_true",
                     help="also generate operator button / GUI signals")

    plc = sub.add_parser("plc", help="serve a controller over the wire protocol")
    plc.add_argument("--spec", required=True, help="controller .gts file")
    plc.add_argument("--policy", required=True, help="policy document")
    plc.add_argument("--listen", type=int, default=None, help="TCP port")
    plc.add_argument("--cycle-ms", type=float, default=10.0)

    replay = sub.add_parser("replay", help="re-run and compare against a recorded trace")
    replay.add_argument("--trace", required=True, help="golden trace CSV")
    _add_run_args(replay)
    return parser


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--world", default=None, help="world config JSON")
    p.add_argument("--spec", default=None, help="controller .gts file (in-process PLC)")
    p.add_argument("--plc", default=None, metavar="HOST:PORT",
                   help="connect to a remote PLC instead of --spec")
    p.add_argument("--scenario", default=None, help="scenario .scn file")
    p.add_argument("--duration", type=float, default=None, help="sim seconds")
    p.add_argument("--cycle-ms", type=float, default=10.0)
    p.add_argument("--realtime", action="store_true",
                   help="throttle to wall clock for interactive use")
    p.add_argument("--ws-port", type=int, default=None,
                   help="serve the operator WebSocket API")
    if p.prog.endswith("run"):
        p.add_argument("--trace", default=None, help="write the signal trace CSV")


def _prepare_run(args) -> harness.RunResult:
    config = load_world_config(args.world)
    seed_env = os.environ.get("TUNNELTWIN_SEED")
    if seed_env is not None:
        config["seed"] = int(seed_env)
    scenario = ScenarioScript()
    if args.scenario:
        scenario = parse_scenario(read_text(args.scenario))
    spec_text = read_text(args.spec) if args.spec else None
    plc_address = None
    if args.plc:
        host, _, port = args.plc.partition(":")
        plc_address = (host or "127.0.0.1",
                       int(port or os.environ.get("TUNNELTWIN_PORT", DEFAULT_PORT)))

    if args.ws_port is None:
        return harness.run(
            world_config=config, scenario=scenario, spec_text=spec_text,
            plc_address=plc_address, cycle_ms=args.cycle_ms,
            duration=args.duration, realtime=args.realtime,
        )

    from .wsapi import WsOperatorServer

    try:
        session = harness.Session(
            world_config=config, scenario=scenario, spec_text=spec_text,
            plc_address=plc_address, cycle_ms=args.cycle_ms, duration=args.duration,
        )
    except Exception as exc:
        return harness.RunResult(error=str(exc), exit_code=harness.EXIT_CONFIG)
    server = WsOperatorServer(session, port=args.ws_port)
    print(f"operator API on ws://127.0.0.1:{server.port}", flush=True)
    try:
        return session.run(realtime=args.realtime, on_tick=server.pump)
    finally:
        server.close()
        session.close()


def _report(result: harness.RunResult) -> None:
    if result.error:
        print(f"error: {result.error}", file=sys.stderr)
    for verdict in result.verdicts:
        expect = verdict.expect
        status = "pass" if verdict.passed else "FAIL"
        print(f"expect {expect.signal} == {int(expect.value)}: {status} "
              f"at t={verdict.at:.6f}")
    if result.livelock:
        print(f"livelock: {result.livelock.edge} after "
              f"{result.livelock.iterations} iterations", file=sys.stderr)


def cmd_run(args) -> int:
    result = _prepare_run(args)
    _report(result)
    if getattr(args, "trace", None) and result.world is not None:
        Path(args.trace).write_text(result.trace_csv(), encoding="utf-8")
        print(f"trace written to {args.trace} ({len(result.trace)} rows)")
    return result.exit_code


def cmd_codegen(args) -> int:
    state_text = read_text(args.state)
    inputs_text = read_text(args.inputs)
    state = parse_varlist(state_text, FileKind.STATE)
    inputs = parse_varlist(inputs_text, FileKind.INPUTS)
    records = state.records + inputs.records
    digest = source_digest(state_text, inputs_text)
    manifest = generate_manifest(records, digest,
                                 include_gui_buttons=args.with_gui_buttons)
    policy_text = emit_policy(manifest)
    Path(args.out).write_text(policy_text, encoding="utf-8")
    Path(args.out + ".src.digest").write_text(digest + "\n", encoding="utf-8")
    skipped = len(state.skipped_lines) + len(inputs.skipped_lines)
    dropped = sum(1 for r in records if classify(r) is RecordKind.SKIP)
    counts = {
        kind.value: sum(1 for r in records if classify(r) is kind)
        for kind in (RecordKind.ACTUATOR, RecordKind.SENSOR, RecordKind.BUTTON)
    }
    print(f"policy written to {args.out}: {len(manifest.entries)} signals "
          f"({counts['actuator']} actuators, {counts['sensor']} sensors, "
          f"{counts['button']} buttons classified), "
          f"{dropped} lines skipped by the filter rules, "
          f"{skipped} header/blank lines")
    return 0


def cmd_plc(args) -> int:
    spec = parse_gts(read_text(args.spec))
    policy = parse_policy(read_text(args.policy))
    port = args.listen
    if port is None:
        port = int(os.environ.get("TUNNELTWIN_PORT", DEFAULT_PORT))
    server = PlcServer(spec, policy, port=port, cycle_ms=args.cycle_ms)
    print(f"soft PLC listening on :{server.port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    if server.livelock is not None:
        print(f"livelock: {server.livelock.edge}", file=sys.stderr)
        return harness.EXIT_LIVELOCK
    return 0


def cmd_replay(args) -> int:
    golden = Path(args.trace).read_text(encoding="utf-8")
    result = _prepare_run(args)
    _report(result)
    if result.world is None:
        return result.exit_code
    fresh = result.trace_csv()
    if fresh == golden:
        print("replay matches the recorded trace")
        return result.exit_code
    golden_lines = golden.splitlines()
    fresh_lines = fresh.splitlines()
    for idx, (a, b) in enumerate(zip(golden_lines, fresh_lines), start=1):
        if a != b:
            print(f"divergence at line {idx}: recorded {a!r}, replay {b!r}",
                  file=sys.stderr)
            return 1
    print(f"divergence: row counts differ ({len(golden_lines)} recorded, "
          f"{len(fresh_lines)} replayed)", file=sys.stderr)
    return 1


def main(argv: Optional[list] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "codegen":
            return cmd_codegen(args)
        if args.command == "plc":
            return cmd_plc(args)
        return cmd_replay(args)
    except (WorldConfigError, GtsError, ScenarioError, PolicyMismatch,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return harness.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
