"""Command line front end: serve, simulate, fieldmap."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .actuation import field_per_amp_matrix, command_currents
from .assemblies import BUILTIN_KINDS, load_assembly, make_builtin_assembly
from .coils import field_map
from .dynamics import (
    AssemblyFieldSource,
    Environment,
    RobotState,
    SimConfig,
    export_trajectory,
    run,
)
from .protocol import ProtocolError, message_to_command, parse_command
from .service import ServiceConfig, SimSettings, load_service_config, serve


def _resolve_assembly(name: str):
    if name in BUILTIN_KINDS:
        return make_builtin_assembly(name)
    return load_assembly(name)


def _cmd_serve(args) -> int:
    if args.config:
        config = load_service_config(args.config)
    else:
        config = ServiceConfig(
            host=args.host,
            port=args.port,
            ws_port=args.ws_port,
            tick_rate=args.tick_rate,
            assembly=args.assembly if args.assembly in BUILTIN_KINDS else "helmholtz",
            assembly_path=None if args.assembly in BUILTIN_KINDS else args.assembly,
            sim=SimSettings() if args.sim else None,
        )
        if config.assembly_path:
            config = ServiceConfig(
                **{**config.__dict__, "assembly": load_assembly(config.assembly_path).name}
            )
    print(f"serving on {config.host}:{config.port} (tick rate {config.tick_rate} Hz)")
    if config.ws_port is not None:
        print(f"browser bridge on ws://{config.host}:{config.ws_port}")
    try:
        serve(config)
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_simulate(args) -> int:
    assembly = _resolve_assembly(args.assembly)
    try:
        msg = parse_command(args.command)
    except ProtocolError as err:
        print(err.reply(), file=sys.stderr)
        return 2
    command = message_to_command(msg)
    if command is None:
        print(f"ERR bad-arg not an actuation command: {args.command!r}", file=sys.stderr)
        return 2
    m = field_per_amp_matrix(assembly)

    def currents_of_t(t: float) -> np.ndarray:
        return command_currents(assembly, m, command, t).values

    source = AssemblyFieldSource(
        assembly, currents_of_t, with_gradient=args.gradient
    )
    moment_dir = np.asarray([float(v) for v in args.moment_dir.split(",")])
    moment_dir /= np.linalg.norm(moment_dir)
    initial = RobotState(
        position=[float(v) for v in args.start.split(",")],
        moment=args.moment * moment_dir,
        radius=args.radius,
        mode=args.mode,
    )
    env = Environment(viscosity=args.viscosity, noise_enabled=args.noise, seed=args.seed)
    config = SimConfig(
        dt=args.dt, duration=args.duration, field_source=source, record_stride=args.stride
    )
    trajectory = run(config, initial, env)
    export_trajectory(args.out, trajectory, source)
    final = trajectory[-1]
    print(f"wrote {len(trajectory)} samples to {args.out}")
    print(f"final position (um): {np.array2string(final.position * 1e6, precision=3)}")
    return 0


def _cmd_fieldmap(args) -> int:
    assembly = _resolve_assembly(args.assembly)
    currents = np.asarray([float(v) for v in args.currents.split(",")])
    fmap = field_map(assembly, currents, grid_extent=args.extent, grid_n=args.n)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("x_m,y_m,z_m,bx_t,by_t,bz_t\n")
        for point, b in zip(fmap.points, fmap.samples):
            fh.write(",".join(repr(float(v)) for v in (*point, *b)) + "\n")
    print(f"wrote {len(fmap.points)} samples to {args.out}")
    print(f"uniformity over the grid: {fmap.uniformity:.4%}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magsteer",
        description="Multi-coil magnetic microrobot control twin",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_serve = sub.add_parser("serve", help="run the remote control service")
    p_serve.add_argument("--config", help="service config YAML (overrides other flags)")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=7600)
    p_serve.add_argument("--ws-port", type=int, default=None, help="browser WebSocket bridge port")
    p_serve.add_argument("--tick-rate", type=float, default=100.0)
    p_serve.add_argument("--assembly", default="helmholtz", help="builtin name or config path")
    p_serve.add_argument("--sim", action="store_true", help="attach an embedded robot sim")
    p_serve.set_defaults(func=_cmd_serve)

    p_sim = sub.add_parser("simulate", help="headless robot run exporting a trajectory file")
    p_sim.add_argument("--assembly", default="helmholtz", help="builtin name or config path")
    p_sim.add_argument(
        "--command",
        default="ROLL A=2 ALPHA=0 F=2",
        help="actuation line driving the run (protocol grammar)",
    )
    p_sim.add_argument("--duration", type=float, default=2.0)
    p_sim.add_argument("--dt", type=float, default=1e-4)
    p_sim.add_argument("--stride", type=int, default=10)
    p_sim.add_argument("--radius", type=float, default=2.25e-6, help="robot radius (m)")
    p_sim.add_argument("--moment", type=float, default=1e-13, help="|moment| (A*m^2)")
    p_sim.add_argument("--moment-dir", default="1,0,0")
    p_sim.add_argument("--start", default="0,0,0", help="start position x,y,z (m)")
    p_sim.add_argument("--mode", choices=("bulk", "surface"), default="surface")
    p_sim.add_argument("--viscosity", type=float, default=1e-3)
    p_sim.add_argument("--noise", action="store_true")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--gradient", action="store_true", help="include gradient forces")
    p_sim.add_argument("--out", default="trajectory.csv")
    p_sim.set_defaults(func=_cmd_simulate)

    p_map = sub.add_parser("fieldmap", help="sample the assembly field on a grid")
    p_map.add_argument("--assembly", default="helmholtz", help="builtin name or config path")
    p_map.add_argument("--currents", default="1,-1,0,0,0,0", help="per-channel amperes")
    p_map.add_argument("--extent", type=float, default=0.01, help="cube side length (m)")
    p_map.add_argument("--n", type=int, default=5, help="grid points per axis")
    p_map.add_argument("--out", default="fieldmap.csv")
    p_map.set_defaults(func=_cmd_fieldmap)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
