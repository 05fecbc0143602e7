"""Runtime control service: fixed-rate loop plus a remote line protocol.

One control-loop owner holds the session state (active assembly,
current command, hardware backend, optional embedded robot sim).
Clients talk over TCP (or an optional WebSocket bridge for browsers);
lines go through a serialized queue, so command application is atomic
at tick boundaries.  The first client to send an actuation verb holds
control until it disconnects; telemetry subscription is open to all.
Any error path or controller disconnect drives the session to Stop
within one tick.
"""

from __future__ import annotations

import asyncio
import math
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .actuation import (
    ActuationCommand,
    FieldPerAmpMatrix,
    Mode,
    ModeMismatchError,
    UnreachableFieldError,
    command_currents,
    field_per_amp_matrix,
    orient_command,
    stop_command,
    tweezer_command,
    zero_currents,
)
from .assemblies import BUILTIN_KINDS, load_assembly, make_builtin_assembly
from .coils import CoilAssembly, SingularityError, assembly_field, field_gradient
from .dynamics import Environment, RobotState, step as sim_step
from .hardware import DriveFrame, DriverLimits, SimulatedBackend, currents_to_drive
from .protocol import (
    ProtocolError,
    ProtocolMessage,
    format_telemetry,
    message_to_command,
    parse_command,
)

ACTUATION_VERBS = frozenset(
    {"ORIENT", "ROLL", "SPIN", "VIBRATE", "TWEEZER", "STOP", "SELECT_ASSEMBLY", "AXIS"}
)
STICK_DEADZONE = 0.05


@dataclass(frozen=True)
class SimSettings:
    """Embedded microrobot simulation attached to the control loop."""

    radius_m: float = 2.25e-6
    moment_am2: float = 1e-13
    moment_dir: tuple[float, float, float] = (1.0, 0.0, 0.0)
    start_m: tuple[float, float, float] = (0.0, 0.0, 0.0)
    mode: str = "surface"
    viscosity_pa_s: float = 1e-3
    temperature_k: float = 298.0
    noise: bool = False
    seed: int = 0
    with_gradient: bool = False


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 7600
    ws_port: int | None = None
    tick_rate: float = 100.0
    assembly: str = "helmholtz"
    assembly_path: str | None = None
    backend_model: str = "instantaneous"
    backend_tau_s: float = 0.01
    limits: DriverLimits = field(default_factory=DriverLimits)
    sim: SimSettings | None = None


def load_service_config(path) -> ServiceConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    limits_raw = raw.get("limits", {})
    limits = DriverLimits(
        supply_voltage=float(limits_raw.get("supply_voltage", 12.0)),
        per_channel_max=float(limits_raw.get("per_channel_max", 3.0)),
        total_max=float(limits_raw.get("total_max", 3.0)),
    )
    backend = raw.get("backend", {})
    sim_raw = raw.get("sim")
    sim = None
    if sim_raw and sim_raw.get("enabled", True):
        sim = SimSettings(
            radius_m=float(sim_raw.get("radius_m", 2.25e-6)),
            moment_am2=float(sim_raw.get("moment_am2", 1e-13)),
            moment_dir=tuple(sim_raw.get("moment_dir", (1.0, 0.0, 0.0))),
            start_m=tuple(sim_raw.get("start_m", (0.0, 0.0, 0.0))),
            mode=sim_raw.get("mode", "surface"),
            viscosity_pa_s=float(sim_raw.get("viscosity_pa_s", 1e-3)),
            temperature_k=float(sim_raw.get("temperature_k", 298.0)),
            noise=bool(sim_raw.get("noise", False)),
            seed=int(sim_raw.get("seed", 0)),
            with_gradient=bool(sim_raw.get("with_gradient", False)),
        )
    return ServiceConfig(
        host=raw.get("host", "127.0.0.1"),
        port=int(raw.get("port", 7600)),
        ws_port=int(raw["ws_port"]) if raw.get("ws_port") is not None else None,
        tick_rate=float(raw.get("tick_rate", 100.0)),
        assembly=raw.get("assembly", "helmholtz"),
        assembly_path=raw.get("assembly_path"),
        backend_model=backend.get("model", "instantaneous"),
        backend_tau_s=float(backend.get("tau_s", 0.01)),
        limits=limits,
        sim=sim,
    )


class EmbeddedSim:
    """Robot simulation stepped once per control tick at the achieved currents."""

    def __init__(self, settings: SimSettings, assembly: CoilAssembly):
        self.settings = settings
        self.env = Environment(
            viscosity=settings.viscosity_pa_s,
            temperature=settings.temperature_k,
            noise_enabled=settings.noise,
            seed=settings.seed,
        )
        self.assembly = assembly
        self.reset(assembly)

    def reset(self, assembly: CoilAssembly) -> None:
        self.assembly = assembly
        s = self.settings
        mdir = np.asarray(s.moment_dir, dtype=np.float64)
        mdir = mdir / np.linalg.norm(mdir)
        self.state = RobotState(
            position=np.asarray(s.start_m, dtype=np.float64),
            moment=s.moment_am2 * mdir,
            radius=s.radius_m,
            mode=s.mode,
        )
        self.rng = np.random.default_rng(s.seed)

    def advance(self, currents: np.ndarray, dt: float) -> None:
        # Currents are held for the whole tick (zero-order hold), so the
        # field is evaluated once and the fast alignment dynamics are
        # substepped under it to stay inside the integrator's guard.
        b = assembly_field(self.assembly, currents, self.state.position)
        if self.settings.with_gradient:
            jac = field_gradient(self.assembly, currents, self.state.position)
        else:
            jac = np.zeros((3, 3))
        drag = 8.0 * math.pi * self.env.viscosity * self.state.radius**3
        # worst-case rate |m||B|/drag: the instantaneous torque can grow
        # mid-tick when the moment starts near anti-alignment
        spin = np.linalg.norm(self.state.moment) * np.linalg.norm(b) / drag
        n_sub = min(max(1, math.ceil(spin * dt / 0.2)), 1000)
        for _ in range(n_sub):
            self.state = sim_step(self.state, self.env, b, jac, dt / n_sub, rng=self.rng)

    def telemetry(self) -> tuple[np.ndarray, np.ndarray]:
        position_um = self.state.position * 1e6
        mdir = self.state.moment / np.linalg.norm(self.state.moment)
        return position_um, mdir


@dataclass(frozen=True)
class SessionState:
    """State owned by the control loop; Stop is the initial command."""

    assembly: CoilAssembly
    m: FieldPerAmpMatrix
    command: ActuationCommand
    tick_rate: float
    tick_index: int = 0
    error_detail: str | None = None


def _is_tweezer(assembly: CoilAssembly) -> bool:
    return not assembly.pairs and bool(assembly.poles())


def _axis_update(state: SessionState, msg: ProtocolMessage) -> SessionState:
    """Gamepad sticks: left steers Orient/Tweezer, right steers roll angle."""
    args = msg.args
    cmd = state.command
    lx, ly = args.get("LX", 0.0), args.get("LY", 0.0)
    rx, ry = args.get("RX", 0.0), args.get("RY", 0.0)
    left = np.hypot(lx, ly)
    right = np.hypot(rx, ry)
    if left > STICK_DEADZONE:
        direction = (lx / left, ly / left, 0.0)
        fraction = min(left, 1.0)
        if _is_tweezer(state.assembly):
            cmd = tweezer_command(direction, strength_fraction=fraction)
        elif cmd.mode in (Mode.STOP, Mode.ORIENT):
            cmd = orient_command(direction, strength_fraction=fraction)
    if right > STICK_DEADZONE and cmd.mode in (Mode.ROLL, Mode.SPIN):
        cmd = replace(cmd, polar_alpha=math.atan2(ry, rx))
    return replace(state, command=cmd)


def apply_message(
    state: SessionState,
    msg: ProtocolMessage,
    registry: dict[str, CoilAssembly] | None = None,
) -> tuple[SessionState, str]:
    """Apply one parsed message; the new command takes effect next tick.

    Returns the updated state and the reply line.  The state is never
    partially updated: on any error the input state is returned intact.
    """
    if msg.verb == "PING":
        return state, "OK PONG"
    if msg.verb == "SUBSCRIBE":
        limits = ",".join(repr(float(v)) for v in state.assembly.channel_limits)
        return state, f"OK TLM assembly={state.assembly.name} limits={limits}"
    if msg.verb == "SELECT_ASSEMBLY":
        name = msg.args.get("NAME", "")
        if registry is None or name not in registry:
            return state, "ERR bad-arg NAME"
        assembly = registry[name]
        new = SessionState(
            assembly=assembly,
            m=field_per_amp_matrix(assembly),
            command=stop_command(),
            tick_rate=state.tick_rate,
            tick_index=state.tick_index,
        )
        return new, "OK"
    if msg.verb == "AXIS":
        return _axis_update(state, msg), "OK"

    if msg.verb == "TWEEZER" and not _is_tweezer(state.assembly):
        return state, "ERR mode-mismatch tweezer assembly not selected"
    if msg.verb in ("ORIENT", "ROLL", "SPIN", "VIBRATE") and not state.assembly.pairs:
        return state, "ERR mode-mismatch paired assembly required"
    if msg.verb == "VIBRATE":
        axis = msg.args.get("AXIS", "y")
        unit = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}[axis]
        if not any(abs(float(np.dot(unit, p.axis))) > 1 - 1e-9 for p in state.assembly.pairs):
            return state, "ERR bad-arg AXIS"

    command = message_to_command(msg)
    if command is None:
        return state, f"ERR unknown-verb {msg.verb}"
    return replace(state, command=command, error_detail=None), "OK"


@dataclass(frozen=True)
class TickResult:
    currents: np.ndarray
    frame: DriveFrame
    telemetry: str


class ControlLoop:
    """Owns the session; all mutation flows through submit() and tick()."""

    def __init__(self, config: ServiceConfig, registry: dict[str, CoilAssembly] | None = None):
        self.config = config
        if registry is None:
            registry = {kind: make_builtin_assembly(kind) for kind in BUILTIN_KINDS}
            if config.assembly_path:
                extra = load_assembly(config.assembly_path)
                registry[extra.name] = extra
        self.registry = registry
        if config.assembly not in registry:
            raise ValueError(f"assembly {config.assembly!r} not in registry")
        assembly = registry[config.assembly]
        self.state = SessionState(
            assembly=assembly,
            m=field_per_amp_matrix(assembly),
            command=stop_command(),
            tick_rate=config.tick_rate,
        )
        self.controller: str | None = None
        self.sim = EmbeddedSim(config.sim, assembly) if config.sim else None
        self._make_backend()

    def _make_backend(self) -> None:
        self.backend = SimulatedBackend(
            n_channels=self.state.assembly.channel_count,
            limits=self.config.limits,
            model=self.config.backend_model,
            tau=self.config.backend_tau_s,
        )

    def submit(self, line: str, client: str = "local") -> str:
        """Handle one command line; always returns exactly one reply."""
        try:
            msg = parse_command(line)
        except ProtocolError as err:
            return err.reply()
        if msg.verb in ACTUATION_VERBS:
            if self.controller is None:
                self.controller = client
            elif self.controller != client:
                return "ERR busy another client holds control"
        previous_assembly = self.state.assembly
        self.state, reply = apply_message(self.state, msg, self.registry)
        if self.state.assembly is not previous_assembly:
            self._make_backend()
            if self.sim is not None:
                self.sim.reset(self.state.assembly)
        return reply

    def release_client(self, client: str) -> None:
        """Fail-safe: a vanishing controller forces Stop at the next tick."""
        if self.controller == client:
            self.controller = None
            self.state = replace(self.state, command=stop_command())

    def tick(self) -> TickResult:
        """One control period: command -> currents -> drive -> telemetry."""
        state = self.state
        t = state.tick_index / state.tick_rate
        dt = 1.0 / state.tick_rate
        mode_label = state.command.mode.value
        try:
            currents = command_currents(state.assembly, state.m, state.command, t)
        except (ModeMismatchError, UnreachableFieldError, SingularityError, ValueError) as err:
            # demote to Stop; the loop never halts on a command error
            self.state = state = replace(state, command=stop_command(), error_detail=str(err))
            currents = zero_currents(state.assembly.channel_count)
            mode_label = "ERR"
        frame = currents_to_drive(currents, self.config.limits)
        self.backend.apply(frame.signals, dt=dt)
        achieved = self.backend.read()
        position_um = moment_dir = None
        if self.sim is not None:
            self.sim.advance(achieved, dt)
            position_um, moment_dir = self.sim.telemetry()
        field_mt = (state.m.matrix @ achieved) * 1e3
        telemetry = format_telemetry(t, mode_label, achieved, field_mt, position_um, moment_dir)
        self.state = replace(self.state, tick_index=state.tick_index + 1)
        return TickResult(currents=achieved, frame=frame, telemetry=telemetry)


# ----------------------------------------------------------------------
# Network front end
# ----------------------------------------------------------------------


class _Client:
    _counter = 0

    def __init__(self, kind: str):
        _Client._counter += 1
        self.name = f"{kind}-{_Client._counter}"
        self.outbox: asyncio.Queue[str | None] = asyncio.Queue()
        self.divisor: int | None = None

    def send(self, line: str) -> None:
        self.outbox.put_nowait(line)


class ControlServer:
    """TCP (and optional WebSocket) front end around a ControlLoop."""

    def __init__(self, config: ServiceConfig, registry=None):
        self.config = config
        self.loop = ControlLoop(config, registry)
        self.clients: set[_Client] = set()
        self._servers: list = []
        self.started = asyncio.Event()
        self.bound_port: int | None = None

    def _handle_line(self, client: _Client, line: str) -> None:
        reply = self.loop.submit(line, client=client.name)
        if reply.startswith("OK"):
            try:
                msg = parse_command(line)
            except ProtocolError:
                msg = None
            if msg is not None and msg.verb == "SUBSCRIBE":
                client.divisor = int(msg.args.get("DIV", 1))
        client.send(reply)

    def _drop(self, client: _Client) -> None:
        self.clients.discard(client)
        self.loop.release_client(client.name)
        client.outbox.put_nowait(None)

    async def _ticker(self) -> None:
        period = 1.0 / self.config.tick_rate
        loop = asyncio.get_running_loop()
        start = loop.time()
        k = 0
        while True:
            result = self.loop.tick()
            tick_index = self.loop.state.tick_index
            for client in list(self.clients):
                if client.divisor and tick_index % client.divisor == 0:
                    client.send(result.telemetry)
            k += 1
            delay = start + k * period - loop.time()
            await asyncio.sleep(max(0.0, delay))

    async def _tcp_session(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        client = _Client("tcp")
        self.clients.add(client)

        async def sender():
            try:
                while (line := await client.outbox.get()) is not None:
                    writer.write(line.encode("utf-8") + b"\n")
                    await writer.drain()
            except (ConnectionError, asyncio.CancelledError):
                pass

        send_task = asyncio.create_task(sender())
        try:
            while data := await reader.readline():
                self._handle_line(client, data.decode("utf-8", errors="replace").rstrip("\r\n"))
        except ConnectionError:
            pass
        finally:
            self._drop(client)
            send_task.cancel()
            writer.close()

    async def _ws_session(self, websocket) -> None:
        client = _Client("ws")
        self.clients.add(client)

        async def sender():
            try:
                while (line := await client.outbox.get()) is not None:
                    await websocket.send(line)
            except Exception:
                pass

        send_task = asyncio.create_task(sender())
        try:
            async for message in websocket:
                if isinstance(message, bytes):
                    message = message.decode("utf-8", errors="replace")
                for line in message.splitlines():
                    self._handle_line(client, line)
        except Exception:
            pass
        finally:
            self._drop(client)
            send_task.cancel()

    async def run(self) -> None:
        server = await asyncio.start_server(self._tcp_session, self.config.host, self.config.port)
        self._servers.append(server)
        self.bound_port = server.sockets[0].getsockname()[1]
        if self.config.ws_port is not None:
            try:
                import websockets
            except ImportError as err:
                raise RuntimeError(
                    "ws_port configured but the 'websockets' package is not installed"
                ) from err
            ws_server = await websockets.serve(
                self._ws_session, self.config.host, self.config.ws_port
            )
            self._servers.append(ws_server)
        self.started.set()
        await self._ticker()


def serve(config: ServiceConfig, registry=None) -> None:
    """Run the service until interrupted."""
    asyncio.run(ControlServer(config, registry).run())
