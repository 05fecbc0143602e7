"""Line-oriented text protocol for remote operation.

Commands are single UTF-8 lines, ``VERB KEY=value ...``; replies are
``OK[ payload]`` or ``ERR <code>[ detail]``; telemetry lines start with
``TLM``.  Operator-facing units on the wire are degrees, millitesla and
hertz; conversion to radians/tesla happens here and only here.

Grammar (defaults in parentheses; omitted keys take the default):

    ORIENT  THETA=<deg> PHI=<deg 0> S=<0..1 (1)>
    ROLL    A=<mT (1)> ALPHA=<deg 0> GAMMA=<deg 90> F=<Hz (1)>
    SPIN    A=<mT (1)> ALPHA=<deg 0> GAMMA=<deg 0> F=<Hz (1)>
    VIBRATE AXIS=<x|y|z (y)> F=<Hz (1)> S=<0..1 (1)>
    TWEEZER THETA=<deg 0> PHI=<deg 0> S=<0..1 (1)>
    STOP
    SELECT_ASSEMBLY NAME=<identifier>
    AXIS    LX=<-1..1> LY=<-1..1> RX=<-1..1> RY=<-1..1>
    SUBSCRIBE DIV=<int 1..1000 (1)>
    PING
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .actuation import (
    ActuationCommand,
    orient_command,
    roll_command,
    spin_command,
    stop_command,
    tweezer_command,
    vibrate_command,
)

MAX_LINE_BYTES: int = 1024

_NAME_RE = re.compile(r"^[a-z0-9_-]{1,64}$")


class ProtocolError(ValueError):
    """A command line that must be answered with an ERR reply."""

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code} {detail}".strip())

    def reply(self) -> str:
        return f"ERR {self.code} {self.detail}".strip()


@dataclass(frozen=True)
class _KeySpec:
    kind: str  # "float" | "int" | "word"
    lo: float = -math.inf
    hi: float = math.inf
    choices: tuple[str, ...] | None = None


_ANGLE = _KeySpec("float", -360.0, 360.0)
_FRACTION = _KeySpec("float", 0.0, 1.0)
_STICK = _KeySpec("float", -1.0, 1.0)
_FIELD_MT = _KeySpec("float", 0.0, 100.0)
_FREQ_HZ = _KeySpec("float", 1e-6, 100.0)

VERB_KEYS: dict[str, dict[str, _KeySpec]] = {
    "ORIENT": {"THETA": _ANGLE, "PHI": _ANGLE, "S": _FRACTION},
    "ROLL": {"A": _FIELD_MT, "ALPHA": _ANGLE, "GAMMA": _ANGLE, "F": _FREQ_HZ},
    "SPIN": {"A": _FIELD_MT, "ALPHA": _ANGLE, "GAMMA": _ANGLE, "F": _FREQ_HZ},
    "VIBRATE": {"AXIS": _KeySpec("word", choices=("x", "y", "z")), "F": _FREQ_HZ, "S": _FRACTION},
    "TWEEZER": {"THETA": _ANGLE, "PHI": _ANGLE, "S": _FRACTION},
    "STOP": {},
    "SELECT_ASSEMBLY": {"NAME": _KeySpec("word")},
    "AXIS": {"LX": _STICK, "LY": _STICK, "RX": _STICK, "RY": _STICK},
    "SUBSCRIBE": {"DIV": _KeySpec("int", 1, 1000)},
    "PING": {},
}


@dataclass(frozen=True)
class ProtocolMessage:
    """A parsed command: verb plus the explicitly supplied arguments."""

    verb: str
    args: dict = field(default_factory=dict)


def parse_command(line: str) -> ProtocolMessage:
    """Parse one command line or raise ProtocolError.

    Only keys valid for the verb are accepted; values are range-checked
    at the wire units.  Omitted keys are left to the consumer's
    defaults.
    """
    if len(line.encode("utf-8", errors="replace")) > MAX_LINE_BYTES:
        raise ProtocolError("bad-arg", "line")
    tokens = line.split()
    if not tokens:
        raise ProtocolError("unknown-verb")
    verb = tokens[0].upper()
    keyset = VERB_KEYS.get(verb)
    if keyset is None:
        raise ProtocolError("unknown-verb", tokens[0][:32])
    args: dict = {}
    for token in tokens[1:]:
        key, sep, raw = token.partition("=")
        key = key.upper()
        if not sep or key not in keyset or key in args:
            raise ProtocolError("bad-arg", key[:32] if key else token[:32])
        spec = keyset[key]
        if spec.kind == "word":
            word = raw.lower()
            if spec.choices is not None:
                if word not in spec.choices:
                    raise ProtocolError("range", key)
            elif not _NAME_RE.match(word):
                raise ProtocolError("bad-arg", key)
            args[key] = word
            continue
        try:
            value = float(raw)
        except ValueError:
            raise ProtocolError("bad-arg", key) from None
        if not math.isfinite(value):
            raise ProtocolError("bad-arg", key)
        if spec.kind == "int":
            if value != int(value):
                raise ProtocolError("bad-arg", key)
            value = int(value)
        if not spec.lo <= value <= spec.hi:
            raise ProtocolError("range", key)
        args[key] = value
    return ProtocolMessage(verb=verb, args=args)


def format_command(msg: ProtocolMessage) -> str:
    """Canonical line for a message; parse(format(parse(x))) == parse(x)."""
    parts = [msg.verb]
    for key in sorted(msg.args):
        value = msg.args[key]
        parts.append(f"{key}={value if isinstance(value, str) else repr(float(value))}")
    return " ".join(parts)


def _direction_from_angles(theta_deg: float, phi_deg: float) -> tuple[float, float, float]:
    theta = math.radians(theta_deg)
    phi = math.radians(phi_deg)
    return (
        math.cos(phi) * math.cos(theta),
        math.cos(phi) * math.sin(theta),
        math.sin(phi),
    )


def message_to_command(msg: ProtocolMessage) -> ActuationCommand | None:
    """Actuation command for a message, or None for non-actuation verbs.

    Applies the wire defaults (rolling's 90-degree azimuth, spinning's
    0) and converts degrees to radians, millitesla to tesla, and drive
    frequency to angular rate.
    """
    args = msg.args
    if msg.verb == "STOP":
        return stop_command()
    if msg.verb == "ORIENT":
        return orient_command(
            _direction_from_angles(args.get("THETA", 0.0), args.get("PHI", 0.0)),
            strength_fraction=args.get("S", 1.0),
        )
    if msg.verb == "TWEEZER":
        return tweezer_command(
            _direction_from_angles(args.get("THETA", 0.0), args.get("PHI", 0.0)),
            strength_fraction=args.get("S", 1.0),
        )
    if msg.verb in ("ROLL", "SPIN"):
        build = roll_command if msg.verb == "ROLL" else spin_command
        default_gamma = 90.0 if msg.verb == "ROLL" else 0.0
        return build(
            magnitude_t=args.get("A", 1.0) * 1e-3,
            omega=2.0 * math.pi * args.get("F", 1.0),
            polar_alpha=math.radians(args.get("ALPHA", 0.0)),
            azimuth_gamma=math.radians(args.get("GAMMA", default_gamma)),
        )
    if msg.verb == "VIBRATE":
        return vibrate_command(
            axis=args.get("AXIS", "y"),
            hz=args.get("F", 1.0),
            strength_fraction=args.get("S", 1.0),
        )
    return None


def _fmt(value: float) -> str:
    return repr(float(value))


def format_telemetry(
    t: float,
    mode: str,
    currents_a,
    field_mt,
    position_um=None,
    moment_dir=None,
) -> str:
    """One telemetry line: amperes, millitesla, micrometres."""
    parts = [
        f"TLM t={_fmt(t)}",
        f"mode={mode}",
        "i=" + ",".join(_fmt(v) for v in currents_a),
        "b=" + ",".join(_fmt(v) for v in field_mt),
    ]
    if position_um is not None:
        parts.append("pos=" + ",".join(_fmt(v) for v in position_um))
    if moment_dir is not None:
        parts.append("mdir=" + ",".join(_fmt(v) for v in moment_dir))
    return " ".join(parts)


@dataclass(frozen=True)
class TelemetryRecord:
    t: float
    mode: str
    currents_a: tuple[float, ...]
    field_mt: tuple[float, float, float]
    position_um: tuple[float, float, float] | None = None
    moment_dir: tuple[float, float, float] | None = None


def parse_telemetry(line: str) -> TelemetryRecord:
    """Parse a TLM line back into numbers (used by tests and tooling)."""
    tokens = line.split()
    if not tokens or tokens[0] != "TLM":
        raise ValueError("not a telemetry line")
    fields: dict[str, str] = {}
    for token in tokens[1:]:
        key, sep, raw = token.partition("=")
        if not sep:
            raise ValueError(f"malformed telemetry token {token!r}")
        fields[key] = raw
    vec = lambda raw: tuple(float(v) for v in raw.split(","))
    return TelemetryRecord(
        t=float(fields["t"]),
        mode=fields["mode"],
        currents_a=vec(fields["i"]),
        field_mt=vec(fields["b"]),
        position_um=vec(fields["pos"]) if "pos" in fields else None,
        moment_dir=vec(fields["mdir"]) if "mdir" in fields else None,
    )
