"""Built-in coil assemblies and declarative assembly configuration.

Three assemblies ship with the package, each mirroring one drive
head of the portable controller: a planar 4-solenoid array ("twod"),
a triaxial Helmholtz-style ring system ("helmholtz"), and a 6-pole
gradient tweezer ("tweezer").  Their geometry lives in bundled YAML
files (``magsteer/data/``) so dimensions can be tweaked without code
changes; ``load_assembly`` accepts the same schema from user files.
"""

from __future__ import annotations

import math
from importlib import resources

import numpy as np
import yaml

from .coils import (
    Channel,
    ChannelPair,
    CoilAssembly,
    CurrentLoop,
    PoleSpec,
    SolenoidSpec,
    calibrate_channel,
)

_X = np.array([1.0, 0.0, 0.0])
_Y = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])
_AXES = {"x": _X, "y": _Y, "z": _Z}

BUILTIN_KINDS = ("twod", "helmholtz", "tweezer")


def build_twod_assembly(
    face_to_center: float = 0.0175,
    coil_length: float = 0.05,
    core_radius: float = 0.0025,
    turns: int = 980,
    wire_diameter: float | None = 0.56e-3,
    channel_limit: float = 3.0,
    name: str = "twod",
) -> CoilAssembly:
    """Planar array of 4 perpendicular cored solenoids aimed at the center.

    Channel order is (+x, -x, +y, -y) side; positive current on any
    channel drives field from that coil toward the workspace center.
    ``face_to_center`` defaults to 17.5 mm (half of a 25 mm slide plus
    the 5 mm core protrusion into the stand).
    """
    channels = []
    for label, side in (("+x", _X), ("-x", -_X), ("+y", _Y), ("-y", -_Y)):
        sol = SolenoidSpec(
            face_center=side * face_to_center,
            axis=-side,
            length=coil_length,
            core_radius=core_radius,
            turns=turns,
            wire_diameter=wire_diameter,
        )
        channels.append(Channel(elements=((sol, 1.0),), label=label))
    pairs = (
        ChannelPair(positive=1, negative=0, axis=_X),
        ChannelPair(positive=3, negative=2, axis=_Y),
    )
    return CoilAssembly(
        name=name,
        channels=tuple(channels),
        workspace_center=np.zeros(3),
        channel_limits=np.full(4, channel_limit),
        pairs=pairs,
        kind="twod",
    )


_HELMHOLTZ_RINGS = (
    # label, radius (m), spacing/radius ratio, turns, axis
    ("small", 0.036, 1.3, 368, "z"),
    ("medium", 0.066 / 1.8, 1.8, 368, "x"),
    ("large", 0.083 / 1.5, 1.5, 260, "y"),
)


def build_helmholtz_assembly(
    rings=_HELMHOLTZ_RINGS,
    channel_limit: float = 3.0,
    name: str = "helmholtz",
) -> CoilAssembly:
    """Three coaxial ring pairs on mutually orthogonal axes.

    Each pair contributes two channels (+side then -side ring); the
    -side ring is wired with reversed sign so the standard opposite
    polarity drive (+I, -I) produces an additive field along the pair
    axis.  The small (vertical-axis) pair sits closest to the ideal
    Helmholtz spacing ratio; all ratios follow the as-built hardware.
    """
    channels = []
    pairs = []
    for idx, (label, radius, ratio, turns, axis_name) in enumerate(rings):
        axis = _AXES[axis_name]
        half_gap = 0.5 * ratio * radius
        for suffix, offset, sign in ((f"{label}+", half_gap, 1.0), (f"{label}-", -half_gap, -1.0)):
            ring = CurrentLoop(center=offset * axis, axis=axis, radius=radius, turns=turns)
            channels.append(Channel(elements=((ring, sign),), label=suffix))
        pairs.append(ChannelPair(positive=2 * idx, negative=2 * idx + 1, axis=axis))
    return CoilAssembly(
        name=name,
        channels=tuple(channels),
        workspace_center=np.zeros(3),
        channel_limits=np.full(len(channels), channel_limit),
        pairs=tuple(pairs),
        kind="helmholtz",
    )


def build_tweezer_assembly(
    tip_separation: float = 1.5e-3,
    tilt_deg: float = 45.0,
    strength_per_amp: float = 1e-8,
    channel_limit: float = 3.0,
    name: str = "tweezer",
) -> CoilAssembly:
    """Six pole tips, three above and three below the workspace plane.

    The bottom triad is rotated 60 degrees against the top one; the tip
    sphere radius is chosen so the closest upper-to-lower tip distance
    equals ``tip_separation`` exactly.  ``strength_per_amp`` is a
    placeholder meant to be overridden by calibration.
    """
    tilt = math.radians(tilt_deg)
    # nearest upper/lower tips are 60 deg apart in azimuth:
    # distance^2 = s^2 * (2 sin^2(tilt) (1 - cos 60) + 4 cos^2(tilt))
    scale = math.sqrt(math.sin(tilt) ** 2 + 4.0 * math.cos(tilt) ** 2)
    s = tip_separation / scale
    channels = []
    for idx in range(6):
        top = idx < 3
        azimuth = math.radians(90.0 + 120.0 * idx if top else 30.0 + 120.0 * (idx - 3))
        polar = tilt if top else math.pi - tilt
        tip = s * np.array(
            [
                math.sin(polar) * math.cos(azimuth),
                math.sin(polar) * math.sin(azimuth),
                math.cos(polar),
            ]
        )
        pole = PoleSpec(
            tip_position=tip,
            tip_axis=-tip / np.linalg.norm(tip),
            strength_per_amp=strength_per_amp,
            drive_channel=idx,
        )
        channels.append(Channel(elements=((pole, 1.0),), label=f"pole{idx}"))
    return CoilAssembly(
        name=name,
        channels=tuple(channels),
        workspace_center=np.zeros(3),
        channel_limits=np.full(6, channel_limit),
        pairs=(),
        kind="tweezer",
    )


# ----------------------------------------------------------------------
# Declarative configuration
# ----------------------------------------------------------------------


def _element_from_config(cfg: dict):
    kind = cfg["type"]
    if kind == "loop":
        return CurrentLoop(
            center=cfg["center_m"],
            axis=cfg["axis"],
            radius=cfg["radius_m"],
            turns=int(cfg.get("turns", 1)),
        )
    if kind == "solenoid":
        return SolenoidSpec(
            face_center=cfg["face_center_m"],
            axis=cfg["axis"],
            length=cfg["length_m"],
            core_radius=cfg["core_radius_m"],
            turns=int(cfg["turns"]),
            core_gain=float(cfg.get("core_gain", 1.0)),
            wire_diameter=cfg.get("wire_diameter_m"),
        )
    if kind == "pole":
        return PoleSpec(
            tip_position=cfg["tip_position_m"],
            tip_axis=cfg["tip_axis"],
            strength_per_amp=float(cfg["strength_per_amp"]),
            drive_channel=int(cfg.get("drive_channel", 0)),
        )
    raise ValueError(f"unknown element type {kind!r}")


def _custom_assembly_from_config(cfg: dict) -> CoilAssembly:
    channels = []
    for ch in cfg["channels"]:
        elements = tuple(
            (_element_from_config(e), float(e.get("sign", 1.0))) for e in ch["elements"]
        )
        channels.append(
            Channel(elements=elements, label=ch.get("label", ""), gain=float(ch.get("gain", 1.0)))
        )
    pairs = tuple(
        ChannelPair(positive=int(p["positive"]), negative=int(p["negative"]), axis=p["axis"])
        for p in cfg.get("pairs", [])
    )
    limits = [float(ch.get("limit_a", cfg.get("channel_limit_a", 3.0))) for ch in cfg["channels"]]
    return CoilAssembly(
        name=cfg.get("name", "custom"),
        channels=tuple(channels),
        workspace_center=cfg.get("workspace_center_m", (0.0, 0.0, 0.0)),
        channel_limits=limits,
        pairs=pairs,
        kind="custom",
    )


def assembly_from_config(cfg: dict) -> CoilAssembly:
    """Build an assembly from a parsed configuration mapping.

    ``kind`` selects a parameterized builder (``twod``, ``helmholtz``,
    ``tweezer``) or ``custom`` for an explicit channel/element list.
    An optional ``calibration`` list is applied in order; each entry
    scales one channel (or facing pair) to a measured field.
    """
    kind = cfg.get("kind", "custom")
    if kind == "twod":
        assembly = build_twod_assembly(
            face_to_center=float(cfg.get("face_to_center_m", 0.0175)),
            coil_length=float(cfg.get("coil_length_m", 0.05)),
            core_radius=float(cfg.get("core_radius_m", 0.0025)),
            turns=int(cfg.get("turns", 980)),
            wire_diameter=cfg.get("wire_diameter_m", 0.56e-3),
            channel_limit=float(cfg.get("channel_limit_a", 3.0)),
            name=cfg.get("name", "twod"),
        )
    elif kind == "helmholtz":
        rings = [
            (r["label"], float(r["radius_m"]), float(r["spacing_ratio"]), int(r["turns"]), r["axis"])
            for r in cfg.get("rings", [])
        ] or _HELMHOLTZ_RINGS
        assembly = build_helmholtz_assembly(
            rings=rings,
            channel_limit=float(cfg.get("channel_limit_a", 3.0)),
            name=cfg.get("name", "helmholtz"),
        )
    elif kind == "tweezer":
        assembly = build_tweezer_assembly(
            tip_separation=float(cfg.get("tip_separation_m", 1.5e-3)),
            tilt_deg=float(cfg.get("tilt_deg", 45.0)),
            strength_per_amp=float(cfg.get("strength_per_amp", 1e-8)),
            channel_limit=float(cfg.get("channel_limit_a", 3.0)),
            name=cfg.get("name", "tweezer"),
        )
    elif kind == "custom":
        assembly = _custom_assembly_from_config(cfg)
    else:
        raise ValueError(f"unknown assembly kind {kind!r}")

    for cal in cfg.get("calibration", []):
        at_point = cal.get("at_point_m", tuple(assembly.workspace_center))
        assembly = calibrate_channel(
            assembly,
            channel=int(cal["channel"]),
            measured_b=float(cal["field_t"]),
            at_current=float(cal["current_a"]),
            at_point=at_point,
            drive="pair" if cal.get("pair", False) else "single",
        )
    return assembly


def load_assembly(path) -> CoilAssembly:
    """Load an assembly from a YAML configuration file."""
    with open(path, "r", encoding="utf-8") as fh:
        cfg = yaml.safe_load(fh)
    return assembly_from_config(cfg)


def make_builtin_assembly(kind: str, calibrated: bool = True) -> CoilAssembly:
    """One of the bundled assemblies: ``twod``, ``helmholtz`` or ``tweezer``.

    With ``calibrated=True`` (default) the bundled Tesla-meter
    calibration entries are applied, so the model reproduces the
    measured bench fields; ``calibrated=False`` returns the bare
    geometric model (gain 1 everywhere).
    """
    key = kind.strip().lower()
    if key not in BUILTIN_KINDS:
        raise ValueError(f"unknown builtin assembly {kind!r}; expected one of {BUILTIN_KINDS}")
    text = resources.files("magsteer.data").joinpath(f"{key}.yaml").read_text(encoding="utf-8")
    cfg = yaml.safe_load(text)
    if not calibrated:
        cfg.pop("calibration", None)
    return assembly_from_config(cfg)
