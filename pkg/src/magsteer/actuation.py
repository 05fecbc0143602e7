"""Operator intent to per-channel coil currents.

Covers constant-field orientation (opposite-polarity pair drive),
rotating-field waveforms for rolling and spinning, square-wave
vibration, and single-pole tweezer selection.  Desired fields are
inverted to currents through the assembly's field-per-amp matrix,
with direction-preserving saturation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .coils import CoilAssembly, assembly_field

# A desired field farther than this from the reachable space is an error (T).
REACHABILITY_TOL: float = 1e-9


class ModeMismatchError(ValueError):
    """Command mode not applicable to the selected assembly."""


class UnreachableFieldError(ValueError):
    """Desired field outside the assembly's reachable space."""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"desired field unreachable (residual {residual:.3e} T)")


class Mode(enum.Enum):
    ORIENT = "ORIENT"
    ROLL = "ROLL"
    SPIN = "SPIN"
    VIBRATE = "VIBRATE"
    TWEEZER = "TWEEZER"
    STOP = "STOP"


@dataclass(frozen=True)
class ActuationCommand:
    """One operator intent.

    Angles follow the rotating-field convention: ``azimuth_gamma`` is
    measured from the Z axis and ``polar_alpha`` from the Y axis, both
    in radians.  ``direction`` carries the target direction for Orient
    and Tweezer modes and the drive axis for Vibrate.
    """

    mode: Mode
    magnitude_t: float = 0.0
    polar_alpha: float = 0.0
    azimuth_gamma: float = math.pi / 2
    omega: float = 0.0
    vibrate_hz: float = 1.0
    direction: tuple[float, float, float] = (1.0, 0.0, 0.0)
    strength_fraction: float = 1.0

    def __post_init__(self) -> None:
        if self.magnitude_t < 0:
            raise ValueError("magnitude_t must be >= 0")
        if not 0.0 <= self.strength_fraction <= 1.0:
            raise ValueError("strength_fraction must be in [0, 1]")
        if self.mode is Mode.VIBRATE and self.vibrate_hz <= 0:
            raise ValueError("vibrate_hz must be positive")
        if self.mode in (Mode.ORIENT, Mode.TWEEZER, Mode.VIBRATE):
            if np.linalg.norm(self.direction) < 1e-12:
                raise ValueError("direction must be nonzero")


def stop_command() -> ActuationCommand:
    return ActuationCommand(mode=Mode.STOP)


def orient_command(direction, strength_fraction: float = 1.0) -> ActuationCommand:
    return ActuationCommand(
        mode=Mode.ORIENT, direction=tuple(direction), strength_fraction=strength_fraction
    )


def roll_command(
    magnitude_t: float,
    omega: float,
    polar_alpha: float = 0.0,
    azimuth_gamma: float = math.pi / 2,
) -> ActuationCommand:
    """Rolling drive; the azimuthal angle defaults to 90 degrees."""
    return ActuationCommand(
        mode=Mode.ROLL,
        magnitude_t=magnitude_t,
        omega=omega,
        polar_alpha=polar_alpha,
        azimuth_gamma=azimuth_gamma,
    )


def spin_command(
    magnitude_t: float,
    omega: float,
    polar_alpha: float = 0.0,
    azimuth_gamma: float = 0.0,
) -> ActuationCommand:
    """Spinning drive: rotation about the vertical axis (gamma = 0)."""
    return ActuationCommand(
        mode=Mode.SPIN,
        magnitude_t=magnitude_t,
        omega=omega,
        polar_alpha=polar_alpha,
        azimuth_gamma=azimuth_gamma,
    )


def vibrate_command(axis: str, hz: float, strength_fraction: float = 1.0) -> ActuationCommand:
    directions = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}
    if axis not in directions:
        raise ValueError("axis must be one of 'x', 'y', 'z'")
    return ActuationCommand(
        mode=Mode.VIBRATE,
        vibrate_hz=hz,
        direction=directions[axis],
        strength_fraction=strength_fraction,
    )


def tweezer_command(direction, strength_fraction: float = 1.0) -> ActuationCommand:
    return ActuationCommand(
        mode=Mode.TWEEZER, direction=tuple(direction), strength_fraction=strength_fraction
    )


@dataclass(frozen=True)
class CoilCurrents:
    """Signed per-channel currents (A) with per-channel saturation flags."""

    values: np.ndarray
    saturated: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).copy()
        saturated = np.asarray(self.saturated, dtype=bool).copy()
        if values.shape != saturated.shape:
            raise ValueError("values and saturated must have matching shapes")
        if not np.all(np.isfinite(values)):
            raise ValueError("currents must be finite")
        values.flags.writeable = False
        saturated.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "saturated", saturated)


def zero_currents(n_channels: int) -> CoilCurrents:
    return CoilCurrents(values=np.zeros(n_channels), saturated=np.zeros(n_channels, dtype=bool))


@dataclass(frozen=True)
class FieldPerAmpMatrix:
    """Workspace-center field per +1 A on each channel (columns, T/A)."""

    matrix: np.ndarray
    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=np.float64).copy()
        if matrix.ndim != 2 or matrix.shape[0] != 3:
            raise ValueError("matrix must have shape (3, n_channels)")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("matrix must be finite")
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)

    @property
    def channel_count(self) -> int:
        return self.matrix.shape[1]


def field_per_amp_matrix(assembly: CoilAssembly, point=None) -> FieldPerAmpMatrix:
    """Measure the per-channel field columns by unit-current evaluation."""
    at = assembly.workspace_center if point is None else point
    columns = []
    for k in range(assembly.channel_count):
        unit = np.zeros(assembly.channel_count)
        unit[k] = 1.0
        columns.append(assembly_field(assembly, unit, at))
    pairs = tuple((p.positive, p.negative) for p in assembly.pairs)
    return FieldPerAmpMatrix(matrix=np.stack(columns, axis=1), pairs=pairs)


def rolling_waveform(t, a, gamma, alpha, omega) -> np.ndarray:
    """Rotating-field sample(s) of constant magnitude ``a`` (T).

    Bx = A(cos(g) cos(al) cos(wt) + sin(al) sin(wt))
    By = A(-cos(g) sin(al) cos(wt) + cos(al) sin(wt))
    Bz = A sin(g) cos(wt)

    The field rotates about n = (-sin(g) cos(al), sin(g) sin(al), cos(g))
    at rate ``omega``; |B(t)| = A for all t.  All arguments broadcast, so
    a time array yields a (..., 3) sample block.
    """
    t, a, gamma, alpha, omega = np.broadcast_arrays(t, a, gamma, alpha, omega)
    cos_wt = np.cos(omega * t)
    sin_wt = np.sin(omega * t)
    cg, sg = np.cos(gamma), np.sin(gamma)
    ca, sa = np.cos(alpha), np.sin(alpha)
    bx = a * (cg * ca * cos_wt + sa * sin_wt)
    by = a * (-cg * sa * cos_wt + ca * sin_wt)
    bz = a * sg * cos_wt
    return np.stack([bx, by, bz], axis=-1)


def rotation_axis(gamma: float, alpha: float) -> np.ndarray:
    """Unit normal of the rotating-field plane for the given angles."""
    return np.array(
        [
            -math.sin(gamma) * math.cos(alpha),
            math.sin(gamma) * math.sin(alpha),
            math.cos(gamma),
        ]
    )


def _require_paired(assembly: CoilAssembly) -> None:
    if not assembly.pairs:
        raise ModeMismatchError(f"assembly {assembly.name!r} has no facing coil pairs")


def orient_currents(assembly: CoilAssembly, direction, strength_fraction: float) -> CoilCurrents:
    """Constant-field drive toward ``direction``.

    The unit direction is decomposed onto the pair axes; each pair's
    positive channel carries fraction * limit * component and the facing
    channel the negated value so the two fields add.  Components off all
    pair axes (z on the planar assembly) are ignored.
    """
    _require_paired(assembly)
    d = np.asarray(direction, dtype=np.float64)
    norm = np.linalg.norm(d)
    if norm < 1e-12:
        raise ValueError("direction must be nonzero")
    if not 0.0 <= strength_fraction <= 1.0:
        raise ValueError("strength_fraction must be in [0, 1]")
    d = d / norm
    values = np.zeros(assembly.channel_count)
    for pair in assembly.pairs:
        component = float(d @ pair.axis)
        drive = strength_fraction * assembly.channel_limits[pair.positive] * component
        values[pair.positive] = drive
        values[pair.negative] = -drive
    return CoilCurrents(values=values, saturated=np.zeros_like(values, dtype=bool))


def field_to_currents(m: FieldPerAmpMatrix, desired_b, limits) -> CoilCurrents:
    """Least-squares currents reproducing ``desired_b`` at the center.

    Facing channels are constrained to carry opposite currents.  If any
    channel would exceed its limit the whole solution is scaled down
    uniformly, preserving the field direction; the binding channels are
    flagged saturated.  Targets outside the reachable space (beyond
    REACHABILITY_TOL) raise UnreachableFieldError.
    """
    b = np.asarray(desired_b, dtype=np.float64)
    limits = np.asarray(limits, dtype=np.float64)
    n = m.channel_count
    if np.linalg.norm(m.matrix) == 0.0:
        raise ValueError("field-per-amp matrix has no nonzero column")

    if m.pairs:
        reduced = np.stack(
            [m.matrix[:, pos] - m.matrix[:, neg] for pos, neg in m.pairs], axis=1
        )
        amplitudes, *_ = np.linalg.lstsq(reduced, b, rcond=None)
        values = np.zeros(n)
        for (pos, neg), amp in zip(m.pairs, amplitudes):
            values[pos] = amp
            values[neg] = -amp
    else:
        values, *_ = np.linalg.lstsq(m.matrix, b, rcond=None)

    residual = float(np.linalg.norm(m.matrix @ values - b))
    if residual > REACHABILITY_TOL:
        raise UnreachableFieldError(residual)

    saturated = np.zeros(n, dtype=bool)
    over = np.abs(values) / limits
    worst = float(np.max(over)) if n else 0.0
    if worst > 1.0:
        values = values / worst
        saturated = np.abs(values) >= limits * (1.0 - 1e-12)
    return CoilCurrents(values=values, saturated=saturated)


def vibrate_currents(
    assembly: CoilAssembly,
    axis: str,
    t: float,
    hz: float,
    strength_fraction: float,
) -> CoilCurrents:
    """Square-wave pair drive: +axis for the first half-period, then -axis."""
    if hz <= 0:
        raise ValueError("hz must be positive")
    _require_paired(assembly)
    unit = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}.get(axis)
    if unit is None:
        raise ValueError("axis must be one of 'x', 'y', 'z'")
    e = np.array(unit)
    if not any(abs(float(e @ p.axis)) > 1.0 - 1e-9 for p in assembly.pairs):
        raise ValueError(f"assembly {assembly.name!r} has no pair along axis {axis!r}")
    phase = (t * hz) % 1.0
    sign = 1.0 if phase < 0.5 else -1.0
    return orient_currents(assembly, sign * e, strength_fraction)


def tweezer_currents(assembly: CoilAssembly, direction, strength_fraction: float) -> CoilCurrents:
    """Drive the single pole that pulls along ``direction``.

    The selected pole maximizes (tip direction from the workspace
    center) . direction -- a pole attracts regardless of polarity, so
    only geometry matters.  Ties break to the lowest channel index.
    """
    poles = assembly.poles()
    if assembly.pairs or len(poles) != assembly.channel_count:
        raise ModeMismatchError(f"assembly {assembly.name!r} is not a pole tweezer")
    d = np.asarray(direction, dtype=np.float64)
    norm = np.linalg.norm(d)
    if norm < 1e-12:
        raise ValueError("direction must be nonzero")
    d = d / norm
    pulls = np.stack(
        [
            (p.tip_position - assembly.workspace_center)
            / np.linalg.norm(p.tip_position - assembly.workspace_center)
            for p in poles
        ]
    )
    scores = pulls @ d
    # lowest channel wins ties (within roundoff of the unit-vector dots)
    selected = int(np.flatnonzero(scores >= np.max(scores) - 1e-12)[0])
    values = np.zeros(assembly.channel_count)
    values[selected] = strength_fraction * assembly.channel_limits[selected]
    return CoilCurrents(values=values, saturated=np.zeros_like(values, dtype=bool))


def command_currents(
    assembly: CoilAssembly,
    m: FieldPerAmpMatrix,
    cmd: ActuationCommand,
    t: float,
) -> CoilCurrents:
    """Evaluate a command at time ``t``; deterministic in (cmd, t)."""
    if cmd.mode is Mode.STOP:
        return zero_currents(assembly.channel_count)
    if cmd.mode is Mode.TWEEZER:
        return tweezer_currents(assembly, cmd.direction, cmd.strength_fraction)
    _require_paired(assembly)
    if cmd.mode is Mode.ORIENT:
        return orient_currents(assembly, cmd.direction, cmd.strength_fraction)
    if cmd.mode in (Mode.ROLL, Mode.SPIN):
        b = rolling_waveform(t, cmd.magnitude_t, cmd.azimuth_gamma, cmd.polar_alpha, cmd.omega)
        return field_to_currents(m, b, assembly.channel_limits)
    if cmd.mode is Mode.VIBRATE:
        axis = "xyz"[int(np.argmax(np.abs(cmd.direction)))]
        return vibrate_currents(assembly, axis, t, cmd.vibrate_hz, cmd.strength_fraction)
    raise ValueError(f"unhandled mode {cmd.mode}")
