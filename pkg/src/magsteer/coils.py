"""Magnetic field models for multi-coil microrobot drive assemblies.

Field sources are circular current loops (discretized into straight
segments and summed with the Biot-Savart law), finite solenoids with
ferromagnetic cores (a stack of loops spanning the winding, scaled by a
fitted core gain), and high-permeability pole tips (an effective
point-source model).  An assembly groups sources into drive channels;
the assembly field is linear in the per-channel current vector.

All quantities are SI: metres, amperes, tesla.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

# Permeability of free space (T*m/A) and the Biot-Savart prefactor.
MU_0: float = 4.0 * np.pi * 1e-7
_MU0_OVER_4PI: float = 1e-7

# Evaluation closer than this to a wire path is treated as singular (m).
WIRE_SINGULARITY_DISTANCE: float = 1e-9
# Evaluation closer than this to a pole tip is treated as singular (m).
TIP_SINGULARITY_DISTANCE: float = 1e-5

# Default discretization: straight segments per loop and axial stations
# per solenoid winding.
DEFAULT_LOOP_SEGMENTS: int = 360
DEFAULT_SOLENOID_STACK: int = 20

# Default central-difference step for field Jacobians (m): small against
# coil scales (mm-cm), large against float noise at tesla magnitudes.
DEFAULT_GRADIENT_STEP: float = 1e-5

_UNIT_NORM_TOL = 1e-9


class SingularityError(ValueError):
    """Field requested on or too close to a source singularity."""


class CoreDomainError(ValueError):
    """Field requested inside a solenoid core, where the model is invalid."""


class UnsatisfiableCalibrationError(ValueError):
    """Calibration point where the model predicts zero field."""


def _vec3(value, name: str) -> np.ndarray:
    v = np.asarray(value, dtype=np.float64)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite")
    v = v.copy()
    v.flags.writeable = False
    return v


def _unit3(value, name: str) -> np.ndarray:
    v = _vec3(value, name)
    if abs(np.linalg.norm(v) - 1.0) > _UNIT_NORM_TOL:
        raise ValueError(f"{name} must have unit norm (|{name}| = {np.linalg.norm(v)})")
    return v


def _orthonormal_frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors completing a right-handed frame (u, v, axis)."""
    helper = np.zeros(3)
    helper[np.argmin(np.abs(axis))] = 1.0
    u = np.cross(axis, helper)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    return u, v


# ----------------------------------------------------------------------
# Source elements
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class CurrentLoop:
    """A circular filament of one or more turns.

    Positive current circulates counterclockwise when viewed from the
    +axis side, producing a field along +axis at the loop center.
    """

    center: np.ndarray
    axis: np.ndarray
    radius: float
    turns: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _vec3(self.center, "center"))
        object.__setattr__(self, "axis", _unit3(self.axis, "axis"))
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.turns < 1:
            raise ValueError("turns must be >= 1")


@dataclass(frozen=True)
class SolenoidSpec:
    """A finite solenoid on a ferromagnetic core.

    ``face_center`` is the end of the winding closest to the workspace
    and ``axis`` points from that face into the workspace; the winding
    extends backward along -axis for ``length``.  If ``wire_diameter``
    is given the winding is modeled in layers of that pitch (a real
    multi-layer coil); otherwise as a single layer at ``core_radius``.
    ``core_gain`` is the scalar field amplification of the core, fitted
    from measured data rather than from a permeability value.
    """

    face_center: np.ndarray
    axis: np.ndarray
    length: float
    core_radius: float
    turns: int
    core_gain: float = 1.0
    wire_diameter: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "face_center", _vec3(self.face_center, "face_center"))
        object.__setattr__(self, "axis", _unit3(self.axis, "axis"))
        if self.length <= 0:
            raise ValueError("length must be positive")
        if self.core_radius <= 0:
            raise ValueError("core_radius must be positive")
        if self.turns < 1:
            raise ValueError("turns must be >= 1")
        if self.core_gain < 1.0:
            raise ValueError("core_gain must be >= 1")
        if self.wire_diameter is not None and not 0 < self.wire_diameter < self.length:
            raise ValueError("wire_diameter must be in (0, length)")

    def winding_layers(self) -> list[tuple[float, float]]:
        """(radius, turns) per winding layer, innermost first."""
        if self.wire_diameter is None:
            return [(self.core_radius, float(self.turns))]
        per_layer = int(self.length // self.wire_diameter)
        layers: list[tuple[float, float]] = []
        remaining = float(self.turns)
        j = 0
        while remaining > 0:
            r = self.core_radius + (j + 0.5) * self.wire_diameter
            layers.append((r, min(remaining, per_layer)))
            remaining -= per_layer
            j += 1
        return layers


@dataclass(frozen=True)
class PoleSpec:
    """A high-permeability pole tip concentrating flux into the workspace.

    Modeled as an effective point source at the tip: for positive
    current the field points radially away from the tip with magnitude
    ``current * strength_per_amp / (4*pi*r^2)``.
    """

    tip_position: np.ndarray
    tip_axis: np.ndarray
    strength_per_amp: float
    drive_channel: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "tip_position", _vec3(self.tip_position, "tip_position"))
        object.__setattr__(self, "tip_axis", _unit3(self.tip_axis, "tip_axis"))
        if self.strength_per_amp <= 0:
            raise ValueError("strength_per_amp must be positive")


Element = CurrentLoop | SolenoidSpec | PoleSpec


# ----------------------------------------------------------------------
# Field kernels
# ----------------------------------------------------------------------


def _polyline_field(
    starts: np.ndarray,
    ends: np.ndarray,
    points: np.ndarray,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    """Biot-Savart field of straight segments.

    ``starts``/``ends`` have shape (m, 3); ``points`` broadcasts as
    (..., 3); ``weights`` is an optional per-segment current (default 1).
    Uses the exact finite-segment solution; raises SingularityError when
    a point lies on (or within WIRE_SINGULARITY_DISTANCE of) any segment.
    Large point batches are chunked to bound the (..., m) intermediates.
    """
    p = np.asarray(points, dtype=np.float64)
    if p.ndim > 1 and p.shape[0] * len(starts) > 4_000_000:
        chunk = max(1, 4_000_000 // len(starts))
        return np.concatenate(
            [
                _polyline_field(starts, ends, p[i : i + chunk], weights)
                for i in range(0, p.shape[0], chunk)
            ]
        )
    r1 = p[..., None, :] - starts  # (..., m, 3)
    r2 = p[..., None, :] - ends
    n1 = np.linalg.norm(r1, axis=-1)
    n2 = np.linalg.norm(r2, axis=-1)

    seg = ends - starts
    seg_len2 = np.einsum("ij,ij->i", seg, seg)
    tpar = np.clip(np.einsum("...mi,mi->...m", r1, seg) / seg_len2, 0.0, 1.0)
    foot = starts + tpar[..., None] * seg
    dist = np.linalg.norm(p[..., None, :] - foot, axis=-1)
    if np.any(dist < WIRE_SINGULARITY_DISTANCE):
        raise SingularityError("evaluation point lies on the wire path")

    cr = np.cross(r1, r2)
    denom = n1 * n2 * (n1 * n2 + np.einsum("...mi,...mi->...m", r1, r2))
    coef = (n1 + n2) / denom
    if weights is not None:
        coef = coef * weights
    return _MU0_OVER_4PI * np.einsum("...m,...mi->...i", coef, cr)


def _loop_vertices(center: np.ndarray, axis: np.ndarray, radius: float, segments: int) -> np.ndarray:
    u, v = _orthonormal_frame(axis)
    theta = np.linspace(0.0, 2.0 * np.pi, segments + 1)
    return center + radius * (np.outer(np.cos(theta), u) + np.outer(np.sin(theta), v))


@lru_cache(maxsize=512)
def _loop_segments_cached(
    center: tuple, axis: tuple, radius: float, segments: int
) -> tuple[np.ndarray, np.ndarray]:
    verts = _loop_vertices(np.array(center), np.array(axis), radius, segments)
    verts.flags.writeable = False
    return verts[:-1], verts[1:]


def loop_field(
    loop: CurrentLoop,
    current: float,
    point,
    segments: int = DEFAULT_LOOP_SEGMENTS,
) -> np.ndarray:
    """Field (T) of a current loop at ``point`` (or a (..., 3) batch).

    The loop is discretized into ``segments`` straight segments; the
    result is linear in ``current`` and converges to the continuous
    loop field as O(1/segments^2).
    """
    if current == 0.0:
        return np.zeros(np.shape(point))
    starts, ends = _loop_segments_cached(
        tuple(loop.center), tuple(loop.axis), loop.radius, segments
    )
    return (current * loop.turns) * _polyline_field(starts, ends, point)


def loop_axial_field(loop: CurrentLoop, current: float, z) -> np.ndarray:
    """Closed-form on-axis field magnitude: mu0*N*I*R^2 / (2*(R^2+z^2)^1.5).

    ``z`` is the signed axial distance from the loop center.  Serves as
    the independent oracle for the segment-sum kernel.
    """
    z = np.asarray(z, dtype=np.float64)
    r2 = loop.radius**2
    return MU_0 * loop.turns * current * r2 / (2.0 * (r2 + z**2) ** 1.5)


def _point_in_core(spec: SolenoidSpec, points: np.ndarray) -> np.ndarray:
    d = np.asarray(points, dtype=np.float64) - spec.face_center
    axial = d @ spec.axis
    radial = np.linalg.norm(d - axial[..., None] * spec.axis, axis=-1)
    # open cylinder: the face plane itself stays evaluable (calibration point)
    return (axial < 0.0) & (axial > -spec.length) & (radial < spec.core_radius)


def solenoid_field(
    spec: SolenoidSpec,
    current: float,
    point,
    segments: int = DEFAULT_LOOP_SEGMENTS,
    stack: int = DEFAULT_SOLENOID_STACK,
) -> np.ndarray:
    """Field (T) of a cored solenoid at ``point`` (or a (..., 3) batch).

    The winding is modeled as ``stack`` loops per layer, each summed with
    the segment kernel and scaled by ``core_gain``.  The same loop model
    is used on and off axis so that finite-difference Jacobians stay
    consistent; ``solenoid_axial_field`` provides the analytic on-axis
    check.  Points inside the core cylinder raise CoreDomainError.
    """
    pts = np.asarray(point, dtype=np.float64)
    if np.any(_point_in_core(spec, pts)):
        raise CoreDomainError("evaluation point inside the solenoid core")
    if current == 0.0:
        return np.zeros(pts.shape)

    starts, ends, unit_weights = _solenoid_segments_cached(
        tuple(spec.face_center),
        tuple(spec.axis),
        spec.length,
        spec.core_radius,
        spec.turns,
        spec.wire_diameter,
        segments,
        stack,
    )
    return _polyline_field(starts, ends, pts, (current * spec.core_gain) * unit_weights)


@lru_cache(maxsize=64)
def _solenoid_segments_cached(
    face_center: tuple,
    axis: tuple,
    length: float,
    core_radius: float,
    turns: int,
    wire_diameter: float | None,
    segments: int,
    stack: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Winding segment geometry with per-segment turns/stack weights."""
    spec = SolenoidSpec(
        face_center=np.array(face_center),
        axis=np.array(axis),
        length=length,
        core_radius=core_radius,
        turns=turns,
        wire_diameter=wire_diameter,
    )
    ax = spec.axis
    u, v = _orthonormal_frame(ax)
    theta = np.linspace(0.0, 2.0 * np.pi, segments + 1)
    ring = np.outer(np.cos(theta), u) + np.outer(np.sin(theta), v)  # (segments+1, 3)
    offsets = (np.arange(stack) + 0.5) * (length / stack)
    centers = spec.face_center - offsets[:, None] * ax  # (stack, 3)

    layers = spec.winding_layers()
    radii = np.array([r for r, _ in layers])
    layer_w = np.array([t / stack for _, t in layers])
    # vertices: (layers, stack, segments+1, 3)
    verts = centers[None, :, None, :] + radii[:, None, None, None] * ring[None, None, :, :]
    starts = verts[:, :, :-1, :].reshape(-1, 3)
    ends = verts[:, :, 1:, :].reshape(-1, 3)
    weights = np.repeat(layer_w, stack * segments)
    for arr in (starts, ends, weights):
        arr.flags.writeable = False
    return starts, ends, weights


def solenoid_axial_field(spec: SolenoidSpec, current: float, distance) -> np.ndarray:
    """Analytic on-axis field (T) at ``distance`` beyond the face.

    Finite-solenoid difference-of-cosines formula summed over winding
    layers and scaled by ``core_gain``; the independent oracle for the
    loop-stack model on the solenoid axis.
    """
    d = np.asarray(distance, dtype=np.float64)
    total = np.zeros(d.shape)
    for radius, layer_turns in spec.winding_layers():
        n_per_m = layer_turns / spec.length
        near = d / np.hypot(d, radius)
        far = (d + spec.length) / np.hypot(d + spec.length, radius)
        total = total + 0.5 * MU_0 * n_per_m * current * (far - near)
    return spec.core_gain * total


def pole_field(pole: PoleSpec, current: float, point) -> np.ndarray:
    """Effective point-source field (T) of a pole tip.

    B = current * strength_per_amp * r_hat / (4*pi*r^2) with r from the
    tip to the point; raises SingularityError within
    TIP_SINGULARITY_DISTANCE of the tip.
    """
    p = np.asarray(point, dtype=np.float64)
    r = p - pole.tip_position
    dist = np.linalg.norm(r, axis=-1)
    if np.any(dist <= TIP_SINGULARITY_DISTANCE):
        raise SingularityError("evaluation point too close to the pole tip")
    if current == 0.0:
        return np.zeros(p.shape)
    coef = current * pole.strength_per_amp / (4.0 * np.pi * dist**3)
    return coef[..., None] * r


def element_field(element: Element, current: float, point) -> np.ndarray:
    if isinstance(element, CurrentLoop):
        return loop_field(element, current, point)
    if isinstance(element, SolenoidSpec):
        return solenoid_field(element, current, point)
    if isinstance(element, PoleSpec):
        return pole_field(element, current, point)
    raise TypeError(f"unknown element type {type(element).__name__}")


# ----------------------------------------------------------------------
# Assemblies
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class Channel:
    """One drive channel: signed source elements sharing a current.

    ``gain`` is a calibration multiplier applied to the channel's field
    (fitted against Tesla-meter measurements; 1.0 when uncalibrated).
    """

    elements: tuple[tuple[Element, float], ...]
    label: str = ""
    gain: float = 1.0

    def __post_init__(self) -> None:
        if not self.elements:
            raise ValueError("channel must own at least one element")
        if self.gain <= 0:
            raise ValueError("gain must be positive")


@dataclass(frozen=True)
class ChannelPair:
    """Facing channels driven with opposite currents.

    +1 A on ``positive`` produces a workspace-center field along +axis,
    +1 A on ``negative`` along -axis, so the drive (+I, -I) adds.
    """

    positive: int
    negative: int
    axis: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "axis", _unit3(self.axis, "axis"))


@dataclass(frozen=True)
class CoilAssembly:
    """A named set of current channels with a common workspace."""

    name: str
    channels: tuple[Channel, ...]
    workspace_center: np.ndarray
    channel_limits: np.ndarray
    pairs: tuple[ChannelPair, ...] = ()
    kind: str = "custom"

    def __post_init__(self) -> None:
        object.__setattr__(self, "workspace_center", _vec3(self.workspace_center, "workspace_center"))
        limits = np.asarray(self.channel_limits, dtype=np.float64)
        if limits.shape != (len(self.channels),):
            raise ValueError("channel_limits length must equal channel count")
        if np.any(limits <= 0):
            raise ValueError("channel_limits must be positive")
        limits = limits.copy()
        limits.flags.writeable = False
        object.__setattr__(self, "channel_limits", limits)
        n = len(self.channels)
        for pair in self.pairs:
            if not (0 <= pair.positive < n and 0 <= pair.negative < n):
                raise ValueError("pair channel index out of range")

    @property
    def channel_count(self) -> int:
        return len(self.channels)

    def poles(self) -> list[PoleSpec]:
        found = []
        for ch in self.channels:
            for element, _ in ch.elements:
                if isinstance(element, PoleSpec):
                    found.append(element)
        return found


def _current_values(currents, n_channels: int) -> np.ndarray:
    values = getattr(currents, "values", currents)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (n_channels,):
        raise ValueError(f"expected {n_channels} channel currents, got shape {values.shape}")
    return values


def assembly_field(assembly: CoilAssembly, currents, point) -> np.ndarray:
    """Superposed field (T) of all channels at ``point`` (or a batch).

    Each element contributes its sign times its channel's current and
    calibration gain; the result is linear in the current vector.
    """
    values = _current_values(currents, assembly.channel_count)
    pts = np.asarray(point, dtype=np.float64)
    total = np.zeros(pts.shape)
    for ch, amps in zip(assembly.channels, values):
        if amps == 0.0:
            continue
        for element, sign in ch.elements:
            total = total + element_field(element, amps * sign * ch.gain, pts)
    return total


def field_gradient(
    assembly: CoilAssembly,
    currents,
    point,
    step: float = DEFAULT_GRADIENT_STEP,
) -> np.ndarray:
    """3x3 field Jacobian (T/m) by central differences, J[i,j] = dB_i/dx_j."""
    p = np.asarray(point, dtype=np.float64)
    stencil = np.concatenate([p + step * np.eye(3), p - step * np.eye(3)])
    b = assembly_field(assembly, currents, stencil)
    return (b[:3] - b[3:]).T / (2.0 * step)


@dataclass(frozen=True)
class FieldMap:
    """Field samples on a regular lattice centered on the workspace.

    ``uniformity`` is the maximum relative deviation of |B| from its
    value at the workspace center over the grid (0 for an all-zero map).
    """

    points: np.ndarray
    samples: np.ndarray
    uniformity: float
    shape: tuple[int, int, int]


def field_map(
    assembly: CoilAssembly,
    currents,
    grid_extent: float,
    grid_n: int,
) -> FieldMap:
    """Sample the assembly field on a cubic lattice of side ``grid_extent``."""
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    half = grid_extent / 2.0
    axis_pts = np.linspace(-half, half, grid_n)
    gx, gy, gz = np.meshgrid(axis_pts, axis_pts, axis_pts, indexing="ij")
    points = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3) + assembly.workspace_center
    try:
        samples = assembly_field(assembly, currents, points)
    except (SingularityError, CoreDomainError):
        for p in points:  # slow path: name the offending point
            try:
                assembly_field(assembly, currents, p)
            except (SingularityError, CoreDomainError) as err:
                raise SingularityError(f"singular field at grid point {p.tolist()}") from err
        raise
    center_mag = float(np.linalg.norm(assembly_field(assembly, currents, assembly.workspace_center)))
    if center_mag == 0.0:
        uniformity = 0.0
    else:
        mags = np.linalg.norm(samples, axis=-1)
        uniformity = float(np.max(np.abs(mags - center_mag)) / center_mag)
    return FieldMap(points=points, samples=samples, uniformity=uniformity, shape=(grid_n,) * 3)


# ----------------------------------------------------------------------
# Calibration
# ----------------------------------------------------------------------


def calibrate_channel(
    assembly: CoilAssembly,
    channel: int,
    measured_b: float,
    at_current: float,
    at_point,
    drive: str = "single",
) -> CoilAssembly:
    """Scale channel gain(s) so the model reproduces a measured |B|.

    ``drive="single"`` energizes only ``channel`` at ``at_current``;
    ``drive="pair"`` energizes the channel's facing pair in the
    field-adding (+I, -I) configuration and scales both gains by the
    same factor, matching how paired assemblies are measured in
    practice.  Idempotent for repeated identical measurements.
    """
    if at_current == 0.0:
        raise ValueError("at_current must be nonzero")
    if measured_b <= 0.0:
        raise ValueError("measured_b must be positive")
    if not 0 <= channel < assembly.channel_count:
        raise ValueError(f"channel {channel} out of range")

    targets = [channel]
    currents = np.zeros(assembly.channel_count)
    currents[channel] = at_current
    if drive == "pair":
        pair = next(
            (p for p in assembly.pairs if channel in (p.positive, p.negative)),
            None,
        )
        if pair is None:
            raise ValueError(f"channel {channel} has no facing pair")
        partner = pair.negative if channel == pair.positive else pair.positive
        currents[partner] = -at_current
        targets.append(partner)
    elif drive != "single":
        raise ValueError("drive must be 'single' or 'pair'")

    model_b = float(np.linalg.norm(assembly_field(assembly, currents, at_point)))
    if model_b < 1e-15:  # physically zero; symmetric cancellations land here
        raise UnsatisfiableCalibrationError(
            f"model field is zero at the calibration point for channel {channel}"
        )
    factor = measured_b / model_b
    channels = list(assembly.channels)
    for idx in targets:
        channels[idx] = replace(channels[idx], gain=channels[idx].gain * factor)
    return replace(assembly, channels=tuple(channels))
