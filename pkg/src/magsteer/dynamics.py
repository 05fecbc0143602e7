"""Overdamped dynamics of a spherical magnetic microrobot.

The robot is a rigid sphere carrying a permanent dipole moment.  In
the low-Reynolds regime inertia is negligible: angular velocity is
torque over rotational drag (8*pi*mu*a^3) and translational velocity
is force over Stokes drag (6*pi*mu*a).  A surface-contact mode adds
no-slip rolling along the z = 0 plane.  Optional Brownian rotation
uses a seeded generator so every run is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Protocol

import numpy as np

from .coils import CoilAssembly, assembly_field, field_gradient

BOLTZMANN: float = 1.380649e-23

# Explicit-Euler stability guard: maximum rotation per step (rad).
MAX_ROTATION_PER_STEP: float = 0.5


class StepSizeError(ValueError):
    """Time step too large for the current torque; reduce dt."""


@dataclass(frozen=True)
class RobotState:
    """Pose of one microrobot.

    ``moment`` is the dipole vector in A*m^2; its magnitude is conserved
    by the dynamics.  ``mode`` is "bulk" (free suspension) or "surface"
    (sphere resting on the z = 0 plane, position z pinned to the radius).
    """

    position: np.ndarray
    moment: np.ndarray
    radius: float
    mode: str = "bulk"
    time: float = 0.0

    def __post_init__(self) -> None:
        position = np.asarray(self.position, dtype=np.float64).copy()
        moment = np.asarray(self.moment, dtype=np.float64).copy()
        if position.shape != (3,) or moment.shape != (3,):
            raise ValueError("position and moment must be 3-vectors")
        if not (np.all(np.isfinite(position)) and np.all(np.isfinite(moment))):
            raise ValueError("state must be finite")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if np.linalg.norm(moment) == 0.0:
            raise ValueError("moment must be nonzero")
        if self.mode not in ("bulk", "surface"):
            raise ValueError("mode must be 'bulk' or 'surface'")
        if self.mode == "surface":
            position[2] = self.radius
        position.flags.writeable = False
        moment.flags.writeable = False
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "moment", moment)


@dataclass(frozen=True)
class Environment:
    """Fluid and noise parameters."""

    viscosity: float = 1e-3
    temperature: float = 298.0
    noise_enabled: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.viscosity <= 0:
            raise ValueError("viscosity must be positive")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


class FieldSource(Protocol):
    """Field and gradient seen by the robot at (t, position)."""

    def evaluate(self, t: float, position: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


@dataclass(frozen=True)
class UniformFieldSource:
    """Spatially uniform field from a time function; zero gradient."""

    field_of_t: Callable[[float], np.ndarray]

    def evaluate(self, t: float, position) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.field_of_t(t), dtype=np.float64), np.zeros((3, 3))


@dataclass(frozen=True)
class AssemblyFieldSource:
    """Field of a coil assembly under a currents-vs-time schedule.

    ``with_gradient=False`` skips the finite-difference Jacobian (7x
    cheaper) for torque-only studies such as rolling.
    """

    assembly: CoilAssembly
    currents_of_t: Callable[[float], np.ndarray]
    with_gradient: bool = True
    gradient_step: float = 1e-5

    def evaluate(self, t: float, position) -> tuple[np.ndarray, np.ndarray]:
        currents = self.currents_of_t(t)
        b = assembly_field(self.assembly, currents, position)
        if not self.with_gradient:
            return b, np.zeros((3, 3))
        jac = field_gradient(self.assembly, currents, position, step=self.gradient_step)
        return b, jac


@dataclass(frozen=True)
class SimConfig:
    dt: float
    duration: float
    field_source: FieldSource
    record_stride: int = 1
    slip_coefficient: float = 1.0  # 1.0 = ideal no-slip rolling

    def __post_init__(self) -> None:
        if not 0 < self.dt <= self.duration:
            raise ValueError("require 0 < dt <= duration")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


def magnetic_torque(moment, b) -> np.ndarray:
    """Torque on a dipole: moment x B (N*m)."""
    return np.cross(np.asarray(moment, dtype=np.float64), np.asarray(b, dtype=np.float64))


def magnetic_force(moment, jac) -> np.ndarray:
    """Gradient force on a dipole: F_i = sum_j m_j dB_i/dx_j (N)."""
    return np.asarray(jac, dtype=np.float64) @ np.asarray(moment, dtype=np.float64)


def _rotate(vector: np.ndarray, rotvec: np.ndarray) -> np.ndarray:
    """Rodrigues rotation of ``vector`` by the rotation vector ``rotvec``."""
    angle = np.linalg.norm(rotvec)
    if angle < 1e-300:
        return vector
    axis = rotvec / angle
    cos_a = math.cos(angle)
    return (
        vector * cos_a
        + np.cross(axis, vector) * math.sin(angle)
        + axis * (axis @ vector) * (1.0 - cos_a)
    )


def step(
    state: RobotState,
    env: Environment,
    b,
    jac,
    dt: float,
    rng: np.random.Generator | None = None,
    slip_coefficient: float = 1.0,
) -> RobotState:
    """One explicit-Euler update of the overdamped dynamics.

    Rotation by the torque-driven angular velocity (moment magnitude is
    conserved exactly), translation by the gradient force, plus the
    no-slip rolling velocity in surface mode.  Brownian rotation is
    applied from ``rng`` when the environment enables noise.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    a = state.radius
    rot_drag = 8.0 * math.pi * env.viscosity * a**3
    trans_drag = 6.0 * math.pi * env.viscosity * a

    torque = magnetic_torque(state.moment, b)
    omega = torque / rot_drag
    rotation = np.linalg.norm(omega) * dt
    if rotation > MAX_ROTATION_PER_STEP:
        raise StepSizeError(
            f"rotation per step {rotation:.3f} rad exceeds {MAX_ROTATION_PER_STEP}; reduce dt"
        )
    moment = _rotate(state.moment, omega * dt)
    if env.noise_enabled:
        if rng is None:
            raise ValueError("noise_enabled requires an rng")
        diffusion = BOLTZMANN * env.temperature / rot_drag
        moment = _rotate(moment, math.sqrt(2.0 * diffusion * dt) * rng.standard_normal(3))

    velocity = magnetic_force(state.moment, jac) / trans_drag
    if state.mode == "surface":
        # no-slip rolling: v = a * (Omega x z_hat), from the horizontal spin
        velocity = velocity + slip_coefficient * a * np.array([omega[1], -omega[0], 0.0])
    position = state.position + velocity * dt
    return replace(state, position=position, moment=moment, time=state.time + dt)


def run(config: SimConfig, initial: RobotState, env: Environment) -> list[RobotState]:
    """Integrate over the configured duration; deterministic given the seed.

    Returns the trajectory (including the initial state) sampled every
    ``record_stride`` steps; the field source is evaluated at the
    robot's current position each tick.
    """
    rng = np.random.default_rng(env.seed) if env.noise_enabled else None
    n_steps = int(round(config.duration / config.dt))
    trajectory = [initial]
    state = initial
    for k in range(n_steps):
        b, jac = config.field_source.evaluate(state.time, state.position)
        try:
            state = step(
                state, env, b, jac, config.dt, rng=rng, slip_coefficient=config.slip_coefficient
            )
        except StepSizeError as err:
            raise StepSizeError(f"tick {k}: {err}") from err
        if (k + 1) % config.record_stride == 0:
            trajectory.append(state)
    return trajectory


def export_trajectory(path, trajectory: list[RobotState], field_source: FieldSource) -> None:
    """Write a trajectory as delimited text, one sample per line.

    Columns: time (s), position (m), moment direction, field at the
    robot (T); SI units with a header row.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("time_s,x_m,y_m,z_m,mx,my,mz,bx_t,by_t,bz_t\n")
        for state in trajectory:
            b, _ = field_source.evaluate(state.time, state.position)
            mdir = state.moment / np.linalg.norm(state.moment)
            row = [state.time, *state.position, *mdir, *b]
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
