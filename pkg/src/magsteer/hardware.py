"""H-bridge drive mapping and the hardware backend contract.

Channel currents become PWM duty cycles plus a polarity bit, clamped
per channel and scaled uniformly when the summed draw would exceed the
supply budget.  The only backend shipped is simulated: instantaneous,
or first-order (coil L/R) relaxation toward the commanded current.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

# Currents below this are treated as off (A).
ENABLE_THRESHOLD: float = 1e-6


@dataclass(frozen=True)
class DriveSignal:
    """One H-bridge channel command: PWM duty, polarity and enable."""

    duty: float
    polarity: int
    enabled: bool

    def __post_init__(self) -> None:
        if not 0.0 <= self.duty <= 1.0:
            raise ValueError("duty must be in [0, 1]")
        if self.polarity not in (1, -1):
            raise ValueError("polarity must be +1 or -1")


@dataclass(frozen=True)
class DriverLimits:
    """Supply constraints: the battery, not the bridge rating, binds."""

    supply_voltage: float = 12.0
    per_channel_max: float = 3.0
    total_max: float = 3.0

    def __post_init__(self) -> None:
        if min(self.supply_voltage, self.per_channel_max, self.total_max) <= 0:
            raise ValueError("limits must be positive")


@dataclass(frozen=True)
class DriveFrame:
    """Per-channel drive signals plus the frame-level saturation flag."""

    signals: tuple[DriveSignal, ...]
    saturated: bool


def currents_to_drive(currents, limits: DriverLimits) -> DriveFrame:
    """Map requested currents (A) to H-bridge drive signals.

    duty = min(|I| / per_channel_max, 1), polarity = sign(I) (+1 at
    zero), enabled when |I| exceeds ENABLE_THRESHOLD.  If the summed
    draw exceeds ``total_max`` all currents are first scaled down by
    total_max / sum|I| (direction-preserving) and the frame is flagged
    saturated.  Saturation is never fatal.
    """
    values = np.asarray(getattr(currents, "values", currents), dtype=np.float64)
    total = float(np.sum(np.abs(values)))
    saturated = total > limits.total_max
    if saturated:
        values = values * (limits.total_max / total)
    signals = []
    for amps in values:
        ratio = abs(amps) / limits.per_channel_max
        if ratio > 1.0:
            saturated = True
        duty = min(ratio, 1.0)
        signals.append(
            DriveSignal(
                duty=duty,
                polarity=1 if amps >= 0 else -1,
                enabled=abs(amps) > ENABLE_THRESHOLD,
            )
        )
    return DriveFrame(signals=tuple(signals), saturated=saturated)


class HardwareBackend(Protocol):
    """Contract for anything that can realize drive signals.

    ``read`` after ``apply`` reflects the most recent apply, subject to
    the backend's dynamic model.  Exactly one control loop owns a
    backend; ``read`` returns an immutable snapshot.
    """

    def apply(self, signals: Sequence[DriveSignal], dt: float | None = None) -> None: ...

    def read(self) -> np.ndarray: ...


class SimulatedBackend:
    """Software stand-in for the GPIO / H-bridge chain.

    ``model="instantaneous"`` realizes the commanded current exactly;
    ``model="first_order"`` relaxes toward it with time constant
    ``tau`` (coil L/R behavior), advanced by the ``dt`` passed to each
    ``apply`` call.
    """

    def __init__(
        self,
        n_channels: int,
        limits: DriverLimits | None = None,
        model: str = "instantaneous",
        tau: float = 0.01,
    ):
        if model not in ("instantaneous", "first_order"):
            raise ValueError("model must be 'instantaneous' or 'first_order'")
        if tau <= 0:
            raise ValueError("tau must be positive")
        self.limits = limits or DriverLimits()
        self.model = model
        self.tau = tau
        self._achieved = np.zeros(n_channels)

    def apply(self, signals: Sequence[DriveSignal], dt: float | None = None) -> None:
        if len(signals) != len(self._achieved):
            raise ValueError("signal count does not match channel count")
        targets = np.array(
            [s.polarity * s.duty * self.limits.per_channel_max if s.enabled else 0.0 for s in signals]
        )
        if self.model == "instantaneous":
            self._achieved = targets
        else:
            if dt is None or dt <= 0:
                raise ValueError("first_order model requires a positive dt per apply")
            blend = 1.0 - math.exp(-dt / self.tau)
            self._achieved = self._achieved + (targets - self._achieved) * blend

    def read(self) -> np.ndarray:
        out = self._achieved.copy()
        out.flags.writeable = False
        return out
