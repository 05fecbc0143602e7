"""Surface-rolling microrobot and the step-out transition.

A 4.5 um bead with a fixed dipole rolls on the chamber floor under a
rotating field.  Below the step-out rate it rotates synchronously and
translates at v = a*omega; above it the moment slips and the mean
rotation (and speed) collapses.  Reproduces the classic response curve.
"""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from magsteer import Environment, RobotState, SimConfig, UniformFieldSource, rolling_waveform, run

RADIUS = 2.25e-6      # m
MOMENT = 1e-13        # A*m^2
VISCOSITY = 1e-3      # Pa*s (water)
B_MAG = 1e-3          # T

# rotational drag and the resulting step-out rate for this bead
drag = 8 * math.pi * VISCOSITY * RADIUS**3
omega_c = MOMENT * B_MAG / drag
print(f"step-out rate for |B| = {B_MAG*1e3:.0f} mT: {omega_c:.0f} rad/s ({omega_c/2/math.pi:.1f} Hz)")


def mean_rate(omega: float) -> float:
    source = UniformFieldSource(lambda t: rolling_waveform(t, B_MAG, math.pi / 2, 0.0, omega))
    state = RobotState(position=[0, 0, RADIUS], moment=[0, 0, MOMENT], radius=RADIUS, mode="surface")
    config = SimConfig(dt=2e-5, duration=0.3, field_source=source, record_stride=20)
    trajectory = run(config, state, Environment(viscosity=VISCOSITY))
    angles = np.unwrap([math.atan2(s.moment[1], s.moment[2]) for s in trajectory])
    times = [s.time for s in trajectory]
    half = len(times) // 2
    return abs(angles[-1] - angles[half]) / (times[-1] - times[half])


drives = np.linspace(0.2, 2.0, 13) * omega_c
responses = [mean_rate(w) for w in drives]

fig, ax = plt.subplots(figsize=(6.5, 4))
ax.plot(drives / omega_c, np.array(responses) / omega_c, "o-", label="simulated")
ax.plot([0, 1], [0, 1], "k--", lw=1, label="synchronous")
ax.axvline(1.0, color="gray", lw=0.8)
ax.set_xlabel("drive rate / step-out rate")
ax.set_ylabel("mean rotation rate / step-out rate")
ax.set_title("Step-out of a rolling microrobot")
ax.legend()
fig.tight_layout()
fig.savefig("demo03_step_out.png", dpi=120)
print("saved demo03_step_out.png")

# below step-out the translation speed is the no-slip prediction a*omega
omega = 0.4 * omega_c
source = UniformFieldSource(lambda t: rolling_waveform(t, B_MAG, math.pi / 2, 0.0, omega))
state = RobotState(position=[0, 0, RADIUS], moment=[0, 0, MOMENT], radius=RADIUS, mode="surface")
trajectory = run(SimConfig(dt=2e-5, duration=0.5, field_source=source, record_stride=100),
                 state, Environment(viscosity=VISCOSITY))
displacement = trajectory[-1].position - trajectory[0].position
print(f"\nrolling at {omega:.0f} rad/s for 0.5 s:")
print(f"  displacement: {np.round(displacement*1e6, 2)} um")
print(f"  speed {abs(displacement[1])/0.5*1e6:.2f} um/s vs no-slip a*omega = {RADIUS*omega*1e6:.2f} um/s")
