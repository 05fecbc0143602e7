"""Rotating-field waveforms for rolling and spinning drives.

Samples the constant-magnitude rotating field, checks its two defining
invariants numerically, and plots the three coil-axis sinusoids for a
1 Hz drive tilted 45 degrees off vertical.
"""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from magsteer import rolling_waveform, rotation_axis

A = 2e-3           # field amplitude (T)
gamma = math.radians(45)   # tilt of the rotation plane, measured from z
alpha = math.radians(90)   # steering angle, measured from y
omega = 2 * math.pi * 1.0  # 1 Hz

t = np.linspace(0, 1.0, 1001)
b = rolling_waveform(t, A, gamma, alpha, omega)

# invariant 1: |B(t)| = A for every sample
print(f"max | |B| - A | / A  = {np.max(np.abs(np.linalg.norm(b, axis=1) - A)) / A:.2e}")

# invariant 2: B(t) stays in the plane normal to the rotation axis
n = rotation_axis(gamma, alpha)
print(f"rotation axis        = {np.round(n, 4)}")
print(f"max |B . n| / A      = {np.max(np.abs(b @ n)) / A:.2e}")

fig, ax = plt.subplots(figsize=(7, 4))
for idx, label in enumerate(("Bx", "By", "Bz")):
    ax.plot(t, b[:, idx] * 1e3, label=label)
ax.set_xlabel("time (s)")
ax.set_ylabel("field (mT)")
ax.set_title("1 Hz rotating field, 45-degree tilt: coil-axis components")
ax.legend()
fig.tight_layout()
fig.savefig("demo02_rotating_field.png", dpi=120)
print("saved demo02_rotating_field.png")

# steering: alpha rotates the rolling direction; sweep it and report
# the rotation axis (the rolling direction is perpendicular to it)
print("\nsteering sweep (gamma = 90 deg):")
for alpha_deg in (0, 45, 90, 135):
    axis = rotation_axis(math.radians(90), math.radians(alpha_deg))
    rolling_direction = np.cross([0, 0, 1], axis)
    print(f"  alpha {alpha_deg:4d} deg -> rolls along {np.round(rolling_direction, 3)}")
