"""Regenerate the golden rotating-field fixture with plain math.

Independent of the package implementation on purpose: the fixture is
the oracle the waveform code is checked against (and the telemetry
fixture the operator console replays in its tests).

Usage: python tests/data/gen_rotation_fixture.py
"""

import math
from pathlib import Path

AMPLITUDE_T = 2e-3
GAMMA = math.radians(45.0)
ALPHA = math.radians(90.0)
FREQ_HZ = 1.0
SAMPLES = 101  # one full 1 Hz period inclusive


def sample(t: float) -> tuple[float, float, float]:
    wt = 2.0 * math.pi * FREQ_HZ * t
    bx = AMPLITUDE_T * (
        math.cos(GAMMA) * math.cos(ALPHA) * math.cos(wt) + math.sin(ALPHA) * math.sin(wt)
    )
    by = AMPLITUDE_T * (
        -math.cos(GAMMA) * math.sin(ALPHA) * math.cos(wt) + math.cos(ALPHA) * math.sin(wt)
    )
    bz = AMPLITUDE_T * math.sin(GAMMA) * math.cos(wt)
    return bx, by, bz


def main() -> None:
    out = Path(__file__).parent / "rotation_fixture.csv"
    with out.open("w", encoding="utf-8") as fh:
        fh.write("t_s,bx_t,by_t,bz_t\n")
        for k in range(SAMPLES):
            t = k / (SAMPLES - 1)
            bx, by, bz = sample(t)
            fh.write(f"{t!r},{bx!r},{by!r},{bz!r}\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
