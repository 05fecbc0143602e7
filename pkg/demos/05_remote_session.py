"""Driving the control service over its wire protocol.

Starts the service in a background thread with the embedded robot sim
attached, then acts as a remote operator over a plain TCP socket:
subscribe to telemetry, orient, roll, vibrate, stop.  Everything the
operator console does goes through exactly this protocol.
"""

import socket
import threading
import time

from magsteer import ServiceConfig, SimSettings, serve
from magsteer.protocol import parse_telemetry

PORT = 7651

config = ServiceConfig(
    port=PORT,
    tick_rate=100.0,
    assembly="helmholtz",
    sim=SimSettings(seed=42),
)
threading.Thread(target=serve, args=(config,), daemon=True).start()
time.sleep(0.5)  # let the server bind

sock = socket.create_connection(("127.0.0.1", PORT))
stream = sock.makefile("rw", encoding="utf-8", newline="\n")


def send(line: str) -> str:
    stream.write(line + "\n")
    stream.flush()
    while True:
        reply = stream.readline().strip()
        if not reply.startswith("TLM"):
            return reply


def watch(seconds: float, every: int = 20) -> None:
    deadline = time.time() + seconds
    count = 0
    while time.time() < deadline:
        line = stream.readline().strip()
        if not line.startswith("TLM"):
            continue
        count += 1
        if count % every == 0:
            record = parse_telemetry(line)
            print(f"  t={record.t:6.2f}s mode={record.mode:7s} "
                  f"|i|max={max(abs(v) for v in record.currents_a):.2f}A "
                  f"b=({record.field_mt[0]:+.2f},{record.field_mt[1]:+.2f},{record.field_mt[2]:+.2f})mT "
                  f"pos={tuple(round(v, 1) for v in record.position_um)}um")


print("PING          ->", send("PING"))
print("SUBSCRIBE     ->", send("SUBSCRIBE DIV=1"))

print("\norient the field 45 degrees in-plane:")
print("ORIENT        ->", send("ORIENT THETA=45 S=0.4"))
watch(0.5)

print("\nroll a microrobot (2 mT rotating field at 3 Hz):")
print("ROLL          ->", send("ROLL A=2 ALPHA=0 F=3"))
watch(1.0)

print("\nvibrate along y at 5 Hz:")
print("VIBRATE       ->", send("VIBRATE AXIS=y F=5 S=0.4"))
watch(0.5)

print("\nSTOP          ->", send("STOP"))
watch(0.2)
sock.close()
print("\nsession closed; the service keeps running until the process exits")
