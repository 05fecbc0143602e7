/**
 * Operator console entry point: builds the DOM, wires the widgets to
 * the control surface, and renders telemetry on an animation loop.
 */

import { ConsoleSession } from "./connection.js";
import { ControlSurface } from "./controls.js";
import { VirtualJoystick } from "./joystick.js";
import {
  currentBarGeometry,
  fieldArrowGeometry,
  latestRecord,
  paintBars,
  paintDial,
  paintTrace,
  traceGeometry,
} from "./render.js";
import { Store } from "./state.js";

const store = new Store();
const session = new ConsoleSession(store);
const controls = new ControlSurface(session);

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function slider(
  label: string,
  min: number,
  max: number,
  step: number,
  value: number,
  onInput: (v: number) => void,
): HTMLDivElement {
  const wrap = el("div", "slider-row");
  const caption = el("label", "", label);
  const input = el("input");
  input.type = "range";
  input.min = String(min);
  input.max = String(max);
  input.step = String(step);
  input.value = String(value);
  const readout = el("span", "readout", String(value));
  input.addEventListener("input", () => {
    readout.textContent = input.value;
    onInput(Number(input.value));
  });
  wrap.append(caption, input, readout);
  return wrap;
}

function build(): void {
  const root = document.getElementById("app")!;

  // --- connection panel -------------------------------------------------
  const connection = el("div", "panel connection");
  const endpoint = el("input");
  endpoint.value = `ws://${location.hostname || "127.0.0.1"}:7601`;
  const connectBtn = el("button", "", "connect");
  const banner = el("span", "banner", "disconnected");
  connectBtn.addEventListener("click", () => session.connect(endpoint.value));
  connection.append(endpoint, connectBtn, banner);

  // --- mode + quick buttons ----------------------------------------------
  const modes = el("div", "panel modes");
  const quick = [
    ["+x", 0],
    ["+y", 90],
    ["-x", 180],
    ["-y", 270],
  ] as const;
  for (const [label, angle] of quick) {
    const button = el("button", "", label);
    button.addEventListener("click", () => controls.quickDirection(angle));
    modes.appendChild(button);
  }
  const rollBtn = el("button", "", "roll");
  rollBtn.addEventListener("click", () => controls.roll());
  const spinBtn = el("button", "", "spin");
  spinBtn.addEventListener("click", () => controls.spin());
  const vibrateBtn = el("button", "", "vibrate y");
  vibrateBtn.addEventListener("click", () => controls.vibrate("y"));
  const tweezerBtn = el("button", "", "tweezer");
  tweezerBtn.addEventListener("click", () => controls.tweezerToggle());
  const stopBtn = el("button", "stop", "STOP");
  stopBtn.addEventListener("click", () => controls.stop());
  modes.append(rollBtn, spinBtn, vibrateBtn, tweezerBtn, stopBtn);

  const assemblies = el("div", "panel assemblies");
  for (const name of ["twod", "helmholtz", "tweezer"]) {
    const button = el("button", "", name);
    button.addEventListener("click", () => controls.selectAssembly(name));
    assemblies.appendChild(button);
  }

  // --- sliders -------------------------------------------------------------
  const sliders = el("div", "panel sliders");
  sliders.append(
    slider("field (mT)", 0, 10, 0.1, 2, (v) => controls.slidersChanged({ amplitudeMt: v })),
    slider("rate (Hz)", 0.1, 20, 0.1, 1, (v) => controls.slidersChanged({ frequencyHz: v })),
    slider("alpha (deg)", -180, 180, 1, 0, (v) => controls.slidersChanged({ alphaDeg: v })),
    slider("gamma (deg)", 0, 180, 1, 90, (v) => controls.slidersChanged({ gammaDeg: v })),
    slider("strength", 0, 1, 0.01, 0.8, (v) => controls.slidersChanged({ strength: v })),
  );

  // --- joysticks -----------------------------------------------------------
  const sticks = el("div", "panel sticks");
  const left = new VirtualJoystick("steer", (x, y) => {
    controls.leftStick(x, y);
    controls.flushPending();
  });
  const right = new VirtualJoystick("roll dir", (x, y) => {
    controls.rightStick(x, y);
    controls.flushPending();
  });
  sticks.append(left.element, right.element);

  // --- telemetry visuals ----------------------------------------------------
  const visuals = el("div", "panel visuals");
  const topDial = el("canvas", "dial") as HTMLCanvasElement;
  const frontDial = el("canvas", "dial") as HTMLCanvasElement;
  const sideDial = el("canvas", "dial") as HTMLCanvasElement;
  const barsCanvas = el("canvas", "bars") as HTMLCanvasElement;
  const traceCanvas = el("canvas", "trace") as HTMLCanvasElement;
  topDial.width = topDial.height = 140;
  frontDial.width = frontDial.height = 140;
  sideDial.width = sideDial.height = 140;
  barsCanvas.width = 280;
  barsCanvas.height = 120;
  traceCanvas.width = 280;
  traceCanvas.height = 280;
  const magnitude = el("div", "magnitude", "0.00 mT");
  const diagnostics = el("div", "diagnostics", "");
  visuals.append(topDial, frontDial, sideDial, magnitude, barsCanvas, traceCanvas, diagnostics);

  root.append(connection, modes, assemblies, sliders, sticks, visuals);

  // --- render loop -----------------------------------------------------------
  const topCtx = topDial.getContext("2d")!;
  const frontCtx = frontDial.getContext("2d")!;
  const sideCtx = sideDial.getContext("2d")!;
  const barsCtx = barsCanvas.getContext("2d")!;
  const traceCtx = traceCanvas.getContext("2d")!;

  function render(): void {
    const state = store.get();
    banner.textContent =
      state.connection + (state.control === "observer" ? " (observer only)" : "");
    banner.className = `banner ${state.connection} ${state.control}`;
    const record = latestRecord(state);
    const arrow = fieldArrowGeometry(record);
    paintDial(topCtx, arrow.topAngle, arrow.topFraction, "top x-y");
    paintDial(frontCtx, arrow.frontAngle, arrow.frontFraction, "front x-z");
    paintDial(sideCtx, arrow.sideAngle, arrow.sideFraction, "side y-z");
    magnitude.textContent = `${arrow.magnitudeMt.toFixed(2)} mT  mode=${state.activeMode}`;
    paintBars(barsCtx, currentBarGeometry(record, state.channelLimits));
    paintTrace(traceCtx, traceGeometry(state.telemetry));
    diagnostics.textContent =
      `${state.assemblyName || "no assembly"} | lines ${state.linesSeen}` +
      ` | dropped ${state.droppedLines}` +
      (state.lastError ? ` | ${state.lastError}` : "");
    requestAnimationFrame(render);
  }
  requestAnimationFrame(render);

  // --- physical gamepad -------------------------------------------------------
  window.setInterval(() => {
    const pads = navigator.getGamepads ? navigator.getGamepads() : [];
    for (const pad of pads) {
      if (pad && pad.connected) {
        controls.gamepadPoll(pad.axes);
        break;
      }
    }
    controls.flushPending();
  }, 50);
}

build();
