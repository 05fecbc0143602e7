/**
 * Virtual joystick widget: a base circle with a draggable knob.
 *
 * Reports normalized (x, y) in [-1, 1] with +y up while dragged and
 * snaps back to center (reporting 0, 0) on release.
 */

export class VirtualJoystick {
  readonly element: HTMLDivElement;
  private knob: HTMLDivElement;
  private pointerId: number | null = null;
  private radius = 50;

  constructor(label: string, private onMove: (x: number, y: number) => void) {
    this.element = document.createElement("div");
    this.element.className = "joystick";
    this.knob = document.createElement("div");
    this.knob.className = "joystick-knob";
    const caption = document.createElement("span");
    caption.className = "joystick-label";
    caption.textContent = label;
    this.element.appendChild(this.knob);
    this.element.appendChild(caption);
    this.bindEvents();
  }

  private bindEvents(): void {
    this.element.addEventListener("pointerdown", (e) => {
      if (this.pointerId !== null) return;
      this.pointerId = e.pointerId;
      this.element.setPointerCapture(e.pointerId);
      this.radius = this.element.getBoundingClientRect().width / 2;
      this.handle(e);
    });
    this.element.addEventListener("pointermove", (e) => {
      if (e.pointerId === this.pointerId) this.handle(e);
    });
    const release = (e: PointerEvent) => {
      if (e.pointerId !== this.pointerId) return;
      this.pointerId = null;
      this.knob.style.transform = "translate(0px, 0px)";
      this.onMove(0, 0);
    };
    this.element.addEventListener("pointerup", release);
    this.element.addEventListener("pointercancel", release);
  }

  private handle(e: PointerEvent): void {
    const rect = this.element.getBoundingClientRect();
    const dx = e.clientX - (rect.left + rect.width / 2);
    const dy = e.clientY - (rect.top + rect.height / 2);
    const norm = Math.hypot(dx, dy);
    const clamp = Math.min(norm, this.radius);
    const x = norm > 0 ? (dx / norm) * clamp : 0;
    const y = norm > 0 ? (dy / norm) * clamp : 0;
    this.knob.style.transform = `translate(${x}px, ${y}px)`;
    this.onMove(x / this.radius, -y / this.radius);
  }
}
