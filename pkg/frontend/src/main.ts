/** DOM wiring: canvases, controls, poll scheduling, and the render loop. */

import { makeApi } from "./api.js";
import type { Choice } from "./api.js";
import { instruction, toCanvas, traceExtent, trailAlpha } from "./playback.js";
import type { Extent } from "./playback.js";
import { ViewController } from "./view.js";

const controller = new ViewController(makeApi());

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const leftCanvas = el<HTMLCanvasElement>("left-canvas");
const rightCanvas = el<HTMLCanvasElement>("right-canvas");
const bannerEl = el<HTMLDivElement>("banner");
const instructionEl = el<HTMLDivElement>("instruction");
const statusEl = el<HTMLDivElement>("status");
const buttons: Record<Choice, HTMLButtonElement> = {
  left: el<HTMLButtonElement>("choose-left"),
  skip: el<HTMLButtonElement>("choose-skip"),
  right: el<HTMLButtonElement>("choose-right"),
};

for (const [choice, button] of Object.entries(buttons)) {
  button.addEventListener("click", () => void controller.submit(choice as Choice));
}

document.addEventListener("keydown", (event) => {
  const mapping: Record<string, Choice> = {
    ArrowLeft: "left",
    ArrowRight: "right",
    s: "skip",
  };
  const choice = mapping[event.key];
  if (choice !== undefined && controller.canLabel()) {
    event.preventDefault();
    void controller.submit(choice);
  }
});

function drawTrace(
  canvas: HTMLCanvasElement,
  trace: [number, number][],
  extent: Extent,
  pos: number,
): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (let i = 0; i < trace.length; i++) {
    const alpha = trailAlpha(i, pos);
    if (alpha <= 0) continue;
    const point = trace[i];
    if (point === undefined) continue;
    const [x, y] = toCanvas(point, extent, canvas.width, canvas.height);
    ctx.fillStyle = `rgba(38, 99, 235, ${alpha.toFixed(3)})`;
    ctx.beginPath();
    ctx.arc(x, y, 3, 0, 2 * Math.PI);
    ctx.fill();
  }
  const head = trace[Math.min(Math.floor(pos), trace.length - 1)];
  if (head !== undefined) {
    const [x, y] = toCanvas(head, extent, canvas.width, canvas.height);
    ctx.fillStyle = "rgba(220, 38, 38, 1)";
    ctx.beginPath();
    ctx.arc(x, y, 5, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function render(): void {
  const { query, status, banner, playbackPos } = controller.state;

  bannerEl.textContent = banner?.text ?? "";
  bannerEl.className = banner === null ? "banner hidden" : `banner ${banner.kind}`;

  for (const button of Object.values(buttons)) {
    button.disabled = !controller.canLabel();
  }

  if (status !== null) {
    const parts = [
      `feedback ${status.feedback_used} / ${status.feedback_budget}`,
      `step ${status.step}`,
      `queue ${status.queue_depth}`,
    ];
    if (status.done) parts.push("run finished");
    statusEl.textContent = parts.join("   ");
  }

  if (query === null) {
    instructionEl.textContent = "Waiting for the next query.";
    for (const canvas of [leftCanvas, rightCanvas]) {
      canvas.getContext("2d")?.clearRect(0, 0, canvas.width, canvas.height);
    }
    return;
  }

  instructionEl.textContent = instruction(query.env);
  const extent = traceExtent([query.left.positions, query.right.positions]);
  drawTrace(leftCanvas, query.left.positions, extent, playbackPos);
  drawTrace(rightCanvas, query.right.positions, extent, playbackPos);
}

let lastFrame = performance.now();
function frame(now: number): void {
  controller.tick(now - lastFrame);
  lastFrame = now;
  render();
  requestAnimationFrame(frame);
}

function schedulePoll(): void {
  void controller.poll().finally(() => {
    window.setTimeout(schedulePoll, controller.state.pollDelayMs);
  });
}

schedulePoll();
requestAnimationFrame(frame);
