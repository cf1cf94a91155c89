import { Client } from "./api.js";
import { pngDataUrl } from "./frame.js";
import { CameraGrid } from "./grid.js";
import { TrackMonitor } from "./monitor.js";
import type { SurfaceInfo } from "./monitor.js";
import { RoiLayer } from "./roi.js";
import { createState } from "./state.js";

// ==========================================================================
// Configuration
// ==========================================================================

// Same-origin by default; `?service=http://host:port` points the console at
// a service running elsewhere.
const baseUrl = new URLSearchParams(window.location.search).get("service") ?? "";

const state = createState();
const client = new Client(baseUrl);

// ==========================================================================
// DOM handles
// ==========================================================================

function mustFind<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`console markup is missing #${id}`);
  return el as T;
}

const gridRoot = mustFind<HTMLElement>("camera-grid");
const banner = mustFind<HTMLElement>("service-banner");
const stage = mustFind<HTMLElement>("stage");
const stageImg = mustFind<HTMLImageElement>("stage-img");
const stageTitle = mustFind<HTMLElement>("stage-title");
const roiHint = mustFind<HTMLElement>("roi-hint");
const overlay = mustFind<HTMLElement>("track-box");
const strip = mustFind<HTMLElement>("status-strip");
const mapPanel = mustFind<HTMLElement>("map-panel");
const notice = mustFind<HTMLElement>("track-notice");

// ==========================================================================
// Wiring
// ==========================================================================

const grid = new CameraGrid(gridRoot, banner, client, state);

function frameSize(cameraId: string): { w: number; h: number } | null {
  const cam = state.cameras.find((c) => c.id === cameraId);
  if (!cam) return null;
  return { w: cam.resolution[0] ?? 0, h: cam.resolution[1] ?? 0 };
}

// The monitor draws the current box on the stage when it shows the tracked
// camera, otherwise on that camera's grid tile.
function surfaceFor(cameraId: string): SurfaceInfo | null {
  const frame = frameSize(cameraId);
  if (!frame) return null;
  if (cameraId === state.selectedCamera && !stageImg.hidden) {
    const rect = stageImg.getBoundingClientRect();
    return { el: stage, view: { w: rect.width, h: rect.height }, frame };
  }
  const tile = grid.tile(cameraId);
  const body = tile?.querySelector(".tile-body") as HTMLElement | null;
  if (!body) return null;
  const rect = body.getBoundingClientRect();
  return { el: body, view: { w: rect.width, h: rect.height }, frame };
}

const monitor = new TrackMonitor(
  { overlay, strip, mapPanel, notice },
  client,
  state,
  {
    surface: surfaceFor,
    tracked: (cameraId) => grid.setTracked(cameraId),
    searching: (cameraIds) => grid.setSearching(cameraIds),
  },
);

new RoiLayer(stage, roiHint, client, state, () => {
  const cameraId = state.selectedCamera;
  if (cameraId === null) return null;
  const cached = grid.previews.get(cameraId);
  if (!cached || cached.frameIndex === null) return null;
  return { cameraId, frameIndex: cached.frameIndex, png: cached.bytes };
}, { onCreated: (trackId) => monitor.start(trackId) });

// ==========================================================================
// Stage refresh
// ==========================================================================

let stagedFrame: number | null = -1;
let stagedCamera: string | null = null;

function refreshStage(): void {
  const cameraId = state.selectedCamera;
  const cached = cameraId !== null ? grid.previews.get(cameraId) : undefined;
  if (cameraId === null || !cached) {
    stageImg.hidden = true;
    stagedFrame = -1;
    stagedCamera = null;
    stageTitle.textContent = cameraId === null
      ? "select a camera"
      : `${cameraId}: waiting for preview`;
    return;
  }
  if (cameraId === stagedCamera && cached.frameIndex === stagedFrame) return;
  stageImg.src = pngDataUrl(cached.bytes);
  stageImg.hidden = false;
  stagedCamera = cameraId;
  stagedFrame = cached.frameIndex;
  stageTitle.textContent = `${cameraId}, frame ${cached.frameIndex}`;
}

grid.onSelect = () => refreshStage();
window.setInterval(refreshStage, state.pollMs);

grid.start();
refreshStage();
