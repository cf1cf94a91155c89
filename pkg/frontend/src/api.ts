// Typed client for the tracking service. Every request the console makes
// goes through this module; nothing else touches fetch.

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface CameraInfo {
  id: string;
  fov: number[];
  resolution: number[];
  frames_received: number;
  dropped: number;
  last_frame_index: number | null;
}

export interface TrackStatus {
  track_id: string;
  phase: string;
  camera: string | null;
  ticks: number;
  entries: number;
  last_state: string | null;
  last_bbox: Box | null;
}

export interface CreateTrackBody {
  camera_id: string;
  frame_index: number;
  bbox: Box;
  frame_b64: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

/** Network-level failure (service unreachable), as opposed to an HTTP error. */
export class ServiceDownError extends Error {
  constructor(cause: unknown) {
    super(`service unreachable: ${cause}`);
    this.name = "ServiceDownError";
  }
}

async function raiseForStatus(resp: Response): Promise<void> {
  if (resp.ok) return;
  let code = "http_error";
  let detail = resp.statusText;
  try {
    const body = (await resp.json()) as { error?: string; detail?: string };
    if (body.error) code = body.error;
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body, keep the status text
  }
  throw new ApiError(resp.status, code, detail);
}

export class Client {
  constructor(public baseUrl: string = "") {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let resp: Response;
    try {
      resp = await fetch(this.baseUrl + path, init);
    } catch (err) {
      throw new ServiceDownError(err);
    }
    await raiseForStatus(resp);
    return resp;
  }

  async listCameras(): Promise<CameraInfo[]> {
    const resp = await this.request("/api/v1/cameras");
    const body = (await resp.json()) as { cameras: CameraInfo[] };
    return body.cameras;
  }

  /** Latest frame of one camera as PNG bytes; 404 until a frame arrives. */
  async preview(cameraId: string): Promise<Uint8Array> {
    const resp = await this.request(
      `/api/v1/cameras/${encodeURIComponent(cameraId)}/preview`,
    );
    return new Uint8Array(await resp.arrayBuffer());
  }

  async createTrack(body: CreateTrackBody): Promise<string> {
    const resp = await this.request("/api/v1/tracks", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    const out = (await resp.json()) as { track_id: string };
    return out.track_id;
  }

  async trackStatus(trackId: string): Promise<TrackStatus> {
    const resp = await this.request(
      `/api/v1/tracks/${encodeURIComponent(trackId)}`,
    );
    return (await resp.json()) as TrackStatus;
  }

  /** Trajectory map as SVG markup for embedding. */
  async trackMap(trackId: string): Promise<string> {
    const resp = await this.request(
      `/api/v1/tracks/${encodeURIComponent(trackId)}/map`,
    );
    return await resp.text();
  }
}
