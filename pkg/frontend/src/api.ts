/** Thin typed client for the annotation service HTTP API. */

import type {
  AnnotationDoc,
  AnnotationEnvelope,
  DetectionDoc,
  Heuristic,
  ImageSummary,
  PreviewResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

/** A stale-revision write was rejected; the caller should offer a reload. */
export class ConflictError extends ApiError {
  constructor(detail: string) {
    super(409, detail);
  }
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: string };
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  if (response.status === 409) throw new ConflictError(detail);
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    await raiseForStatus(response);
    return response;
  }

  async listImages(): Promise<ImageSummary[]> {
    const response = await this.request("/api/images");
    return (await response.json()) as ImageSummary[];
  }

  async getAnnotations(imageId: string): Promise<AnnotationEnvelope> {
    const response = await this.request(`/api/images/${imageId}/annotations`);
    return (await response.json()) as AnnotationEnvelope;
  }

  /** Returns the new revision; throws ConflictError when `revision` is stale. */
  async putAnnotations(
    imageId: string, revision: number, annotation: AnnotationDoc,
  ): Promise<number> {
    const response = await this.request(`/api/images/${imageId}/annotations`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ revision, annotation }),
    });
    const body = (await response.json()) as { revision: number };
    return body.revision;
  }

  imageFileUrl(imageId: string): string {
    return `${this.baseUrl}/api/images/${imageId}/file`;
  }

  async decidePreview(
    imageId: string, detections: DetectionDoc[], heuristic: Heuristic, tau: number,
  ): Promise<PreviewResponse> {
    const response = await this.request("/api/decide-preview", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ image_id: imageId, detections, heuristic, tau }),
    });
    return (await response.json()) as PreviewResponse;
  }
}
