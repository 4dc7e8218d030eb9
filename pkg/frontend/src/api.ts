// Thin typed client for the identification service. All knowledge of
// URLs and status codes lives here.

import type { EnrollResponse, IdentifyResponse, SpeakerInfo } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

let baseUrl = "";

export function setBaseUrl(url: string): void {
  baseUrl = url;
}

async function unwrap<T>(res: Response): Promise<T> {
  if (res.ok) return (await res.json()) as T;
  let message = `HTTP ${res.status}`;
  try {
    const body = await res.json();
    if (body && typeof body.error === "string") message = body.error;
  } catch {
    // non-JSON error body; keep the status message
  }
  throw new ApiError(res.status, message);
}

export async function identifyClip(
  wav: ArrayBuffer | Blob,
  crop?: number,
): Promise<IdentifyResponse> {
  const query = crop !== undefined ? `?crop=${crop}` : "";
  const res = await fetch(`${baseUrl}/api/identify${query}`, {
    method: "POST",
    headers: { "content-type": "audio/wav" },
    body: wav,
  });
  return unwrap<IdentifyResponse>(res);
}

export async function enrollPending(
  name: string,
  pendingId: string,
): Promise<EnrollResponse> {
  const res = await fetch(`${baseUrl}/api/enroll`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ name, pending_id: pendingId }),
  });
  return unwrap<EnrollResponse>(res);
}

export async function enrollAudio(
  name: string,
  wav: ArrayBuffer | Blob,
): Promise<EnrollResponse> {
  const res = await fetch(
    `${baseUrl}/api/enroll?name=${encodeURIComponent(name)}`,
    {
      method: "POST",
      headers: { "content-type": "audio/wav" },
      body: wav,
    },
  );
  return unwrap<EnrollResponse>(res);
}

export async function fetchSpeakers(): Promise<SpeakerInfo[]> {
  const res = await fetch(`${baseUrl}/api/speakers`);
  return unwrap<SpeakerInfo[]>(res);
}
