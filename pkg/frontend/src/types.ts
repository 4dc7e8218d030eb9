export interface SpeakerInfo {
  name: string;
  entry_count: number;
  enrolled_at: string | null;
}

export interface FeedEvent {
  seq: number;
  timestamp: string;
  type: "identification" | "enrollment";
  decision?: "known" | "unknown";
  speaker?: string | null;
  scores?: Record<string, number>;
  pending_id?: string;
  entry_count?: number;
}

export interface IdentifyResponse {
  decision: "known" | "unknown";
  speaker: string | null;
  scores: Record<string, number>;
  pending_id?: string;
}

export interface EnrollResponse {
  speaker: string;
  entry_count: number;
}

export interface Prompt {
  pendingId: string;
  scores: Record<string, number>;
  seq: number;
}

export type ConnectionStatus = "connecting" | "open" | "reconnecting";
