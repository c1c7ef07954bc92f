/**
 * Typed client for the annotation service HTTP/JSON API.
 */

export interface VideoInfo {
  video_id: string;
  subject_id: string;
  fps: number;
  frame_count: number;
  flow_gap: number;
  pending: number;
  decided: number;
}

export type ProposalStatus = "pending" | "accepted" | "rejected";

export interface Proposal {
  id: string;
  video_id: string;
  start: number;
  end: number;
  confidence: number;
  status: ProposalStatus;
}

export interface FeedbackRecord {
  proposal_id: string;
  decision: "accept" | "reject";
  annotator: string;
  timestamp: number;
}

export interface RetrainResult {
  version: number;
  n_samples: number;
  n_positive: number;
  n_accepted: number;
  n_rejected: number;
  first_loss: number;
  final_loss: number;
}

export interface ModelInfo {
  version: number;
  input_dim: number;
  hidden_size: number;
  hyperparams: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  listVideos(): Promise<VideoInfo[]> {
    return this.getJson("/api/videos");
  }

  listProposals(videoId: string, status?: ProposalStatus): Promise<Proposal[]> {
    const query = status ? `?status=${encodeURIComponent(status)}` : "";
    return this.getJson(`/api/videos/${encodeURIComponent(videoId)}/proposals${query}`);
  }

  frameUrl(videoId: string, index: number): string {
    return `${this.baseUrl}/api/videos/${encodeURIComponent(videoId)}/frames/${index}`;
  }

  postDecision(
    proposalId: string,
    decision: "accept" | "reject",
    annotator: string,
  ): Promise<FeedbackRecord> {
    return this.postJson(`/api/proposals/${encodeURIComponent(proposalId)}/decision`, {
      decision,
      annotator,
    });
  }

  retrain(options: { seed?: number; epochs?: number } = {}): Promise<RetrainResult> {
    return this.postJson("/api/retrain", options);
  }

  modelInfo(): Promise<ModelInfo> {
    return this.getJson("/api/model");
  }
}
