/**
 * Review-queue store.
 *
 * The store keeps the last server state plus the set of in-flight decisions;
 * everything the UI renders is derived from those two pieces, so the view is
 * a pure function of (server state, in-flight actions). A decision is shown
 * as final only once the server has acknowledged it; optimistic removal from
 * the pending queue rolls back on conflict.
 */

import { ApiClient, ApiError, ModelInfo, Proposal, RetrainResult, VideoInfo } from "./api.js";

export interface QueueView {
  connected: boolean;
  loading: boolean;
  videos: VideoInfo[];
  /** pending proposals, confidence-descending, minus optimistic removals */
  queue: Proposal[];
  /** reviewed/total progress counters */
  reviewed: number;
  total: number;
  done: boolean;
  notice: string | null;
  model: ModelInfo | null;
  retraining: boolean;
  lastRetrain: RetrainResult | null;
  canRetrain: boolean;
}

export type Listener = () => void;

export class ReviewStore {
  private videos: VideoInfo[] = [];
  private proposals = new Map<string, Proposal>();
  private inflight = new Map<string, "accept" | "reject">();
  private connected = true;
  private loading = false;
  private notice: string | null = null;
  private model: ModelInfo | null = null;
  private retraining = false;
  private lastRetrain: RetrainResult | null = null;
  private decisionsSinceRetrain = 0;
  private listeners: Listener[] = [];

  constructor(
    private readonly api: ApiClient,
    readonly annotator: string = "anonymous",
  ) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  /** Pull the full server state; the single source of truth. */
  async refresh(): Promise<void> {
    this.loading = true;
    this.emit();
    try {
      const videos = await this.api.listVideos();
      const all = await Promise.all(videos.map((v) => this.api.listProposals(v.video_id)));
      this.videos = videos;
      this.proposals = new Map(all.flat().map((p) => [p.id, p]));
      this.connected = true;
      try {
        this.model = await this.api.modelInfo();
      } catch (err) {
        if (err instanceof ApiError && err.status === 404) {
          this.model = null; // no model trained yet
        } else {
          throw err;
        }
      }
    } catch {
      this.connected = false;
    } finally {
      this.loading = false;
      this.emit();
    }
  }

  /**
   * Submit a decision. Optimistically removes the proposal from the queue;
   * at most one mutation is in flight per proposal, so a double click makes
   * exactly one request. On conflict the optimistic update rolls back and
   * the store resyncs with the server.
   */
  async decide(proposalId: string, decision: "accept" | "reject"): Promise<void> {
    const proposal = this.proposals.get(proposalId);
    if (!proposal || proposal.status !== "pending") return;
    if (this.inflight.has(proposalId)) return;

    this.inflight.set(proposalId, decision);
    this.notice = null;
    this.emit();
    try {
      await this.api.postDecision(proposalId, decision, this.annotator);
      // acknowledged: commit to the server-confirmed status
      this.proposals.set(proposalId, {
        ...proposal,
        status: decision === "accept" ? "accepted" : "rejected",
      });
      this.decisionsSinceRetrain += 1;
    } catch (err) {
      // roll back the optimistic removal
      if (err instanceof ApiError && err.status === 409) {
        this.notice = "Already decided elsewhere; refreshed from server.";
        await this.refresh();
      } else {
        this.notice = err instanceof Error ? err.message : "decision failed";
        this.connected = !(err instanceof TypeError);
      }
    } finally {
      this.inflight.delete(proposalId);
      this.emit();
    }
  }

  /** Kick off retraining; requires at least one decision since the last run. */
  async triggerRetrain(): Promise<void> {
    if (!this.view().canRetrain) return;
    this.retraining = true;
    this.notice = null;
    this.emit();
    try {
      const result = await this.api.retrain({});
      this.lastRetrain = result;
      this.decisionsSinceRetrain = 0;
      try {
        this.model = await this.api.modelInfo();
      } catch {
        // keep the previous panel contents if the follow-up fetch fails
      }
    } catch (err) {
      // old model version stays displayed
      this.notice =
        err instanceof Error ? `Retrain failed: ${err.message}` : "Retrain failed";
    } finally {
      this.retraining = false;
      this.emit();
    }
  }

  view(): QueueView {
    const all = [...this.proposals.values()];
    const queue = all
      .filter((p) => p.status === "pending" && !this.inflight.has(p.id))
      .sort(
        (a, b) =>
          b.confidence - a.confidence ||
          a.video_id.localeCompare(b.video_id) ||
          a.start - b.start,
      );
    const reviewed = all.filter((p) => p.status !== "pending").length;
    return {
      connected: this.connected,
      loading: this.loading,
      videos: this.videos,
      queue,
      reviewed,
      total: all.length,
      done: all.length > 0 && queue.length === 0 && this.inflight.size === 0,
      notice: this.notice,
      model: this.model,
      retraining: this.retraining,
      lastRetrain: this.lastRetrain,
      canRetrain: this.decisionsSinceRetrain >= 1 && !this.retraining,
    };
  }

  videoInfo(videoId: string): VideoInfo | undefined {
    return this.videos.find((v) => v.video_id === videoId);
  }
}
