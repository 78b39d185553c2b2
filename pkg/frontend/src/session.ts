/**
 * Session state for one annotator: the pending cards, loop progress, and
 * metric history, all reconstructed from the service on every poll so a
 * refresh (or server restart) loses nothing.
 */

import { ApiError, LabelClient, MetricPoint, QueryCard } from "./api.js";

export interface SessionView {
  classes: string[];
  cards: QueryCard[];
  iteration: number;
  queried: number;
  budget: number;
  history: MetricPoint[];
  error: string | null;
  connected: boolean;
}

export interface SubmitResult {
  ok: boolean;
  status: number;
  message: string;
}

export class SessionStore {
  private classes: string[] = [];
  private cards: QueryCard[] = [];
  private iteration = 0;
  private queried = 0;
  private budget = 0;
  private history: MetricPoint[] = [];
  private error: string | null = null;
  private connected = false;
  private failures = 0;

  constructor(
    private readonly client: LabelClient,
    private readonly baseIntervalMs = 1000,
    private readonly maxBackoffFactor = 8,
  ) {}

  get view(): SessionView {
    return {
      classes: [...this.classes],
      cards: [...this.cards],
      iteration: this.iteration,
      queried: this.queried,
      budget: this.budget,
      history: [...this.history],
      error: this.error,
      connected: this.connected,
    };
  }

  /** Poll delay doubles per consecutive failure, capped, and resets on success. */
  nextDelayMs(): number {
    const factor = Math.min(2 ** this.failures, this.maxBackoffFactor);
    return this.baseIntervalMs * factor;
  }

  /** One poll: queries + status (+ classes until known). State survives errors. */
  async refresh(): Promise<void> {
    try {
      if (this.classes.length === 0) {
        this.classes = await this.client.getClasses();
      }
      const queries = await this.client.getQueries();
      const status = await this.client.getStatus();
      this.cards = queries.pending;
      this.iteration = status.iteration;
      // progress never decreases across polls
      this.queried = Math.max(this.queried, status.queried);
      this.budget = status.budget;
      this.history = status.history;
      this.error = null;
      this.connected = true;
      this.failures = 0;
    } catch (err) {
      this.failures += 1;
      this.connected = false;
      this.error = err instanceof Error ? err.message : String(err);
    }
  }

  /**
   * Submit a label for a rendered card. On success the card disappears
   * immediately; on 409/422 the card stays and the error is surfaced.
   */
  async submit(instanceId: number, label: number): Promise<SubmitResult> {
    if (!this.cards.some((c) => c.instance_id === instanceId)) {
      return { ok: false, status: 0, message: `instance ${instanceId} is not displayed` };
    }
    try {
      await this.client.submitLabel(instanceId, label);
      this.cards = this.cards.filter((c) => c.instance_id !== instanceId);
      return { ok: true, status: 200, message: "accepted" };
    } catch (err) {
      if (err instanceof ApiError) {
        return { ok: false, status: err.status, message: err.detail };
      }
      this.connected = false;
      this.error = err instanceof Error ? err.message : String(err);
      return { ok: false, status: 0, message: this.error };
    }
  }
}
