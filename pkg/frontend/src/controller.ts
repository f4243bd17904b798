/** Review-session state machine, free of any DOM dependency.
 *
 * Flow: fetch next task, render, vote by click or key (y/n/u), advance.
 * The view leaves the voting screen the moment a vote is cast, but the
 * vote only counts as recorded once the server acknowledges it; a failed
 * POST rolls the task back with a retry banner. One vote is in flight at
 * a time.
 */

import type {
  AnnotationApi,
  Progress,
  TaskPayload,
  Verdict,
} from "./api.js";

export type Phase =
  | "idle"
  | "loading"
  | "reviewing"
  | "submitting"
  | "complete";

export interface SessionState {
  phase: Phase;
  annotator: string;
  task: TaskPayload | null;
  /** Failure banner; retry() repeats the step that failed. */
  banner: string | null;
  /** Transient informational notice (e.g. a duplicate vote). */
  notice: string | null;
  /** Votes the server has confirmed persisting in this session. */
  acknowledged: number;
  progress: Progress | null;
}

export const KEY_VERDICTS: Record<string, Verdict> = {
  y: "legitimate",
  n: "not_legitimate",
  u: "unsure",
};

type FailedStep =
  | { kind: "vote"; task: TaskPayload; verdict: Verdict }
  | { kind: "advance" };

export type Listener = (state: SessionState) => void;

export class ReviewSession {
  private state: SessionState;
  private readonly listeners: Listener[] = [];
  private voteInFlight = false;
  private failed: FailedStep | null = null;

  constructor(
    private readonly api: AnnotationApi,
    annotator: string,
  ) {
    if (!annotator) {
      throw new Error("annotator id is required");
    }
    this.state = {
      phase: "idle",
      annotator,
      task: null,
      banner: null,
      notice: null,
      acknowledged: 0,
      progress: null,
    };
  }

  getState(): SessionState {
    return this.state;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private set(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  async start(): Promise<void> {
    try {
      this.set({ progress: await this.api.progress() });
    } catch {
      // progress counters are cosmetic; the task fetch decides failure
    }
    await this.advance();
  }

  /** Keyboard entry point; keys other than y/n/u are ignored. */
  keydown(key: string): Promise<void> {
    const verdict = KEY_VERDICTS[key.toLowerCase()];
    if (!verdict) {
      return Promise.resolve();
    }
    return this.castVote(verdict);
  }

  async castVote(verdict: Verdict): Promise<void> {
    if (
      this.state.phase !== "reviewing" ||
      this.voteInFlight ||
      this.state.task === null
    ) {
      return;
    }
    const task = this.state.task;
    this.voteInFlight = true;
    this.set({ phase: "submitting", notice: null, banner: null });
    try {
      const result = await this.api.vote(
        task.task_id,
        this.state.annotator,
        verdict,
      );
      this.voteInFlight = false;
      if (result.kind === "already_voted") {
        this.set({ notice: "already voted on this task" });
      } else {
        this.set({ acknowledged: this.state.acknowledged + 1 });
        await this.refreshProgress();
      }
    } catch (err) {
      // roll back: the same task returns, with a retry banner
      this.voteInFlight = false;
      this.failed = { kind: "vote", task, verdict };
      this.set({ phase: "reviewing", task, banner: describeFailure(err) });
      return;
    }
    await this.advance();
  }

  /** Repeat whichever step last failed (the vote, or the queue fetch). */
  async retry(): Promise<void> {
    const failed = this.failed;
    if (!failed) {
      return;
    }
    this.failed = null;
    if (failed.kind === "vote") {
      this.set({ phase: "reviewing", task: failed.task, banner: null });
      await this.castVote(failed.verdict);
    } else {
      this.set({ banner: null });
      await this.advance();
    }
  }

  private async advance(): Promise<void> {
    this.set({ phase: "loading" });
    try {
      const task = await this.api.nextTask(this.state.annotator);
      if (task === null) {
        this.set({ phase: "complete", task: null });
      } else {
        this.set({ phase: "reviewing", task });
      }
    } catch (err) {
      this.failed = { kind: "advance" };
      this.set({ phase: "idle", task: null, banner: describeFailure(err) });
    }
  }

  private async refreshProgress(): Promise<void> {
    try {
      this.set({ progress: await this.api.progress() });
    } catch {
      // stale counters are acceptable; never block the queue on them
    }
  }
}

function describeFailure(err: unknown): string {
  const detail = err instanceof Error ? err.message : String(err);
  return `request failed: ${detail}`;
}
