/**
 * Annotation session state machine.
 *
 * Every transition is a response to the documented service API; the UI
 * never invents labels or task state on its own.  One request is in
 * flight at a time: submissions and fetches are ignored while pending.
 */

import { ApiError, Task } from "./api.js";

/** The slice of the service API the session needs (AnnotationApi satisfies it). */
export interface AnnotationClient {
  nextTask(annotator: string): Promise<Task | null>;
  submitVote(annotator: string, sentenceId: string, value: boolean): Promise<void>;
}

export type Phase = "signed_out" | "loading" | "task" | "done" | "error";

export interface SessionState {
  annotator: string | null;
  phase: Phase;
  task: Task | null;
  /** Votes this annotator has submitted in this session. */
  votesSubmitted: number;
  /** Transient notice, e.g. after a duplicate-vote recovery. */
  notice: string | null;
  /** Retryable error banner text (network or 5xx). */
  errorMessage: string | null;
}

export type Judgment = "yes" | "no";

type Listener = (state: SessionState) => void;

export class SessionController {
  private state: SessionState = {
    annotator: null,
    phase: "signed_out",
    task: null,
    votesSubmitted: 0,
    notice: null,
    errorMessage: null,
  };
  private pending = false;

  constructor(
    private readonly api: AnnotationClient,
    private readonly listener: Listener = () => {},
  ) {}

  getState(): SessionState {
    return { ...this.state };
  }

  private update(partial: Partial<SessionState>): void {
    this.state = { ...this.state, ...partial };
    this.listener(this.getState());
  }

  /** Start (or resume) a session; fetches the first task. */
  async signIn(name: string): Promise<void> {
    const trimmed = name.trim();
    if (!trimmed) {
      this.update({ errorMessage: "enter an annotator name", phase: "signed_out" });
      return;
    }
    this.update({ annotator: trimmed, errorMessage: null, notice: null });
    await this.fetchNext();
  }

  /** Load the next task; shows the done view on 204. */
  async fetchNext(): Promise<void> {
    if (!this.state.annotator || this.pending) return;
    this.pending = true;
    // a submitted/stale task is cleared before the next fetch
    this.update({ phase: "loading", task: null, errorMessage: null });
    try {
      const task = await this.api.nextTask(this.state.annotator);
      if (task === null) {
        this.update({ phase: "done" });
      } else {
        this.update({ phase: "task", task });
      }
    } catch (error) {
      this.update({ phase: "error", errorMessage: describeError(error) });
    } finally {
      this.pending = false;
    }
  }

  /** Submit a judgment for the displayed task, then auto-advance. */
  async submit(judgment: Judgment): Promise<void> {
    const { annotator, task } = this.state;
    if (!annotator || !task || this.state.phase !== "task" || this.pending) return;
    this.pending = true;
    this.update({ phase: "loading", notice: null });
    try {
      await this.api.submitVote(annotator, task.sentenceId, judgment === "yes");
      this.update({ votesSubmitted: this.state.votesSubmitted + 1, task: null });
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // duplicate vote or sentence already complete: skip forward
        this.update({
          task: null,
          notice:
            error.code === "duplicate_vote"
              ? "already voted on that sentence; moving on"
              : "sentence was completed by others; moving on",
        });
      } else {
        this.update({ phase: "error", errorMessage: describeError(error) });
        this.pending = false;
        return;
      }
    }
    this.pending = false;
    await this.fetchNext();
  }

  /** Re-run the last failed fetch (the retry banner action). */
  async retry(): Promise<void> {
    if (this.state.phase !== "error") return;
    await this.fetchNext();
  }
}

function describeError(error: unknown): string {
  if (error instanceof ApiError) {
    if (error.status === 404) return "sentence vanished from the service (404)";
    if (error.status === 422) return `rejected request: ${error.message} (422)`;
    if (error.status >= 500) return `service error (${error.status}); try again`;
    return `${error.message} (${error.status})`;
  }
  return "cannot reach the annotation service; check the connection";
}
