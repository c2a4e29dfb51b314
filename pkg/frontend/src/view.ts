/**
 * DOM projection of the session state.
 *
 * Typed against minimal structural interfaces so the rendering rules
 * (plain-text sentence, RTL direction, disabled controls while loading)
 * are testable without a browser.
 */

import { SessionState } from "./session.js";

export interface ElementLike {
  textContent: string | null;
  hidden: boolean;
  setAttribute(name: string, value: string): void;
}

export interface ControlLike {
  disabled: boolean;
}

export interface ViewElements {
  signIn: ElementLike;
  taskCard: ElementLike;
  sentence: ElementLike;
  category: ElementLike;
  doneView: ElementLike;
  /** Wrapper holding the error text and the retry button. */
  errorBanner: ElementLike;
  errorText: ElementLike;
  notice: ElementLike;
  voteCount: ElementLike;
  yesButton: ControlLike;
  noButton: ControlLike;
}

export function render(state: SessionState, el: ViewElements): void {
  el.signIn.hidden = state.phase !== "signed_out";
  el.taskCard.hidden = !(state.phase === "task" && state.task !== null);
  el.doneView.hidden = state.phase !== "done";

  if (state.task) {
    // plain text only: annotator-facing tweets must never be parsed as markup
    el.sentence.textContent = state.task.text;
    el.sentence.setAttribute("dir", "rtl");
    el.sentence.setAttribute("lang", "ar");
    el.category.textContent = state.task.category;
  } else {
    el.sentence.textContent = "";
    el.category.textContent = "";
  }

  el.errorBanner.hidden = state.errorMessage === null;
  el.errorText.textContent = state.errorMessage ?? "";
  el.notice.hidden = state.notice === null;
  el.notice.textContent = state.notice ?? "";
  el.voteCount.textContent = String(state.votesSubmitted);

  const votable = state.phase === "task";
  el.yesButton.disabled = !votable;
  el.noButton.disabled = !votable;
}
