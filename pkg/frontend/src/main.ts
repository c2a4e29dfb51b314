/** Browser entry point: wires the session controller to the page. */

import { AnnotationApi } from "./api.js";
import { judgmentForKey } from "./keys.js";
import { SessionController } from "./session.js";
import { render, ViewElements } from "./view.js";

const NAME_KEY = "sarquant.annotator";
const BASE_KEY = "sarquant.apiBase";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function apiBase(): string {
  const fromWindow = (window as { SARQUANT_API_BASE?: string }).SARQUANT_API_BASE;
  return fromWindow ?? localStorage.getItem(BASE_KEY) ?? "";
}

function start(): void {
  const elements: ViewElements = {
    signIn: el("sign-in"),
    taskCard: el("task-card"),
    sentence: el("sentence"),
    category: el("category"),
    doneView: el("done-view"),
    errorBanner: el("error-banner"),
    errorText: el("error-text"),
    notice: el("notice"),
    voteCount: el("vote-count"),
    yesButton: el<HTMLButtonElement>("vote-yes"),
    noButton: el<HTMLButtonElement>("vote-no"),
  };

  const api = new AnnotationApi(apiBase());
  const controller = new SessionController(api, (state) => render(state, elements));

  const nameInput = el<HTMLInputElement>("annotator-name");
  const storedName = localStorage.getItem(NAME_KEY);
  if (storedName) nameInput.value = storedName;

  el<HTMLFormElement>("sign-in-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const name = nameInput.value.trim();
    if (!name) return;
    localStorage.setItem(NAME_KEY, name);
    void controller.signIn(name);
  });

  el<HTMLButtonElement>("vote-yes").addEventListener("click", () => {
    void controller.submit("yes");
  });
  el<HTMLButtonElement>("vote-no").addEventListener("click", () => {
    void controller.submit("no");
  });
  el<HTMLButtonElement>("retry").addEventListener("click", () => {
    void controller.retry();
  });

  document.addEventListener("keydown", (event) => {
    if (document.activeElement === nameInput) return;
    const judgment = judgmentForKey(event.key);
    if (judgment) {
      event.preventDefault();
      void controller.submit(judgment);
    }
  });

  render(controller.getState(), elements);
}

document.addEventListener("DOMContentLoaded", start);
