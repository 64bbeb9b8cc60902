/** DOM wiring: login screen, side-by-side pair view, done screen. */

import {
  ApiClient,
  ApiError,
  CHOICES,
  DIMENSIONS,
  type Choice,
  type Dimension,
  type Locale,
  type PairPayload,
} from "./api.js";
import { STRINGS, choiceLabel } from "./i18n.js";
import { SessionState } from "./state.js";

const api = new ApiClient("");
const state = new SessionState();
let locale: Locale = "en";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function show(id: string, visible: boolean): void {
  el(id).style.display = visible ? "" : "none";
}

function setBanner(message: string | null): void {
  const banner = el("banner");
  banner.textContent = message ?? "";
  banner.style.display = message ? "" : "none";
}

function renderChrome(): void {
  const t = STRINGS[locale];
  el("app-title").textContent = t.appTitle;
  el<HTMLLabelElement>("annotator-label").textContent = t.annotatorId;
  el<HTMLLabelElement>("password-label").textContent = t.password;
  el<HTMLButtonElement>("login-button").textContent = t.signIn;
  el("criteria-heading").textContent = t.criteriaHeading;
  el("instructions").textContent = t.instructions;
  el<HTMLButtonElement>("submit-button").textContent = t.submit;
}

function renderScreens(): void {
  show("login-screen", state.screen === "login");
  show("pair-screen", state.screen === "pair");
  show("done-screen", state.screen === "done");
}

function renderStoryTabs(pair: PairPayload): void {
  const t = STRINGS[locale];
  const active = state.activeStory;
  const side = active === "A" ? pair.story_a : pair.story_b;
  el("story-text").textContent = side.text;
  el("story-word-count").textContent = `${side.word_count} ${t.words}`;
  el<HTMLButtonElement>("tab-a").textContent = `${t.storyA} (${pair.story_a.word_count} ${t.words})`;
  el<HTMLButtonElement>("tab-b").textContent = `${t.storyB} (${pair.story_b.word_count} ${t.words})`;
  el("tab-a").classList.toggle("active", active === "A");
  el("tab-b").classList.toggle("active", active === "B");
}

function renderPair(): void {
  const pair = state.pair;
  if (!pair) return;
  const t = STRINGS[locale];
  el("setting-label").textContent = `${t.setting}: ${pair.setting}`;
  el("progress-label").textContent = t.progress(state.completed, state.assigned);
  renderStoryTabs(pair);

  const criteria = el("criteria-list");
  criteria.innerHTML = "";
  for (const dimension of DIMENSIONS) {
    const row = document.createElement("div");
    row.className = "criterion";

    const header = document.createElement("div");
    header.className = "criterion-name";
    header.textContent = dimension;
    row.appendChild(header);

    const description = document.createElement("p");
    description.className = "criterion-desc";
    description.textContent = pair.criteria[dimension] ?? "";
    row.appendChild(description);

    const buttons = document.createElement("div");
    buttons.className = "choice-row";
    for (const choice of CHOICES) {
      const button = document.createElement("button");
      button.type = "button";
      button.textContent = choiceLabel(choice, locale);
      button.className = "choice";
      if (state.selections.get(dimension as Dimension) === choice) {
        button.classList.add("selected");
      }
      button.addEventListener("click", () => {
        state.selections.setChoice(dimension as Dimension, choice as Choice);
        renderPair();
      });
      buttons.appendChild(button);
    }
    row.appendChild(buttons);
    criteria.appendChild(row);
  }

  el<HTMLButtonElement>("submit-button").disabled = !state.canSubmit();
}

function renderDone(): void {
  const t = STRINGS[locale];
  el("done-heading").textContent = t.doneHeading;
  el("done-body").textContent = t.doneBody(state.completed);
  el("done-progress").textContent = t.progress(state.completed, state.assigned);
}

function render(): void {
  renderChrome();
  renderScreens();
  if (state.screen === "pair") renderPair();
  if (state.screen === "done") renderDone();
}

async function loadNext(): Promise<void> {
  const next = await api.next();
  if (next.done) {
    state.showDone(next.completed, next.assigned);
  } else {
    state.showPair(next);
  }
  render();
}

async function onLogin(event: Event): Promise<void> {
  event.preventDefault();
  setBanner(null);
  const annotator = el<HTMLInputElement>("annotator-input").value.trim();
  const password = el<HTMLInputElement>("password-input").value;
  try {
    await api.login(annotator, password, locale);
    await loadNext();
  } catch (err) {
    setBanner(err instanceof ApiError && err.status === 401
      ? STRINGS[locale].loginFailed
      : STRINGS[locale].networkError);
  }
}

async function onSubmit(): Promise<void> {
  const pair = state.pair;
  if (!pair || !state.canSubmit()) return;
  setBanner(null);
  try {
    await api.submitVerdict(pair.pair_id, state.selections.toVerdict());
    await loadNext();
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      // already recorded server-side: skip forward
      setBanner(STRINGS[locale].alreadySubmitted);
      await loadNext();
    } else {
      setBanner(STRINGS[locale].networkError);
    }
  }
}

function onToggleLocale(): void {
  locale = locale === "en" ? "zh" : "en";
  el<HTMLButtonElement>("locale-toggle").textContent = locale === "en" ? "中文" : "English";
  // criteria text is served per-locale: refetch when mid-pair
  if (state.screen === "pair") {
    void loadNext();
  } else {
    render();
  }
}

export function start(): void {
  el<HTMLFormElement>("login-form").addEventListener("submit", (e) => void onLogin(e));
  el<HTMLButtonElement>("submit-button").addEventListener("click", () => void onSubmit());
  el<HTMLButtonElement>("tab-a").addEventListener("click", () => {
    state.activeStory = "A";
    renderPair();
  });
  el<HTMLButtonElement>("tab-b").addEventListener("click", () => {
    state.activeStory = "B";
    renderPair();
  });
  el<HTMLButtonElement>("locale-toggle").addEventListener("click", onToggleLocale);
  render();
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", start);
}
