/**
 * DOM wiring for the labeling console: poll the service, render the pending
 * batch as cards with one button per class, accept digit-key shortcuts, and
 * keep the progress bar and learning curve live.
 */

import { LabelClient, QueryCard } from "./api.js";
import { renderCurveSvg } from "./chart.js";
import { SessionStore } from "./session.js";

const client = new LabelClient("");
const store = new SessionStore(client);

const el = {
  banner: document.getElementById("banner") as HTMLElement,
  progressText: document.getElementById("progress-text") as HTMLElement,
  progressFill: document.getElementById("progress-fill") as HTMLElement,
  iteration: document.getElementById("iteration") as HTMLElement,
  cards: document.getElementById("cards") as HTMLElement,
  chart: document.getElementById("chart") as HTMLElement,
  message: document.getElementById("message") as HTMLElement,
};

let flashTimer: ReturnType<typeof setTimeout> | null = null;

function flash(text: string, kind: "ok" | "err"): void {
  el.message.textContent = text;
  el.message.className = kind;
  if (flashTimer) clearTimeout(flashTimer);
  flashTimer = setTimeout(() => {
    el.message.textContent = "";
    el.message.className = "";
  }, 4000);
}

async function submit(card: QueryCard, label: number): Promise<void> {
  const result = await store.submit(card.instance_id, label);
  if (result.ok) {
    flash(`labeled #${card.instance_id} as "${store.view.classes[label]}"`, "ok");
  } else {
    flash(`#${card.instance_id}: ${result.message} (${result.status || "network"})`, "err");
  }
  render();
}

function cardNode(card: QueryCard, classes: string[], isFirst: boolean): HTMLElement {
  const div = document.createElement("div");
  div.className = isFirst ? "card focused" : "card";
  const scoreBits: string[] = [];
  if (card.score !== undefined) scoreBits.push(`score ${card.score.toFixed(3)}`);
  if (card.distinctiveness !== undefined)
    scoreBits.push(`distinct ${card.distinctiveness.toFixed(3)}`);
  if (card.uncertainty !== undefined)
    scoreBits.push(`uncertain ${card.uncertainty.toFixed(3)}`);

  const ref = document.createElement("div");
  ref.className = "ref";
  if (/\.(png|jpe?g|gif|svg|webp)$/i.test(card.item_ref)) {
    const img = document.createElement("img");
    img.src = card.item_ref;
    img.alt = card.item_ref;
    ref.appendChild(img);
  } else {
    ref.textContent = card.item_ref;
  }
  div.appendChild(ref);

  const meta = document.createElement("div");
  meta.className = "meta";
  meta.textContent = `#${card.instance_id}` + (scoreBits.length ? ` · ${scoreBits.join(" · ")}` : "");
  div.appendChild(meta);

  const buttons = document.createElement("div");
  buttons.className = "buttons";
  classes.forEach((name, k) => {
    const btn = document.createElement("button");
    btn.textContent = k < 9 && isFirst ? `${name} (${k + 1})` : name;
    btn.addEventListener("click", () => void submit(card, k));
    buttons.appendChild(btn);
  });
  div.appendChild(buttons);
  return div;
}

function render(): void {
  const view = store.view;
  el.banner.style.display = view.error ? "block" : "none";
  if (view.error) {
    el.banner.textContent = `connection trouble: ${view.error} — retrying`;
  }
  el.iteration.textContent = `iteration ${view.iteration}`;
  el.progressText.textContent = `${view.queried} / ${view.budget} labels`;
  const pct = view.budget > 0 ? (100 * view.queried) / view.budget : 0;
  el.progressFill.style.width = `${pct.toFixed(1)}%`;

  el.cards.replaceChildren();
  if (view.cards.length === 0) {
    const idle = document.createElement("p");
    idle.className = "idle";
    idle.textContent = view.connected
      ? "waiting for the next batch…"
      : "waiting for the labeling service…";
    el.cards.appendChild(idle);
  } else {
    view.cards.forEach((card, i) => {
      el.cards.appendChild(cardNode(card, view.classes, i === 0));
    });
  }
  el.chart.innerHTML = renderCurveSvg(view.history);
}

document.addEventListener("keydown", (ev) => {
  const digit = Number.parseInt(ev.key, 10);
  if (Number.isNaN(digit) || digit < 1) return;
  const view = store.view;
  const first = view.cards[0];
  if (first && digit <= view.classes.length) {
    void submit(first, digit - 1);
  }
});

async function pollLoop(): Promise<void> {
  // refresh forever; the store widens the delay after failures
  await store.refresh();
  render();
  setTimeout(() => void pollLoop(), store.nextDelayMs());
}

void pollLoop();
