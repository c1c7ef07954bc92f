/**
 * Pure HTML builders for the review screen. main.ts injects the markup and
 * handles events by delegation, so everything here stays a function of the
 * queue view.
 */

import { ApiClient, Proposal } from "./api.js";
import { QueueView } from "./queue.js";
import { stripUrls } from "./scrub.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderBanner(view: QueueView): string {
  if (!view.connected) {
    return `<div class="banner error">Service unreachable.
      <button data-action="retry">Retry</button></div>`;
  }
  if (view.notice) {
    return `<div class="banner notice">${escapeHtml(view.notice)}</div>`;
  }
  return "";
}

export function renderProgress(view: QueueView): string {
  return `<div class="progress">
    <span class="count">${view.reviewed} / ${view.total} reviewed</span>
    <span class="pending">${view.queue.length} pending</span>
  </div>`;
}

export function renderProposalCard(api: ApiClient, proposal: Proposal, flowGap: number): string {
  const urls = stripUrls(api, proposal, flowGap);
  const thumbs = urls.thumbnails
    .map(
      (src, i) =>
        `<figure><img src="${src}" alt="frame"><figcaption>${["start", "apex?", "end"][i]}</figcaption></figure>`,
    )
    .join("");
  const stripCells = urls.strip
    .map((src, i) => `<img class="strip-frame" data-strip-index="${i}" src="${src}" alt="">`)
    .join("");
  return `<article class="proposal" data-proposal-id="${escapeHtml(proposal.id)}">
    <header>
      <strong>${escapeHtml(proposal.video_id)}</strong>
      frames ${proposal.start}&ndash;${proposal.end}
      <span class="confidence">confidence ${proposal.confidence.toFixed(3)}</span>
    </header>
    <div class="thumbs">${thumbs}</div>
    <div class="strip" data-strip>${stripCells}</div>
    <footer>
      <button class="accept" data-action="accept" data-id="${escapeHtml(proposal.id)}">Accept</button>
      <button class="reject" data-action="reject" data-id="${escapeHtml(proposal.id)}">Reject</button>
    </footer>
  </article>`;
}

export function renderModelPanel(view: QueueView): string {
  const version = view.model ? `v${view.model.version}` : "none yet";
  const loss = view.lastRetrain
    ? `<span class="loss">loss ${view.lastRetrain.first_loss.toFixed(4)} &rarr; ${view.lastRetrain.final_loss.toFixed(4)}
       (${view.lastRetrain.n_samples} samples, +${view.lastRetrain.n_accepted}/-${view.lastRetrain.n_rejected})</span>`
    : "";
  const busy = view.retraining ? " disabled" : "";
  const gated = view.canRetrain ? "" : " disabled";
  return `<section class="model-panel">
    <span>Model: <strong>${version}</strong></span>
    ${loss}
    <button data-action="retrain"${busy}${gated}>
      ${view.retraining ? "Retraining&hellip;" : "Retrain with feedback"}
    </button>
  </section>`;
}

export function renderApp(api: ApiClient, view: QueueView, flowGapOf: (videoId: string) => number): string {
  if (view.loading && view.total === 0) {
    return `${renderBanner(view)}<p class="loading">Loading proposals&hellip;</p>`;
  }
  const body = view.done
    ? `<p class="done">All proposals reviewed. Nice work.</p>`
    : view.queue.map((p) => renderProposalCard(api, p, flowGapOf(p.video_id))).join("");
  return `
    ${renderBanner(view)}
    ${renderModelPanel(view)}
    ${renderProgress(view)}
    <main class="queue">${body}</main>
  `;
}
