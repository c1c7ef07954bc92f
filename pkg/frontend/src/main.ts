/**
 * Bootstrap: wire the store to the DOM with one delegated listener.
 */

import { ApiClient } from "./api.js";
import { ReviewStore } from "./queue.js";
import { renderApp } from "./render.js";
import { prefetch, stripUrls } from "./scrub.js";

const api = new ApiClient("");
const store = new ReviewStore(api, "reviewer");
const root = document.getElementById("app")!;

function render(): void {
  const view = store.view();
  root.innerHTML = renderApp(api, view, (videoId) => store.videoInfo(videoId)?.flow_gap ?? 4);
  // warm the cache for the top of the queue
  for (const proposal of view.queue.slice(0, 3)) {
    const gap = store.videoInfo(proposal.video_id)?.flow_gap ?? 4;
    prefetch(stripUrls(api, proposal, gap).strip);
  }
}

store.subscribe(render);

root.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest("[data-action]");
  if (!(target instanceof HTMLElement)) return;
  const action = target.dataset.action;
  if (action === "accept" || action === "reject") {
    void store.decide(target.dataset.id!, action);
  } else if (action === "retrain") {
    void store.triggerRetrain();
  } else if (action === "retry") {
    void store.refresh();
  }
});

// scrub strips follow the pointer
root.addEventListener("pointermove", (event) => {
  const strip = (event.target as HTMLElement).closest("[data-strip]");
  if (!(strip instanceof HTMLElement)) return;
  const frames = strip.querySelectorAll<HTMLImageElement>(".strip-frame");
  const rect = strip.getBoundingClientRect();
  const idx = Math.min(
    frames.length - 1,
    Math.max(0, Math.floor(((event.clientX - rect.left) / rect.width) * frames.length)),
  );
  frames.forEach((frame, i) => frame.classList.toggle("active", i === idx));
});

void store.refresh();
