/**
 * Frame-strip helpers: which frames of a proposal to prefetch and show.
 *
 * The strip samples every flow-gap-th frame (the same stride the features
 * use), so scrubbing steps through the frames that actually fed the model.
 * Thumbnails show the start, the apex estimate (interval midpoint), and the
 * last frame.
 */

import { ApiClient, Proposal } from "./api.js";

export interface FrameStrip {
  thumbnails: number[]; // start, midpoint, last
  strip: number[]; // every gap-th frame inside [start, end)
}

export function stripIndices(proposal: Proposal, flowGap: number): FrameStrip {
  const gap = Math.max(1, Math.floor(flowGap));
  const { start, end } = proposal;
  const last = end - 1;
  const mid = Math.floor((start + last) / 2);
  const strip: number[] = [];
  for (let f = start; f < end; f += gap) strip.push(f);
  if (strip[strip.length - 1] !== last) strip.push(last);
  return { thumbnails: [start, mid, last], strip };
}

export function stripUrls(api: ApiClient, proposal: Proposal, flowGap: number): {
  thumbnails: string[];
  strip: string[];
} {
  const frames = stripIndices(proposal, flowGap);
  return {
    thumbnails: frames.thumbnails.map((f) => api.frameUrl(proposal.video_id, f)),
    strip: frames.strip.map((f) => api.frameUrl(proposal.video_id, f)),
  };
}

/** Warm the browser cache so scrubbing is instant. */
export function prefetch(urls: string[], createImage: () => { src: string } = () => new Image()): void {
  for (const url of urls) {
    const img = createImage();
    img.src = url;
  }
}
