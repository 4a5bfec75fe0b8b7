import type { RerankHit, SearchHit, VideoGroup } from "../src/types";

export function makeHit(videoId: string, frame: number, fused: number): SearchHit {
  return {
    keyframe_id: `${videoId}:${String(frame).padStart(8, "0")}`,
    video_id: videoId,
    timestamp_ms: frame * 40,
    score_a: fused,
    score_b: fused,
    fused,
  };
}

export function makeGroups(groupCount: number, hitsPerGroup: number): VideoGroup[] {
  const groups: VideoGroup[] = [];
  for (let g = 0; g < groupCount; g++) {
    const videoId = `v${String(g).padStart(4, "0")}`;
    const hits: SearchHit[] = [];
    for (let h = 0; h < hitsPerGroup; h++) {
      hits.push(makeHit(videoId, h * 10, 0.9 - g * 0.0001 - h * 0.01));
    }
    groups.push({ video_id: videoId, best: hits[0].fused, hits });
  }
  return groups;
}

export function asReranked(hit: SearchHit, yes: number, unknown = 0): RerankHit {
  return {
    ...hit,
    yes_count: yes,
    unknown_count: unknown,
    evaluated: true,
    answers: Array.from({ length: 3 }, (_, i) => ({
      value: i < yes ? ("yes" as const) : ("no" as const),
      raw: i < yes ? "yes" : "no",
    })),
  };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
