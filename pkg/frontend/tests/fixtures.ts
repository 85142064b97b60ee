/**
 * Recorded responses from a live claimsearch service run over the
 * bundled fixture corpus (see tests/recorded.json). The UI tests run
 * against these payloads, never against a live backend.
 */

import { DocDetail, HealthResponse, SearchResponse } from '../src/types.js';
import recordedJson from './recorded.json';

interface Recorded {
  claim_text: string;
  search_plain: SearchResponse;
  search_rerank: SearchResponse;
  doc_with_overlay: DocDetail;
  doc_stale_overlay: DocDetail;
  health: HealthResponse;
}

export const recorded = recordedJson as unknown as Recorded;

export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

export interface RecordedCall {
  url: string;
  init?: RequestInit;
  body?: unknown;
}

/** Queue-backed fetch stub that records every request it serves. */
export function fetchStub(responses: (() => Response | Promise<Response>)[]) {
  const calls: RecordedCall[] = [];
  const fetchFn = (url: string, init?: RequestInit): Promise<Response> => {
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    calls.push({ url, init, body });
    const next = responses.shift();
    if (!next) {
      throw new Error(`unexpected request to ${url}`);
    }
    return Promise.resolve(next());
  };
  return { fetchFn, calls };
}
