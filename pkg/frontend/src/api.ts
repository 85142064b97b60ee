/**
 * Fetch client for the claimsearch service.
 *
 * At most one search is in flight: issuing a new one aborts the
 * previous request, and a response that arrives for anything but the
 * newest request is discarded (searchLatest resolves to null).
 */

import { DocDetail, ErrorBody, HealthResponse, SearchRequestBody, SearchResponse } from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function errorFromResponse(response: Response): Promise<ApiError> {
  let code = 'HttpError';
  let message = `request failed with status ${response.status}`;
  try {
    const body = (await response.json()) as ErrorBody;
    if (body && body.error) {
      code = body.error;
      message = body.message || message;
    }
  } catch {
    // non-JSON error body: keep the generic message
  }
  return new ApiError(response.status, code, message);
}

export class ApiClient {
  private searchToken = 0;
  private inflight: AbortController | null = null;

  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  /**
   * POST /search. Supersedes any in-flight search; resolves to null when
   * a newer search was issued before this response arrived.
   */
  async searchLatest(body: SearchRequestBody): Promise<SearchResponse | null> {
    const token = ++this.searchToken;
    if (this.inflight) {
      this.inflight.abort();
    }
    const controller = typeof AbortController !== 'undefined' ? new AbortController() : null;
    this.inflight = controller;
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}/search`, {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(body),
        signal: controller ? controller.signal : undefined,
      });
    } catch (err) {
      if (token !== this.searchToken) {
        return null; // aborted because a newer search superseded it
      }
      throw err;
    }
    if (token !== this.searchToken) {
      return null;
    }
    if (!response.ok) {
      throw await errorFromResponse(response);
    }
    return (await response.json()) as SearchResponse;
  }

  async document(docId: string, queryId?: string | null): Promise<DocDetail> {
    const query = queryId ? `?query_id=${encodeURIComponent(queryId)}` : '';
    const response = await this.fetchFn(
      `${this.baseUrl}/doc/${encodeURIComponent(docId)}${query}`,
    );
    if (!response.ok) {
      throw await errorFromResponse(response);
    }
    return (await response.json()) as DocDetail;
  }

  async health(): Promise<HealthResponse> {
    const response = await this.fetchFn(`${this.baseUrl}/health`);
    if (!response.ok) {
      throw await errorFromResponse(response);
    }
    return (await response.json()) as HealthResponse;
  }
}
