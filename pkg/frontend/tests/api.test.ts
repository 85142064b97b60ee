import { describe, expect, it } from 'vitest';

import { ApiClient, ApiError } from '../src/api.js';
import { fetchStub, jsonResponse, recorded } from './fixtures.js';

describe('ApiClient.searchLatest', () => {
  it('posts the request body to /search and returns the payload', async () => {
    const { fetchFn, calls } = fetchStub([() => jsonResponse(recorded.search_plain)]);
    const api = new ApiClient('http://backend:1234', fetchFn);
    const response = await api.searchLatest({ claim_text: 'a claim', k: 10, rerank_n: 0 });
    expect(response).not.toBeNull();
    expect(response!.results.map((r) => r.doc_id)).toEqual(
      recorded.search_plain.results.map((r) => r.doc_id),
    );
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe('http://backend:1234/search');
    expect(calls[0].init?.method).toBe('POST');
    expect(calls[0].body).toEqual({ claim_text: 'a claim', k: 10, rerank_n: 0 });
  });

  it('discards a response that was superseded by a newer search', async () => {
    let releaseFirst: (r: Response) => void = () => {};
    const firstResponse = new Promise<Response>((resolve) => {
      releaseFirst = resolve;
    });
    const { fetchFn } = fetchStub([
      () => firstResponse,
      () => jsonResponse(recorded.search_rerank),
    ]);
    const api = new ApiClient('http://b', fetchFn);
    const first = api.searchLatest({ claim_text: 'one' });
    const second = api.searchLatest({ claim_text: 'two' });
    releaseFirst(jsonResponse(recorded.search_plain));
    expect(await second).not.toBeNull();
    expect(await first).toBeNull(); // superseded: response discarded
  });

  it('maps JSON error bodies onto ApiError', async () => {
    const { fetchFn } = fetchStub([
      () => jsonResponse({ error: 'EmptyClaimRequest', message: 'claim_text is empty' }, 400),
    ]);
    const api = new ApiClient('http://b', fetchFn);
    await expect(api.searchLatest({ claim_text: '' })).rejects.toMatchObject({
      name: 'ApiError',
      status: 400,
      code: 'EmptyClaimRequest',
    });
  });
});

describe('ApiClient.document', () => {
  it('passes the query id through for the overlay', async () => {
    const { fetchFn, calls } = fetchStub([() => jsonResponse(recorded.doc_with_overlay)]);
    const api = new ApiClient('http://b', fetchFn);
    const detail = await api.document('US101', 'cafe01');
    expect(detail.doc_id).toBe('US101');
    expect(calls[0].url).toBe('http://b/doc/US101?query_id=cafe01');
  });

  it('raises ApiError with status 404 for unknown documents', async () => {
    const { fetchFn } = fetchStub([
      () => jsonResponse({ error: 'DocNotFoundHttp', message: 'nope' }, 404),
    ]);
    const api = new ApiClient('http://b', fetchFn);
    let caught: unknown;
    try {
      await api.document('missing');
    } catch (err) {
      caught = err;
    }
    expect(caught).toBeInstanceOf(ApiError);
    expect((caught as ApiError).status).toBe(404);
  });
});

describe('ApiClient.health', () => {
  it('returns the health payload', async () => {
    const { fetchFn } = fetchStub([() => jsonResponse(recorded.health)]);
    const api = new ApiClient('http://b', fetchFn);
    const health = await api.health();
    expect(health.status).toBe('ok');
    expect(health.index_loaded).toBe(true);
  });
});
