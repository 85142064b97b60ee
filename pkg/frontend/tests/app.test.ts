import { beforeEach, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { DEFAULT_RERANK_N, initApp } from '../src/app.js';
import { fetchStub, jsonResponse, recorded } from './fixtures.js';

const PAGE = `
  <form id="search-form">
    <textarea id="claim-input"></textarea>
    <input type="checkbox" id="rerank-toggle">
    <input type="number" id="rerank-n" value="">
    <button type="submit">Search</button>
  </form>
  <p id="status"></p>
  <div id="elements"></div>
  <div id="results"></div>
  <div id="doc-view"></div>
`;

function setUp(responses: (() => Response | Promise<Response>)[]) {
  document.body.innerHTML = PAGE;
  const stub = fetchStub(responses);
  const api = new ApiClient('http://backend', stub.fetchFn);
  const handles = initApp(document, api);
  return { handles, calls: stub.calls };
}

function claimInput(): HTMLTextAreaElement {
  return document.getElementById('claim-input') as HTMLTextAreaElement;
}

beforeEach(() => {
  document.body.innerHTML = '';
});

describe('submit', () => {
  it('renders the mocked ranked list in server order', async () => {
    const { handles, calls } = setUp([() => jsonResponse(recorded.search_plain)]);
    claimInput().value = recorded.claim_text;
    await handles.submit();
    const rows = Array.from(document.querySelectorAll('tr.result-row'));
    expect(rows.map((r) => r.getAttribute('data-doc-id'))).toEqual(
      recorded.search_plain.results.map((r) => r.doc_id),
    );
    expect(calls).toHaveLength(1);
    expect(calls[0].body.rerank_n).toBe(0);
    // server-echoed elements are shown
    const elements = Array.from(document.querySelectorAll('li.claim-element'));
    expect(elements.map((e) => e.textContent)).toEqual(recorded.search_plain.elements);
    expect(document.getElementById('status')!.textContent).toContain('documents');
  });

  it('empty claim: inline validation, no request issued', async () => {
    const { handles, calls } = setUp([]);
    claimInput().value = '   ';
    await handles.submit();
    expect(calls).toHaveLength(0);
    expect(document.getElementById('status')!.textContent).toContain('Enter a claim');
  });

  it('shows a busy status while the request is pending', async () => {
    let release: (r: Response) => void = () => {};
    const pending = new Promise<Response>((resolve) => (release = resolve));
    const { handles } = setUp([() => pending]);
    claimInput().value = 'a claim';
    const inflight = handles.submit();
    expect(document.getElementById('status')!.className).toContain('busy');
    release(jsonResponse(recorded.search_plain));
    await inflight;
    expect(document.getElementById('status')!.className).not.toContain('busy');
  });

  it('surfaces server errors inline instead of dropping them', async () => {
    const { handles } = setUp([
      () => jsonResponse({ error: 'IndexNotLoaded', message: 'no index loaded' }, 409),
    ]);
    claimInput().value = 'a claim';
    await handles.submit();
    const status = document.getElementById('status')!;
    expect(status.className).toContain('error');
    expect(status.textContent).toContain('IndexNotLoaded');
    expect(handles.state().error).toContain('no index loaded');
  });

  it('form submission triggers the search', async () => {
    const { calls } = setUp([() => jsonResponse(recorded.search_plain)]);
    claimInput().value = 'a claim';
    const form = document.getElementById('search-form') as HTMLFormElement;
    form.dispatchEvent(new Event('submit', { bubbles: true, cancelable: true }));
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(calls).toHaveLength(1);
  });
});

describe('rerank toggle', () => {
  it('re-issues the search with rerank_n > 0 and renders both scores', async () => {
    const { handles, calls } = setUp([
      () => jsonResponse(recorded.search_plain),
      () => jsonResponse(recorded.search_rerank),
    ]);
    claimInput().value = recorded.claim_text;
    await handles.submit();
    expect(document.querySelectorAll('td.rerank-score')).toHaveLength(0);

    const toggle = document.getElementById('rerank-toggle') as HTMLInputElement;
    toggle.checked = true;
    toggle.dispatchEvent(new Event('change', { bubbles: true }));
    await new Promise((resolve) => setTimeout(resolve, 0));

    expect(calls).toHaveLength(2);
    expect(calls[1].body.rerank_n).toBeGreaterThan(0);
    expect(calls[1].body.rerank_n).toBe(DEFAULT_RERANK_N); // empty N field falls back
    const rows = Array.from(document.querySelectorAll('tr.result-row'));
    expect(rows.map((r) => r.getAttribute('data-doc-id'))).toEqual(
      recorded.search_rerank.results.map((r) => r.doc_id),
    );
    expect(document.querySelectorAll('td.rerank-score').length).toBe(rows.length);
    expect(rows[0].getAttribute('data-rerank-score')).toBe(
      String(recorded.search_rerank.results[0].rerank_score),
    );
  });

  it('uses the configured N when the field holds one', async () => {
    const { handles, calls } = setUp([
      () => jsonResponse(recorded.search_plain),
      () => jsonResponse(recorded.search_rerank),
    ]);
    (document.getElementById('rerank-n') as HTMLInputElement).value = '7';
    claimInput().value = 'a claim';
    await handles.submit();
    (document.getElementById('rerank-toggle') as HTMLInputElement).checked = true;
    document
      .getElementById('rerank-toggle')!
      .dispatchEvent(new Event('change', { bubbles: true }));
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(calls[1].body.rerank_n).toBe(7);
  });
});

describe('document drill-down', () => {
  it('fetches the doc with the current query id and renders the heatmap', async () => {
    const { handles, calls } = setUp([
      () => jsonResponse(recorded.search_rerank),
      () => jsonResponse(recorded.doc_with_overlay),
    ]);
    claimInput().value = recorded.claim_text;
    await handles.submit();
    await handles.openDocument('US101');
    expect(calls[1].url).toBe(
      `http://backend/doc/US101?query_id=${recorded.search_rerank.query_id}`,
    );
    const overlay = recorded.doc_with_overlay.overlay!;
    expect(document.querySelectorAll('td.heatmap-cell').length).toBe(
      overlay.elements.length * overlay.paragraphs.length,
    );
    expect(handles.state().selectedDoc).toBe('US101');
  });

  it('missing documents surface as unavailable', async () => {
    const { handles } = setUp([
      () => jsonResponse(recorded.search_plain),
      () => jsonResponse({ error: 'DocNotFoundHttp', message: 'gone' }, 404),
    ]);
    claimInput().value = 'a claim';
    await handles.submit();
    await handles.openDocument('USgone');
    expect(document.getElementById('doc-view')!.textContent).toContain(
      'document USgone unavailable',
    );
  });
});
