/**
 * Wiring: claim form, rerank toggle, result list, document drill-down.
 *
 * Expected DOM (see index.html): #claim-input, #search-form,
 * #rerank-toggle, #rerank-n, #status, #elements, #results, #doc-view.
 */

import { ApiClient, ApiError } from './api.js';
import {
  applyError,
  applyResponse,
  initialState,
  selectDocument,
  setRerank,
  startSearch,
  UiSearchState,
} from './state.js';
import { clear, renderDocument, renderElements, renderResults } from './render.js';

export const DEFAULT_K = 100;
export const DEFAULT_RERANK_N = 50;

export interface AppHandles {
  state: () => UiSearchState;
  submit: () => Promise<void>;
  openDocument: (docId: string) => Promise<void>;
}

function byId<T extends HTMLElement>(root: Document, id: string): T {
  const node = root.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

export function initApp(root: Document, api: ApiClient): AppHandles {
  const form = byId<HTMLFormElement>(root, 'search-form');
  const claimInput = byId<HTMLTextAreaElement>(root, 'claim-input');
  const rerankToggle = byId<HTMLInputElement>(root, 'rerank-toggle');
  const rerankN = byId<HTMLInputElement>(root, 'rerank-n');
  const status = byId<HTMLElement>(root, 'status');
  const elementsView = byId<HTMLElement>(root, 'elements');
  const resultsView = byId<HTMLElement>(root, 'results');
  const docView = byId<HTMLElement>(root, 'doc-view');

  let state = initialState();

  function setStatus(text: string, kind: 'idle' | 'busy' | 'error' = 'idle'): void {
    status.textContent = text;
    status.className = `status ${kind}`;
  }

  function redraw(): void {
    renderElements(elementsView, state.parsedElements);
    renderResults(resultsView, state.results, (docId) => void openDocument(docId));
  }

  async function submit(): Promise<void> {
    const claimText = claimInput.value.trim();
    if (!claimText) {
      setStatus('Enter a claim first (plain text or one element per line).', 'error');
      return; // client-side validation: no request leaves the browser
    }
    state = startSearch(state, claimText);
    setStatus('Searching…', 'busy');
    const rerank = rerankToggle.checked;
    const n = Number.parseInt(rerankN.value, 10);
    const body = {
      claim_text: claimText,
      k: DEFAULT_K,
      rerank_n: rerank ? (Number.isFinite(n) && n > 0 ? n : DEFAULT_RERANK_N) : 0,
    };
    try {
      const response = await api.searchLatest(body);
      if (response === null) {
        return; // superseded by a newer search
      }
      state = applyResponse(state, response);
      const timing = response.timing;
      setStatus(
        `${response.results.length} documents — embed ${timing.embed_ms.toFixed(0)} ms, ` +
          `retrieval ${timing.ann_ms.toFixed(0)} ms, rerank ${timing.rerank_ms.toFixed(0)} ms`,
      );
      redraw();
    } catch (err) {
      const message =
        err instanceof ApiError ? `${err.code}: ${err.message}` : `request failed: ${err}`;
      state = applyError(state, message);
      setStatus(message, 'error');
    }
  }

  async function openDocument(docId: string): Promise<void> {
    state = selectDocument(state, docId);
    try {
      const detail = await api.document(docId, state.queryId);
      renderDocument(docView, detail);
    } catch (err) {
      clear(docView);
      const message =
        err instanceof ApiError && err.status === 404
          ? `document ${docId} unavailable`
          : `could not load ${docId}: ${err}`;
      const note = root.createElement('p');
      note.className = 'error';
      note.textContent = message;
      docView.appendChild(note);
    }
  }

  form.addEventListener('submit', (event) => {
    event.preventDefault();
    void submit();
  });
  rerankToggle.addEventListener('change', () => {
    state = setRerank(state, rerankToggle.checked);
    if (state.results.length > 0) {
      void submit(); // re-issue with rerank_n > 0 (or back to 0)
    }
  });

  return { state: () => state, submit, openDocument };
}
