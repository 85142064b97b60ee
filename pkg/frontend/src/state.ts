/**
 * UI state and its pure transitions.
 *
 * The state is a view over server responses: results stay strictly in
 * server order (the UI never re-sorts) and every number shown comes
 * from a payload field, never from client-side score arithmetic.
 */

import { ResultEntry, SearchResponse } from './types.js';

export interface UiSearchState {
  claimText: string;
  parsedElements: string[]; // server-echoed split of the claim
  results: ResultEntry[];
  queryId: string | null;
  selectedDoc: string | null;
  rerankEnabled: boolean;
  pending: boolean;
  error: string | null;
}

export function initialState(): UiSearchState {
  return {
    claimText: '',
    parsedElements: [],
    results: [],
    queryId: null,
    selectedDoc: null,
    rerankEnabled: false,
    pending: false,
    error: null,
  };
}

export function startSearch(state: UiSearchState, claimText: string): UiSearchState {
  return { ...state, claimText, pending: true, error: null };
}

export function applyResponse(
  state: UiSearchState,
  response: SearchResponse,
): UiSearchState {
  return {
    ...state,
    pending: false,
    error: null,
    parsedElements: response.elements.slice(),
    results: response.results.slice(), // server order, untouched
    queryId: response.query_id,
  };
}

export function applyError(state: UiSearchState, message: string): UiSearchState {
  return { ...state, pending: false, error: message };
}

export function selectDocument(state: UiSearchState, docId: string | null): UiSearchState {
  return { ...state, selectedDoc: docId };
}

export function setRerank(state: UiSearchState, enabled: boolean): UiSearchState {
  return { ...state, rerankEnabled: enabled };
}
