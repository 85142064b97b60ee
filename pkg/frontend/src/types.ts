/** Server payload shapes, mirrored from the claimsearch HTTP API. */

export interface SearchRequestBody {
  claim_text: string;
  k?: number;
  rerank_n?: number;
  weighting?: string;
}

export interface BestChunk {
  section: string;
  paragraph_numbers: number[];
  part: number;
  similarity: number;
  snippet: string | null;
}

export interface PerElementMatch {
  element_index: number;
  section: string;
  paragraph_number: number;
  similarity: number;
}

export interface ResultEntry {
  doc_id: string;
  score: number;
  rerank_score?: number;
  best_chunk?: BestChunk;
  per_element_matches?: PerElementMatch[];
}

export interface SearchTiming {
  embed_ms: number;
  ann_ms: number;
  rerank_ms: number;
}

export interface SearchResponse {
  query_id: string;
  elements: string[];
  results: ResultEntry[];
  timing: SearchTiming;
  truncated_query: boolean;
}

export interface DocParagraph {
  number: number;
  text: string;
}

export interface DocSection {
  name: string;
  paragraphs: DocParagraph[];
}

export interface OverlayParagraph {
  section: string;
  number: number;
  similarities: number[];
}

export interface Overlay {
  query_id: string;
  elements: string[];
  paragraphs: OverlayParagraph[];
  per_element_best: number[];
}

export interface DocDetail {
  doc_id: string;
  jurisdiction: string;
  sections: DocSection[];
  claims: { number: number; full_text: string }[];
  /** null when the query id is stale or unknown: plain-text fallback */
  overlay?: Overlay | null;
}

export interface HealthResponse {
  status: string;
  index_loaded: boolean;
  vectors: number;
  documents: number;
}

export interface ErrorBody {
  error: string;
  message: string;
}
