/**
 * DOM builders. Pure view code: numbers are rendered from payload
 * fields verbatim (raw values are kept on data attributes; the visible
 * text is only a fixed-precision formatting of the same value).
 */

import { DocDetail, ResultEntry } from './types.js';

export function clear(container: HTMLElement): void {
  while (container.firstChild) {
    container.removeChild(container.firstChild);
  }
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function formatScore(value: number): string {
  return value.toFixed(4);
}

export function renderElements(container: HTMLElement, elements: string[]): void {
  clear(container);
  const list = el(container.ownerDocument, 'ol', 'claim-elements');
  for (const text of elements) {
    list.appendChild(el(container.ownerDocument, 'li', 'claim-element', text));
  }
  container.appendChild(list);
}

export function renderResults(
  container: HTMLElement,
  results: ResultEntry[],
  onSelect: (docId: string) => void,
): void {
  clear(container);
  const doc = container.ownerDocument;
  if (results.length === 0) {
    container.appendChild(el(doc, 'p', 'empty', 'No results.'));
    return;
  }
  const showRerank = results.some((r) => r.rerank_score !== undefined);
  const table = el(doc, 'table', 'results');
  const head = el(doc, 'tr');
  head.appendChild(el(doc, 'th', undefined, '#'));
  head.appendChild(el(doc, 'th', undefined, 'Document'));
  head.appendChild(el(doc, 'th', undefined, 'Score'));
  if (showRerank) {
    head.appendChild(el(doc, 'th', undefined, 'Rerank score'));
  }
  head.appendChild(el(doc, 'th', undefined, 'Best chunk'));
  table.appendChild(head);

  results.forEach((entry, i) => {
    const row = el(doc, 'tr', 'result-row');
    row.setAttribute('data-doc-id', entry.doc_id);
    row.setAttribute('data-score', String(entry.score));
    if (entry.rerank_score !== undefined) {
      row.setAttribute('data-rerank-score', String(entry.rerank_score));
    }
    row.appendChild(el(doc, 'td', 'rank', String(i + 1)));
    const link = el(doc, 'button', 'doc-link', entry.doc_id);
    link.type = 'button';
    link.addEventListener('click', () => onSelect(entry.doc_id));
    const docCell = el(doc, 'td');
    docCell.appendChild(link);
    row.appendChild(docCell);
    row.appendChild(el(doc, 'td', 'score', formatScore(entry.score)));
    if (showRerank) {
      row.appendChild(
        el(
          doc,
          'td',
          'rerank-score',
          entry.rerank_score !== undefined ? formatScore(entry.rerank_score) : '-',
        ),
      );
    }
    const chunk = entry.best_chunk;
    const evidence = chunk
      ? `${chunk.section} ¶${chunk.paragraph_numbers.join(',')}${
          chunk.snippet ? ` — ${chunk.snippet}` : ''
        }`
      : '';
    row.appendChild(el(doc, 'td', 'snippet', evidence));
    table.appendChild(row);
  });
  container.appendChild(table);
}

/** Background for a similarity in [-1, 1]; presentation only. */
export function heatColor(similarity: number): string {
  const clamped = Math.max(0, Math.min(1, similarity));
  const alpha = Math.round(clamped * 100) / 100;
  return `rgba(192, 64, 24, ${alpha})`;
}

function paragraphAnchor(section: string, number: number): string {
  return `para-${section}-${number}`;
}

export function renderDocument(container: HTMLElement, detail: DocDetail): void {
  clear(container);
  const doc = container.ownerDocument;
  container.appendChild(el(doc, 'h2', 'doc-title', detail.doc_id));

  const overlay = detail.overlay;
  if (overlay && overlay.paragraphs.length > 0) {
    container.appendChild(renderHeatmap(doc, detail));
  } else if (overlay === null) {
    container.appendChild(
      el(doc, 'p', 'overlay-note', 'No similarity overlay for this query (stale or unknown query id).'),
    );
  }

  const body = el(doc, 'div', 'doc-body');
  for (const section of detail.sections) {
    body.appendChild(el(doc, 'h3', 'section-name', section.name));
    for (const paragraph of section.paragraphs) {
      const block = el(doc, 'p', 'paragraph', `[${paragraph.number}] ${paragraph.text}`);
      block.id = paragraphAnchor(section.name, paragraph.number);
      body.appendChild(block);
    }
  }
  container.appendChild(body);
}

function renderHeatmap(doc: Document, detail: DocDetail): HTMLElement {
  const overlay = detail.overlay!;
  const wrapper = el(doc, 'div', 'heatmap');
  wrapper.appendChild(el(doc, 'h3', undefined, 'Element × paragraph similarity'));
  const table = el(doc, 'table', 'heatmap-grid');

  const head = el(doc, 'tr');
  head.appendChild(el(doc, 'th', undefined, ''));
  for (const paragraph of overlay.paragraphs) {
    head.appendChild(
      el(doc, 'th', 'para-head', `${paragraph.section} ¶${paragraph.number}`),
    );
  }
  table.appendChild(head);

  overlay.elements.forEach((elementText, e) => {
    const row = el(doc, 'tr', 'heatmap-row');
    const label = elementText.length > 40 ? elementText.slice(0, 37) + '…' : elementText;
    row.appendChild(el(doc, 'th', 'element-label', label));
    overlay.paragraphs.forEach((paragraph, p) => {
      const similarity = paragraph.similarities[e];
      const cell = el(doc, 'td', 'heatmap-cell', formatScore(similarity));
      cell.setAttribute('data-element', String(e));
      cell.setAttribute('data-paragraph', String(p));
      cell.setAttribute('data-similarity', String(similarity));
      cell.style.backgroundColor = heatColor(similarity);
      // the best paragraph per element comes from the server response,
      // not from a client-side argmax
      if (overlay.per_element_best[e] === p) {
        cell.classList.add('best');
        cell.title = 'best paragraph for this element';
      }
      cell.addEventListener('click', () => {
        const target = wrapper.ownerDocument.getElementById(
          paragraphAnchor(paragraph.section, paragraph.number),
        );
        if (target && typeof target.scrollIntoView === 'function') {
          target.scrollIntoView({ behavior: 'smooth', block: 'center' });
        }
      });
      row.appendChild(cell);
    });
    table.appendChild(row);
  });
  wrapper.appendChild(table);
  return wrapper;
}
