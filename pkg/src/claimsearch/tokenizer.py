"""Deterministic token counting for chunking and query budgets.

The reference counter splits on whitespace and treats every punctuation
character as its own token.  Real deployments plug in the tokenizer of
whatever embedding model is in use by registering a counter under a new
name; everything downstream only relies on the counter contract.
"""

from __future__ import annotations

import re

from .errors import ConfigError

# A token is a maximal run of word characters, or a single non-space
# non-word character.  Joining two texts with a space therefore never
# merges tokens: count(a + " " + b) == count(a) + count(b).
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


class ReferenceTokenCounter:
    """Whitespace/punctuation token counter, additive over space-joins."""

    name = "reference"

    def tokens(self, text: str) -> list[str]:
        return _TOKEN_RE.findall(text)

    def spans(self, text: str) -> list[tuple[int, int]]:
        """(start, end) character offsets of each token."""
        return [m.span() for m in _TOKEN_RE.finditer(text)]

    def count(self, text: str) -> int:
        return sum(1 for _ in _TOKEN_RE.finditer(text))

    def tail(self, text: str, n_tokens: int) -> str:
        """The suffix of `text` spanning its last `n_tokens` tokens."""
        spans = self.spans(text)
        if len(spans) <= n_tokens:
            return text
        return text[spans[len(spans) - n_tokens][0]:]


_COUNTERS: dict[str, type] = {ReferenceTokenCounter.name: ReferenceTokenCounter}


def register_token_counter(name: str, factory: type) -> None:
    """Register a counter class under `name` (overwrites silently)."""
    _COUNTERS[name] = factory


def get_token_counter(name: str = "reference") -> ReferenceTokenCounter:
    try:
        factory = _COUNTERS[name]
    except KeyError:
        known = ", ".join(sorted(_COUNTERS))
        raise ConfigError(f"unknown token counter {name!r} (known: {known})") from None
    return factory()
