"""Name resolution for variants, methods and presets using rapidfuzz."""

from __future__ import annotations

import re
import unicodedata

from rapidfuzz import fuzz

from .errors import ConfigError

# Minimum fuzzy score (0-100) for a "did you mean" suggestion
SUGGEST_THRESHOLD = 60


def normalize(text: str) -> str:
    """NFKC + casefold, with spaces and hyphens collapsed to underscores."""
    text = unicodedata.normalize("NFKC", text).casefold().strip()
    return re.sub(r"[\s\-]+", "_", text)


def suggest(query: str, choices: list[str]) -> str | None:
    """Closest choice by token-sort ratio, if it clears the threshold."""
    best, best_score = None, 0.0
    norm_query = normalize(query).replace("_", " ")
    for choice in choices:
        score = fuzz.token_sort_ratio(norm_query, normalize(choice).replace("_", " "))
        if score > best_score:
            best, best_score = choice, score
    if best is not None and best_score >= SUGGEST_THRESHOLD:
        return best
    return None


def resolve_name(query: str, choices: list[str], what: str = "name") -> str:
    """Exact match after normalization; otherwise a ConfigError with a suggestion."""
    by_norm = {normalize(c): c for c in choices}
    found = by_norm.get(normalize(query))
    if found is not None:
        return found
    hint = suggest(query, choices)
    message = f"unknown {what} {query!r}"
    if hint:
        message += f"; did you mean {hint!r}?"
    else:
        message += f"; choose from {', '.join(choices)}"
    raise ConfigError(message)
