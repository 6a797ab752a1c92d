"""Transcript normalization applied before any error-rate computation.

Normalization is deterministic and idempotent: lowercase, strip
punctuation (keeping apostrophes that sit inside a word, so
contractions survive), and collapse runs of whitespace. Each step can
be switched off independently.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

# ASCII apostrophe and the right single quotation mark many ASR systems emit.
_APOSTROPHES = frozenset({"'", "’"})


@dataclass(frozen=True)
class NormalizationConfig:
    lowercase: bool = True
    strip_punctuation: bool = True
    collapse_whitespace: bool = True


DEFAULT_NORMALIZATION = NormalizationConfig()


def _is_word_char(ch: str) -> bool:
    return ch.isalnum()


def _strip_punctuation(text: str) -> str:
    out: list[str] = []
    for i, ch in enumerate(text):
        if unicodedata.category(ch).startswith("P"):
            if (
                ch in _APOSTROPHES
                and 0 < i < len(text) - 1
                and _is_word_char(text[i - 1])
                and _is_word_char(text[i + 1])
            ):
                out.append(ch)
            else:
                # Replace with a space so punctuation keeps word boundaries.
                out.append(" ")
        else:
            out.append(ch)
    return "".join(out)


def normalize(text: str, cfg: NormalizationConfig = DEFAULT_NORMALIZATION) -> str:
    """Normalize a transcript. Idempotent for any config."""
    if cfg.lowercase:
        text = text.lower()
    if cfg.strip_punctuation:
        text = _strip_punctuation(text)
    if cfg.collapse_whitespace:
        text = " ".join(text.split())
    return text


def words(text: str) -> list[str]:
    """Tokens split on Unicode whitespace."""
    return text.split()


def chars(text: str) -> str:
    """Unicode scalar values excluding all whitespace.

    Spaces are dropped so that segmentation differences between systems
    do not dominate character-level comparisons.
    """
    return "".join(text.split())
