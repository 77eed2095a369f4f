"""Remote keyword-extraction client.

The extraction model itself runs elsewhere; this module owns the
request/response schema: HTTP POST {role_prompt, user_prompt, max_tokens}
returning {text}, where text carries a bracketed, comma-separated keyword
list. Prompt templates ship as editable data files next to this module.
"""
from __future__ import annotations

import logging
import os
from importlib import resources

import requests

from .config import KeywordClientConfig

log = logging.getLogger(__name__)

ENDPOINT_ENV = "FRAMEPICK_KEYWORD_ENDPOINT"


class KeywordExtractionError(RuntimeError):
    """Remote extraction failed after bounded retries."""


class KeywordParseError(ValueError):
    """Response text did not carry a bracketed keyword list."""

    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


def _load_template(name: str) -> str:
    return resources.files("framepick.data").joinpath(name).read_text(encoding="utf-8")


def parse_keyword_response(text: str, max_keywords: int = 10) -> list[str]:
    """Parse "[a, b, c]" into a deduplicated, capped keyword list.

    Deduplication is case-insensitive and keeps the first spelling seen.
    """
    start = text.find("[")
    end = text.rfind("]")
    if start == -1 or end == -1 or end <= start:
        raise KeywordParseError("response lacks a bracketed keyword list", raw=text)
    inner = text[start + 1 : end]
    seen = set()
    keywords = []
    for part in inner.split(","):
        word = part.strip().strip("'\"").strip()
        if not word:
            continue
        folded = word.casefold()
        if folded in seen:
            continue
        seen.add(folded)
        keywords.append(word)
        if len(keywords) >= max_keywords:
            break
    return keywords


def extract_keywords_remote(
    summary: str,
    title: str,
    config: KeywordClientConfig,
    session: requests.Session | None = None,
) -> list[str]:
    """Issue one extraction request and parse the keyword list.

    The endpoint comes from config or the FRAMEPICK_KEYWORD_ENDPOINT env
    var. Network failures are retried ``config.retries`` times, then raise
    KeywordExtractionError so callers can fall back to metadata keywords.
    """
    endpoint = config.endpoint or os.environ.get(ENDPOINT_ENV, "")
    if not endpoint:
        raise KeywordExtractionError("no keyword endpoint configured")
    if not summary.strip():
        raise ValueError("summary must be non-blank")

    payload = {
        "role_prompt": _load_template("keyword_role_prompt.txt"),
        "user_prompt": _load_template("keyword_fewshot_prompt.txt").format(
            title=title, summary=summary
        ),
        "max_tokens": config.max_tokens,
    }

    sess = session or requests.Session()
    last_error: Exception | None = None
    for attempt in range(config.retries + 1):
        try:
            resp = sess.post(endpoint, json=payload, timeout=config.timeout_s)
            resp.raise_for_status()
            text = resp.json()["text"]
            return parse_keyword_response(text, max_keywords=config.max_keywords)
        except (requests.RequestException, KeyError, ValueError) as exc:
            if isinstance(exc, KeywordParseError):
                raise
            last_error = exc
            log.warning(
                "keyword extraction attempt %d/%d failed: %s",
                attempt + 1,
                config.retries + 1,
                exc,
            )
    raise KeywordExtractionError(
        f"keyword endpoint failed after {config.retries + 1} attempts: {last_error}"
    )
