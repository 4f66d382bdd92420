"""Post ingestion: record filtering, meta-token normalization, tokenization.

Input records arrive as JSON lines with fields `post_id`, `text`, `country`,
`lang` and optional `pre_tokenized`.  All operations are pure per record,
so a corpus can be processed in any order or in parallel.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, TextIO

from .inventory import EmojiInventory, strip_variation_selectors


class RecordError(ValueError):
    """A malformed input record (recoverable: counted and skipped)."""


@dataclass(frozen=True)
class PostRecord:
    post_id: str
    text: str
    country: str
    lang: str
    pre_tokenized: bool = False


@dataclass(frozen=True)
class TokenStream:
    post_id: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class CorpusHandle:
    """One corpus: id, culture group, and where its records live."""

    corpus_id: str
    culture_group: str  # "West" or "East"
    paths: tuple[str, ...]
    lang: str
    country: str
    pre_tokenized: bool = False

    def __post_init__(self):
        if self.culture_group not in ("West", "East"):
            raise ValueError(f"culture_group must be West or East, got {self.culture_group!r}")


DEFAULT_RETWEET_MARKERS = (r"RT @\w+:", r"@\w+//")


@dataclass(frozen=True)
class FilterConfig:
    lang: str
    country: str
    retweet_markers: tuple[str, ...] = DEFAULT_RETWEET_MARKERS

    def __post_init__(self):
        compiled = tuple(re.compile(p) for p in self.retweet_markers)
        object.__setattr__(self, "_marker_res", compiled)


def parse_record(line: str) -> PostRecord:
    """Parse one JSON-line record; raises RecordError on anything malformed."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise RecordError("record is not an object")
    missing = [k for k in ("post_id", "text", "country", "lang") if k not in obj]
    if missing:
        raise RecordError(f"missing fields: {', '.join(missing)}")
    text = str(obj["text"])
    if not text.strip():
        raise RecordError("empty text")
    country, lang = str(obj["country"]), str(obj["lang"])
    if not country or not lang:
        raise RecordError("empty country or lang")
    return PostRecord(
        post_id=str(obj["post_id"]),
        text=text,
        country=country,
        lang=lang,
        pre_tokenized=bool(obj.get("pre_tokenized", False)),
    )


def _lang_matches(record_lang: str, wanted: str) -> bool:
    a, b = record_lang.lower(), wanted.lower()
    return a == b or a.split("-")[0] == b.split("-")[0]


def filter_post(record: PostRecord, config: FilterConfig) -> Optional[PostRecord]:
    """Keep the record only if language, country and not-a-retweet all hold."""
    reason = filter_reason(record, config)
    return None if reason else record


def filter_reason(record: PostRecord, config: FilterConfig) -> Optional[str]:
    """Why a record would be dropped: 'lang', 'country', 'retweet' or None."""
    if not _lang_matches(record.lang, config.lang):
        return "lang"
    if record.country.upper() != config.country.upper():
        return "country"
    text = record.text.lstrip()
    for marker in config._marker_res:
        if marker.match(text):
            return "retweet"
    return None


# --- text normalization -------------------------------------------------
# Applied in order; each pattern maps to one meta-token.  Patterns must not
# match inside an already-substituted meta-token (normalize_text is
# idempotent).

_EMOTICON = r"""
    (?:
      <+/?3+                                  # hearts <3 </3
      |
      [<>]?[:;=8][\-o^']?[)\](\[dDpP/\\|@}{*] # eyes, nose, mouth
      |
      [)\](\[dDpP/\\|@}{][\-o^']?[:;=8][<>]?  # reversed
      |
      \^_*\^ | [tT]_[tT] | o\.O | O\.o        # eastern style
    )"""

_NORMALIZE_RULES: tuple[tuple[re.Pattern, str], ...] = (
    (re.compile(r"[\w.+-]+@[\w-]+\.[\w.-]+"), "<email>"),
    (re.compile(
        r"(?:https?://[^\s<>]+"
        r"|www\.[^\s<>]+"
        r"|\b[\w-]+(?:\.[\w-]+)*\.(?:com|net|org|edu|gov|info|io|ly|gl|be|me|tv|co|us|uk|jp|cn)\b(?:/[^\s<>]*)?)"
    ), "<url>"),
    (re.compile(r"@\w+"), "<user>"),
    (re.compile(r"\d+(?:[.,]\d+)*\s?%"), "<percent>"),
    (re.compile(r"(?:[$€£¥]\s?\d+(?:[.,]\d+)*|\b\d+(?:[.,]\d+)*\s?[$€£¥])"), "<money>"),
    (re.compile(r"\b\d{1,2}:\d{2}(?::\d{2})?(?:\s?[ap]m)?\b|\b\d{1,2}\s?[ap]m\b", re.IGNORECASE), "<time>"),
    (re.compile(
        r"\b\d{1,4}[-/]\d{1,2}[-/]\d{1,4}\b"                  # 2014-12-05, 12/05/2014
        r"|\b\d{1,2}/\d{1,2}\b"                               # 12/25
        r"|\b(?:jan|feb|mar|apr|may|jun|jul|aug|sep|oct|nov|dec)[a-z]*\.?\s\d{1,2}(?:st|nd|rd|th)?(?:,?\s\d{4})?\b",
        re.IGNORECASE,
    ), "<date>"),
    (re.compile(
        r"(?:\+?\d{1,2}[\s.-]?)?(?:\(\d{3}\)[\s.-]?|\b\d{3}[\s.-])\d{3}[\s.-]\d{4}\b"
        r"|\b\d{3}[-.]\d{4}\b"
    ), "<phone>"),
    (re.compile(r"(?<![\w<])" + _EMOTICON + r"(?![\w>])", re.VERBOSE), "<emoticon>"),
)

META_TOKENS = frozenset(token for _, token in _NORMALIZE_RULES)


def normalize_text(text: str) -> str:
    """Replace URLs, emails, mentions, amounts, times, dates, phone numbers
    and ASCII emoticons with their meta-tokens.  Total and idempotent."""
    for pattern, token in _NORMALIZE_RULES:
        text = pattern.sub(token, text)
    return text


_META_TOKEN_RE = re.compile("|".join(re.escape(t) for t in sorted(META_TOKENS)))
_EDGE_PUNCT = ".,!?;:\"'()[]{}…“”‘’"


def _split_verbal(piece: str, lowercase: bool) -> Iterator[str]:
    """Split meta-tokens out of a whitespace chunk, trim edge punctuation."""
    pos = 0
    for m in _META_TOKEN_RE.finditer(piece):
        yield from _split_plain(piece[pos:m.start()], lowercase)
        yield m.group(0)
        pos = m.end()
    yield from _split_plain(piece[pos:], lowercase)


def _split_plain(chunk: str, lowercase: bool) -> Iterator[str]:
    chunk = strip_variation_selectors(chunk)  # orphans next to non-emoji chars
    if not chunk:
        return
    lead = []
    while chunk and chunk[0] in _EDGE_PUNCT:
        lead.append(chunk[0])
        chunk = chunk[1:]
    trail = []
    while chunk and chunk[-1] in _EDGE_PUNCT:
        trail.append(chunk[-1])
        chunk = chunk[:-1]
    yield from lead
    if chunk:
        yield chunk.lower() if lowercase else chunk
    yield from reversed(trail)


def tokenize(record: PostRecord, inventory: EmojiInventory,
             lowercase: Optional[bool] = None) -> TokenStream:
    """Turn a filtered record into tokens with emoji split out standalone.

    Pre-tokenized records (CJK path) are split on whitespace as-is, except
    that glued emoji are still separated.  Otherwise verbal tokens are
    lowercased and edge punctuation is split off; meta-tokens pass through
    verbatim.
    """
    if lowercase is None:
        lowercase = not record.pre_tokenized
    tokens: list[str] = []
    for chunk in record.text.split():
        for piece, is_emoji in inventory.split_text(chunk):
            if is_emoji:
                tokens.append(piece)
            elif record.pre_tokenized:
                if piece:
                    tokens.append(piece)
            else:
                tokens.extend(t for t in _split_verbal(piece, lowercase) if t)
    return TokenStream(post_id=record.post_id, tokens=tuple(tokens))


# --- corpus-level I/O ----------------------------------------------------

@dataclass
class IngestCounts:
    """Per-corpus record counts through the filter chain (monotone)."""

    read: int = 0
    parse_errors: int = 0
    dropped: dict = field(default_factory=lambda: {"lang": 0, "country": 0, "retweet": 0})
    kept: int = 0
    empty_streams: int = 0
    streams: int = 0

    def as_dict(self) -> dict:
        return {
            "posts_read": self.read,
            "parse_errors": self.parse_errors,
            "dropped_lang": self.dropped["lang"],
            "dropped_country": self.dropped["country"],
            "dropped_retweet": self.dropped["retweet"],
            "posts_after_filter": self.kept,
            "empty_streams": self.empty_streams,
            "streams_written": self.streams,
        }


def read_records(lines: Iterable[str], counts: IngestCounts) -> Iterator[PostRecord]:
    for line in lines:
        if not line.strip():
            continue
        counts.read += 1
        try:
            yield parse_record(line)
        except RecordError:
            counts.parse_errors += 1


def ingest_corpus(
    lines: Iterable[str],
    config: FilterConfig,
    inventory: EmojiInventory,
    pre_tokenized: bool = False,
) -> tuple[list[TokenStream], IngestCounts]:
    """Filter, normalize and tokenize raw record lines for one corpus.

    A corpus-level `pre_tokenized` flag (the CJK path) applies to every
    record; individual records can also carry their own flag.
    """
    counts = IngestCounts()
    streams: list[TokenStream] = []
    for record in read_records(lines, counts):
        reason = filter_reason(record, config)
        if reason:
            counts.dropped[reason] += 1
            continue
        counts.kept += 1
        if record.pre_tokenized or pre_tokenized:
            if not record.pre_tokenized:
                record = PostRecord(record.post_id, record.text, record.country,
                                    record.lang, pre_tokenized=True)
            stream = tokenize(record, inventory)
        else:
            normalized = PostRecord(
                post_id=record.post_id,
                text=normalize_text(record.text),
                country=record.country,
                lang=record.lang,
            )
            stream = tokenize(normalized, inventory)
        if stream.tokens:
            streams.append(stream)
        else:
            counts.empty_streams += 1
    counts.streams = len(streams)
    return streams, counts


def ingest_handle(
    handle: CorpusHandle,
    inventory: EmojiInventory,
    retweet_markers: tuple[str, ...] = DEFAULT_RETWEET_MARKERS,
) -> tuple[list[TokenStream], IngestCounts]:
    """Ingest every source file of one corpus handle."""
    config = FilterConfig(lang=handle.lang, country=handle.country,
                          retweet_markers=retweet_markers)
    all_streams: list[TokenStream] = []
    total = IngestCounts()
    for path in handle.paths:
        with open(path, encoding="utf-8") as f:
            streams, counts = ingest_corpus(f, config, inventory,
                                            pre_tokenized=handle.pre_tokenized)
        all_streams.extend(streams)
        total.read += counts.read
        total.parse_errors += counts.parse_errors
        for key in total.dropped:
            total.dropped[key] += counts.dropped[key]
        total.kept += counts.kept
        total.empty_streams += counts.empty_streams
    total.streams = len(all_streams)
    return all_streams, total


def write_streams(streams: Iterable[TokenStream], f: TextIO) -> None:
    for s in streams:
        f.write(f"{s.post_id}\t{' '.join(s.tokens)}\n")


def read_streams(f: TextIO) -> Iterator[TokenStream]:
    for line in f:
        line = line.rstrip("\n")
        if not line:
            continue
        post_id, _, rest = line.partition("\t")
        tokens = tuple(t for t in rest.split(" ") if t)
        yield TokenStream(post_id=post_id, tokens=tokens)
