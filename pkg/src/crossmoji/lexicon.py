"""Category lexicons in .dic layout, wildcard expansion, Ekman word lists.

The .dic layout is the standard one: a header between two '%' lines maps
numeric category ids to names, then body lines map a word (or stem wildcard
like `happ*`) to one or more ids.
"""

from __future__ import annotations

import json
from bisect import bisect_left
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Sequence


class LexiconFormatError(ValueError):
    """Raised for malformed .dic or Ekman files, with a line number."""


class SchemaError(ValueError):
    """Raised when no shared category schema can be built."""


@dataclass(frozen=True)
class Lexicon:
    """Many-to-many mapping of word patterns to named categories."""

    language: str
    id_to_name: Mapping[int, str]
    patterns: Mapping[str, tuple[str, ...]]  # category name -> patterns

    @property
    def category_names(self) -> tuple[str, ...]:
        return tuple(sorted(self.patterns))

    def __contains__(self, name: str) -> bool:
        return name in self.patterns


def _validate_pattern(pattern: str, path: str, line_no: int) -> None:
    if not pattern:
        raise LexiconFormatError(f"{path}:{line_no}: empty word pattern")
    star = pattern.find("*")
    if star != -1 and (star != len(pattern) - 1 or len(pattern) == 1):
        raise LexiconFormatError(
            f"{path}:{line_no}: wildcard '*' only allowed in final position of a stem: {pattern!r}"
        )


def parse_lexicon(path, language: str) -> Lexicon:
    """Parse a .dic file.  Body lines referencing undeclared ids are fatal."""
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()

    delims = [i for i, line in enumerate(lines) if line.strip() == "%"]
    if len(delims) < 2:
        raise LexiconFormatError(f"{path}: header must be enclosed by two '%' lines")
    head_start, head_end = delims[0], delims[1]

    id_to_name: dict[int, str] = {}
    names_seen: set[str] = set()
    for line_no in range(head_start + 1, head_end):
        line = lines[line_no].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2 or not parts[0].isdigit():
            raise LexiconFormatError(f"{path}:{line_no + 1}: expected 'id name' in header")
        cid, name = int(parts[0]), parts[1]
        if name in names_seen:
            raise LexiconFormatError(f"{path}:{line_no + 1}: duplicate category name {name!r}")
        names_seen.add(name)
        id_to_name[cid] = name

    patterns: dict[str, set[str]] = {name: set() for name in id_to_name.values()}
    for line_no in range(head_end + 1, len(lines)):
        line = lines[line_no].strip()
        if not line or line.startswith("//"):
            continue
        parts = line.split()
        word, ids = parts[0], parts[1:]
        _validate_pattern(word, str(path), line_no + 1)
        if not ids:
            raise LexiconFormatError(f"{path}:{line_no + 1}: word {word!r} has no category ids")
        for raw in ids:
            if not raw.isdigit() or int(raw) not in id_to_name:
                raise LexiconFormatError(
                    f"{path}:{line_no + 1}: undeclared category id {raw!r} for word {word!r}"
                )
            patterns[id_to_name[int(raw)]].add(word)  # duplicate lines merge by union

    return Lexicon(
        language=language,
        id_to_name=dict(sorted(id_to_name.items())),
        patterns={name: tuple(sorted(pats)) for name, pats in patterns.items()},
    )


def serialize_lexicon(lexicon: Lexicon) -> str:
    """Write a lexicon back to .dic text (parse -> serialize round-trips)."""
    lines = ["%"]
    for cid, name in lexicon.id_to_name.items():
        lines.append(f"{cid}\t{name}")
    lines.append("%")
    name_to_id = {name: cid for cid, name in lexicon.id_to_name.items()}
    by_word: dict[str, list[int]] = {}
    for name, pats in lexicon.patterns.items():
        for pat in pats:
            by_word.setdefault(pat, []).append(name_to_id[name])
    for word in sorted(by_word):
        ids = "\t".join(str(i) for i in sorted(by_word[word]))
        lines.append(f"{word}\t{ids}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ExpansionResult:
    """Concrete in-vocabulary tokens per category, plus drop accounting."""

    tokens: Mapping[str, frozenset[str]]
    dropped_patterns: Mapping[str, int]   # patterns with zero vocab matches
    degenerate: tuple[str, ...]           # categories with zero tokens overall


def expand_patterns(lexicon: Lexicon, vocabulary: Iterable[str]) -> ExpansionResult:
    """Expand stems against a vocabulary; `happ*` matches prefix 'happ'."""
    vocab_sorted = sorted(set(vocabulary))
    vocab_set = set(vocab_sorted)

    def prefix_matches(prefix: str) -> list[str]:
        lo = bisect_left(vocab_sorted, prefix)
        out = []
        for i in range(lo, len(vocab_sorted)):
            if not vocab_sorted[i].startswith(prefix):
                break
            out.append(vocab_sorted[i])
        return out

    tokens: dict[str, frozenset[str]] = {}
    dropped: dict[str, int] = {}
    degenerate: list[str] = []
    for name in sorted(lexicon.patterns):
        found: set[str] = set()
        misses = 0
        for pat in lexicon.patterns[name]:
            if pat.endswith("*"):
                hits = prefix_matches(pat[:-1])
            else:
                hits = [pat] if pat in vocab_set else []
            if hits:
                found.update(hits)
            else:
                misses += 1
        tokens[name] = frozenset(found)
        dropped[name] = misses
        if not found:
            degenerate.append(name)
    return ExpansionResult(tokens=tokens, dropped_patterns=dropped, degenerate=tuple(degenerate))


def shared_schema(lexicons: Sequence[Lexicon]) -> tuple[str, ...]:
    """Lexicographically ordered intersection of category names.

    This order is what downstream orthonormalization consumes, so it must
    be deterministic.
    """
    if len(lexicons) < 2:
        raise SchemaError("need at least two lexicons to build a shared schema")
    common = set(lexicons[0].patterns)
    for lex in lexicons[1:]:
        common &= set(lex.patterns)
    if not common:
        raise SchemaError("lexicons share no category names")
    return tuple(sorted(common))


# --- Ekman emotion words --------------------------------------------------

DEFAULT_EKMAN_EN = {
    "anger": ("anger", "angry"),
    "disgust": ("disgust", "disgusted"),
    "fear": ("fear", "terrified"),
    "happiness": ("happiness", "happy"),
    "sadness": ("sadness", "sad"),
    "surprise": ("surprise", "surprised"),
}


@dataclass(frozen=True)
class EkmanWordList:
    """Noun/adjective word pair per emotion, per language."""

    words: Mapping[str, Mapping[str, tuple[str, str]]]  # language -> emotion -> (noun, adj)

    def __post_init__(self):
        for language, emotions in self.words.items():
            for emotion, forms in emotions.items():
                if len(forms) != 2 or not all(forms):
                    raise LexiconFormatError(
                        f"ekman list for {language!r}/{emotion!r} must be exactly [noun, adjective]"
                    )

    def languages(self) -> tuple[str, ...]:
        return tuple(sorted(self.words))

    def word(self, language: str, emotion: str, form: str) -> str:
        noun, adj = self.words[language][emotion]
        return noun if form == "noun" else adj

    def axes(self, language: str) -> list[tuple[str, str]]:
        """(axis_label, word) pairs for one language, in a fixed order."""
        out = []
        for emotion in sorted(self.words[language]):
            noun, adj = self.words[language][emotion]
            out.append((f"ekman:{emotion}:noun", noun))
            out.append((f"ekman:{emotion}:adjective", adj))
        return out


def load_ekman(path) -> EkmanWordList:
    """Load `{"en": {"anger": ["anger", "angry"], ...}, ...}`."""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise LexiconFormatError(f"{path}: expected a JSON object keyed by language")
    words = {
        lang: {emotion: tuple(forms) for emotion, forms in emotions.items()}
        for lang, emotions in data.items()
    }
    return EkmanWordList(words=words)


def default_ekman_path():
    return resources.files("crossmoji.data") / "ekman_words.json"


def default_ekman() -> EkmanWordList:
    return load_ekman(default_ekman_path())
