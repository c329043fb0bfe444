"""Corpus layer: taxonomy, constitution portions, anonymization rules.

File formats (all UTF-8, tab-separated, `#` comment lines ignored):
  taxonomy:   id <TAB> macro_ids <TAB> name <TAB> description
              rows with id M<number> and empty macro_ids define macro-topics
  corpus:     country <TAB> topic_id <TAB> text   (newlines escaped as \\n)
  rules:      kind <TAB> match <TAB> replacement  (kind: lexicon | pattern)
  references: topic_id <TAB> text                 (same escaping as corpus)
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

EXPECTED_MACRO_COUNTS = {
    "M1": 6, "M2": 21, "M3": 7, "M4": 3, "M5": 2, "M6": 24, "M7": 22,
    "M8": 4, "M9": 26,
}
EXPECTED_TOPIC_COUNT = 114

_MACRO_ID = re.compile(r"^M[0-9]+$")
_COUNTRY_CODE = re.compile(r"^[A-Z]{2}$")


class ValidationError(ValueError):
    """A data file failed structural validation."""


@dataclass(frozen=True)
class MacroTopic:
    id: str
    name: str
    description: str = ""


@dataclass(frozen=True)
class Topic:
    id: str
    name: str
    description: str
    macro_ids: tuple[str, ...]


@dataclass(frozen=True)
class Taxonomy:
    macros: dict[str, MacroTopic]
    topics: dict[str, Topic]

    def topics_for_macro(self, macro_id: str) -> list[Topic]:
        if macro_id not in self.macros:
            raise KeyError(f"unknown macro-topic: {macro_id}")
        return [t for t in self.topics.values() if macro_id in t.macro_ids]


@dataclass(frozen=True)
class Portion:
    country: str
    topic_id: str
    text: str

    @property
    def char_len(self) -> int:
        return len(self.text)


@dataclass(frozen=True)
class AnonymizationRule:
    kind: str
    match: str
    replacement: str


@dataclass(frozen=True)
class ReferenceSummary:
    topic_id: str
    text: str


@dataclass
class Corpus:
    portions: list[Portion] = field(default_factory=list)

    def countries(self, topic_id: str) -> list[str]:
        seen = []
        for p in self.portions:
            if p.topic_id == topic_id and p.country not in seen:
                seen.append(p.country)
        return seen

    def topic_ids(self) -> list[str]:
        seen = []
        for p in self.portions:
            if p.topic_id not in seen:
                seen.append(p.topic_id)
        return seen


def _data_lines(path: Path) -> list[tuple[int, str]]:
    out = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        out.append((lineno, raw))
    return out


def unescape_text(text: str) -> str:
    r"""Decode the corpus text-field escaping (\\ for backslash, \n for newline)."""
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            if nxt == "n":
                out.append("\n")
                i += 2
                continue
            if nxt == "\\":
                out.append("\\")
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def escape_text(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\n", "\\n")


def load_taxonomy(path: str | Path) -> Taxonomy:
    path = Path(path)
    macros: dict[str, MacroTopic] = {}
    topic_rows: list[tuple[int, str, str, str, str]] = []
    lines = _data_lines(path)
    if not lines:
        raise ValidationError(f"{path}: taxonomy file has no records")
    for lineno, raw in lines:
        parts = raw.split("\t")
        if len(parts) != 4:
            raise ValidationError(f"{path}:{lineno}: expected 4 tab-separated fields")
        ident, macro_field, name, description = parts
        if _MACRO_ID.match(ident) and not macro_field:
            if ident in macros:
                raise ValidationError(f"{path}:{lineno}: duplicate macro-topic id {ident!r}")
            macros[ident] = MacroTopic(ident, name, description)
        else:
            topic_rows.append((lineno, ident, macro_field, name, description))
    topics: dict[str, Topic] = {}
    for lineno, ident, macro_field, name, description in topic_rows:
        if ident in topics:
            raise ValidationError(f"{path}:{lineno}: duplicate topic id {ident!r}")
        macro_ids = tuple(m.strip() for m in macro_field.split(",") if m.strip())
        if not macro_ids:
            raise ValidationError(f"{path}:{lineno}: topic {ident!r} lists no macro-topics")
        for m in macro_ids:
            if m not in macros:
                raise ValidationError(
                    f"{path}:{lineno}: topic {ident!r} references unknown macro-topic {m!r}")
        topics[ident] = Topic(ident, name, description, macro_ids)
    taxonomy = Taxonomy(macros=macros, topics=topics)
    counts = {m: len(taxonomy.topics_for_macro(m)) for m in macros}
    if len(macros) != len(EXPECTED_MACRO_COUNTS) or counts != EXPECTED_MACRO_COUNTS \
            or len(topics) != EXPECTED_TOPIC_COUNT:
        warnings.warn(
            f"{path}: taxonomy counts differ from the shipped defaults "
            f"(macros={len(macros)}, topics={len(topics)})",
            stacklevel=2)
    return taxonomy


def default_taxonomy_path() -> Path:
    return Path(__file__).parent / "data" / "taxonomy.tsv"


def default_stopwords_path() -> Path:
    return Path(__file__).parent / "data" / "stopwords.txt"


def default_rules_path() -> Path:
    return Path(__file__).parent / "data" / "anonymization_rules.tsv"


def load_stopwords(path: str | Path) -> frozenset[str]:
    words = set()
    for _, raw in _data_lines(Path(path)):
        words.add(raw.strip())
    return frozenset(words)


def load_rules(path: str | Path) -> list[AnonymizationRule]:
    rules = []
    path = Path(path)
    for lineno, raw in _data_lines(path):
        parts = raw.split("\t")
        if len(parts) != 3:
            raise ValidationError(f"{path}:{lineno}: expected 3 tab-separated fields")
        kind, match, replacement = parts
        if kind not in ("lexicon", "pattern"):
            raise ValidationError(f"{path}:{lineno}: unknown rule kind {kind!r}")
        if not replacement:
            raise ValidationError(f"{path}:{lineno}: empty replacement")
        if kind == "pattern":
            try:
                re.compile(match)
            except re.error as exc:
                raise ValidationError(f"{path}:{lineno}: bad pattern: {exc}") from exc
        rules.append(AnonymizationRule(kind, match, replacement))
    return rules


def _rule_regex(rule: AnonymizationRule) -> re.Pattern:
    if rule.kind == "pattern":
        return re.compile(rule.match)
    return re.compile(r"\b" + re.escape(rule.match) + r"\b")


def anonymize(text: str, rules: list[AnonymizationRule]) -> str:
    """Replace rule matches left-to-right; first-listed rule wins on overlap.

    All matching happens against the original text, so replacement strings
    are never rescanned and the operation is idempotent whenever no
    replacement contains a rule match.
    """
    claimed: list[tuple[int, int, str]] = []

    def overlaps(start: int, end: int) -> bool:
        return any(start < ce and cs < end for cs, ce, _ in claimed)

    for rule in rules:
        for m in _rule_regex(rule).finditer(text):
            start, end = m.span()
            if start == end:
                continue
            if not overlaps(start, end):
                claimed.append((start, end, rule.replacement))
    claimed.sort()
    out = []
    pos = 0
    for start, end, replacement in claimed:
        out.append(text[pos:start])
        out.append(replacement)
        pos = end
    out.append(text[pos:])
    return "".join(out)


def load_corpus(
    path: str | Path,
    taxonomy: Taxonomy,
    rules: list[AnonymizationRule] | None = None,
) -> Corpus:
    """Load portions; when rules are given each text is anonymized on load."""
    path = Path(path)
    portions = []
    for lineno, raw in _data_lines(path):
        parts = raw.split("\t")
        if len(parts) != 3:
            raise ValidationError(f"{path}:{lineno}: expected 3 tab-separated fields")
        country, topic_id, text = parts
        if not _COUNTRY_CODE.match(country):
            raise ValidationError(
                f"{path}:{lineno}: country must be a two-letter upper-case code, got {country!r}")
        if topic_id not in taxonomy.topics:
            raise ValidationError(f"{path}:{lineno}: unknown topic_id {topic_id!r}")
        text = unescape_text(text)
        if not text:
            raise ValidationError(f"{path}:{lineno}: empty text")
        if rules is not None:
            text = anonymize(text, rules)
        portions.append(Portion(country=country, topic_id=topic_id, text=text))
    return Corpus(portions=portions)


def collect(country: str, topic_id: str, corpus: Corpus) -> str | None:
    """Concatenate the country's portions for the topic in file order."""
    texts = [p.text for p in corpus.portions
             if p.country == country and p.topic_id == topic_id]
    if not texts:
        return None
    return "\n".join(texts)


def order_countries(topic_id: str, corpus: Corpus) -> list[str]:
    """Participating countries, largest total portion size first.

    Size is the total character count of the country's portions for the
    topic; ties break by ascending country code.
    """
    sizes: dict[str, int] = {}
    for p in corpus.portions:
        if p.topic_id == topic_id:
            sizes[p.country] = sizes.get(p.country, 0) + p.char_len
    return sorted(sizes, key=lambda c: (-sizes[c], c))


def load_reference_summaries(
    path: str | Path, taxonomy: Taxonomy
) -> dict[str, ReferenceSummary]:
    path = Path(path)
    refs: dict[str, ReferenceSummary] = {}
    for lineno, raw in _data_lines(path):
        parts = raw.split("\t")
        if len(parts) != 2:
            raise ValidationError(f"{path}:{lineno}: expected 2 tab-separated fields")
        topic_id, text = parts
        if topic_id not in taxonomy.topics:
            raise ValidationError(f"{path}:{lineno}: unknown topic_id {topic_id!r}")
        if topic_id in refs:
            raise ValidationError(f"{path}:{lineno}: duplicate reference for {topic_id!r}")
        refs[topic_id] = ReferenceSummary(topic_id, unescape_text(text))
    return refs
