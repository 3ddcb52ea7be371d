"""Comment cleaning and rule-based Roman -> native-script transliteration."""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping

import regex

from .corpus import Dataset, Language

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CleanConfig:
    remove_emoji: bool = False
    remove_flags: bool = False
    lowercase: bool = False
    strip_punctuation: bool = False
    strip_trailing_space: bool = True

    @classmethod
    def task1(cls) -> CleanConfig:
        return cls(remove_emoji=True, remove_flags=True, lowercase=True, strip_punctuation=False)

    @classmethod
    def task2(cls) -> CleanConfig:
        return cls(strip_punctuation=True, strip_trailing_space=True, lowercase=True)

    @classmethod
    def for_task(cls, task: str) -> CleanConfig:
        return cls.task1() if str(getattr(task, "value", task)) == "task1" else cls.task2()


_RI = "\U0001F1E6-\U0001F1FF"
_TAGS = "\U000E0020-\U000E007F"
_FLAG_RE = regex.compile(rf"[{_RI}]|\U0001F3F4[{_TAGS}]+")

# pictographs and presentation-emoji, excluding regional indicators (flags are separate)
_PICT = rf"(?:(?![{_RI}])[\p{{Extended_Pictographic}}\p{{Emoji_Presentation}}])"
_TRAIL = rf"(?:[\uFE0E\uFE0F{_TAGS}]|\p{{Emoji_Modifier}})*"
_EMOJI_RE = regex.compile(
    r"[0-9#*]\uFE0F?\u20E3"
    rf"|{_PICT}{_TRAIL}(?:\u200D{_PICT}{_TRAIL})*"
    rf"|[\uFE0E\uFE0F\u20E3{_TAGS}]|\p{{Emoji_Modifier}}"
)
_SPACE_RE = regex.compile(r"\s+")


def _is_latin(ch: str) -> bool:
    return "LATIN" in unicodedata.name(ch, "")


def _lower_latin(text: str) -> str:
    out = []
    for ch in text:
        low = ch.lower()
        out.append(low if len(low) == 1 and low != ch and _is_latin(ch) else ch)
    return "".join(out)


def clean_text(text: str, config: CleanConfig) -> str:
    """Apply the configured deletion passes, then collapse whitespace runs.

    Punctuation is replaced by a space rather than deleted so that
    ``word,,,word`` stays two tokens. Non-Latin letters are never touched.
    """
    if config.remove_flags:
        text = _FLAG_RE.sub("", text)
    if config.remove_emoji:
        text = _EMOJI_RE.sub("", text)
    if config.lowercase:
        text = _lower_latin(text)
    if config.strip_punctuation:
        text = "".join(" " if unicodedata.category(ch).startswith("P") else ch for ch in text)
    text = _SPACE_RE.sub(" ", text)
    if config.strip_trailing_space:
        text = text.strip()
    return text


class SchemeError(ValueError):
    code = "textprep.SchemeError"


@dataclass(frozen=True)
class TranslitScheme:
    name: str
    target_script: str
    rules: Mapping[str, str]

    def __post_init__(self):
        if not self.rules:
            raise SchemeError(f"scheme {self.name!r} has no rules")
        if "" in self.rules:
            raise SchemeError(f"scheme {self.name!r} has an empty roman sequence")
        object.__setattr__(self, "_max_len", max(map(len, self.rules)))

    @property
    def max_key_len(self) -> int:
        return self._max_len

    @classmethod
    def from_file(cls, path: str | Path, name: str | None = None, target_script: str | None = None):
        path = Path(path)
        return cls._parse(path.read_text(encoding="utf-8"), name or path.stem, target_script, str(path))

    @classmethod
    def _parse(cls, content: str, name: str, target_script: str | None, origin: str) -> TranslitScheme:
        rules: dict[str, str] = {}
        meta: dict[str, str] = {}
        for lineno, line in enumerate(content.splitlines(), start=1):
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                if value:
                    meta[key.strip()] = value.strip()
                continue
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0]:
                raise SchemeError(f"{origin}:{lineno}: expected roman<TAB>native")
            if parts[0] in rules:
                raise SchemeError(f"{origin}:{lineno}: duplicate rule for {parts[0]!r}")
            rules[parts[0]] = parts[1]
        return cls(meta.get("scheme", name), target_script or meta.get("target", "unknown"), rules)


@lru_cache(maxsize=None)
def bundled_scheme(language: Language | str) -> TranslitScheme:
    language = Language(language)
    fname = {Language.TA: "tamil.tsv", Language.ML: "malayalam.tsv"}[language]
    content = resources.files("codemix_off").joinpath("data", fname).read_text(encoding="utf-8")
    return TranslitScheme._parse(content, fname, None, fname)


def _rewrite(text: str, scheme: TranslitScheme) -> tuple[str, int]:
    rules, longest = scheme.rules, scheme.max_key_len
    out, i, rewritten = [], 0, 0
    n = len(text)
    while i < n:
        for size in range(min(longest, n - i), 0, -1):
            native = rules.get(text[i : i + size])
            if native is not None:
                out.append(native)
                i += size
                rewritten += size
                break
        else:
            out.append(text[i])
            i += 1
    return "".join(out), rewritten


def transliterate(roman_text: str, scheme: TranslitScheme) -> str:
    """Greedy longest-match rewrite; unmatched characters pass through."""
    return _rewrite(roman_text, scheme)[0]


def coverage_ratio(roman_text: str, scheme: TranslitScheme) -> float:
    """Fraction of non-space characters consumed by some rule (1.0 for blank text)."""
    significant = sum(not ch.isspace() for ch in roman_text)
    if not significant:
        return 1.0
    return _rewrite(roman_text, scheme)[1] / significant


def transliterate_dataset(ds: Dataset, scheme: TranslitScheme, config: CleanConfig) -> Dataset:
    samples, total_cov = [], 0.0
    for s in ds.samples:
        cleaned = clean_text(s.text, config)
        native, rewritten = _rewrite(cleaned, scheme)
        significant = sum(not ch.isspace() for ch in cleaned)
        cov = rewritten / significant if significant else 1.0
        total_cov += cov
        logger.debug("sample %s: rule coverage %.3f", s.id, cov)
        # a sample that cleans down to nothing keeps its original text
        samples.append(replace(s, text=native) if native.strip() else s)
    if samples:
        logger.info(
            "transliterated %d samples with %s, mean rule coverage %.3f",
            len(samples), scheme.name, total_cov / len(samples),
        )
    return ds.with_samples(samples)
