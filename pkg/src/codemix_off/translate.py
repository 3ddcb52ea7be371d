"""Native-script -> English translation behind a provider interface, with a JSON-lines cache."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .corpus import Dataset, Label, parse_label
from .textprep import CleanConfig, clean_text

logger = logging.getLogger(__name__)

API_KEY_ENV = "CODEMIX_TRANSLATE_API_KEY"
DEFAULT_ENDPOINT = "https://translation.googleapis.com/language/translate/v2"
CHUNK_SIZE = 50


class TranslateError(RuntimeError):
    code = "translate.TranslateError"


class ProviderUnavailable(TranslateError):
    code = "translate.ProviderUnavailable"


class RateLimited(TranslateError):
    code = "translate.RateLimited"


class ProviderError(TranslateError):
    code = "translate.ProviderError"


def source_hash(source_text: str, source_lang: str, target_lang: str) -> str:
    payload = json.dumps([source_text, source_lang, target_lang], ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class TranslationEntry:
    source_hash: str
    source_text: str
    target_lang: str
    translation: str
    provider: str
    timestamp: str


class TranslationCache:
    """Append-only JSON-lines store keyed by :func:`source_hash`.

    With ``path=None`` the cache lives in memory only. On load, later lines
    win over earlier ones and a torn final line is skipped.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, TranslationEntry] = {}
        self._lock = threading.Lock()
        self._inflight: dict[str, Future] = {}
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self) -> None:
        with self.path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    entry = TranslationEntry(**json.loads(line))
                except (json.JSONDecodeError, TypeError) as exc:
                    logger.warning("%s:%d: skipping unreadable cache line (%s)", self.path, lineno, exc)
                    continue
                self._entries[entry.source_hash] = entry

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def entries(self) -> list[TranslationEntry]:
        with self._lock:
            return list(self._entries.values())

    def get(self, source_text: str, source_lang: str, target_lang: str) -> str | None:
        entry = self._entries.get(source_hash(source_text, source_lang, target_lang))
        return None if entry is None else entry.translation

    def put(
        self, source_text: str, source_lang: str, target_lang: str, translation: str, provider: str
    ) -> TranslationEntry:
        entry = TranslationEntry(
            source_hash=source_hash(source_text, source_lang, target_lang),
            source_text=source_text,
            target_lang=target_lang,
            translation=translation,
            provider=provider,
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )
        with self._lock:
            self._entries[entry.source_hash] = entry
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(asdict(entry), ensure_ascii=False) + "\n")
        return entry


class Provider:
    name = "provider"

    def __init__(self):
        self.calls = 0  # texts sent to the backend, not requests
        self._count_lock = threading.Lock()

    def translate(self, texts: Sequence[str], source_lang: str, target_lang: str) -> list[str]:
        with self._count_lock:
            self.calls += len(texts)
        return self._translate(list(texts), source_lang, target_lang)

    def _translate(self, texts: list[str], source_lang: str, target_lang: str) -> list[str]:
        raise NotImplementedError


class IdentityProvider(Provider):
    name = "identity"

    def _translate(self, texts, source_lang, target_lang):
        return list(texts)


class FixtureProvider(Provider):
    """Serves translations from a ``source<TAB>translation`` file."""

    name = "fixture"

    def __init__(self, table: dict[str, str]):
        super().__init__()
        self.table = dict(table)

    @classmethod
    def from_file(cls, path: str | Path) -> FixtureProvider:
        return cls(read_fixture(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def bundled(cls) -> FixtureProvider:
        """The three example translations discussed in the error analysis."""
        text = resources.files("codemix_off").joinpath("data", "example_translations.tsv").read_text(encoding="utf-8")
        return cls(read_fixture(text))

    def _translate(self, texts, source_lang, target_lang):
        missing = [t for t in texts if t not in self.table]
        if missing:
            raise ProviderError(f"fixture has no translation for {missing[0]!r} (+{len(missing) - 1} more)")
        return [self.table[t] for t in texts]


def read_fixture(content: str) -> dict[str, str]:
    table = {}
    for lineno, line in enumerate(content.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"fixture line {lineno}: expected source<TAB>translation")
        table[parts[0]] = parts[1]
    return table


class HttpProvider(Provider):
    """Google-Translate-v2-style REST client. The API key comes from the environment."""

    name = "http"

    def __init__(self, endpoint: str = DEFAULT_ENDPOINT, api_key: str | None = None, timeout: float = 30.0):
        super().__init__()
        self.endpoint = endpoint
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.timeout = timeout

    def _translate(self, texts, source_lang, target_lang):
        import requests

        if not self.api_key:
            raise ProviderUnavailable(f"no API key; set {API_KEY_ENV}")
        try:
            resp = requests.post(
                self.endpoint,
                params={"key": self.api_key},
                json={"q": texts, "source": source_lang, "target": target_lang, "format": "text"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ProviderError(f"request failed: {exc}") from exc
        if resp.status_code == 429:
            raise RateLimited("provider returned HTTP 429")
        if resp.status_code != 200:
            raise ProviderError(f"provider returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            out = [t["translatedText"] for t in resp.json()["data"]["translations"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"unexpected response shape: {exc}") from exc
        if len(out) != len(texts):
            raise ProviderError(f"asked for {len(texts)} translations, got {len(out)}")
        return out


def _call_with_retry(provider, chunk, source_lang, target_lang, max_retries, backoff, sleep):
    for attempt in range(max_retries + 1):
        try:
            return provider.translate(chunk, source_lang, target_lang)
        except RateLimited:
            if attempt == max_retries:
                raise
            delay = backoff * 2**attempt
            logger.warning("rate limited; retrying in %.2fs (attempt %d)", delay, attempt + 1)
            sleep(delay)
        except TranslateError:
            raise
        except Exception as exc:
            raise ProviderError(f"{provider.name}: {exc}") from exc


def translate_batch(
    texts: Sequence[str],
    source_lang: str,
    target_lang: str,
    provider: Provider | None,
    cache: TranslationCache,
    *,
    max_workers: int = 1,
    chunk_size: int = CHUNK_SIZE,
    max_retries: int = 4,
    backoff: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
) -> list[str]:
    """Translate ``texts`` in order, consulting ``cache`` first.

    Each distinct uncached text reaches the provider once, even when another
    thread is already translating it through the same cache.
    """
    keys = [source_hash(t, source_lang, target_lang) for t in texts]
    owned: dict[str, str] = {}
    waiting: dict[str, Future] = {}
    with cache._lock:
        for key, text in zip(keys, texts):
            if key in cache._entries or key in owned or key in waiting:
                continue
            if key in cache._inflight:
                waiting[key] = cache._inflight[key]
            else:
                owned[key] = text
                cache._inflight[key] = Future()

    if owned:
        try:
            if provider is None:
                raise ProviderUnavailable(f"{len(owned)} text(s) not cached and no provider configured")
            todo = list(owned.values())
            chunks = [todo[i : i + chunk_size] for i in range(0, len(todo), chunk_size)]
            call = lambda chunk: _call_with_retry(  # noqa: E731
                provider, chunk, source_lang, target_lang, max_retries, backoff, sleep
            )
            if max_workers > 1 and len(chunks) > 1:
                with ThreadPoolExecutor(max_workers=max_workers) as pool:
                    results = list(pool.map(call, chunks))
            else:
                results = [call(chunk) for chunk in chunks]
            for chunk, translated in zip(chunks, results):
                for text, out in zip(chunk, translated):
                    cache.put(text, source_lang, target_lang, out, provider.name)
        except BaseException as exc:
            with cache._lock:
                for key in owned:
                    cache._inflight.pop(key).set_exception(exc)
            raise
        with cache._lock:
            for key in owned:
                cache._inflight.pop(key).set_result(None)

    for fut in waiting.values():
        fut.result()
    return [cache._entries[k].translation for k in keys]


@dataclass(frozen=True)
class ParallelSample:
    id: str
    native_text: str
    english_text: str
    label: Label | None = None
    flags: tuple[str, ...] = field(default=())

    @property
    def suspect(self) -> bool:
        return bool(self.flags)


def _words(text: str) -> list[str]:
    cleaned = clean_text(text, CleanConfig(lowercase=True, strip_punctuation=True))
    return cleaned.split()


def translation_flags(source: str, translation: str, min_ascii_ratio: float = 0.8, max_copy_ratio: float = 0.5):
    """Reasons a translation looks unreliable; an empty tuple means none.

    ``low_ascii``: under ``min_ascii_ratio`` of its letters are ASCII.
    ``unchanged``: equals the source up to case and spacing.
    ``copied``: at least ``max_copy_ratio`` of its words appear verbatim in the
    source, i.e. the provider echoed romanized words instead of translating.
    """
    if not translation.strip():
        return ("empty",)
    flags = []
    letters = [ch for ch in translation if ch.isalpha()]
    ascii_ratio = sum(ch.isascii() for ch in letters) / len(letters) if letters else 0.0
    if ascii_ratio < min_ascii_ratio:
        flags.append("low_ascii")
    src_words, out_words = _words(source), _words(translation)
    if src_words == out_words:
        flags.append("unchanged")
    elif out_words:
        vocab = set(src_words)
        if sum(w in vocab for w in out_words) / len(out_words) >= max_copy_ratio:
            flags.append("copied")
    return tuple(flags)


def build_parallel_corpus(
    ds: Dataset,
    provider: Provider | None,
    cache: TranslationCache,
    *,
    target_lang: str = "en",
    clean: CleanConfig | None = None,
    **batch_kwargs,
) -> list[ParallelSample]:
    clean = clean or CleanConfig.task2()
    source_lang = ds.language.value
    translations = translate_batch(ds.texts, source_lang, target_lang, provider, cache, **batch_kwargs)
    out = []
    for s, raw in zip(ds.samples, translations):
        flags = translation_flags(s.text, raw)
        if flags:
            logger.info("sample %s: translation flagged %s", s.id, ",".join(flags))
        out.append(ParallelSample(s.id, clean_text(s.text, clean), clean_text(raw, clean), s.label, flags))
    return out


PARALLEL_COLUMNS = ["id", "native", "english", "label", "flags"]


def save_parallel(samples: Iterable[ParallelSample], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(PARALLEL_COLUMNS)
        for p in samples:
            writer.writerow([p.id, p.native_text, p.english_text, p.label.value if p.label else "", ",".join(p.flags)])


def load_parallel(path: str | Path) -> list[ParallelSample]:
    with Path(path).open(encoding="utf-8-sig", newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        missing = {"id", "native", "english"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: parallel file lacks columns {sorted(missing)}")
        out = []
        for row in reader:
            label = parse_label(row["label"]) if (row.get("label") or "").strip() else None
            flags = tuple(f for f in (row.get("flags") or "").split(",") if f)
            out.append(ParallelSample(row["id"], row["native"], row["english"], label, flags))
    return out
