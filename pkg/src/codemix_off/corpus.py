"""Labeled comment datasets: loading, saving, class counts and stratified splits."""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class Label(str, Enum):
    NOT = "NOT"
    OFF = "OFF"

    @property
    def as_int(self) -> int:
        return 1 if self is Label.OFF else 0


class Task(str, Enum):
    TASK1 = "task1"
    TASK2 = "task2"


class Language(str, Enum):
    TA = "ta"
    ML = "ml"


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


LABEL_TOKENS = {
    "off": Label.OFF,
    "offensive": Label.OFF,
    "not": Label.NOT,
    "not offensive": Label.NOT,
    "not-offensive": Label.NOT,
}


class CorpusError(ValueError):
    code = "corpus.CorpusError"


class MalformedRow(CorpusError):
    code = "corpus.MalformedRow"

    def __init__(self, message: str, rows: Sequence[tuple[int, str]] = ()):
        super().__init__(message)
        self.rows = list(rows)


class UnknownLabel(CorpusError):
    code = "corpus.UnknownLabel"


class DuplicateId(CorpusError):
    code = "corpus.DuplicateId"


class EmptyFile(CorpusError):
    code = "corpus.EmptyFile"


class UnlabeledSample(CorpusError):
    code = "corpus.UnlabeledSample"


class FractionOutOfRange(CorpusError):
    code = "corpus.FractionOutOfRange"


def parse_label(token: str) -> Label:
    key = " ".join(token.strip().lower().split())
    try:
        return LABEL_TOKENS[key]
    except KeyError:
        raise UnknownLabel(f"unknown label {token!r}") from None


@dataclass(frozen=True)
class Sample:
    id: str
    text: str
    label: Label | None
    language: Language
    split: Split = Split.TRAIN

    def __post_init__(self):
        object.__setattr__(self, "language", Language(self.language))
        object.__setattr__(self, "split", Split(self.split))
        if self.label is not None and not isinstance(self.label, Label):
            object.__setattr__(self, "label", parse_label(self.label))
        if not self.text.strip():
            raise MalformedRow(f"sample {self.id!r} has empty text")
        if self.label is None and self.split is not Split.TEST:
            raise UnlabeledSample(f"{self.split.value} sample {self.id!r} has no label")


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]
    task: Task
    language: Language

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        object.__setattr__(self, "task", Task(self.task))
        object.__setattr__(self, "language", Language(self.language))
        seen = set()
        for s in self.samples:
            if s.language is not self.language:
                raise CorpusError(f"sample {s.id!r} is {s.language.value}, dataset is {self.language.value}")
            if s.id in seen:
                raise DuplicateId(f"duplicate id {s.id!r}")
            seen.add(s.id)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.samples]

    @property
    def labels(self) -> list[Label | None]:
        return [s.label for s in self.samples]

    def with_samples(self, samples: Iterable[Sample]) -> Dataset:
        return replace(self, samples=tuple(samples))


@dataclass(frozen=True)
class DistributionReport:
    count_not: int = 0
    count_off: int = 0
    total: int = field(default=0)

    def __post_init__(self):
        if self.total != self.count_not + self.count_off:
            raise ValueError("total must equal count_not + count_off")

    def __add__(self, other: DistributionReport) -> DistributionReport:
        return DistributionReport(
            self.count_not + other.count_not,
            self.count_off + other.count_off,
            self.total + other.total,
        )

    def to_json(self) -> dict:
        return {"not_offensive": self.count_not, "offensive": self.count_off, "total": self.total}


def _sniff_delimiter(path: Path, header: str) -> str:
    if path.suffix.lower() == ".csv":
        return ","
    if path.suffix.lower() in (".tsv", ".tab"):
        return "\t"
    return "\t" if "\t" in header else ","


def load_dataset(
    path: str | Path,
    task: Task | str,
    language: Language | str,
    split: Split | str = Split.TRAIN,
) -> Dataset:
    """Read a delimited file with an ``id``/``text``/``label`` header.

    The delimiter is taken from the extension (``.csv`` or ``.tsv``), falling
    back to the header line. The label column may be missing only for test
    files. Extra columns are ignored.
    """
    path = Path(path)
    task, language, split = Task(task), Language(language), Split(split)
    with path.open(encoding="utf-8-sig", newline="") as fh:
        first = fh.readline()
        if not first.strip():
            raise EmptyFile(f"{path}: no header")
        fh.seek(0)
        reader = csv.reader(fh, delimiter=_sniff_delimiter(path, first))
        header = [h.strip().lower() for h in next(reader)]
        missing = {"id", "text"} - set(header)
        if missing:
            raise MalformedRow(f"{path}: header lacks columns {sorted(missing)}")
        if "label" not in header and split is not Split.TEST:
            raise MalformedRow(f"{path}: header lacks a label column")
        i_id, i_text = header.index("id"), header.index("text")
        i_label = header.index("label") if "label" in header else None

        samples, empty_rows = [], []
        seen_ids: set[str] = set()
        seen_text: dict[str, str] = {}
        duplicates: list[str] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedRow(
                    f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}",
                    [(lineno, "column count")],
                )
            sid, text = row[i_id], row[i_text]
            if not text.strip():
                empty_rows.append((lineno, f"id {sid!r} has empty text"))
                continue
            if sid in seen_ids:
                raise DuplicateId(f"{path}:{lineno}: duplicate id {sid!r}")
            seen_ids.add(sid)
            if text in seen_text:
                duplicates.append(f"{sid}={seen_text[text]}")
            else:
                seen_text[text] = sid
            label = None
            if i_label is not None and row[i_label].strip():
                label = parse_label(row[i_label])
            samples.append(Sample(sid, text, label, language, split))

    if duplicates:
        shown = ", ".join(duplicates[:5]) + (", ..." if len(duplicates) > 5 else "")
        logger.warning("%s: %d sample(s) duplicate an earlier text (%s)", path, len(duplicates), shown)
    if empty_rows:
        detail = "; ".join(f"line {n}: {msg}" for n, msg in empty_rows)
        raise MalformedRow(f"{path}: {len(empty_rows)} row(s) with empty text ({detail})", empty_rows)
    if not samples:
        raise EmptyFile(f"{path}: header only")
    return Dataset(tuple(samples), task, language)


def save_dataset(ds: Dataset, path: str | Path) -> None:
    path = Path(path)
    delimiter = "," if path.suffix.lower() == ".csv" else "\t"
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(["id", "text", "label"])
        for s in ds.samples:
            writer.writerow([s.id, s.text, s.label.value if s.label else ""])


def class_distribution(ds: Dataset | Iterable[Sample]) -> DistributionReport:
    counts: Counter[Label] = Counter()
    for s in ds:
        if s.label is None:
            raise UnlabeledSample(f"sample {s.id!r} has no label")
        counts[s.label] += 1
    n_not, n_off = counts[Label.NOT], counts[Label.OFF]
    return DistributionReport(n_not, n_off, n_not + n_off)


def split_stratified(ds: Dataset, val_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split into (train, val) keeping each class's share of ``val_fraction``.

    Per class, ``round(n_class * val_fraction)`` samples (half rounds up) go to
    the validation part. Both parts keep the input order.
    """
    if not 0.0 <= val_fraction < 1.0:
        raise FractionOutOfRange(f"val_fraction must be in [0, 1), got {val_fraction}")
    class_distribution(ds)  # raises on unlabeled samples

    rng = np.random.default_rng(seed)
    val_idx: set[int] = set()
    for label in (Label.NOT, Label.OFF):
        members = [i for i, s in enumerate(ds.samples) if s.label is label]
        n_val = int(np.floor(len(members) * val_fraction + 0.5))
        if n_val:
            chosen = rng.permutation(len(members))[:n_val]
            val_idx.update(members[j] for j in chosen)

    train = [s for i, s in enumerate(ds.samples) if i not in val_idx]
    val = [s for i, s in enumerate(ds.samples) if i in val_idx]
    return ds.with_samples(train), ds.with_samples(val)


def distribution_json(report: DistributionReport) -> str:
    return json.dumps(report.to_json(), sort_keys=False)
