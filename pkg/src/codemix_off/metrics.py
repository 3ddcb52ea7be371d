"""Per-class and support-weighted precision/recall/F1, report audits and error reports."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Label

CLASSES = (Label.NOT, Label.OFF)
CLASS_KEYS = {Label.NOT: "not_offensive", Label.OFF: "offensive"}


class MetricsError(ValueError):
    code = "metrics.MetricsError"


class LengthMismatch(MetricsError):
    code = "metrics.LengthMismatch"


class EmptyInput(MetricsError):
    code = "metrics.EmptyInput"


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int
    degenerate: bool = False  # some ratio had a zero denominator and was set to 0


@dataclass(frozen=True)
class MetricsReport:
    per_class: dict[Label, ClassScores]
    weighted: tuple[float, float, float]
    accuracy: float
    confusion: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {}
        for label in CLASSES:
            c = self.per_class[label]
            out[CLASS_KEYS[label]] = {
                "precision": c.precision,
                "recall": c.recall,
                "f1": c.f1,
                "support": c.support,
                "degenerate": c.degenerate,
            }
        p, r, f = self.weighted
        out["overall"] = {"precision": p, "recall": r, "f1": f}
        out["accuracy"] = self.accuracy
        if self.confusion:
            out["confusion"] = dict(self.confusion)
        return out

    @classmethod
    def from_json(cls, data: dict) -> MetricsReport:
        per_class = {}
        for label in CLASSES:
            c = data[CLASS_KEYS[label]]
            per_class[label] = ClassScores(
                c["precision"], c["recall"], c["f1"], int(c.get("support", 0)), bool(c.get("degenerate", False))
            )
        o = data["overall"]
        return cls(per_class, (o["precision"], o["recall"], o["f1"]), data["accuracy"], data.get("confusion", {}))

    def to_table(self, title: str = "") -> str:
        """Aligned text table: one row, P/R/F per class, then overall P/R/F and accuracy."""
        head = ["", "NOT P", "NOT R", "NOT F", "OFF P", "OFF R", "OFF F", "P", "R", "F", "Acc"]
        row = [title or "run"]
        for label in CLASSES:
            c = self.per_class[label]
            row += [f"{c.precision:.3f}", f"{c.recall:.3f}", f"{c.f1:.3f}"]
        row += [f"{x:.3f}" for x in self.weighted] + [f"{self.accuracy:.3f}"]
        widths = [max(len(a), len(b)) for a, b in zip(head, row)]
        fmt = lambda cells: "  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(cells, widths)))  # noqa: E731
        return fmt(head) + "\n" + fmt(row) + "\n"


def _ratio(num: int, den: int) -> tuple[float, bool]:
    return (num / den, False) if den else (0.0, True)


def _coerce(labels: Sequence) -> list[Label]:
    return [lab if isinstance(lab, Label) else Label(lab) for lab in labels]


def compute_metrics(preds: Sequence[Label], gold: Sequence[Label]) -> MetricsReport:
    preds, gold = _coerce(preds), _coerce(gold)
    if len(preds) != len(gold):
        raise LengthMismatch(f"{len(preds)} predictions for {len(gold)} gold labels")
    if not gold:
        raise EmptyInput("no predictions to score")
    p = np.array([x is Label.OFF for x in preds])
    g = np.array([x is Label.OFF for x in gold])
    tp, tn = int(np.sum(p & g)), int(np.sum(~p & ~g))
    fp, fn = int(np.sum(p & ~g)), int(np.sum(~p & g))
    n = len(gold)

    per_class = {}
    for label, hit, predicted, support in (
        (Label.OFF, tp, tp + fp, tp + fn),
        (Label.NOT, tn, tn + fn, tn + fp),
    ):
        prec, d1 = _ratio(hit, predicted)
        rec, d2 = _ratio(hit, support)
        f1, d3 = _ratio(2 * hit, predicted + support)
        per_class[label] = ClassScores(prec, rec, f1, support, d1 or d2 or d3)

    weighted = tuple(
        sum(getattr(per_class[c], m) * per_class[c].support for c in CLASSES) / n for m in ("precision", "recall", "f1")
    )
    return MetricsReport(
        per_class={c: per_class[c] for c in CLASSES},
        weighted=weighted,
        accuracy=(tp + tn) / n,
        confusion={"tp": tp, "fp": fp, "fn": fn, "tn": tn},
    )


def derive_supports(recalls: dict[Label, float], correct: int, total: int) -> dict[Label, int]:
    """Recover integer class supports from per-class recalls and the correct count.

    Solves ``n_not + n_off = total`` and ``r_not*n_not + r_off*n_off = correct``.
    """
    r_not, r_off = recalls[Label.NOT], recalls[Label.OFF]
    if abs(r_not - r_off) < 1e-12:
        raise MetricsError("equal recalls do not determine the supports")
    n_not = (correct - r_off * total) / (r_not - r_off)
    n_not = int(round(n_not))
    if not 0 <= n_not <= total:
        raise MetricsError(f"recalls and counts are inconsistent (n_not={n_not})")
    return {Label.NOT: n_not, Label.OFF: total - n_not}


def weighted_from_supports(values: dict[Label, float], supports: dict[Label, int]) -> float:
    total = sum(supports.values())
    return sum(values[c] * supports[c] for c in CLASSES) / total


@dataclass(frozen=True)
class AuditResult:
    passed: bool
    accuracy: float
    count_accuracy: float
    accuracy_delta: float
    recall_delta: float
    tolerance: float

    def to_json(self) -> dict:
        return {
            "pass": self.passed,
            "accuracy": self.accuracy,
            "count_accuracy": self.count_accuracy,
            "accuracy_delta": self.accuracy_delta,
            "weighted_recall_delta": self.recall_delta,
            "tolerance": self.tolerance,
        }


def audit_report(report: MetricsReport, correct: int, incorrect: int, tolerance: float = 5e-4) -> AuditResult:
    """Check a report's accuracy against raw correct/incorrect counts.

    Passes when the accuracy is within ``tolerance`` of ``correct / total`` and
    the weighted recall equals the accuracy to the same tolerance (published
    tables are rounded to three decimals).
    """
    total = correct + incorrect
    if total <= 0:
        raise MetricsError("correct + incorrect must be positive")
    count_acc = correct / total
    acc_delta = abs(report.accuracy - count_acc)
    recall_delta = abs(report.weighted[1] - report.accuracy)
    return AuditResult(
        passed=acc_delta <= tolerance and recall_delta <= tolerance,
        accuracy=report.accuracy,
        count_accuracy=count_acc,
        accuracy_delta=acc_delta,
        recall_delta=recall_delta,
        tolerance=tolerance,
    )


@dataclass(frozen=True)
class ErrorCase:
    id: str
    text: str
    gold: Label
    pred: Label
    confidence: float


FALSE_OFFENSIVE = "false_offensive"
MISSED_OFFENSIVE = "missed_offensive"


def error_report(preds, gold, texts, probabilities=None, ids=None) -> dict[str, list[ErrorCase]]:
    """Misclassified samples grouped as false-offensive / missed-offensive.

    Within a group the most confident mistakes come first; confidence is the
    probability assigned to the predicted class (1.0 without probabilities).
    """
    preds, gold = _coerce(preds), _coerce(gold)
    if not (len(preds) == len(gold) == len(texts)):
        raise LengthMismatch("preds, gold and texts differ in length")
    if probabilities is not None and len(probabilities) != len(preds):
        raise LengthMismatch("probabilities differ in length from preds")
    ids = list(ids) if ids is not None else [str(i) for i in range(len(preds))]
    groups: dict[str, list[ErrorCase]] = {FALSE_OFFENSIVE: [], MISSED_OFFENSIVE: []}
    for i, (p, g) in enumerate(zip(preds, gold)):
        if p is g:
            continue
        if probabilities is None:
            conf = 1.0
        else:
            conf = float(probabilities[i]) if p is Label.OFF else 1.0 - float(probabilities[i])
        key = FALSE_OFFENSIVE if p is Label.OFF else MISSED_OFFENSIVE
        groups[key].append(ErrorCase(ids[i], texts[i], g, p, conf))
    for cases in groups.values():
        cases.sort(key=lambda c: -c.confidence)
    return groups


def write_error_report(groups: dict[str, list[ErrorCase]], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(["group", "id", "text", "gold", "pred", "confidence"])
        for group, cases in groups.items():
            for c in cases:
                writer.writerow([group, c.id, c.text, c.gold.value, c.pred.value, f"{c.confidence:.6f}"])


def write_report(report: MetricsReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8")


def read_report(path: str | Path) -> MetricsReport:
    return MetricsReport.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


# Test-set rows as published, used to audit reported accuracies against error-analysis counts.
PUBLISHED_TEST = {
    "task1_ta": {"not": (0.888, 0.875, 0.882), "off": (0.468, 0.500, 0.484), "overall": (0.812, 0.807, 0.810), "acc": 0.807, "counts": (528, 126)},
    "task2_ta": {"not": (0.657, 0.865, 0.746), "off": (0.596, 0.306, 0.405), "overall": (0.633, 0.644, 0.612), "acc": 0.644, "counts": (645, 356)},
    "task2_ml": {"not": (0.817, 0.640, 0.718), "off": (0.483, 0.701, 0.572), "overall": (0.708, 0.660, 0.670), "acc": 0.660, "counts": (713, 238)},
}


def published_report(key: str) -> MetricsReport:
    row = PUBLISHED_TEST[key]
    per_class = {
        Label.NOT: ClassScores(*row["not"], support=0),
        Label.OFF: ClassScores(*row["off"], support=0),
    }
    return MetricsReport(per_class, tuple(row["overall"]), row["acc"])
