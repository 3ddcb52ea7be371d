import csv

import pytest
from hypothesis import given
from hypothesis import strategies as st

from codemix_off.corpus import Label
from codemix_off.metrics import (
    PUBLISHED_TEST,
    EmptyInput,
    LengthMismatch,
    MetricsError,
    MetricsReport,
    audit_report,
    compute_metrics,
    derive_supports,
    error_report,
    published_report,
    read_report,
    weighted_from_supports,
    write_error_report,
    write_report,
)
from oracles import metrics_mismatches

N, O = Label.NOT, Label.OFF


def test_matches_counting_oracle():
    assert metrics_mismatches(instances=1000, max_n=50) == 0


@given(st.lists(st.tuples(st.sampled_from([N, O]), st.sampled_from([N, O])), min_size=1, max_size=60))
def test_report_invariants(pairs):
    preds, gold = zip(*pairs)
    rep = compute_metrics(preds, gold)
    assert abs(rep.weighted[1] - rep.accuracy) <= 1e-9
    values = [rep.accuracy, *rep.weighted] + [v for c in rep.per_class.values() for v in (c.precision, c.recall, c.f1)]
    assert all(0.0 <= v <= 1.0 for v in values)
    conf = rep.confusion
    assert conf["tp"] + conf["tn"] + conf["fp"] + conf["fn"] == len(gold)


def test_perfect_predictions():
    gold = [N, O, O, N, N]
    rep = compute_metrics(gold, gold)
    assert rep.accuracy == 1.0 and rep.weighted == (1.0, 1.0, 1.0)
    assert all((c.precision, c.recall, c.f1) == (1, 1, 1) for c in rep.per_class.values())


def test_single_class_predictions_are_degenerate():
    rep = compute_metrics([O] * 4, [N, O, N, O])
    assert rep.accuracy == 0.5
    assert rep.per_class[O].recall == 1.0
    n = rep.per_class[N]
    assert (n.precision, n.recall, n.f1, n.degenerate) == (0.0, 0.0, 0.0, True)
    assert not rep.per_class[O].degenerate


def test_not_listed_first_and_strings_accepted():
    rep = compute_metrics(["OFF", "NOT"], ["OFF", "OFF"])
    assert list(rep.per_class) == [N, O]
    assert list(rep.to_json())[:2] == ["not_offensive", "offensive"]


def test_errors():
    with pytest.raises(LengthMismatch):
        compute_metrics([N], [N, O])
    with pytest.raises(EmptyInput):
        compute_metrics([], [])


def _enumerate_supports(recall_not, recall_off, correct, total):
    # every (n_not, c_not, c_off) whose rounded recalls and correct count match
    found = []
    for n_not in range(1, total):
        n_off = total - n_not
        for c_not in range(n_not + 1):
            c_off = correct - c_not
            if (
                0 <= c_off <= n_off
                and round(c_not / n_not, 3) == recall_not
                and round(c_off / n_off, 3) == recall_off
            ):
                found.append(n_not)
    return sorted(set(found))


def test_task1_supports_and_weighted_f1():
    assert _enumerate_supports(0.875, 0.500, 528, 654) == [536]
    supports = derive_supports({N: 0.875, O: 0.500}, 528, 654)
    assert supports == {N: 536, O: 118}
    f = weighted_from_supports({N: 0.882, O: 0.484}, supports)
    assert f == pytest.approx(0.810190, abs=1e-6)
    assert abs(f - PUBLISHED_TEST["task1_ta"]["overall"][2]) <= 2e-3


def test_derive_supports_errors():
    with pytest.raises(MetricsError):
        derive_supports({N: 0.5, O: 0.5}, 10, 20)
    with pytest.raises(MetricsError):
        derive_supports({N: 0.9, O: 0.8}, 5, 10)


def published_task1_run():
    """Predictions with 469/536 NOT and 59/118 OFF correct."""
    gold = [N] * 536 + [O] * 118
    preds = [N] * 469 + [O] * 67 + [O] * 59 + [N] * 59
    return preds, gold


def test_constructed_run_reproduces_task1_row():
    rep = compute_metrics(*published_task1_run())
    row = PUBLISHED_TEST["task1_ta"]
    for label, key in ((N, "not"), (O, "off")):
        c = rep.per_class[label]
        assert [round(v, 3) for v in (c.precision, c.recall, c.f1)] == list(row[key])
    assert [round(v, 3) for v in rep.weighted] == list(row["overall"])
    assert round(rep.accuracy, 3) == row["acc"]
    assert audit_report(rep, 528, 126).passed


@pytest.mark.parametrize(
    "key, passed, delta",
    [("task1_ta", True, 0.000339), ("task2_ta", True, 0.000356), ("task2_ml", False, 0.089737)],
)
def test_audit_published_rows(key, passed, delta):
    correct, incorrect = PUBLISHED_TEST[key]["counts"]
    result = audit_report(published_report(key), correct, incorrect)
    assert result.passed is passed
    assert result.accuracy_delta == pytest.approx(delta, abs=1e-6)
    assert result.to_json()["pass"] is passed


def test_audit_requires_recall_identity():
    rep = compute_metrics([N, O], [N, N])
    bad = MetricsReport(rep.per_class, (rep.weighted[0], 0.9, rep.weighted[2]), rep.accuracy)
    assert audit_report(rep, 1, 1).passed
    assert not audit_report(bad, 1, 1).passed
    with pytest.raises(MetricsError):
        audit_report(rep, 0, 0)


def test_error_report_groups_and_order():
    gold = [N] * 9 + [O]
    preds = [N] * 9 + [O]
    assert error_report(preds, gold, ["t"] * 10) == {"false_offensive": [], "missed_offensive": []}
    preds[3] = O
    groups = error_report(preds, gold, [f"t{i}" for i in range(10)])
    assert [c.text for c in groups["false_offensive"]] == ["t3"] and not groups["missed_offensive"]

    gold, preds = [N, N, O, O, N], [O, O, N, N, N]
    probs = [0.6, 0.9, 0.2, 0.45, 0.1]
    groups = error_report(preds, gold, list("abcde"), probs, ids=["i0", "i1", "i2", "i3", "i4"])
    assert [c.id for c in groups["false_offensive"]] == ["i1", "i0"]
    assert [c.id for c in groups["missed_offensive"]] == ["i2", "i3"]
    assert groups["missed_offensive"][0].confidence == pytest.approx(0.8)
    with pytest.raises(LengthMismatch):
        error_report([N], [N, O], ["a", "b"])


def test_error_report_size_matches_incorrect_count(tmp_path):
    preds, gold = published_task1_run()
    rep = compute_metrics(preds, gold)
    groups = error_report(preds, gold, [str(i) for i in range(len(gold))])
    assert len(groups["false_offensive"]) == rep.confusion["fp"] == 67
    assert len(groups["missed_offensive"]) == rep.confusion["fn"] == 59
    assert sum(map(len, groups.values())) == 126
    write_error_report(groups, tmp_path / "err.tsv")
    with open(tmp_path / "err.tsv", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    assert rows[0] == ["group", "id", "text", "gold", "pred", "confidence"] and len(rows) == 127


def test_report_json_round_trip_and_table(tmp_path):
    rep = compute_metrics(*published_task1_run())
    write_report(rep, tmp_path / "m.json")
    assert read_report(tmp_path / "m.json") == rep
    table = rep.to_table("task1/ta").splitlines()
    assert table[0].split() == ["NOT", "P", "NOT", "R", "NOT", "F", "OFF", "P", "OFF", "R", "OFF", "F", "P", "R", "F", "Acc"]
    assert table[1].split() == ["task1/ta", "0.888", "0.875", "0.882", "0.468", "0.500", "0.484", "0.812", "0.807", "0.810", "0.807"]
