import itertools
import logging
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codemix_off.corpus import (
    Dataset,
    DistributionReport,
    DuplicateId,
    EmptyFile,
    FractionOutOfRange,
    Label,
    Language,
    MalformedRow,
    Sample,
    Split,
    Task,
    UnknownLabel,
    UnlabeledSample,
    class_distribution,
    load_dataset,
    parse_label,
    save_dataset,
    split_stratified,
)

FIXTURES = Path(__file__).parent / "fixtures"


def make(labels, language=Language.TA, prefix="s"):
    samples = tuple(Sample(f"{prefix}{i}", f"text {prefix} {i}", lab, language) for i, lab in enumerate(labels))
    return Dataset(samples, Task.TASK1, language)


def write(tmp_path, content, name="data.tsv"):
    path = tmp_path / name
    path.write_text(content, encoding="utf-8")
    return path


@pytest.mark.parametrize(
    "token, label",
    [("OFF", Label.OFF), ("offensive", Label.OFF), ("Offensive", Label.OFF), ("NOT", Label.NOT),
     ("not offensive", Label.NOT), ("Not-Offensive", Label.NOT), (" not  offensive ", Label.NOT)],
)
def test_label_tokens(token, label):
    assert parse_label(token) is label


def test_unknown_label(tmp_path):
    path = write(tmp_path, "id\ttext\tlabel\n1\thello\tmaybe\n")
    with pytest.raises(UnknownLabel):
        load_dataset(path, "task1", "ta")


def test_load_normalizes_labels(tmp_path):
    path = write(tmp_path, "id\ttext\tlabel\n1\tnalla padam\tOffensive\n2\tsuper\tnot offensive\n")
    ds = load_dataset(path, "task1", "ta")
    assert ds.labels == [Label.OFF, Label.NOT]
    assert ds.texts == ["nalla padam", "super"]
    assert all(s.language is Language.TA for s in ds)


def test_load_csv_with_quoting(tmp_path):
    path = write(tmp_path, 'ID,Text,Label\n1,"hello, world",OFF\n2,"say ""hi""",NOT\n', "data.csv")
    ds = load_dataset(path, "task2", "ml")
    assert ds.texts == ["hello, world", 'say "hi"']


def test_header_only_is_empty_file(tmp_path):
    with pytest.raises(EmptyFile):
        load_dataset(write(tmp_path, "id\ttext\tlabel\n"), "task1", "ta")


def test_wrong_column_count(tmp_path):
    path = write(tmp_path, "id\ttext\tlabel\n1\thello\n")
    with pytest.raises(MalformedRow):
        load_dataset(path, "task1", "ta")


def test_empty_text_rows_reported_together(tmp_path):
    path = write(tmp_path, "id\ttext\tlabel\n1\t \tOFF\n2\tok\tNOT\n3\t\tNOT\n")
    with pytest.raises(MalformedRow) as err:
        load_dataset(path, "task1", "ta")
    assert [line for line, _ in err.value.rows] == [2, 4]
    assert err.value.code == "corpus.MalformedRow"


def test_duplicate_id(tmp_path):
    path = write(tmp_path, "id\ttext\tlabel\n1\ta\tOFF\n1\tb\tNOT\n")
    with pytest.raises(DuplicateId):
        load_dataset(path, "task1", "ta")


def test_duplicate_text_only_warns(tmp_path, caplog):
    path = write(tmp_path, "id\ttext\tlabel\n1\tsame\tOFF\n2\tsame\tNOT\n")
    with caplog.at_level(logging.WARNING, logger="codemix_off.corpus"):
        ds = load_dataset(path, "task1", "ta")
    assert len(ds) == 2
    assert "duplicate" in caplog.text


def test_test_split_may_be_unlabeled(tmp_path):
    path = write(tmp_path, "id\ttext\n1\thello\n")
    ds = load_dataset(path, "task1", "ta", split=Split.TEST)
    assert ds.labels == [None]
    with pytest.raises(UnlabeledSample):
        class_distribution(ds)
    with pytest.raises(MalformedRow):
        load_dataset(path, "task1", "ta")


def test_sample_and_dataset_invariants():
    with pytest.raises(ValueError):
        Sample("a", "   ", Label.OFF, Language.TA)
    with pytest.raises(ValueError):
        Sample("a", "x", None, Language.TA, Split.TRAIN)
    with pytest.raises(ValueError):
        Dataset((Sample("a", "x", Label.OFF, Language.ML),), Task.TASK1, Language.TA)
    with pytest.raises(DuplicateId):
        Dataset((Sample("a", "x", Label.OFF, Language.TA), Sample("a", "y", Label.OFF, Language.TA)), Task.TASK1, Language.TA)


def test_distribution_json_keys():
    rep = class_distribution(make([Label.OFF, Label.NOT, Label.NOT]))
    assert rep == DistributionReport(2, 1, 3)
    assert rep.to_json() == {"not_offensive": 2, "offensive": 1, "total": 3}
    assert class_distribution(make([])) == DistributionReport(0, 0, 0)


@pytest.mark.parametrize(
    "name, expected",
    [("task1_ta_train.tsv", (4724, 1153, 5877)), ("task2_ta_train.tsv", (2020, 1980, 4000)),
     ("task2_ml_train.tsv", (2047, 1952, 3999))],
)
def test_count_fixtures(name, expected):
    task, lang = name.split("_")[:2]
    rep = class_distribution(load_dataset(FIXTURES / "counts" / name, task, lang))
    assert (rep.count_not, rep.count_off, rep.total) == expected


labels_st = st.lists(st.sampled_from([Label.NOT, Label.OFF]), max_size=40)
text_st = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc", "Zl", "Zp")), min_size=1, max_size=30
).filter(lambda t: t.strip() and t == t.strip())


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(text_st, st.sampled_from(list(Label))), min_size=1, max_size=15), st.sampled_from([".tsv", ".csv"]))
def test_save_load_round_trip(tmp_path_factory, rows, suffix):
    samples = tuple(Sample(f"id{i}", text, lab, Language.ML) for i, (text, lab) in enumerate(rows))
    ds = Dataset(samples, Task.TASK2, Language.ML)
    path = tmp_path_factory.mktemp("rt") / f"data{suffix}"
    save_dataset(ds, path)
    assert load_dataset(path, "task2", "ml").samples == samples


@given(labels_st, labels_st)
def test_distribution_is_additive(a, b):
    da, db = make(a, prefix="a"), make(b, prefix="b")
    union = da.with_samples(da.samples + db.samples)
    assert class_distribution(union) == class_distribution(da) + class_distribution(db)


@settings(max_examples=80, deadline=None)
@given(labels_st, st.floats(0.0, 0.95), st.integers(0, 2**16))
def test_split_partition_properties(labels, fraction, seed):
    ds = make(labels)
    train, val = split_stratified(ds, fraction, seed)
    ids_t, ids_v = {s.id for s in train}, {s.id for s in val}
    assert not ids_t & ids_v
    assert ids_t | ids_v == {s.id for s in ds}
    # input order kept within each part
    order = {s.id: i for i, s in enumerate(ds)}
    assert [order[s.id] for s in val] == sorted(order[s.id] for s in val)
    for label in Label:
        n = sum(lab is label for lab in labels)
        n_val = sum(s.label is label for s in val)
        assert abs(n_val - n * fraction) <= 1
    assert split_stratified(ds, fraction, seed) == (train, val)


def test_split_ten_samples_enumeration_oracle():
    # Enumerate every assignment of 2 of 10 samples to validation; the stratified
    # ones are exactly those taking one sample from each class.
    labels = [Label.OFF] * 5 + [Label.NOT] * 5
    stratified = [c for c in itertools.combinations(range(10), 2) if sorted(labels[i] for i in c) == [Label.NOT, Label.OFF]]
    assert len(stratified) == 25
    ds = make(labels)
    for seed in range(20):
        _, val = split_stratified(ds, 0.2, seed)
        chosen = tuple(sorted(int(s.id[1:]) for s in val))
        assert chosen in stratified


def test_split_edge_cases():
    ds = make([Label.OFF, Label.NOT, Label.NOT])
    train, val = split_stratified(ds, 0.0, 1)
    assert train == ds and len(val) == 0
    for bad in (-0.1, 1.0, 1.5):
        with pytest.raises(FractionOutOfRange):
            split_stratified(ds, bad, 0)
