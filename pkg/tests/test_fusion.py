import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from codemix_off.corpus import Label
from codemix_off.encoder import EmbeddingSeq, toy_backend
from codemix_off.fusion import (
    AllMasked,
    BiLstmStack,
    BiLstmStackConfig,
    DualConcatModel,
    DualViewModel,
    FusionWeights,
    Head,
    LengthMismatch,
    NonFiniteInput,
    bilstm_stack,
    classify,
    concat_features,
    forward_task1,
    forward_task2,
    global_avg_pool,
    label_for,
    load_checkpoint,
    save_checkpoint,
    weighted_fuse,
)
from codemix_off.textprep import CleanConfig, clean_text
from codemix_off.translate import ParallelSample
from oracles import lstm_cell, lstm_params, oracle_bilstm

SMALL = BiLstmStackConfig(num_layers=2, units=3)


def seq(values, mask=None):
    values = np.asarray(values, dtype=float)
    return EmbeddingSeq(values, np.ones(len(values), bool) if mask is None else mask)


def test_single_step_matches_hand_unrolledlstm_cell():
    torch.manual_seed(1)
    stack = BiLstmStack(2, BiLstmStackConfig(num_layers=1, units=2))
    x = np.array([[0.3, -1.2]])
    got = bilstm_stack(seq(x), stack).values
    fwd = lstm_cell(x[0], np.zeros(2), np.zeros(2), *lstm_params(stack, 0, False))[0]
    bwd = lstm_cell(x[0], np.zeros(2), np.zeros(2), *lstm_params(stack, 0, True))[0]
    assert got.shape == (1, 4)
    assert np.max(np.abs(got[0] - np.concatenate([fwd, bwd]))) <= 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_stacked_bilstm_matches_oracle_with_holes(seed):
    rng = np.random.default_rng(seed)
    torch.manual_seed(seed)
    stack = BiLstmStack(4, SMALL)
    x = rng.standard_normal((7, 4))
    mask = rng.random(7) < 0.6
    mask[rng.integers(7)] = True
    got = bilstm_stack(seq(x, mask), stack)
    assert np.max(np.abs(got.values - oracle_bilstm(stack, x, mask))) <= 1e-10
    assert np.array_equal(got.mask, mask)


def test_output_width_default_config():
    torch.manual_seed(0)
    stack = BiLstmStack(768)
    out = bilstm_stack(seq(np.random.default_rng(0).standard_normal((3, 768))), stack)
    assert out.shape == (3, 256)
    assert BiLstmStackConfig().output_dim == 256


def test_zero_parameters_give_zero_output():
    stack = BiLstmStack(5, SMALL)
    with torch.no_grad():
        for p in stack.parameters():
            p.zero_()
    out = bilstm_stack(seq(np.random.default_rng(0).standard_normal((6, 5)) * 10), stack)
    assert not out.values.any()


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_bilstm_ignores_padding_content(T, seed):
    rng = np.random.default_rng(seed)
    torch.manual_seed(0)
    stack = BiLstmStack(3, SMALL)
    mask = rng.random(T) < 0.7
    mask[0] = True
    x = rng.standard_normal((T, 3))
    y = x.copy()
    y[~mask] = rng.standard_normal(((~mask).sum(), 3)) * 100
    a, b = bilstm_stack(seq(x, mask), stack), bilstm_stack(seq(y, mask), stack)
    assert np.array_equal(a.values, b.values)
    assert not a.values[~mask].any()


def test_bilstm_errors():
    stack = BiLstmStack(2, SMALL)
    with pytest.raises(NonFiniteInput):
        bilstm_stack(seq([[np.nan, 0.0]]), stack)
    with pytest.raises(AllMasked):
        bilstm_stack(seq([[1.0, 0.0]], np.array([False])), stack)


# ---- concat / pool / fuse / classify ---------------------------------------------


def test_concat_examples():
    out = concat_features(seq([[1, 2]]), seq([[3]]))
    assert out.values.tolist() == [[1, 2, 3]]
    a = seq(np.random.default_rng(0).standard_normal((4, 768)))
    out = concat_features(a, seq(np.zeros((4, 768))))
    assert out.shape == (4, 1536)
    assert np.array_equal(out.values[:, :768], a.values)
    with pytest.raises(LengthMismatch):
        concat_features(seq([[1]]), seq([[1], [2]]))


def test_concat_slicing_random_cases():
    rng = np.random.default_rng(42)
    for _ in range(100):
        T, d1, d2 = rng.integers(1, 20, size=3)
        a = EmbeddingSeq(rng.standard_normal((T, d1)), rng.random(T) < 0.8)
        b = EmbeddingSeq(rng.standard_normal((T, d2)), rng.random(T) < 0.8)
        out = concat_features(a, b)
        assert out.shape == (T, d1 + d2)
        assert np.array_equal(out.values[:, :d1], a.values)
        assert np.array_equal(out.values[:, d1:], b.values)
        assert np.array_equal(out.mask, a.mask & b.mask)


def test_pool_examples():
    assert global_avg_pool(seq([[1, 3], [3, 5]])).tolist() == [2, 4]
    assert global_avg_pool(seq([[7, -1]])).tolist() == [7, -1]
    assert global_avg_pool(seq([[2, 2], [4, 4], [99, 99]], np.array([True, True, False]))).tolist() == [3, 3]
    with pytest.raises(AllMasked):
        global_avg_pool(seq([[1, 1]], np.array([False])))


@given(st.integers(0, 2**31 - 1))
def test_pool_ignores_masked_rows(seed):
    rng = np.random.default_rng(seed)
    T = int(rng.integers(1, 10))
    mask = rng.random(T) < 0.5
    mask[rng.integers(T)] = True
    x = rng.standard_normal((T, 3))
    y = np.where(mask[:, None], x, rng.standard_normal((T, 3)) * 1e6)
    assert np.array_equal(global_avg_pool(seq(x, mask)), global_avg_pool(seq(y, mask)))


def test_fusion_weights():
    assert FusionWeights.default("ta") == FusionWeights(0.7, 0.3)
    assert FusionWeights.default("ml") == FusionWeights(0.6, 0.4)
    assert FusionWeights.parse("0.25,0.75") == FusionWeights(0.25, 0.75)
    for bad in ((0.5, 0.6), (1.2, -0.2)):
        with pytest.raises(ValueError):
            FusionWeights(*bad)


def test_fuse_examples():
    assert np.allclose(weighted_fuse([1, 2], [3, 4], FusionWeights.default("ta")), [1.6, 2.6], atol=1e-12)
    v = np.array([0.1, -3.0, 7.5])
    assert np.array_equal(weighted_fuse(v, [9, 9, 9], FusionWeights(1.0, 0.0)), v)
    with pytest.raises(LengthMismatch):
        weighted_fuse([1], [1, 2], FusionWeights(0.5, 0.5))


vec = st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3).map(np.array)
weight = st.floats(0, 1).map(lambda p: FusionWeights(p, 1 - p))


@given(vec, vec, vec, weight, st.floats(-5, 5))
def test_fuse_algebra(a, b, c, w, k):
    assert np.allclose(weighted_fuse(a, a, w), a, rtol=1e-12, atol=1e-9)
    assert np.array_equal(weighted_fuse(a, b, w), weighted_fuse(b, a, FusionWeights(w.w_english, w.w_native)))
    # linear in the first argument
    lhs = weighted_fuse(a + k * c, b, w)
    rhs = weighted_fuse(a, b, w) + k * w.w_native * c
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-6)


def _head(weights, bias):
    head = Head(len(weights))
    with torch.no_grad():
        head.output_layer.weight.copy_(torch.tensor([weights], dtype=torch.float64))
        head.output_layer.bias.fill_(bias)
    return head


def test_classify_examples():
    assert classify([2.0, 1.0], _head([1.0, -1.0], 0.0)) == pytest.approx(0.7310585786, abs=1e-9)
    assert classify([1.0, 1.0], _head([0.0, 0.0], 0.0)) == 0.5
    assert classify([1.0], _head([1.0], 19.0)) > 0.999
    assert 0.0 < classify([1.0], _head([1.0], 1e4)) < 1.0
    assert 0.0 < classify([1.0], _head([1.0], -1e4)) < 1.0
    with pytest.raises(NonFiniteInput):
        classify([np.inf], _head([1.0], 0.0))


@given(st.lists(st.integers(-15_000, 15_000), min_size=2, max_size=20, unique=True))
def test_classify_monotone_in_logit(milli):
    probs = [classify([1.0], _head([0.0], k / 1000)) for k in sorted(milli)]
    assert all(p < q for p, q in zip(probs, probs[1:]))


def test_threshold_ties_go_to_not():
    assert label_for(0.5) is Label.NOT
    assert label_for(np.nextafter(0.5, 1)) is Label.OFF
    assert label_for(0.3, threshold=0.2) is Label.OFF


# ---- full models -----------------------------------------------------------------


def concat_model(**kw):
    return DualConcatModel(toy_backend(6, 0), toy_backend(4, 1), SMALL, max_len=12, **kw)


def view_model(weights=FusionWeights(0.7, 0.3), **kw):
    return DualViewModel(toy_backend(5, 2), weights, SMALL, max_len=12, **kw)


def test_concat_model_stagewise_oracle():
    model = concat_model(seed=3)
    text = "Semma MASS \U0001F600 padam!"
    got = forward_task1(text, model)
    cleaned = clean_text(text, CleanConfig.task1())
    a, b = model.backend_a, model.backend_b
    joined = concat_features(a.encode(a.tokenize(cleaned, 12)), b.encode(b.tokenize(cleaned, 12)))
    assert joined.shape == (12, 10)
    expected = classify(global_avg_pool(bilstm_stack(joined, model.bilstm)), model.head)
    assert abs(got - expected) <= 1e-12
    assert forward_task1(text, model) == got


def test_view_model_stagewise_oracle():
    model = view_model(seed=4)
    sample = ParallelSample("1", "படம் நல்ல", "the movie is good")
    b = model.backend
    vn = global_avg_pool(bilstm_stack(b.encode(b.tokenize(sample.native_text, 12)), model.bilstm))
    ve = global_avg_pool(bilstm_stack(b.encode(b.tokenize(sample.english_text, 12)), model.bilstm))
    expected = classify(weighted_fuse(vn, ve, model.weights), model.head)
    assert abs(forward_task2(sample, model) - expected) <= 1e-12


def test_view_model_fusion_identities():
    native_only = view_model(FusionWeights(1.0, 0.0))
    p = [forward_task2(ParallelSample("1", "padam", e), native_only) for e in ("good", "bad film", "x y z w")]
    assert p[0] == p[1] == p[2]
    same = ParallelSample("1", "nalla padam", "nalla padam")
    probs = {forward_task2(same, view_model(FusionWeights(w, 1 - w))) for w in (0.0, 0.3, 0.7, 1.0)}
    assert max(probs) - min(probs) <= 1e-12


def _zero(model):
    with torch.no_grad():
        for p in model.head_parameters():
            p.zero_()
    return model


def test_zero_models_give_one_half():
    cm, vm = _zero(concat_model()), _zero(view_model())
    for text in ("a", "indha padam romba kevalam", "x " * 40):
        assert forward_task1(text, cm) == 0.5
        assert forward_task2(ParallelSample("i", text, "some english"), vm) == 0.5
    labels, _ = cm.predict(["anything"])
    assert labels == [Label.NOT]


def test_batched_equals_single():
    model = concat_model(seed=5)
    texts = ["a", "b c d e f", "nalla padam", "q " * 30]
    batched = model.predict_proba(texts, batch_size=3)
    single = [forward_task1(t, model) for t in texts]
    assert np.max(np.abs(batched - single)) <= 1e-12


def test_seeded_initialisation():
    a, b = concat_model(seed=7), concat_model(seed=7)
    for (ka, va), (kb, vb) in zip(a.state_dict().items(), b.state_dict().items()):
        assert ka == kb and torch.equal(va, vb)
    assert not torch.equal(a.head.output_layer.weight, concat_model(seed=8).head.output_layer.weight)


def test_head_shape():
    model = DualConcatModel(toy_backend(4), toy_backend(4), BiLstmStackConfig(1, 5))
    shapes = [tuple(p.shape) for p in model.head.parameters()]
    assert shapes == [(5, 10), (5,), (1, 5), (1,)]


@pytest.mark.parametrize("factory", [concat_model, view_model])
def test_checkpoint_round_trip(tmp_path, factory):
    model = factory(seed=11, threshold=0.4)
    save_checkpoint(model, tmp_path / "ck", {"note": "x"})
    loaded, manifest = load_checkpoint(tmp_path / "ck")
    assert manifest["note"] == "x" and manifest["threshold"] == 0.4
    samples = ["nalla padam", "kevalam"] if factory is concat_model else [ParallelSample("1", "a b", "c d")]
    assert np.array_equal(model.predict_proba(samples), loaded.predict_proba(samples))
    assert loaded.threshold == 0.4
    if factory is view_model:
        assert manifest["fusion_weights"] == [0.7, 0.3]
    with np.load(tmp_path / "ck" / "params.npz") as blobs:
        assert not any(k.startswith("backend") for k in blobs.files)
