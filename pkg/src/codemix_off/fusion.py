"""The two classifiers: dual-encoder feature concatenation and native/English dual-view fusion.

Both share the same tail: a masked BiLSTM stack, mean pooling over valid
positions, a small fully connected head and a sigmoid.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from .corpus import Label, Language, Sample
from .encoder import Backend, EmbeddingSeq, make_backend
from .textprep import CleanConfig, clean_text
from .translate import ParallelSample

DTYPE = torch.float64
CHECKPOINT_FORMAT = 1


class FusionError(ValueError):
    code = "fusion.FusionError"


class LengthMismatch(FusionError):
    code = "fusion.LengthMismatch"


class NonFiniteInput(FusionError):
    code = "fusion.NonFiniteInput"


class AllMasked(FusionError):
    code = "fusion.AllMasked"


@dataclass(frozen=True)
class BiLstmStackConfig:
    num_layers: int = 3
    units: int = 128

    def __post_init__(self):
        if self.num_layers < 1 or self.units < 1:
            raise ValueError("num_layers and units must be positive")

    @property
    def output_dim(self) -> int:
        return 2 * self.units


@dataclass(frozen=True)
class FusionWeights:
    w_native: float
    w_english: float

    def __post_init__(self):
        if not (0.0 <= self.w_native <= 1.0 and 0.0 <= self.w_english <= 1.0):
            raise ValueError("fusion weights must lie in [0, 1]")
        if abs(self.w_native + self.w_english - 1.0) > 1e-9:
            raise ValueError(f"fusion weights must sum to 1, got {self.w_native} + {self.w_english}")

    @classmethod
    def default(cls, language: Language | str) -> FusionWeights:
        return {Language.TA: cls(0.7, 0.3), Language.ML: cls(0.6, 0.4)}[Language(language)]

    @classmethod
    def parse(cls, text: str) -> FusionWeights:
        a, b = (float(x) for x in text.split(","))
        return cls(a, b)


class BiLstmStack(nn.Module):
    """Stacked bidirectional LSTM whose recurrence only visits mask-true positions.

    Valid positions need not be a prefix: they are gathered to the front,
    run as a packed sequence, and scattered back. Masked positions output zero.
    """

    def __init__(self, input_dim: int, config: BiLstmStackConfig = BiLstmStackConfig()):
        super().__init__()
        self.config = config
        self.input_dim = input_dim
        self.lstm = nn.LSTM(
            input_dim, config.units, num_layers=config.num_layers, bidirectional=True, batch_first=True, dtype=DTYPE
        )

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        if not torch.isfinite(x).all():
            raise NonFiniteInput("BiLSTM input contains NaN or inf")
        lengths = mask.sum(dim=1)
        if (lengths == 0).any():
            raise AllMasked("a sequence has no valid positions")
        B, T, _ = x.shape
        order = torch.argsort((~mask).to(torch.int8), dim=1, stable=True)
        gather = order.unsqueeze(-1)
        packed_in = torch.gather(x, 1, gather.expand(-1, -1, x.shape[-1]))
        packed = pack_padded_sequence(packed_in, lengths.cpu(), batch_first=True, enforce_sorted=False)
        out, _ = self.lstm(packed)
        out, _ = pad_packed_sequence(out, batch_first=True, total_length=T)
        result = torch.zeros_like(out)
        result.scatter_(1, gather.expand(-1, -1, out.shape[-1]), out)
        return result


class Head(nn.Module):
    """Fully connected layers ending in one logit."""

    def __init__(self, input_dim: int, hidden: Sequence[int] = ()):
        super().__init__()
        layers: list[nn.Module] = []
        width = input_dim
        for h in hidden:
            layers += [nn.Linear(width, h, dtype=DTYPE), nn.ReLU()]
            width = h
        layers.append(nn.Linear(width, 1, dtype=DTYPE))
        self.net = nn.Sequential(*layers)
        self.hidden = tuple(hidden)

    def forward(self, v: torch.Tensor) -> torch.Tensor:
        return self.net(v).squeeze(-1)

    @property
    def output_layer(self) -> nn.Linear:
        return self.net[-1]


def masked_mean(x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    m = mask.to(x.dtype).unsqueeze(-1)
    counts = m.sum(dim=1)
    if (counts == 0).any():
        raise AllMasked("cannot pool a sequence with no valid positions")
    return (x * m).sum(dim=1) / counts


def trim(x: torch.Tensor, mask: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Drop trailing columns that are padding for every row (exact under masked recurrence)."""
    valid = mask.any(dim=0).nonzero()
    last = int(valid.max()) + 1 if len(valid) else 1
    return x[:, :last], mask[:, :last]


# ---- single-sequence operations ------------------------------------------------


def concat_features(a: EmbeddingSeq, b: EmbeddingSeq) -> EmbeddingSeq:
    if a.shape[0] != b.shape[0]:
        raise LengthMismatch(f"sequence lengths differ: {a.shape[0]} vs {b.shape[0]}")
    return EmbeddingSeq(np.concatenate([a.values, b.values], axis=1), a.mask & b.mask)


def bilstm_stack(seq: EmbeddingSeq, stack: BiLstmStack) -> EmbeddingSeq:
    if not np.isfinite(seq.values).all():
        raise NonFiniteInput("BiLSTM input contains NaN or inf")
    x = torch.from_numpy(seq.values).unsqueeze(0)
    m = torch.from_numpy(seq.mask).unsqueeze(0)
    with torch.no_grad():
        out = stack(x, m)[0].numpy()
    return EmbeddingSeq(out, seq.mask.copy())


def global_avg_pool(seq: EmbeddingSeq) -> np.ndarray:
    if not seq.mask.any():
        raise AllMasked("cannot pool a sequence with no valid positions")
    return seq.values[seq.mask].mean(axis=0)


def weighted_fuse(v_native, v_english, w: FusionWeights):
    v_native, v_english = np.asarray(v_native, dtype=float), np.asarray(v_english, dtype=float)
    if v_native.shape != v_english.shape:
        raise LengthMismatch(f"vector shapes differ: {v_native.shape} vs {v_english.shape}")
    return w.w_native * v_native + w.w_english * v_english


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def classify(v, head: Head) -> float:
    v = np.asarray(v, dtype=np.float64)
    if not np.isfinite(v).all():
        raise NonFiniteInput("head input contains NaN or inf")
    with torch.no_grad():
        logit = float(head(torch.from_numpy(v)))
    # keep the probability strictly inside (0, 1)
    return min(max(sigmoid(logit), np.nextafter(0.0, 1.0)), np.nextafter(1.0, 0.0))


def label_for(probability: float, threshold: float = 0.5) -> Label:
    """OFF only when strictly above the threshold; ties go to NOT."""
    return Label.OFF if probability > threshold else Label.NOT


# ---- models --------------------------------------------------------------------


class _Classifier(nn.Module):
    task: str

    def __init__(self, bilstm_config, head_hidden, max_len, threshold, seed):
        super().__init__()
        self.bilstm_config = bilstm_config
        self.head_hidden = (bilstm_config.units,) if head_hidden is None else tuple(head_hidden)
        self.max_len = max_len
        self.threshold = threshold
        self.seed = seed

    def backends(self) -> list[Backend]:
        raise NotImplementedError

    @property
    def frozen_encoders(self) -> bool:
        return not any(b.trainable for b in self.backends())

    def head_parameters(self):
        """Parameters owned by the classifier itself (encoders excluded)."""
        backend_ids = {id(p) for b in self.backends() for p in b.parameters()}
        return [p for p in self.parameters() if id(p) not in backend_ids]

    def predict_proba(self, samples, batch_size: int = 64) -> np.ndarray:
        out = []
        with torch.no_grad():
            for i in range(0, len(samples), batch_size):
                feats = self.featurize(samples[i : i + batch_size])
                out.append(self(*self.collate(feats)).numpy())
        return np.concatenate(out) if out else np.zeros(0)

    def predict(self, samples, batch_size: int = 64) -> tuple[list[Label], np.ndarray]:
        probs = self.predict_proba(samples, batch_size)
        return [label_for(p, self.threshold) for p in probs], probs


class DualConcatModel(_Classifier):
    """Two encoders' token embeddings concatenated per position, then BiLSTM -> pool -> head.

    Both texts are tokenized to ``max_len``; the combined mask is the AND of
    the two, so a position counts only where both tokenizers produced a token.
    """

    task = "task1"

    def __init__(
        self,
        backend_a: Backend,
        backend_b: Backend,
        bilstm_config: BiLstmStackConfig = BiLstmStackConfig(),
        head_hidden: Sequence[int] | None = None,
        clean: CleanConfig | None = None,
        max_len: int = 128,
        threshold: float = 0.5,
        seed: int = 0,
    ):
        super().__init__(bilstm_config, head_hidden, max_len, threshold, seed)
        self.backend_a, self.backend_b = backend_a, backend_b
        self.clean = clean or CleanConfig.task1()
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            self.bilstm = BiLstmStack(backend_a.hidden_dim + backend_b.hidden_dim, bilstm_config)
            self.head = Head(bilstm_config.output_dim, self.head_hidden)

    def backends(self):
        return [self.backend_a, self.backend_b]

    def featurize(self, samples) -> list[tuple[torch.Tensor, torch.Tensor]]:
        texts = [s.text if isinstance(s, Sample) else s for s in samples]
        # a comment that cleans to nothing (emoji only) is encoded as-is
        texts = [clean_text(t, self.clean) or t for t in texts]
        xa, ma = self.backend_a.encode_batch([self.backend_a.tokenize(t, self.max_len) for t in texts])
        xb, mb = self.backend_b.encode_batch([self.backend_b.tokenize(t, self.max_len) for t in texts])
        x, m = torch.cat([xa, xb], dim=-1).to(DTYPE), ma & mb
        feats = []
        for i in range(len(texts)):
            n = int(m[i].nonzero().max()) + 1
            feats.append((x[i, :n], m[i, :n]))
        return feats

    @staticmethod
    def collate(feats):
        T = max(f[0].shape[0] for f in feats)
        D = feats[0][0].shape[1]
        x = torch.zeros(len(feats), T, D, dtype=DTYPE)
        m = torch.zeros(len(feats), T, dtype=torch.bool)
        for i, (xi, mi) in enumerate(feats):
            x[i, : len(mi)], m[i, : len(mi)] = xi, mi
        return x, m

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        x, mask = trim(x, mask)
        pooled = masked_mean(self.bilstm(x, mask), mask)
        return torch.sigmoid(self.head(pooled))


class DualViewModel(_Classifier):
    """Native-script and English views through one shared encoder and BiLSTM, pooled
    separately, mixed by :class:`FusionWeights`, then classified."""

    task = "task2"

    def __init__(
        self,
        backend: Backend,
        weights: FusionWeights,
        bilstm_config: BiLstmStackConfig = BiLstmStackConfig(),
        head_hidden: Sequence[int] | None = None,
        max_len: int = 128,
        threshold: float = 0.5,
        seed: int = 0,
    ):
        super().__init__(bilstm_config, head_hidden, max_len, threshold, seed)
        self.backend = backend
        self.weights = weights
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            self.bilstm = BiLstmStack(backend.hidden_dim, bilstm_config)
            self.head = Head(bilstm_config.output_dim, self.head_hidden)

    def backends(self):
        return [self.backend]

    def _view(self, texts):
        x, m = self.backend.encode_batch([self.backend.tokenize(t, self.max_len) for t in texts])
        return x.to(DTYPE), m

    def featurize(self, samples: Sequence[ParallelSample]):
        xn, mn = self._view([p.native_text for p in samples])
        xe, me = self._view([p.english_text for p in samples])
        feats = []
        for i in range(len(samples)):
            a = int(mn[i].nonzero().max()) + 1
            b = int(me[i].nonzero().max()) + 1
            feats.append((xn[i, :a], mn[i, :a], xe[i, :b], me[i, :b]))
        return feats

    @staticmethod
    def collate(feats):
        native = DualConcatModel.collate([(f[0], f[1]) for f in feats])
        english = DualConcatModel.collate([(f[2], f[3]) for f in feats])
        return (*native, *english)

    def view_vector(self, x, mask):
        x, mask = trim(x, mask)
        return masked_mean(self.bilstm(x, mask), mask)

    def forward(self, xn, mn, xe, me):
        v = self.weights.w_native * self.view_vector(xn, mn) + self.weights.w_english * self.view_vector(xe, me)
        return torch.sigmoid(self.head(v))


def forward_task1(text: str, model: DualConcatModel, clean: CleanConfig | None = None) -> float:
    if clean is not None:
        text = clean_text(text, clean) or text
    return float(model.predict_proba([text])[0])


def forward_task2(parallel: ParallelSample, model: DualViewModel) -> float:
    return float(model.predict_proba([parallel])[0])


# ---- checkpoints ---------------------------------------------------------------


def save_checkpoint(model: _Classifier, directory: str | Path, extra: dict | None = None) -> Path:
    """Write ``manifest.json`` and ``params.npz`` (encoder weights only when trainable)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": CHECKPOINT_FORMAT,
        "task": model.task,
        "backends": [b.describe() for b in model.backends()],
        "bilstm": asdict(model.bilstm_config),
        "head_hidden": list(model.head_hidden),
        "max_len": model.max_len,
        "threshold": model.threshold,
        "seed": model.seed,
    }
    if isinstance(model, DualViewModel):
        manifest["fusion_weights"] = [model.weights.w_native, model.weights.w_english]
    else:
        manifest["clean"] = asdict(model.clean)
    manifest.update(extra or {})

    frozen_prefixes = tuple(
        name + "." for name, mod in model.named_children() if isinstance(mod, Backend) and not mod.trainable
    )
    params = {k: v.detach().cpu().numpy() for k, v in model.state_dict().items() if not k.startswith(frozen_prefixes)}
    np.savez(directory / "params.npz", **params)
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return directory


def load_checkpoint(directory: str | Path, *, weights_dir=None, offline: bool = False) -> tuple[_Classifier, dict]:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    if manifest.get("format") != CHECKPOINT_FORMAT:
        raise FusionError(f"unsupported checkpoint format {manifest.get('format')!r}")
    backends = [make_backend(d, weights_dir=weights_dir, offline=offline) for d in manifest["backends"]]
    common = dict(
        bilstm_config=BiLstmStackConfig(**manifest["bilstm"]),
        head_hidden=manifest["head_hidden"],
        max_len=manifest["max_len"],
        threshold=manifest["threshold"],
        seed=manifest["seed"],
    )
    if manifest["task"] == "task1":
        model = DualConcatModel(*backends, clean=CleanConfig(**manifest["clean"]), **common)
    else:
        model = DualViewModel(backends[0], FusionWeights(*manifest["fusion_weights"]), **common)
    with np.load(directory / "params.npz") as blobs:
        state = {k: torch.from_numpy(blobs[k]) for k in blobs.files}
    missing, unexpected = model.load_state_dict(state, strict=False)
    missing = [k for k in missing if not k.startswith(("backend", "backend_a", "backend_b"))]
    if missing or unexpected:
        raise FusionError(f"checkpoint mismatch: missing {missing}, unexpected {unexpected}")
    return model, manifest
