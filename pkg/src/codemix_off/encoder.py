"""Tokenization and per-token embedding extraction behind one backend interface."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

logger = logging.getLogger(__name__)

PAD_ID = 0


class EncoderError(RuntimeError):
    code = "encoder.EncoderError"


class EmptyText(EncoderError, ValueError):
    code = "encoder.EmptyText"


class BackendUnavailable(EncoderError):
    code = "encoder.BackendUnavailable"


@dataclass(frozen=True)
class EncoderSpec:
    name: str
    num_layers: int
    hidden_dim: int
    num_heads: int
    trainable: bool = False
    hub_id: str | None = None

    def __post_init__(self):
        for f in ("num_layers", "hidden_dim", "num_heads"):
            if getattr(self, f) < 1:
                raise ValueError(f"{f} must be positive")


SPECS = {
    "xlmr-base": EncoderSpec("xlmr-base", num_layers=12, hidden_dim=768, num_heads=8, hub_id="xlm-roberta-base"),
    "distil-multilingual": EncoderSpec(
        "distil-multilingual",
        num_layers=6,
        hidden_dim=768,
        num_heads=12,
        hub_id="distilbert-base-multilingual-cased",
    ),
}


@dataclass(frozen=True)
class TokenSeq:
    ids: tuple[int, ...]
    mask: tuple[bool, ...]

    def __post_init__(self):
        if len(self.ids) != len(self.mask):
            raise ValueError("ids and mask differ in length")

    @property
    def length(self) -> int:
        return sum(self.mask)

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True, eq=False)
class EmbeddingSeq:
    values: np.ndarray  # T x D
    mask: np.ndarray  # T, bool

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2 or mask.shape != (values.shape[0],):
            raise ValueError(f"bad shapes: values {values.shape}, mask {mask.shape}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


class Backend(nn.Module):
    """A tokenizer plus an encoder producing one vector per token position."""

    spec: EncoderSpec

    @property
    def hidden_dim(self) -> int:
        return self.spec.hidden_dim

    @property
    def trainable(self) -> bool:
        return self.spec.trainable

    def tokenize(self, text: str, max_len: int) -> TokenSeq:
        raise NotImplementedError

    def encode_batch(self, tokens: list[TokenSeq]) -> tuple[torch.Tensor, torch.Tensor]:
        """Stack a batch into ``(values B x T x D, mask B x T)``; padding rows are zero."""
        raise NotImplementedError

    def encode(self, tokens: TokenSeq) -> EmbeddingSeq:
        with torch.no_grad():
            values, mask = self.encode_batch([tokens])
        return EmbeddingSeq(values[0].double().numpy(), mask[0].numpy())

    def describe(self) -> dict:
        raise NotImplementedError


def _check_max_len(max_len: int) -> None:
    if max_len < 2:
        raise ValueError(f"max_len must be >= 2, got {max_len}")


class ToyBackend(Backend):
    """Deterministic CPU stand-in for a pretrained encoder.

    Words up to ``max_word_len`` characters are single tokens; longer ones fall
    back to one token per character. A token id maps to a fixed pseudorandom
    unit vector seeded by ``(seed, id)``, independent of position and context.
    """

    VOCAB_SIZE = 1 << 20

    def __init__(self, dim: int = 16, seed: int = 0, max_word_len: int = 16):
        super().__init__()
        if dim < 2:
            raise ValueError("toy backend needs dim >= 2")
        self.dim, self.seed, self.max_word_len = dim, seed, max_word_len
        self.spec = EncoderSpec(f"toy-{dim}-{seed}", num_layers=1, hidden_dim=dim, num_heads=1)
        self._table: dict[int, np.ndarray] = {}

    def token_id(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return 1 + int.from_bytes(digest, "little") % (self.VOCAB_SIZE - 1)

    def pieces(self, text: str) -> list[str]:
        out = []
        for word in text.split():
            out.extend([word] if len(word) <= self.max_word_len else list(word))
        return out

    def tokenize(self, text: str, max_len: int) -> TokenSeq:
        _check_max_len(max_len)
        pieces = self.pieces(text)
        if not pieces:
            raise EmptyText("cannot tokenize blank text")
        ids = [self.token_id(p) for p in pieces[:max_len]]
        n = len(ids)
        return TokenSeq(tuple(ids) + (PAD_ID,) * (max_len - n), (True,) * n + (False,) * (max_len - n))

    def vector(self, token_id: int) -> np.ndarray:
        vec = self._table.get(token_id)
        if vec is None:
            v = np.random.default_rng([self.seed, token_id]).standard_normal(self.dim)
            vec = v / np.linalg.norm(v)
            vec.setflags(write=False)
            self._table[token_id] = vec
        return vec

    def encode_batch(self, tokens):
        T = len(tokens[0])
        values = np.zeros((len(tokens), T, self.dim))
        for b, seq in enumerate(tokens):
            if len(seq) != T:
                raise ValueError("token sequences in a batch must share a length")
            for t, (tid, m) in enumerate(zip(seq.ids, seq.mask)):
                if m:
                    values[b, t] = self.vector(tid)
        mask = torch.tensor([seq.mask for seq in tokens], dtype=torch.bool)
        return torch.from_numpy(values), mask

    def describe(self):
        return {"kind": "toy", "dim": self.dim, "seed": self.seed, "max_word_len": self.max_word_len}


def toy_backend(dim: int = 16, seed: int = 0) -> ToyBackend:
    return ToyBackend(dim, seed)


class PretrainedBackend(Backend):
    """Final-layer token embeddings from a Hugging Face encoder.

    Weights are resolved from ``weights_dir/<hub_id>`` when that directory
    exists, otherwise from the hub id itself; ``offline`` forbids downloads.
    """

    def __init__(self, spec: EncoderSpec, weights_dir: str | Path | None = None, offline: bool = False):
        super().__init__()
        self.spec = spec
        self.weights_dir = str(weights_dir) if weights_dir else None
        self.offline = offline
        source = spec.hub_id or spec.name
        if weights_dir and (Path(weights_dir) / source).is_dir():
            source = str(Path(weights_dir) / source)
        try:
            from transformers import AutoModel, AutoTokenizer

            self.tokenizer = AutoTokenizer.from_pretrained(source, local_files_only=offline)
            self.model = AutoModel.from_pretrained(source, local_files_only=offline)
        except Exception as exc:  # transformers raises OSError, ValueError, HTTP errors...
            raise BackendUnavailable(f"cannot load {spec.name} from {source!r}: {exc}") from exc
        if self.model.config.hidden_size != spec.hidden_dim:
            raise BackendUnavailable(
                f"{source} has hidden size {self.model.config.hidden_size}, expected {spec.hidden_dim}"
            )
        self.model.train(False)
        for p in self.model.parameters():
            p.requires_grad_(spec.trainable)

    def tokenize(self, text: str, max_len: int) -> TokenSeq:
        _check_max_len(max_len)
        if not text.strip():
            raise EmptyText("cannot tokenize blank text")
        enc = self.tokenizer(text, max_length=max_len, truncation=True, padding="max_length")
        return TokenSeq(tuple(enc["input_ids"]), tuple(bool(m) for m in enc["attention_mask"]))

    def encode_batch(self, tokens):
        ids = torch.tensor([seq.ids for seq in tokens], dtype=torch.long)
        mask = torch.tensor([seq.mask for seq in tokens], dtype=torch.bool)
        with torch.set_grad_enabled(self.trainable and torch.is_grad_enabled()):
            hidden = self.model(input_ids=ids, attention_mask=mask.long()).last_hidden_state
        values = hidden.double() * mask.unsqueeze(-1)
        return values, mask

    def describe(self):
        return {"kind": "pretrained", "name": self.spec.name, "trainable": self.spec.trainable}


def make_backend(
    name: str | dict, *, weights_dir: str | Path | None = None, offline: bool = False, trainable: bool = False
) -> Backend:
    """Build a backend from a CLI name (``toy``, ``toy:16``, ``toy:16:3``, ``xlmr-base``, ...) or a
    :meth:`Backend.describe` dict."""
    if isinstance(name, dict):
        if name["kind"] == "toy":
            return ToyBackend(name["dim"], name["seed"], name.get("max_word_len", 16))
        return make_backend(name["name"], weights_dir=weights_dir, offline=offline, trainable=name.get("trainable", False))
    if name == "toy" or name.startswith("toy:"):
        parts = name.split(":")[1:]
        dim = int(parts[0]) if parts else 16
        seed = int(parts[1]) if len(parts) > 1 else 0
        return ToyBackend(dim, seed)
    if name not in SPECS:
        raise BackendUnavailable(f"unknown backend {name!r}; known: toy, {', '.join(SPECS)}")
    spec = SPECS[name]
    if trainable:
        spec = EncoderSpec(spec.name, spec.num_layers, spec.hidden_dim, spec.num_heads, True, spec.hub_id)
    return PretrainedBackend(spec, weights_dir=weights_dir, offline=offline)
