"""Deterministic synthetic corpora for tests, demos and the count fixtures.

The bilingual corpus is separable by construction: every offensive comment
contains at least one word from an offensive lexicon and no neutral-lexicon
word, and vice versa. Each Roman-script word has an English gloss so the
dual-view model can be trained without a translation service.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import Dataset, Label, Language, Sample, Task, save_dataset
from .textprep import bundled_scheme, transliterate
from .translate import ParallelSample

# roman word -> English gloss
FILLER = {
    "indha": "this", "padam": "movie", "trailer": "trailer", "paaru": "watch", "ellam": "all",
    "avan": "he", "ivan": "this guy", "naan": "i", "neenga": "you", "romba": "very",
    "vera": "other", "level": "level", "song": "song", "hero": "hero", "director": "director",
    "oru": "one", "time": "time", "ippo": "now", "daily": "daily", "kandu": "saw",
}
NEUTRAL = {
    "nalla": "good", "super": "super", "semma": "awesome", "mass": "mass", "arumai": "excellent",
    "thanks": "thanks", "valthukkal": "congratulations", "azhagu": "beautiful", "vazhga": "long live",
    "sirippu": "laughter",
}
OFFENSIVE = {
    "loosu": "idiot", "kevalam": "disgusting", "mental": "lunatic", "naaye": "dog", "porukki": "rogue",
    "moodu": "shut up", "thendi": "scoundrel", "waste": "worthless", "kedu": "rotten", "muttal": "fool",
}


def _sentence(rng, lexicon, n_marker, n_filler=(2, 6), lexicon_size=None) -> list[str]:
    fillers = list(FILLER)
    markers = list(lexicon)[:lexicon_size]
    words = [fillers[i] for i in rng.integers(0, len(fillers), size=rng.integers(*n_filler))]
    for _ in range(n_marker):
        words.insert(int(rng.integers(0, len(words) + 1)), markers[int(rng.integers(0, len(markers)))])
    return words


def _gloss(words) -> str:
    table = {**FILLER, **NEUTRAL, **OFFENSIVE}
    return " ".join(table[w] for w in words)


def separable_corpus(
    n: int = 200, language: Language | str = Language.TA, seed: int = 0, task=Task.TASK1, markers=(2, 5), fillers=(0, 2),
    lexicon_size=5,
):
    """``n`` labeled Roman-script comments, alternating NOT / OFF, plus glosses.

    ``markers`` and ``fillers`` are half-open ranges for the number of lexicon
    and neutral filler words per comment; ``lexicon_size`` limits how many
    words of each class lexicon are used.

    Returns ``(dataset, glosses)`` where ``glosses[id]`` is the English rendering.
    """
    language = Language(language)
    rng = np.random.default_rng(seed)
    samples, glosses = [], {}
    for i in range(n):
        label = Label.OFF if i % 2 else Label.NOT
        words = _sentence(rng, OFFENSIVE if label is Label.OFF else NEUTRAL, int(rng.integers(*markers)), fillers, lexicon_size)
        sid = f"syn{i:04d}"
        samples.append(Sample(sid, " ".join(words), label, language))
        glosses[sid] = _gloss(words)
    return Dataset(tuple(samples), Task(task), language), glosses


def separable_parallel(n: int = 200, language: Language | str = Language.TA, seed: int = 0, **kw) -> list[ParallelSample]:
    """Dual-view version: native side transliterated with the bundled scheme, English side glossed."""
    ds, glosses = separable_corpus(n, language, seed, Task.TASK2, **kw)
    scheme = bundled_scheme(ds.language)
    return [ParallelSample(s.id, transliterate(s.text, scheme), glosses[s.id], s.label) for s in ds.samples]


# (task, language) -> (not offensive, offensive), the published training-set sizes
SHARED_TASK_COUNTS = {
    ("task1", "ta"): (4724, 1153),
    ("task2", "ta"): (2020, 1980),
    ("task2", "ml"): (2047, 1952),
}


def count_fixture(task: str, language: str, seed: int = 0) -> Dataset:
    """A dataset with exactly the published class counts and unique texts."""
    n_not, n_off = SHARED_TASK_COUNTS[(task, language)]
    rng = np.random.default_rng(seed)
    labels = np.array([Label.NOT] * n_not + [Label.OFF] * n_off, dtype=object)
    labels = labels[rng.permutation(len(labels))]
    seen, samples = set(), []
    for i, label in enumerate(labels):
        lexicon = OFFENSIVE if label is Label.OFF else NEUTRAL
        while True:
            text = " ".join(_sentence(rng, lexicon, 1)) + f" {i}"
            if text not in seen:
                break
        seen.add(text)
        samples.append(Sample(f"{task}_{language}_{i:05d}", text, label, Language(language)))
    return Dataset(tuple(samples), Task(task), Language(language))


def write_count_fixtures(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for task, language in SHARED_TASK_COUNTS:
        path = directory / f"{task}_{language}_train.tsv"
        save_dataset(count_fixture(task, language), path)
        paths.append(path)
    return paths


def toy_experiment(task: str = "task1", language: str = "ta", seed: int = 0, n: int = 200, val_fraction: float = 0.2,
                   dim: int = 16, config=None):
    """Train one architecture with toy encoders on the separable corpus.

    ``task1`` builds the dual-concat model over two toy encoders with different
    seeds; ``task2`` builds the dual-view model over (transliterated, glossed)
    pairs with the language's default fusion weights. Returns ``(model, history)``.
    """
    from .corpus import split_stratified
    from .encoder import toy_backend
    from .fusion import DualConcatModel, DualViewModel, FusionWeights
    from .training import TrainConfig, train

    config = config or TrainConfig(seed=seed)
    ds, _ = separable_corpus(n, language, seed, task)
    tr, va = split_stratified(ds, val_fraction, seed)
    if Task(task) is Task.TASK1:
        model = DualConcatModel(toy_backend(dim, seed), toy_backend(dim, seed + 1), seed=seed)
        return train(model, list(tr.samples), list(va.samples), config)
    parallel = {p.id: p for p in separable_parallel(n, language, seed)}
    model = DualViewModel(toy_backend(dim, seed), FusionWeights.default(language), seed=seed)
    return train(model, [parallel[s.id] for s in tr], [parallel[s.id] for s in va], config)
