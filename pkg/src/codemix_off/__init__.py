"""Offensive-language detection for code-mixed Tamil and Malayalam social-media text."""

from .corpus import Dataset, Label, Language, Sample, Task, class_distribution, load_dataset, split_stratified
from .encoder import EncoderSpec, make_backend, toy_backend
from .fusion import BiLstmStackConfig, DualConcatModel, DualViewModel, FusionWeights
from .metrics import audit_report, compute_metrics, error_report
from .textprep import CleanConfig, TranslitScheme, bundled_scheme, clean_text, transliterate
from .training import TrainConfig, bce_loss, train
from .translate import ParallelSample, TranslationCache, build_parallel_corpus, translate_batch

__version__ = "0.1.0"
