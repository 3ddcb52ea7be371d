"""Command-line entry point: ``codemix-off <command> [flags]``.

Settings resolve as CLI flags > ``--config`` JSON file > defaults, where the
defaults are the published training values and per-language fusion weights.
Failures print one JSON object ``{"error": <code>, "message": ...}`` to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from . import corpus, metrics, textprep, translate
from .encoder import make_backend
from .fusion import (
    BiLstmStackConfig,
    DualConcatModel,
    DualViewModel,
    FusionWeights,
    load_checkpoint,
    save_checkpoint,
)
from .training import TrainConfig, train

logger = logging.getLogger("codemix_off")

COMMANDS = ("stats", "prep", "translit", "translate", "train", "eval", "predict", "audit")


class CliError(Exception):
    code = "cli.CliError"
    exit_code = 1


class UnknownCommand(CliError):
    code = "cli.UnknownCommand"
    exit_code = 2


class MissingFlag(CliError):
    code = "cli.MissingFlag"
    exit_code = 2


class UsageError(CliError):
    code = "cli.UsageError"
    exit_code = 2


@dataclass
class RunConfig:
    task: str = "task1"
    lang: str = "ta"
    data: str | None = None
    val: str | None = None
    cache: str | None = None
    checkpoint: str | None = None
    out: str | None = None
    backend_a: str = "xlmr-base"
    backend_b: str = "distil-multilingual"
    weights: str | None = None  # "w_native,w_english"; None -> per-language default
    threshold: float | None = None  # None -> 0.5 for train, the checkpoint's value otherwise
    seed: int = 0
    offline: bool = False
    weights_dir: str | None = None
    scheme: str | None = None
    provider: str = "fixture"
    fixture: str | None = None
    endpoint: str = translate.DEFAULT_ENDPOINT
    val_fraction: float = 0.1
    lstm_layers: int = 3
    lstm_units: int = 128
    finetune: bool = False
    train: dict = field(default_factory=dict)
    metrics: str | None = None
    correct: int | None = None
    incorrect: int | None = None
    errors: str | None = None

    def fusion_weights(self) -> FusionWeights:
        return FusionWeights.parse(self.weights) if self.weights else FusionWeights.default(self.lang)

    def train_config(self) -> TrainConfig:
        return replace(TrainConfig(seed=self.seed), **self.train)

    def require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise MissingFlag("missing required flag(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


TRAIN_FLAGS = {
    "epochs": "max_epochs",
    "batch_size": "batch_size",
    "lr": "learning_rate",
    "patience": "early_stop_patience",
    "max_len": "max_len",
    "class_weighting": "class_weighting",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        if "invalid choice" in message and "command" in message:
            raise UnknownCommand(message)
        if "required" in message:
            raise MissingFlag(message)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # every flag defaults to None so that only explicit ones override the config file
    add = common.add_argument
    add("--task", choices=["task1", "task2"])
    add("--lang", choices=["ta", "ml"])
    add("--data")
    add("--val", help="validation file for train (default: stratified split of --data)")
    add("--cache", help="translation cache (JSON lines)")
    add("--checkpoint")
    add("--out")
    add("--backend-a", dest="backend_a")
    add("--backend-b", dest="backend_b")
    add("--weights", help="fusion weights as w_native,w_english")
    add("--threshold", type=float)
    add("--seed", type=int)
    add("--offline", action="store_const", const=True)
    add("--weights-dir", dest="weights_dir", help="local directory holding pretrained encoders")
    add("--config", help="JSON file of defaults")
    add("--scheme", help="transliteration rule table (roman<TAB>native)")
    add("--provider", choices=["identity", "fixture", "http"])
    add("--fixture", help="source<TAB>translation file for the fixture provider")
    add("--endpoint", help="translation API endpoint for the http provider")
    add("--val-fraction", dest="val_fraction", type=float)
    add("--lstm-layers", dest="lstm_layers", type=int)
    add("--lstm-units", dest="lstm_units", type=int)
    add("--finetune", action="store_const", const=True, help="also update pretrained encoder weights")
    add("--epochs", type=int)
    add("--batch-size", dest="batch_size", type=int)
    add("--lr", type=float)
    add("--patience", type=int)
    add("--max-len", dest="max_len", type=int)
    add("--class-weighting", dest="class_weighting", choices=["none", "inverse-frequency"])
    add("--metrics", help="metrics JSON written by eval (for audit)")
    add("--correct", type=int)
    add("--incorrect", type=int)
    add("--errors", help="eval: also write misclassified samples to this TSV")
    add("-v", "--verbose", action="store_true")

    parser = _Parser(prog="codemix-off", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    helps = {
        "stats": "class distribution of a labeled file as JSON",
        "prep": "clean a file with the task's preset",
        "translit": "clean and transliterate Roman-script text to the native script",
        "translate": "build a native/English parallel file, warming the cache",
        "train": "train a model and write a checkpoint plus history JSON",
        "eval": "score a checkpoint on a labeled file",
        "predict": "write id/label/probability for every row",
        "audit": "check a metrics report against correct/incorrect counts",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def resolve(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known - set(TRAIN_FLAGS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        train_over = dict(data.pop("train", {}))
        for flag, target in TRAIN_FLAGS.items():
            if flag in data:
                train_over[target] = data.pop(flag)
        cfg = replace(cfg, **data, train=train_over)
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None and f.name != "train":
            setattr(cfg, f.name, value)
    for flag, target in TRAIN_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            cfg.train[target] = value
    return cfg


# ---- commands ------------------------------------------------------------------


def _emit(obj: dict, out: str | None) -> None:
    text = json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_stats(cfg: RunConfig) -> None:
    cfg.require("data")
    ds = corpus.load_dataset(cfg.data, cfg.task, cfg.lang)
    _emit(corpus.class_distribution(ds).to_json(), cfg.out)


def _load_any(cfg: RunConfig) -> corpus.Dataset:
    try:
        return corpus.load_dataset(cfg.data, cfg.task, cfg.lang)
    except corpus.UnlabeledSample:
        return corpus.load_dataset(cfg.data, cfg.task, cfg.lang, split="test")


def _write_samples(samples, path):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(["id", "text", "label"])
        for s in samples:
            writer.writerow([s.id, s.text, s.label.value if s.label else ""])


def cmd_prep(cfg: RunConfig) -> None:
    cfg.require("data", "out")
    ds = _load_any(cfg)
    clean = textprep.CleanConfig.for_task(cfg.task)
    kept = []
    for s in ds.samples:
        text = textprep.clean_text(s.text, clean)
        if text:
            kept.append(replace(s, text=text))
        else:
            logger.warning("sample %s is empty after cleaning; dropped from %s", s.id, cfg.out)
    _write_samples(kept, cfg.out)


def cmd_translit(cfg: RunConfig) -> None:
    cfg.require("data", "out")
    ds = _load_any(cfg)
    scheme = textprep.TranslitScheme.from_file(cfg.scheme) if cfg.scheme else textprep.bundled_scheme(cfg.lang)
    out = textprep.transliterate_dataset(ds, scheme, textprep.CleanConfig.task2())
    _write_samples(out.samples, cfg.out)


def _provider(cfg: RunConfig) -> translate.Provider:
    if cfg.provider == "identity":
        return translate.IdentityProvider()
    if cfg.provider == "http":
        return translate.HttpProvider(cfg.endpoint)
    if cfg.fixture:
        return translate.FixtureProvider.from_file(cfg.fixture)
    return translate.FixtureProvider.bundled()


def cmd_translate(cfg: RunConfig) -> None:
    cfg.require("data", "out", "cache")
    ds = _load_any(cfg)
    provider = None if cfg.offline else _provider(cfg)
    cache = translate.TranslationCache(cfg.cache)
    parallel = translate.build_parallel_corpus(ds, provider, cache)
    translate.save_parallel(parallel, cfg.out)
    calls = provider.calls if provider else 0
    logger.info("translated %d samples, %d provider calls, cache size %d", len(parallel), calls, len(cache))


def _samples(cfg: RunConfig, path: str, labeled: bool = True):
    if cfg.task == "task2":
        return translate.load_parallel(path)
    return list(corpus.load_dataset(path, cfg.task, cfg.lang, split="train" if labeled else "test").samples)


def cmd_train(cfg: RunConfig) -> None:
    cfg.require("data", "checkpoint")
    tc = cfg.train_config()
    if cfg.val:
        train_set, val_set = _samples(cfg, cfg.data), _samples(cfg, cfg.val)
    elif cfg.task == "task1":
        ds = corpus.load_dataset(cfg.data, cfg.task, cfg.lang)
        tr, va = corpus.split_stratified(ds, cfg.val_fraction, cfg.seed)
        train_set, val_set = list(tr.samples), list(va.samples)
    else:
        par = translate.load_parallel(cfg.data)
        tr, va = corpus.split_stratified(_as_dataset(par, cfg), cfg.val_fraction, cfg.seed)
        val_ids = {s.id for s in va.samples}
        train_set = [p for p in par if p.id not in val_ids]
        val_set = [p for p in par if p.id in val_ids]

    opts = dict(weights_dir=cfg.weights_dir, offline=cfg.offline, trainable=cfg.finetune)
    lstm = BiLstmStackConfig(cfg.lstm_layers, cfg.lstm_units)
    if cfg.task == "task1":
        model = DualConcatModel(
            make_backend(cfg.backend_a, **opts),
            make_backend(cfg.backend_b, **opts),
            bilstm_config=lstm,
            max_len=tc.max_len,
            threshold=0.5 if cfg.threshold is None else cfg.threshold,
            seed=cfg.seed,
        )
    else:
        model = DualViewModel(
            make_backend(cfg.backend_a, **opts),
            cfg.fusion_weights(),
            bilstm_config=lstm,
            max_len=tc.max_len,
            threshold=0.5 if cfg.threshold is None else cfg.threshold,
            seed=cfg.seed,
        )
    model, history = train(model, train_set, val_set, tc)
    save_checkpoint(model, cfg.checkpoint, {"language": cfg.lang, "train_config": _jsonable(tc)})
    out = cfg.out or str(Path(cfg.checkpoint) / "history.json")
    history.save(out)
    sys.stdout.write(history.dumps())


def _jsonable(tc: TrainConfig) -> dict:
    return {f.name: getattr(tc, f.name) for f in fields(tc)}


def _as_dataset(parallel, cfg: RunConfig) -> corpus.Dataset:
    lang = corpus.Language(cfg.lang)
    samples = [corpus.Sample(p.id, p.native_text or p.english_text or "?", p.label, lang) for p in parallel]
    return corpus.Dataset(tuple(samples), corpus.Task(cfg.task), lang)


def _load_model(cfg: RunConfig):
    cfg.require("checkpoint")
    model, manifest = load_checkpoint(cfg.checkpoint, weights_dir=cfg.weights_dir, offline=cfg.offline)
    if cfg.threshold is not None:
        model.threshold = cfg.threshold
    cfg.task = manifest["task"]
    cfg.lang = manifest.get("language", cfg.lang)
    return model


def cmd_eval(cfg: RunConfig) -> None:
    cfg.require("data")
    model = _load_model(cfg)
    samples = _samples(cfg, cfg.data)
    preds, probs = model.predict(samples)
    gold = [s.label for s in samples]
    report = metrics.compute_metrics(preds, gold)
    table = report.to_table(f"{cfg.task}/{cfg.lang}")
    if cfg.out:
        metrics.write_report(report, cfg.out)
        Path(cfg.out).with_suffix(".txt").write_text(table, encoding="utf-8")
    if cfg.errors:
        texts = [getattr(s, "text", None) or getattr(s, "native_text") for s in samples]
        groups = metrics.error_report(preds, gold, texts, probs, ids=[s.id for s in samples])
        metrics.write_error_report(groups, cfg.errors)
    sys.stdout.write(table)


def cmd_predict(cfg: RunConfig) -> None:
    cfg.require("data", "out")
    model = _load_model(cfg)
    samples = _samples(cfg, cfg.data, labeled=False)
    preds, probs = model.predict(samples)
    with Path(cfg.out).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(["id", "label", "probability"])
        for s, label, p in zip(samples, preds, probs):
            writer.writerow([s.id, label.value, repr(float(p))])


def cmd_audit(cfg: RunConfig) -> None:
    cfg.require("metrics", "correct", "incorrect")
    report = metrics.read_report(cfg.metrics)
    result = metrics.audit_report(report, cfg.correct, cfg.incorrect)
    _emit(result.to_json(), cfg.out)
    if not result.passed:
        raise AuditFailed(
            f"accuracy {result.accuracy:.4f} vs counts {result.count_accuracy:.4f} (delta {result.accuracy_delta:.4f})"
        )


class AuditFailed(CliError):
    code = "metrics.AuditFailed"
    exit_code = 3


HANDLERS = {
    "stats": cmd_stats,
    "prep": cmd_prep,
    "translit": cmd_translit,
    "translate": cmd_translate,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "audit": cmd_audit,
}


def run_command(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UnknownCommand(f"no command given; choose one of {', '.join(COMMANDS)}")
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
        )
        HANDLERS[args.command](resolve(args))
    except Exception as exc:  # every failure becomes one machine-readable line
        code = getattr(exc, "code", None) or f"{type(exc).__module__.split('.')[-1]}.{type(exc).__name__}"
        sys.stderr.write(json.dumps({"error": code, "message": str(exc)}, ensure_ascii=False) + "\n")
        return getattr(exc, "exit_code", 1)
    return 0


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
