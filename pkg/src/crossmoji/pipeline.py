"""End-to-end staged pipeline: ingest -> train -> project -> analyze -> report.

Each stage persists its artifacts under the output directory and records a
completion marker carrying a fingerprint of the effective configuration.
Re-running with an unchanged config skips completed stages; changing the
config invalidates downstream markers.  Deterministic mode with a fixed
seed reproduces embedding files and CSV reports byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from . import __version__
from .analytics import CorrelationReport, build_report
from .charts import emit_charts
from .corpus import CorpusHandle, ingest_handle, read_streams, write_streams
from .embedding import TrainParams, build_vocabulary, load_model, save_model, train_run_set
from .inventory import (
    count_frequencies,
    default_category_path,
    default_data_path,
    load_inventory,
    shared_set,
)
from .lexicon import default_ekman_path, expand_patterns, load_ekman, parse_lexicon, shared_schema
from .projection import build_tensor, read_tensor_csv, write_tensor_csv

STAGES = ("ingest", "train", "project", "analyze", "report")


class ConfigError(ValueError):
    """Invalid run configuration."""


class PipelineStageError(RuntimeError):
    """A stage failed; carries the stage name and the original cause."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class CorpusSpec:
    corpus_id: str
    culture: str
    input_path: Path
    lang: str
    country: str
    lexicon_path: Path
    pre_tokenized: bool = False


@dataclass
class RunConfig:
    corpora: list[CorpusSpec]
    out_dir: Path
    training: TrainParams
    min_count: int = 5
    runs: int = 5
    shared_threshold: int = 1000
    top_k: int = 15
    emoji_data: Path = None
    emoji_categories: Path = None
    ekman_words: Path = None

    def __post_init__(self):
        if not self.corpora:
            raise ConfigError("config needs at least one corpus")
        ids = [c.corpus_id for c in self.corpora]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate corpus ids: {ids}")
        for c in self.corpora:
            if c.culture not in ("West", "East"):
                raise ConfigError(f"corpus {c.corpus_id}: culture must be West or East")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.emoji_data is None:
            self.emoji_data = Path(str(default_data_path()))
        if self.emoji_categories is None:
            self.emoji_categories = Path(str(default_category_path()))
        if self.ekman_words is None:
            self.ekman_words = Path(str(default_ekman_path()))

    @property
    def culture_of(self) -> dict[str, str]:
        return {c.corpus_id: c.culture for c in self.corpora}

    def cultures_present(self) -> set[str]:
        return set(self.culture_of.values())

    def snapshot(self) -> dict:
        return {
            "corpora": [
                {
                    "id": c.corpus_id, "culture": c.culture, "input": str(c.input_path),
                    "lang": c.lang, "country": c.country, "lexicon": str(c.lexicon_path),
                    "pre_tokenized": c.pre_tokenized,
                }
                for c in self.corpora
            ],
            "training": self.training.as_dict(),
            "min_count": self.min_count,
            "runs": self.runs,
            "shared_threshold": self.shared_threshold,
            "top_k": self.top_k,
            "emoji_data": str(self.emoji_data),
            "emoji_categories": str(self.emoji_categories),
            "ekman_words": str(self.ekman_words),
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.snapshot(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def load_config(path, out_dir: Optional[str] = None,
                deterministic: bool = False, threads: int = 1) -> RunConfig:
    """Read a JSON config; relative paths resolve against the config file."""
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    base = path.parent

    def resolve(p) -> Optional[Path]:
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else (base / p)

    training_cfg = dict(raw.get("training", {}))
    min_count = int(training_cfg.pop("min_count", raw.get("min_count", 5)))
    mode = training_cfg.pop("mode", "deterministic")
    if deterministic:
        mode = "deterministic"
    training_cfg.pop("threads", None)
    params = TrainParams(
        seed=int(raw.get("seed", 1)),
        mode=mode,
        threads=1 if deterministic else max(1, threads),
        **training_cfg,
    )
    corpora = []
    for c in raw.get("corpora", []):
        missing = [k for k in ("id", "culture", "input", "lang", "country", "lexicon")
                   if k not in c]
        if missing:
            raise ConfigError(f"corpus entry missing {missing}: {c}")
        corpora.append(CorpusSpec(
            corpus_id=str(c["id"]), culture=str(c["culture"]),
            input_path=resolve(c["input"]), lang=str(c["lang"]),
            country=str(c["country"]), lexicon_path=resolve(c["lexicon"]),
            pre_tokenized=bool(c.get("pre_tokenized", False)),
        ))
    return RunConfig(
        corpora=corpora,
        out_dir=Path(out_dir) if out_dir else resolve(raw.get("out_dir", "out")),
        training=params,
        min_count=min_count,
        runs=int(raw.get("runs", 5)),
        shared_threshold=int(raw.get("shared_threshold", 1000)),
        top_k=int(raw.get("top_k", 15)),
        emoji_data=resolve(raw.get("emoji_data")),
        emoji_categories=resolve(raw.get("emoji_categories")),
        ekman_words=resolve(raw.get("ekman_words")),
    )


@dataclass
class RunManifest:
    config: dict
    fingerprint: str
    version: str = __version__
    stages: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    charts: dict = field(default_factory=dict)

    def record(self, stage: str, seconds: float, skipped: bool = False, **extra) -> None:
        self.stages[stage] = {"completed": True, "skipped": skipped,
                              "seconds": round(seconds, 3), **extra}

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.__dict__, f, ensure_ascii=False, indent=2, default=str)
            f.write("\n")


class Pipeline:
    """Executes stages against one output directory."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.out = Path(config.out_dir)
        self.manifest = RunManifest(config=config.snapshot(),
                                    fingerprint=config.fingerprint())
        self._inventory = None

    # --- shared resources ---

    @property
    def inventory(self):
        if self._inventory is None:
            self._inventory = load_inventory(self.config.emoji_data,
                                             self.config.emoji_categories)
            self.manifest.warnings.extend(self._inventory.warnings)
        return self._inventory

    def streams_path(self, corpus_id: str) -> Path:
        return self.out / "streams" / f"{corpus_id}.tokens"

    def model_path(self, corpus_id: str, run: int) -> Path:
        return self.out / "models" / f"{corpus_id}.run{run}.vec"

    def _marker(self, stage: str) -> Path:
        return self.out / f".stage_{stage}.json"

    def _is_complete(self, stage: str) -> bool:
        marker = self._marker(stage)
        if not marker.exists():
            return False
        try:
            data = json.loads(marker.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            return False
        return data.get("fingerprint") == self.config.fingerprint()

    def _mark_complete(self, stage: str, extra: dict, warnings: list) -> None:
        payload = {"fingerprint": self.config.fingerprint(), "stage": stage,
                   "extra": extra, "warnings": warnings}
        self._marker(stage).write_text(
            json.dumps(payload, ensure_ascii=False, default=str) + "\n", encoding="utf-8")

    def _read_marker(self, stage: str) -> dict:
        try:
            return json.loads(self._marker(stage).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return {}

    def _require(self, stage: str) -> None:
        if not self._is_complete(stage):
            raise PipelineStageError(
                stage, RuntimeError(
                    f"artifacts missing or stale; run the {stage!r} stage first"))

    def _load_streams(self) -> dict[str, list]:
        out = {}
        for spec in self.config.corpora:
            with open(self.streams_path(spec.corpus_id), encoding="utf-8") as f:
                out[spec.corpus_id] = list(read_streams(f))
        return out

    def _load_models(self) -> dict[str, list]:
        return {
            spec.corpus_id: [load_model(self.model_path(spec.corpus_id, r))
                             for r in range(self.config.runs)]
            for spec in self.config.corpora
        }

    # --- stages ---

    def stage_ingest(self) -> dict:
        (self.out / "streams").mkdir(parents=True, exist_ok=True)
        counts_by_corpus = {}
        for spec in self.config.corpora:
            handle = CorpusHandle(
                corpus_id=spec.corpus_id, culture_group=spec.culture,
                paths=(str(spec.input_path),), lang=spec.lang,
                country=spec.country, pre_tokenized=spec.pre_tokenized,
            )
            streams, counts = ingest_handle(handle, self.inventory)
            with open(self.streams_path(spec.corpus_id), "w", encoding="utf-8") as f:
                write_streams(streams, f)
            counts_by_corpus[spec.corpus_id] = counts.as_dict()
        with open(self.out / "counts.json", "w", encoding="utf-8") as f:
            json.dump(counts_by_corpus, f, ensure_ascii=False, indent=2)
            f.write("\n")
        return {"counts": counts_by_corpus}

    def stage_train(self) -> dict:
        self._require("ingest")
        (self.out / "models").mkdir(parents=True, exist_ok=True)
        info = {}
        streams = self._load_streams()
        for k, spec in enumerate(self.config.corpora):
            vocab = build_vocabulary(streams[spec.corpus_id], self.config.min_count)
            # every (corpus, run) pair gets its own seed; same-sized vocabularies
            # must not share initializations across corpora
            corpus_params = replace(self.config.training,
                                    seed=self.config.training.seed + k * self.config.runs)
            models = train_run_set(streams[spec.corpus_id], vocab,
                                   corpus_params, self.config.runs)
            for r, model in enumerate(models):
                save_model(model, self.model_path(spec.corpus_id, r))
            info[spec.corpus_id] = {
                "vocabulary": len(vocab),
                "corpus_tokens": vocab.corpus_tokens,
                "epoch_losses": [list(m.epoch_losses) for m in models],
            }
        return {"training": info}

    def stage_project(self) -> dict:
        self._require("train")
        (self.out / "tensors").mkdir(parents=True, exist_ok=True)
        streams = self._load_streams()
        models = self._load_models()
        table = count_frequencies(streams, self.inventory)
        shared = shared_set(table, self.config.shared_threshold)
        if len(shared) == 0:
            self.manifest.warnings.append(
                f"no emoji passes the shared-set threshold {self.config.shared_threshold}")

        lexicons = {
            spec.corpus_id: parse_lexicon(spec.lexicon_path, spec.lang)
            for spec in self.config.corpora
        }
        schema = shared_schema(list(lexicons.values())) if len(lexicons) > 1 else \
            lexicons[self.config.corpora[0].corpus_id].category_names
        expansions = {}
        for spec in self.config.corpora:
            vocab_tokens = models[spec.corpus_id][0].vocab.tokens
            exp = expand_patterns(lexicons[spec.corpus_id], vocab_tokens)
            expansions[spec.corpus_id] = {c: sorted(exp.tokens[c]) for c in schema}

        # two categories expanding to the same token set have identical
        # category vectors and would make orthonormalization fail; keep the
        # first and drop the rest, symmetrically across corpora
        duplicate_of: dict[str, str] = {}
        for corpus_id, expanded in expansions.items():
            seen: dict[frozenset, str] = {}
            for cat in schema:
                key = frozenset(expanded[cat])
                if not key or cat in duplicate_of:
                    continue
                if key in seen:
                    duplicate_of[cat] = f"{seen[key]} (identical tokens in {corpus_id})"
                else:
                    seen[key] = cat
        if duplicate_of:
            schema = tuple(c for c in schema if c not in duplicate_of)
            self.manifest.warnings.append(
                "dropped categories duplicating another's token set: "
                + ", ".join(f"{c} = {why}" for c, why in sorted(duplicate_of.items())))

        ekman = load_ekman(self.config.ekman_words)
        ekman_axes = {}
        for spec in self.config.corpora:
            lang = spec.lang.split("-")[0].lower()
            if lang in ekman.words:
                ekman_axes[spec.corpus_id] = ekman.axes(lang)
            else:
                self.manifest.warnings.append(
                    f"no Ekman word list for language {lang!r} (corpus {spec.corpus_id})")

        info = {"schema": list(schema), "shared_emoji": len(shared)}
        if len(shared) == 0:
            (self.out / "tensors" / "EMPTY").write_text("no shared emoji\n")
            return info
        for flavor, ortho in (("orthonormal", True), ("raw", False)):
            tensor = build_tensor(
                models, expansions, schema, shared, self.config.culture_of,
                ekman_axes=ekman_axes or None, orthonormalize=ortho,
            )
            write_tensor_csv(tensor, self.out / "tensors" / f"similarity_{flavor}.csv")
            if ortho:
                info["axes"] = list(tensor.axes)
                info["targets"] = len(tensor.targets)
                if tensor.dropped_categories:
                    self.manifest.warnings.append(
                        "dropped degenerate categories: "
                        + ", ".join(f"{c} ({why})" for c, why in
                                    sorted(tensor.dropped_categories.items())))
                if tensor.excluded_targets:
                    self.manifest.warnings.append(
                        f"{len(tensor.excluded_targets)} shared emoji missing from some "
                        f"corpus vocabulary, excluded from projections")
                if tensor.excluded_axes:
                    self.manifest.warnings.append(
                        "Ekman axes excluded (word missing in some corpus): "
                        + ", ".join(tensor.excluded_axes))
        return info

    def stage_analyze(self) -> dict:
        self._require("project")
        report_dir = self.out / "report"
        report_dir.mkdir(parents=True, exist_ok=True)
        streams = self._load_streams()
        models = self._load_models()
        table = count_frequencies(streams, self.inventory)
        shared = shared_set(table, self.config.shared_threshold)

        tensor_path = self.out / "tensors" / "similarity_orthonormal.csv"
        tensor = None
        if tensor_path.exists():
            tensor = read_tensor_csv(tensor_path, self.config.culture_of)

        cross = {"West", "East"} <= self.config.cultures_present()
        if not cross:
            self.manifest.warnings.append(
                "only one culture group configured; cross-culture analytics skipped")
        report = build_report(
            tensor if cross else None,
            models if len(models) >= 2 else None,
            table, self.inventory, shared, self.config.culture_of,
            top_k=self.config.top_k,
        )
        self.manifest.warnings.extend(report.warnings)
        table.to_csv(report_dir / "frequency.csv")
        write_report_csvs(report, self.inventory, report_dir)
        write_report_json(report, report_dir / "report.json")
        return {"warnings": list(report.warnings)}

    def stage_report(self) -> dict:
        self._require("analyze")
        report = read_report_json(self.out / "report" / "report.json")
        charts = emit_charts(report, self.out / "charts")
        for name, filename in charts.items():
            if filename is None:
                self.manifest.warnings.append(f"chart {name} omitted: empty report section")
        self.manifest.charts = charts
        return {"charts": charts}

    # --- driver ---

    def run(self, stage: str = "all") -> RunManifest:
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"output directory {self.out} not writable: {exc}") from exc
        wanted = list(STAGES) if stage == "all" else [stage]
        if stage not in list(STAGES) + ["all"]:
            raise ConfigError(f"unknown stage {stage!r}; choose from {', '.join(STAGES)} or all")
        for name in wanted:
            fn = getattr(self, f"stage_{name}")
            if stage == "all" and self._is_complete(name):
                # restore the cached run's stage info so the manifest stays whole
                marker = self._read_marker(name)
                extra = marker.get("extra", {})
                self.manifest.record(name, 0.0, skipped=True, **extra)
                self.manifest.warnings.extend(marker.get("warnings", []))
                if name == "report" and "charts" in extra:
                    self.manifest.charts = extra["charts"]
                continue
            start = time.perf_counter()
            warnings_before = len(self.manifest.warnings)
            try:
                extra = fn() or {}
            except PipelineStageError:
                self.manifest.save(self.out / "manifest.json")
                raise
            except Exception as exc:
                self.manifest.save(self.out / "manifest.json")
                raise PipelineStageError(name, exc) from exc
            self.manifest.record(name, time.perf_counter() - start, **extra)
            self._mark_complete(name, extra, self.manifest.warnings[warnings_before:])
        self.manifest.save(self.out / "manifest.json")
        return self.manifest


def run_pipeline(config: RunConfig, stage: str = "all") -> RunManifest:
    return Pipeline(config).run(stage)


# --- report serialization ----------------------------------------------------

def write_report_csvs(report: CorrelationReport, inventory, out_dir: Path) -> None:
    def top5_cell(culture: str, axis: str) -> str:
        entries = report.top5.get((culture, axis), [])
        return " ".join(e for e, _ in entries)

    if report.category_rho:
        with open(out_dir / "category_scc.csv", "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["category", "rho", "top5_west", "top5_east"])
            for axis in report.category_rho:
                w.writerow([axis, repr(report.category_rho[axis]),
                            top5_cell("West", axis), top5_cell("East", axis)])
    if report.icon is not None:
        with open(out_dir / "icon_scc.csv", "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["emoji", "scc", "unicode_category"])
            for emoji in sorted(report.icon.scc, key=lambda e: (-report.icon.scc[e], e)):
                w.writerow([emoji, repr(report.icon.scc[emoji]), inventory.category(emoji)])
    if report.country is not None:
        with open(out_dir / "country_matrix.csv", "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["corpus"] + list(report.country.corpora))
            for i, corpus in enumerate(report.country.corpora):
                w.writerow([corpus] + [repr(float(v)) for v in report.country.matrix[i]])
    if report.triples:
        with open(out_dir / "triples.csv", "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["item", "in_west", "in_east", "cross"])
            for item, (iw, ie, xc) in report.triples.items():
                w.writerow([item] + ["" if v is None else repr(v) for v in (iw, ie, xc)])
    freq = report.frequency
    if freq is not None:
        with open(out_dir / "frequency_summary.csv", "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["culture", "rank", "emoji", "count", "share"])
            for culture in sorted(freq.top_by_culture):
                for rank, (emoji, count, share) in enumerate(freq.top_by_culture[culture], 1):
                    w.writerow([culture, rank, emoji, count, repr(share)])
        with open(out_dir / "frequency_category_scc.csv", "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["unicode_category", "scc"])
            if freq.overall_scc is not None:
                w.writerow(["__overall__", repr(freq.overall_scc)])
            for cat, val in freq.category_scc.items():
                w.writerow([cat, repr(val)])


def write_report_json(report: CorrelationReport, path: Path) -> None:
    payload = {
        "category_rho": report.category_rho,
        "top5": {f"{culture}|{axis}": entries
                 for (culture, axis), entries in report.top5.items()},
        "icon": None,
        "country": None,
        "frequency": None,
        "triples": {k: list(v) for k, v in report.triples.items()},
        "warnings": list(report.warnings),
    }
    if report.icon is not None:
        payload["icon"] = {
            "scc": report.icon.scc,
            "by_category": {k: list(v) for k, v in report.icon.by_category.items()},
            "top": report.icon.top,
            "bottom": report.icon.bottom,
        }
    if report.country is not None:
        payload["country"] = {
            "corpora": list(report.country.corpora),
            "matrix": [[float(v) for v in row] for row in report.country.matrix],
            "cross_pair_mean": report.country.cross_pair_mean,
            "culture_vector_corr": report.country.culture_vector_corr,
            "emoji_used": list(report.country.emoji_used),
            "excluded": list(report.country.excluded),
        }
    if report.frequency is not None:
        payload["frequency"] = {
            "top_by_culture": report.frequency.top_by_culture,
            "culture_shares": report.frequency.culture_shares,
            "category_shares": report.frequency.category_shares,
            "overall_scc": report.frequency.overall_scc,
            "category_scc": report.frequency.category_scc,
            "omitted_categories": list(report.frequency.omitted_categories),
        }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, indent=2)
        f.write("\n")


def read_report_json(path) -> CorrelationReport:
    import numpy as np

    from .analytics import CountryMatrix, FrequencyReport, IconReport

    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    report = CorrelationReport()
    report.category_rho = data.get("category_rho", {})
    report.top5 = {
        tuple(key.split("|", 1)): [(e, s) for e, s in entries]
        for key, entries in data.get("top5", {}).items()
    }
    if data.get("icon"):
        icon = data["icon"]
        report.icon = IconReport(
            scc=icon["scc"],
            by_category={k: tuple(v) for k, v in icon["by_category"].items()},
            top={k: [(e, s) for e, s in v] for k, v in icon["top"].items()},
            bottom={k: [(e, s) for e, s in v] for k, v in icon["bottom"].items()},
        )
    if data.get("country"):
        c = data["country"]
        report.country = CountryMatrix(
            corpora=tuple(c["corpora"]), matrix=np.array(c["matrix"]),
            cross_pair_mean=c["cross_pair_mean"],
            culture_vector_corr=c["culture_vector_corr"],
            emoji_used=tuple(c["emoji_used"]), excluded=tuple(c["excluded"]),
        )
    if data.get("frequency"):
        fr = data["frequency"]
        report.frequency = FrequencyReport(
            top_by_culture={k: [tuple(x) for x in v] for k, v in fr["top_by_culture"].items()},
            culture_shares=fr["culture_shares"],
            category_shares=fr["category_shares"],
            overall_scc=fr["overall_scc"],
            category_scc=fr["category_scc"],
            omitted_categories=tuple(fr["omitted_categories"]),
        )
    report.triples = {k: tuple(v) for k, v in data.get("triples", {}).items()}
    report.warnings = tuple(data.get("warnings", ()))
    return report
