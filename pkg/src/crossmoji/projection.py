"""Category vectors, orthonormalization, and the similarity tensor.

A category vector is the mean of the embedding vectors of a lexicon
category's in-vocabulary tokens.  Per corpus and per run, the category
vectors are orthonormalized (Gram-Schmidt, in the shared schema's
lexicographic order) and cosine similarity against every target emoji is
computed.  Similarities are then averaged across runs per corpus, and
across corpora per culture group.

Cross-corpus comparability rules: a category degenerate in any corpus or
run is dropped everywhere; a target or Ekman word missing from any corpus
vocabulary is excluded everywhere (and reported).  Culture averages use
`sum * (1/n)`, the literal form of the per-culture mean.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .embedding import EmbeddingModel
from .inventory import SharedEmojiSet

EKMAN_AXIS_PREFIX = "ekman:"


class DegenerateCategoryError(ValueError):
    """A category has no usable token vectors."""


class RankDeficiencyError(ValueError):
    """Category vectors are not linearly independent."""


class UndefinedSimilarityError(ValueError):
    """Cosine similarity requested for a zero-norm vector."""


def category_vector(expanded_tokens: Sequence[str], model: EmbeddingModel) -> np.ndarray:
    """Component-wise arithmetic mean of the tokens' input vectors."""
    if not expanded_tokens:
        raise DegenerateCategoryError("category has no in-vocabulary tokens")
    rows = np.stack([model.vector(t) for t in expanded_tokens])
    return rows.mean(axis=0)


def gram_schmidt(
    vectors: Sequence[np.ndarray],
    labels: Optional[Sequence[str]] = None,
    tol: float = 1e-10,
) -> np.ndarray:
    """Classical Gram-Schmidt with a re-orthogonalization pass.

    The k-th output vector lies in the span of the first k inputs.  A
    residual norm below `tol` before normalization means the input list is
    rank deficient; the error names the offending vector.
    """
    if len(vectors) == 0:
        return np.zeros((0, 0))
    d = len(vectors[0])
    if len(vectors) > d:
        raise RankDeficiencyError(f"{len(vectors)} vectors cannot be independent in {d} dimensions")
    basis = np.zeros((len(vectors), d))
    for k, v in enumerate(vectors):
        u = np.asarray(v, dtype=np.float64).copy()
        for _ in range(2):  # second pass removes reintroduced components
            if k:
                u -= basis[:k].T @ (basis[:k] @ u)
        norm = np.linalg.norm(u)
        if norm < tol:
            name = labels[k] if labels is not None else f"#{k}"
            raise RankDeficiencyError(
                f"vector {name} is linearly dependent on its predecessors (residual {norm:.3e})"
            )
        basis[k] = u / norm
    return basis


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """cos angle between u and v; undefined for zero-norm inputs."""
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise UndefinedSimilarityError("cosine undefined for a zero-norm vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def culture_average(arrays: Sequence[np.ndarray]) -> np.ndarray:
    """Mean of per-corpus arrays as sum * (1/n), the literal '1/n Σ' form."""
    total = arrays[0].copy()
    for a in arrays[1:]:
        total += a
    return total * (1.0 / len(arrays))


@dataclass
class SimilarityTensor:
    """Cosine similarities indexed by (corpus, run, axis, target).

    Axes are the orthonormalized schema categories followed by any Ekman
    word axes (labels prefixed 'ekman:').  `per_run[corpus]` has shape
    (runs, n_axes, n_targets)."""

    axes: tuple[str, ...]
    targets: tuple[str, ...]
    corpora: tuple[str, ...]
    culture_of: Mapping[str, str]
    per_run: Mapping[str, np.ndarray]
    orthonormal: bool = True
    excluded_targets: tuple[str, ...] = ()
    excluded_axes: tuple[str, ...] = ()
    dropped_categories: Mapping[str, str] = field(default_factory=dict)

    @property
    def n_categories(self) -> int:
        return sum(1 for a in self.axes if not a.startswith(EKMAN_AXIS_PREFIX))

    @property
    def category_axes(self) -> tuple[str, ...]:
        return self.axes[: self.n_categories]

    @property
    def runs(self) -> int:
        first = next(iter(self.per_run.values()))
        return int(first.shape[0])

    def corpus_mean(self, corpus: str) -> np.ndarray:
        runs = self.per_run[corpus]
        return runs.sum(axis=0) * (1.0 / runs.shape[0])

    def cultures(self) -> tuple[str, ...]:
        seen = []
        for c in self.corpora:
            g = self.culture_of[c]
            if g not in seen:
                seen.append(g)
        return tuple(seen)

    def culture_corpora(self, culture: str) -> tuple[str, ...]:
        return tuple(c for c in self.corpora if self.culture_of[c] == culture)

    def culture_mean(self, culture: str) -> np.ndarray:
        members = self.culture_corpora(culture)
        if not members:
            raise KeyError(f"no corpus in culture group {culture!r}")
        return culture_average([self.corpus_mean(c) for c in members])

    def axis_index(self, axis: str) -> int:
        return self.axes.index(axis)

    def target_index(self, target: str) -> int:
        return self.targets.index(target)


@dataclass(frozen=True)
class CategoryVectorSet:
    """Category vectors of one (corpus, run): rows follow `names` order."""

    names: tuple[str, ...]
    vectors: np.ndarray   # len(names) x d
    orthonormal: bool

    def vector(self, name: str) -> np.ndarray:
        return self.vectors[self.names.index(name)]


def build_category_vectors(
    model: EmbeddingModel,
    schema: Sequence[str],
    expanded: Mapping[str, Sequence[str]],
    orthonormalize: bool = True,
) -> CategoryVectorSet:
    """Mean-of-token vectors per category, optionally orthonormalized in
    schema order (the order matters: earlier categories keep more of the
    shared embedding direction)."""
    raw = np.stack([category_vector(sorted(expanded[c]), model) for c in schema])
    if orthonormalize:
        return CategoryVectorSet(names=tuple(schema),
                                 vectors=gram_schmidt(raw, labels=list(schema)),
                                 orthonormal=True)
    return CategoryVectorSet(names=tuple(schema), vectors=raw, orthonormal=False)


def build_tensor(
    run_models: Mapping[str, Sequence[EmbeddingModel]],
    expansions: Mapping[str, Mapping[str, Sequence[str]]],
    schema: Sequence[str],
    targets: SharedEmojiSet | Sequence[str],
    culture_of: Mapping[str, str],
    ekman_axes: Optional[Mapping[str, Sequence[tuple[str, str]]]] = None,
    orthonormalize: bool = True,
    zero_tol: float = 1e-12,
) -> SimilarityTensor:
    """Build the similarity tensor over every (corpus, run, axis, target).

    run_models: corpus -> R trained models (same R everywhere).
    expansions: corpus -> category -> in-vocabulary tokens.
    ekman_axes: corpus -> [(axis_label, word)] in that corpus's language.
    """
    corpora = tuple(run_models)
    if not corpora:
        raise ValueError("no corpora supplied")
    n_runs = {c: len(ms) for c, ms in run_models.items()}
    if len(set(n_runs.values())) != 1:
        raise ValueError(f"corpora have differing run counts: {n_runs}")

    # drop categories that are unusable in any corpus/run, symmetrically
    dropped: dict[str, str] = {}
    for cat in schema:
        for corpus in corpora:
            tokens = expansions[corpus].get(cat, ())
            if not tokens:
                dropped[cat] = f"no in-vocabulary tokens in {corpus}"
                break
            for model in run_models[corpus]:
                vec = category_vector(sorted(tokens), model)
                if np.linalg.norm(vec) < zero_tol:
                    dropped[cat] = f"zero category vector in {corpus} (run seed {model.params.seed})"
                    break
            if cat in dropped:
                break
    kept_categories = tuple(c for c in schema if c not in dropped)
    if not kept_categories:
        raise DegenerateCategoryError("every schema category is degenerate in some corpus")

    # Ekman word axes usable only when the word is in every corpus vocabulary
    ekman_labels: tuple[str, ...] = ()
    excluded_axes: list[str] = []
    word_of: dict[tuple[str, str], str] = {}
    if ekman_axes:
        all_labels: list[str] = []
        for corpus in corpora:
            for label, word in ekman_axes.get(corpus, ()):
                if label not in all_labels:
                    all_labels.append(label)
                word_of[(corpus, label)] = word
        usable = []
        for label in all_labels:
            ok = all(
                (corpus, label) in word_of and word_of[(corpus, label)] in run_models[corpus][0].vocab
                for corpus in corpora
            )
            (usable if ok else excluded_axes).append(label)
        ekman_labels = tuple(usable)

    # targets usable only when present (nonzero) in every corpus vocabulary
    target_list = list(targets.emoji if isinstance(targets, SharedEmojiSet) else targets)
    excluded_targets: list[str] = []
    usable_targets: list[str] = []
    for t in target_list:
        ok = all(
            t in run_models[corpus][0].vocab
            and all(np.linalg.norm(m.vector(t)) >= zero_tol for m in run_models[corpus])
            for corpus in corpora
        )
        (usable_targets if ok else excluded_targets).append(t)
    if not usable_targets:
        raise ValueError("no target is present in every corpus vocabulary")

    axes = kept_categories + ekman_labels
    per_run: dict[str, np.ndarray] = {}
    for corpus in corpora:
        models = run_models[corpus]
        cube = np.empty((len(models), len(axes), len(usable_targets)))
        for r, model in enumerate(models):
            cat_set = build_category_vectors(model, kept_categories,
                                             expansions[corpus], orthonormalize)
            rows = [cat_set.vectors]
            if ekman_labels:
                rows.append(np.stack([model.vector(word_of[(corpus, lbl)]) for lbl in ekman_labels]))
            axis_matrix = np.vstack(rows)
            target_matrix = np.stack([model.vector(t) for t in usable_targets])
            a_norm = axis_matrix / np.linalg.norm(axis_matrix, axis=1, keepdims=True)
            t_norm = target_matrix / np.linalg.norm(target_matrix, axis=1, keepdims=True)
            cube[r] = np.clip(a_norm @ t_norm.T, -1.0, 1.0)
        per_run[corpus] = cube

    return SimilarityTensor(
        axes=axes,
        targets=tuple(usable_targets),
        corpora=corpora,
        culture_of=dict(culture_of),
        per_run=per_run,
        orthonormal=orthonormalize,
        excluded_targets=tuple(excluded_targets),
        excluded_axes=tuple(excluded_axes),
        dropped_categories=dropped,
    )


# --- CSV round-trip -------------------------------------------------------

TENSOR_HEADER = ["culture_or_corpus", "run_or_avg", "category", "target", "similarity"]


def write_tensor_csv(tensor: SimilarityTensor, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(TENSOR_HEADER)
        for corpus in tensor.corpora:
            cube = tensor.per_run[corpus]
            for r in range(cube.shape[0]):
                for i, axis in enumerate(tensor.axes):
                    for j, target in enumerate(tensor.targets):
                        writer.writerow([corpus, r, axis, target, repr(float(cube[r, i, j]))])
            mean = tensor.corpus_mean(corpus)
            for i, axis in enumerate(tensor.axes):
                for j, target in enumerate(tensor.targets):
                    writer.writerow([corpus, "avg", axis, target, repr(float(mean[i, j]))])
        for culture in tensor.cultures():
            mean = tensor.culture_mean(culture)
            for i, axis in enumerate(tensor.axes):
                for j, target in enumerate(tensor.targets):
                    writer.writerow([culture, "avg", axis, target, repr(float(mean[i, j]))])


def read_tensor_csv(path, culture_of: Mapping[str, str], orthonormal: bool = True) -> SimilarityTensor:
    """Rebuild a tensor from its per-run CSV rows (averages are recomputed)."""
    axes: list[str] = []
    targets: list[str] = []
    corpora: list[str] = []
    values: dict[tuple[str, int, str, str], float] = {}
    max_run = -1
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != TENSOR_HEADER:
            raise ValueError(f"{path}: unexpected tensor CSV header {header}")
        for corpus, run, axis, target, sim in reader:
            if run == "avg":
                continue
            r = int(run)
            max_run = max(max_run, r)
            if corpus not in corpora:
                corpora.append(corpus)
            if axis not in axes:
                axes.append(axis)
            if target not in targets:
                targets.append(target)
            values[(corpus, r, axis, target)] = float(sim)
    per_run = {}
    for corpus in corpora:
        cube = np.empty((max_run + 1, len(axes), len(targets)))
        for r in range(max_run + 1):
            for i, axis in enumerate(axes):
                for j, target in enumerate(targets):
                    cube[r, i, j] = values[(corpus, r, axis, target)]
        per_run[corpus] = cube
    return SimilarityTensor(
        axes=tuple(axes),
        targets=tuple(targets),
        corpora=tuple(corpora),
        culture_of={c: culture_of[c] for c in corpora},
        per_run=per_run,
        orthonormal=orthonormal,
    )
