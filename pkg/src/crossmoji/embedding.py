"""CBOW embeddings with negative sampling, trained from token streams.

The trainer is a plain SGD loop over (context window -> center token)
positions.  The mean of the context input vectors predicts the center token
against `negatives` sampled non-context tokens under a logistic loss:

    L = -log sigmoid(h . o_pos) - sum_k log sigmoid(-h . o_neg_k)

where h is the context mean.  Gradients are the exact analytic gradients of
L (the context update is the output-side error divided by the context
size), so they check out against finite differences.

Two modes: `deterministic` (single worker, seeded, byte-reproducible) and
`parallel` (workers share the parameter matrices without locking; updates
may interleave, which is lossy but convergent, and nondeterministic).
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

MODEL_FORMAT = "crossmoji-model 1"


class EmptyVocabularyError(ValueError):
    """No token survived the min_count cut."""


class TokenNotFoundError(KeyError):
    """Lookup of a token absent from the vocabulary."""


class TrainingDivergedError(RuntimeError):
    """NaN/Inf detected in the parameter matrices."""


class ModelFormatError(ValueError):
    """Unreadable or inconsistent model file."""


@dataclass(frozen=True)
class Vocabulary:
    """Dense-indexed token counts; tokens below min_count are excluded."""

    tokens: tuple[str, ...]
    counts: tuple[int, ...]
    min_count: int
    corpus_tokens: int  # all stream tokens, including ones below min_count

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @property
    def kept_tokens(self) -> int:
        return sum(self.counts)

    def count(self, token: str) -> int:
        return self.counts[self.index[token]]


def build_vocabulary(streams: Iterable, min_count: int) -> Vocabulary:
    """Exact token counts; deterministic index order (count desc, then token)."""
    counter: dict[str, int] = {}
    total = 0
    for stream in streams:
        tokens = stream.tokens if hasattr(stream, "tokens") else stream
        for tok in tokens:
            counter[tok] = counter.get(tok, 0) + 1
            total += 1
    kept = [(t, c) for t, c in counter.items() if c >= min_count]
    if not kept:
        raise EmptyVocabularyError(
            f"no token reaches min_count={min_count} (saw {len(counter)} distinct tokens)"
        )
    kept.sort(key=lambda tc: (-tc[1], tc[0]))
    return Vocabulary(
        tokens=tuple(t for t, _ in kept),
        counts=tuple(c for _, c in kept),
        min_count=min_count,
        corpus_tokens=total,
    )


@dataclass(frozen=True)
class TrainParams:
    dim: int = 100
    epochs: int = 10
    lr0: float = 0.025
    lr_min: float = 1e-4
    window: int = 5
    negatives: int = 5
    subsample: float = 1e-4
    seed: int = 1
    mode: str = "deterministic"  # or "parallel"
    threads: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not (self.lr0 > self.lr_min > 0):
            raise ValueError("require lr0 > lr_min > 0")
        if self.window < 1 or self.negatives < 1 or self.epochs < 1:
            raise ValueError("window, negatives and epochs must be >= 1")
        if self.mode not in ("deterministic", "parallel"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def as_dict(self) -> dict:
        return {
            "dim": self.dim, "epochs": self.epochs, "lr0": self.lr0,
            "lr_min": self.lr_min, "window": self.window,
            "negatives": self.negatives, "subsample": self.subsample,
            "seed": self.seed, "mode": self.mode, "threads": self.threads,
        }


@dataclass
class EmbeddingModel:
    """One training run: input matrix (the token representation used
    downstream), output matrix, and the exact parameters that produced it."""

    vocab: Vocabulary
    syn0: np.ndarray  # |V| x d input vectors
    syn1: np.ndarray  # |V| x d output (context) vectors
    params: TrainParams
    epoch_losses: tuple[float, ...] = ()

    @property
    def dim(self) -> int:
        return int(self.syn0.shape[1])

    def vector(self, token: str) -> np.ndarray:
        try:
            return self.syn0[self.vocab.index[token]]
        except KeyError:
            raise TokenNotFoundError(token) from None


# --- loss kernel ----------------------------------------------------------

def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def cbow_loss(context_vectors: np.ndarray, output_vectors: np.ndarray) -> float:
    """Negative-sampling loss; output_vectors[0] is the center token's output
    vector, the rest are sampled negatives."""
    h = context_vectors.mean(axis=0)
    scores = output_vectors @ h
    # -log sigmoid(x) = log(1 + exp(-x)), computed stably
    loss = np.logaddexp(0.0, -scores[0]) + np.logaddexp(0.0, scores[1:]).sum()
    return float(loss)


def cbow_gradients(
    context_vectors: np.ndarray, output_vectors: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss plus exact gradients w.r.t. the context and output vectors."""
    n_ctx = context_vectors.shape[0]
    h = context_vectors.mean(axis=0)
    scores = output_vectors @ h
    f = _sigmoid(scores)
    g = f.copy()
    g[0] -= 1.0  # (sigmoid - label); label 1 for the center, 0 for negatives
    grad_out = np.outer(g, h)
    grad_h = g @ output_vectors
    grad_ctx = np.tile(grad_h / n_ctx, (n_ctx, 1))
    loss = np.logaddexp(0.0, -scores[0]) + np.logaddexp(0.0, scores[1:]).sum()
    return float(loss), grad_ctx, grad_out


def keep_probability(count: int, threshold_count: float) -> float:
    """Subsampling keep probability for a token with this corpus count."""
    if threshold_count <= 0:
        return 1.0
    p = (np.sqrt(count / threshold_count) + 1.0) * (threshold_count / count)
    return float(min(1.0, p))


def subsample_keep_probabilities(
    counts_in_stream: np.ndarray, subsample: float, stream_tokens: int
) -> Optional[np.ndarray]:
    """Per-vocab-index keep probabilities; None disables subsampling entirely
    (exact pass-through: every token participates)."""
    if not subsample or subsample <= 0:
        return None
    threshold_count = subsample * stream_tokens
    counts = counts_in_stream.astype(np.float64).copy()
    counts[counts == 0] = 1.0
    keep = (np.sqrt(counts / threshold_count) + 1.0) * (threshold_count / counts)
    return np.minimum(keep, 1.0)


def _negative_table(vocab: Vocabulary, power: float = 0.75) -> np.ndarray:
    weights = np.array(vocab.counts, dtype=np.float64) ** power
    cum = np.cumsum(weights)
    return cum / cum[-1]


def _encode_streams(streams: Iterable, vocab: Vocabulary) -> list[np.ndarray]:
    index = vocab.index
    sentences = []
    for stream in streams:
        tokens = stream.tokens if hasattr(stream, "tokens") else stream
        ids = [index[t] for t in tokens if t in index]
        if ids:
            sentences.append(np.array(ids, dtype=np.int64))
    return sentences


def _apply_position(
    syn0: np.ndarray,
    syn1: np.ndarray,
    ctx: np.ndarray,
    outs: np.ndarray,
    alpha: float,
    loss_acc: Optional[list],
) -> None:
    """One SGD step for a (context, center + negatives) position.

    All gradients are evaluated at the current parameters, then applied;
    duplicated context or output indices accumulate their updates."""
    h = np.add.reduce(syn0[ctx], axis=0) / ctx.size
    out_vecs = syn1[outs]
    scores = out_vecs @ h
    f = _sigmoid(scores)
    g = f.copy()
    g[0] -= 1.0
    if loss_acc is not None:
        loss_acc[0] += np.logaddexp(0.0, -scores[0]) + np.logaddexp(0.0, scores[1:]).sum()
        loss_acc[1] += 1
    grad_h = g @ out_vecs
    np.subtract.at(syn1, outs, (alpha * g)[:, None] * h)
    np.subtract.at(syn0, ctx, (alpha / ctx.size) * grad_h)


def _train_sentences(
    sentences: Sequence[np.ndarray],
    syn0: np.ndarray,
    syn1: np.ndarray,
    keep_prob: np.ndarray,
    neg_cum: np.ndarray,
    params: TrainParams,
    rng: np.random.Generator,
    total_words: int,
    words_done_start: int,
    loss_acc: Optional[list],
    alpha_trace: Optional[Callable[[int, float], None]] = None,
) -> int:
    """One pass over `sentences`, updating syn0/syn1 in place.

    The learning rate decays linearly with the number of in-vocabulary
    tokens consumed (pre-subsampling), refreshed once per sentence.
    Returns the updated consumed-token count.
    """
    lr_span = params.lr_min - params.lr0
    negatives = params.negatives
    window = params.window
    words_done = words_done_start
    for sent in sentences:
        alpha = params.lr0 + (words_done / total_words) * lr_span
        alpha = max(alpha, params.lr_min)
        if alpha_trace is not None:
            alpha_trace(words_done, alpha)
        words_done += len(sent)
        if keep_prob is not None:
            sent = sent[rng.random(len(sent)) < keep_prob[sent]]
        n = len(sent)
        if n < 2:
            continue
        shrink = rng.integers(1, window + 1, size=n)
        for pos in range(n):
            w = int(shrink[pos])
            lo = max(0, pos - w)
            ctx = np.concatenate((sent[lo:pos], sent[pos + 1 : pos + 1 + w]))
            if ctx.size == 0:
                continue
            center = int(sent[pos])
            outs = np.empty(negatives + 1, dtype=np.int64)
            outs[0] = center
            filled = 1
            while filled < negatives + 1:
                draws = np.searchsorted(neg_cum, rng.random(negatives + 1 - filled))
                for t in draws:
                    if t != center and filled < negatives + 1:
                        outs[filled] = t
                        filled += 1
            _apply_position(syn0, syn1, ctx, outs, alpha, loss_acc)
    return words_done


def train_cbow(
    streams: Iterable,
    vocab: Vocabulary,
    params: TrainParams,
    alpha_trace: Optional[Callable[[int, float], None]] = None,
) -> EmbeddingModel:
    """Train one CBOW model for exactly `params.epochs` passes."""
    if len(vocab) < 2:
        raise EmptyVocabularyError(
            "need at least 2 vocabulary tokens to sample negatives")
    sentences = _encode_streams(streams, vocab)
    if not sentences:
        raise EmptyVocabularyError("no sentence contains an in-vocabulary token")

    rng = np.random.default_rng(params.seed)
    V, d = len(vocab), params.dim
    syn0 = rng.uniform(-0.5 / d, 0.5 / d, size=(V, d))
    syn1 = np.zeros((V, d))
    neg_cum = _negative_table(vocab)

    stream_tokens = sum(len(s) for s in sentences)
    counts_in_stream = np.bincount(np.concatenate(sentences), minlength=V)
    keep_prob = subsample_keep_probabilities(counts_in_stream, params.subsample,
                                             stream_tokens)

    total_words = stream_tokens * params.epochs
    epoch_losses: list[float] = []
    words_done = 0

    if params.mode == "parallel" and params.threads > 1:
        shards = [sentences[i :: params.threads] for i in range(params.threads)]
        for epoch in range(params.epochs):
            loss_accs = [[0.0, 0] for _ in shards]
            threads = []
            for k, shard in enumerate(shards):
                worker_rng = np.random.default_rng((params.seed, epoch, k))
                t = threading.Thread(
                    target=_train_sentences,
                    args=(shard, syn0, syn1, keep_prob, neg_cum, params, worker_rng,
                          total_words, words_done, loss_accs[k]),
                )
                threads.append(t)
                t.start()
            for t in threads:
                t.join()
            words_done += stream_tokens
            total_loss = sum(a[0] for a in loss_accs)
            total_n = sum(a[1] for a in loss_accs)
            epoch_losses.append(total_loss / max(total_n, 1))
            _check_finite(syn0, syn1, epoch)
    else:
        for epoch in range(params.epochs):
            loss_acc = [0.0, 0]
            words_done = _train_sentences(
                sentences, syn0, syn1, keep_prob, neg_cum, params, rng,
                total_words, words_done, loss_acc, alpha_trace,
            )
            epoch_losses.append(loss_acc[0] / max(loss_acc[1], 1))
            _check_finite(syn0, syn1, epoch)

    return EmbeddingModel(
        vocab=vocab, syn0=syn0, syn1=syn1, params=params,
        epoch_losses=tuple(epoch_losses),
    )


def _check_finite(syn0: np.ndarray, syn1: np.ndarray, epoch: int) -> None:
    if not (np.isfinite(syn0).all() and np.isfinite(syn1).all()):
        bad0 = int(np.count_nonzero(~np.isfinite(syn0)))
        bad1 = int(np.count_nonzero(~np.isfinite(syn1)))
        raise TrainingDivergedError(
            f"non-finite parameters after epoch {epoch}: "
            f"{bad0} bad entries in the input matrix, {bad1} in the output matrix"
        )


def train_run_set(
    streams: Sequence,
    vocab: Vocabulary,
    params: TrainParams,
    n_runs: int,
) -> list[EmbeddingModel]:
    """Train `n_runs` independent models over one shared vocabulary.

    Run r uses seed `params.seed + r`, so runs differ only by their
    random initialization and sampling."""
    models = []
    for r in range(n_runs):
        run_params = replace(params, seed=params.seed + r)
        models.append(train_cbow(streams, vocab, run_params))
    return models


def neighbors(model: EmbeddingModel, token: str, k: int) -> list[tuple[str, float]]:
    """k nearest vocabulary tokens by cosine on input vectors, self excluded."""
    if token not in model.vocab.index:
        raise TokenNotFoundError(token)
    if k <= 0:
        return []
    idx = model.vocab.index[token]
    norms = np.linalg.norm(model.syn0, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    sims = (model.syn0 @ model.syn0[idx]) / (safe * max(norms[idx], 1e-300))
    sims[norms == 0] = -np.inf
    sims[idx] = -np.inf
    order = np.argsort(-sims, kind="stable")[:k]
    return [(model.vocab.tokens[i], float(sims[i])) for i in order if np.isfinite(sims[i])]


# --- persistence ----------------------------------------------------------

def _format_row(vec: np.ndarray) -> str:
    return " ".join(repr(float(x)) for x in vec)


def save_model(model: EmbeddingModel, path) -> None:
    """Text format: '#' metadata block, '|V| d' header, one 'token v1..vd'
    line per token (input matrix), then counts and output-matrix sections.
    Floats are written with full round-trip precision."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# {MODEL_FORMAT}\n")
        for key, value in model.params.as_dict().items():
            f.write(f"# {key}: {value}\n")
        f.write(f"# min_count: {model.vocab.min_count}\n")
        f.write(f"# corpus_tokens: {model.vocab.corpus_tokens}\n")
        f.write(f"# epoch_losses: {json.dumps(list(model.epoch_losses))}\n")
        V, d = model.syn0.shape
        f.write(f"{V} {d}\n")
        for i, token in enumerate(model.vocab.tokens):
            f.write(f"{token} {_format_row(model.syn0[i])}\n")
        f.write("# counts\n")
        for token, count in zip(model.vocab.tokens, model.vocab.counts):
            f.write(f"{token} {count}\n")
        f.write("# output\n")
        for i, token in enumerate(model.vocab.tokens):
            f.write(f"{token} {_format_row(model.syn1[i])}\n")


def _parse_vector_line(line: str, d: int, path, line_no: int) -> tuple[str, np.ndarray]:
    parts = line.rstrip("\n").split(" ")
    if len(parts) != d + 1:
        raise ModelFormatError(f"{path}:{line_no}: expected token + {d} floats, got {len(parts)} fields")
    return parts[0], np.array([float(x) for x in parts[1:]], dtype=np.float64)


def load_model(path) -> EmbeddingModel:
    """Inverse of save_model; load(save(m)) reproduces m exactly."""
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != f"# {MODEL_FORMAT}":
        raise ModelFormatError(f"{path}: not a {MODEL_FORMAT} file")
    meta: dict[str, str] = {}
    i = 1
    while i < len(lines) and lines[i].startswith("# "):
        key, _, value = lines[i][2:].partition(": ")
        meta[key] = value
        i += 1
    if i >= len(lines):
        raise ModelFormatError(f"{path}: header-only file, no '|V| d' line or vectors")
    try:
        V, d = (int(x) for x in lines[i].split())
    except ValueError as exc:
        raise ModelFormatError(f"{path}:{i + 1}: bad '|V| d' header: {lines[i]!r}") from exc
    if int(meta.get("dim", d)) != d:
        raise ModelFormatError(f"{path}: dimension mismatch: header {d}, metadata {meta.get('dim')}")
    i += 1
    if len(lines) < i + V:
        raise ModelFormatError(f"{path}: truncated: expected {V} vector lines")

    tokens: list[str] = []
    syn0 = np.empty((V, d))
    for row in range(V):
        token, vec = _parse_vector_line(lines[i + row], d, path, i + row + 1)
        tokens.append(token)
        syn0[row] = vec
    i += V

    counts = [0] * V
    syn1 = np.zeros((V, d))
    index = {t: j for j, t in enumerate(tokens)}
    while i < len(lines):
        section = lines[i]
        i += 1
        if section == "# counts":
            for _ in range(V):
                if i >= len(lines):
                    raise ModelFormatError(f"{path}: truncated counts section")
                token, _, c = lines[i].partition(" ")
                counts[index[token]] = int(c)
                i += 1
        elif section == "# output":
            for row in range(V):
                if i >= len(lines):
                    raise ModelFormatError(f"{path}: truncated output-matrix section")
                token, vec = _parse_vector_line(lines[i], d, path, i + 1)
                syn1[index[token]] = vec
                i += 1
        elif section.strip() == "":
            continue
        else:
            raise ModelFormatError(f"{path}: unexpected section marker {section!r}")

    params = TrainParams(
        dim=d,
        epochs=int(meta["epochs"]),
        lr0=float(meta["lr0"]),
        lr_min=float(meta["lr_min"]),
        window=int(meta["window"]),
        negatives=int(meta["negatives"]),
        subsample=float(meta["subsample"]),
        seed=int(meta["seed"]),
        mode=meta.get("mode", "deterministic"),
        threads=int(meta.get("threads", 1)),
    )
    vocab = Vocabulary(
        tokens=tuple(tokens),
        counts=tuple(counts),
        min_count=int(meta.get("min_count", 1)),
        corpus_tokens=int(meta.get("corpus_tokens", sum(counts))),
    )
    return EmbeddingModel(
        vocab=vocab, syn0=syn0, syn1=syn1, params=params,
        epoch_losses=tuple(json.loads(meta.get("epoch_losses", "[]"))),
    )
