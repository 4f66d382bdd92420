"""Acceptance suite: one test per release criterion, each printing a
pass/fail line with its runtime budget.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""

import json
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from crossmoji.analytics import UndefinedCorrelationError, pearson, spearman
from crossmoji.corpus import TokenStream, ingest_corpus, FilterConfig
from crossmoji.embedding import (
    TrainParams,
    build_vocabulary,
    cbow_gradients,
    cbow_loss,
    neighbors,
    train_run_set,
)
from crossmoji.inventory import count_frequencies, load_default_inventory, shared_set
from crossmoji.pipeline import Pipeline, load_config, read_report_json
from crossmoji.projection import SimilarityTensor, culture_average, gram_schmidt

from util import (
    ALL_EMOJI,
    E1,
    E2,
    write_two_culture_setup,
)


@contextmanager
def criterion(number, description, budget_seconds):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        elapsed = time.perf_counter() - start
        print(f"criterion {number}: FAIL ({elapsed:.1f}s) {description}")
        raise
    elapsed = time.perf_counter() - start
    assert elapsed < budget_seconds, (
        f"criterion {number} took {elapsed:.1f}s, budget {budget_seconds}s")
    print(f"criterion {number}: PASS ({elapsed:.1f}s < {budget_seconds}s) {description}")


# --- 1: correlation oracle equivalence --------------------------------------

def brute_ranks(values):
    return [sum(1 for w in values if w < v) + (sum(1 for w in values if w == v) + 1) / 2
            for v in values]


def brute_pearson(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
    vx = sum((a - mx) ** 2 for a in x)
    vy = sum((b - my) ** 2 for b in y)
    return cov / (vx ** 0.5 * vy ** 0.5)


def test_criterion_1_correlation_oracles():
    with criterion(1, "spearman/pearson match brute-force oracles on 1000 pairs", 5):
        rng = np.random.default_rng(20260808)
        checked = 0
        while checked < 1000:
            n = int(rng.integers(3, 21))
            if rng.random() < 0.5:  # with ties: small integer values
                x = list(rng.integers(0, max(2, n // 2), size=n).astype(float))
                y = list(rng.integers(0, max(2, n // 2), size=n).astype(float))
            else:
                x = list(rng.normal(size=n))
                y = list(rng.normal(size=n))
            try:
                got_s = spearman(x, y)
                got_p = pearson(x, y)
            except UndefinedCorrelationError:
                continue  # constant draw; not a valid comparison pair
            expected_s = brute_pearson(brute_ranks(x), brute_ranks(y))
            expected_p = brute_pearson(x, y)
            assert abs(got_s - expected_s) < 1e-12, (x, y)
            assert abs(got_p - expected_p) < 1e-12, (x, y)
            checked += 1


# --- 2: Gram-Schmidt ----------------------------------------------------------

def test_criterion_2_gram_schmidt():
    with criterion(2, "orthonormality 1e-10 and span residual 1e-8 on 100 random sets", 5):
        rng = np.random.default_rng(17)
        for _ in range(100):
            k = int(rng.integers(2, 21))
            vectors = rng.normal(size=(k, 100))
            q = gram_schmidt(list(vectors))
            assert np.max(np.abs(q @ q.T - np.eye(k))) <= 1e-10
            residual = vectors - (vectors @ q.T) @ q
            assert np.max(np.linalg.norm(residual, axis=1)) <= 1e-8


# --- 3: CBOW gradient check ------------------------------------------------------

def test_criterion_3_gradient_check():
    with criterion(3, "analytic CBOW gradients vs central differences, rel err < 1e-4", 5):
        rng = np.random.default_rng(99)
        eps = 1e-6
        for _ in range(10):
            n_ctx = int(rng.integers(1, 6))
            n_out = int(rng.integers(2, 8))
            d = int(rng.integers(4, 16))
            ctx = rng.normal(size=(n_ctx, d))
            out = rng.normal(size=(n_out, d))
            _, g_ctx, g_out = cbow_gradients(ctx, out)
            for mat, grad in ((ctx, g_ctx), (out, g_out)):
                fd = np.zeros_like(mat)
                flat, fd_flat = mat.reshape(-1), fd.reshape(-1)
                for i in range(flat.size):
                    orig = flat[i]
                    flat[i] = orig + eps
                    hi = cbow_loss(ctx, out)
                    flat[i] = orig - eps
                    lo = cbow_loss(ctx, out)
                    flat[i] = orig
                    fd_flat[i] = (hi - lo) / (2 * eps)
                rel = np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12)
                assert rel < 1e-4


# --- 4: planted-synonym recovery ---------------------------------------------------

def synonym_corpus(rng, n_tokens=200_000):
    """~n_tokens of 5-token sentences; 5 interchangeable token pairs, each
    with its own context topic; the rest is filler chatter."""
    pairs = [(f"syn{i}a", f"syn{i}b") for i in range(5)]
    topics = [[f"t{i}c{j}" for j in range(6)] for i in range(5)]
    filler = [f"w{i}" for i in range(150)]
    sentences = []
    tokens = 0
    while tokens < n_tokens:
        r = rng.random()
        if r < 0.4:
            i = int(rng.integers(0, 5))
            word = pairs[i][int(rng.integers(0, 2))]
            ctx = list(rng.choice(topics[i], size=4, replace=False))
            sent = ctx[:2] + [word] + ctx[2:]
        else:
            sent = list(rng.choice(filler, size=5))
        sentences.append(TokenStream(post_id=str(len(sentences)), tokens=tuple(sent)))
        tokens += 5
    return pairs, sentences


def test_criterion_4_planted_synonym_recovery():
    with criterion(4, "5 planted pairs mutually in top-3 neighbors in >= 4/5 runs", 120):
        rng = np.random.default_rng(2024)
        pairs, sentences = synonym_corpus(rng)
        vocab = build_vocabulary(sentences, min_count=5)
        params = TrainParams(dim=50, epochs=2, window=2, negatives=5,
                             subsample=0.0, seed=31, lr0=0.05)
        models = train_run_set(sentences, vocab, params, n_runs=5)
        for a, b in pairs:
            hits = 0
            for model in models:
                in_a = b in [t for t, _ in neighbors(model, a, 3)]
                in_b = a in [t for t, _ in neighbors(model, b, 3)]
                if in_a and in_b:
                    hits += 1
            assert hits >= 4, f"pair ({a},{b}) recovered in only {hits}/5 runs"


# --- 5: pipeline determinism ----------------------------------------------------------

def run_once(base: Path, tag: str) -> Path:
    workdir = base / tag
    workdir.mkdir()
    cfg = write_two_culture_setup(workdir, posts_per_pattern=15, runs=2,
                                  dim=12, epochs=2, seed=40)
    config = load_config(cfg, deterministic=True)
    Pipeline(config).run("all")
    return Path(config.out_dir)


def test_criterion_5_determinism(tmp_path):
    with criterion(5, "two deterministic pipeline runs byte-identical (models + CSVs)", 60):
        out1 = run_once(tmp_path, "run1")
        out2 = run_once(tmp_path, "run2")
        compared = 0
        for rel in sorted(p.relative_to(out1) for p in out1.rglob("*")
                          if p.suffix in (".vec", ".csv")):
            b1 = (out1 / rel).read_bytes()
            b2 = (out2 / rel).read_bytes()
            assert b1 == b2, f"{rel} differs between runs"
            compared += 1
        assert compared >= 6  # 4 model files + several CSV reports


# --- 6: end-to-end sign test -----------------------------------------------------------

def test_criterion_6_sign_test(tmp_path):
    with criterion(6, "planted cross-culture contrast recovered by the full pipeline", 120):
        cfg = write_two_culture_setup(tmp_path, posts_per_pattern=120, runs=3,
                                      dim=24, epochs=3, seed=77)
        config = load_config(cfg, deterministic=True)
        Pipeline(config).run("all")
        report = read_report_json(Path(config.out_dir) / "report" / "report.json")

        assert report.category_rho["catA"] > 0, report.category_rho
        assert report.icon is not None
        assert report.icon.scc[E1] > report.icon.scc[E2], report.icon.scc
        for culture in ("West", "East"):
            top5 = [e for e, _ in report.top5[(culture, "catA")]]
            assert E1 in top5, (culture, top5)


# --- 7: frequency pipeline exactness -----------------------------------------------------

def build_200_post_fixture():
    """Two 100-post corpora with a fixed, enumerable emoji layout."""
    inv = load_default_inventory()
    plan = {
        "A": {E1: 40, E2: 10, ALL_EMOJI[2]: 3, ALL_EMOJI[3]: 1},
        "B": {E1: 25, E2: 2, ALL_EMOJI[2]: 5},
    }
    lines = {}
    for corpus, counts in plan.items():
        occurrences = [e for e, n in sorted(counts.items()) for _ in range(n)]
        posts = []
        for i in range(100):
            # round-robin: post i carries every 100th occurrence, glued and spaced
            mine = occurrences[i::100]
            text = f"post number {i} " + "".join(mine[:2]) + " " + " ".join(mine[2:])
            posts.append(json.dumps({
                "post_id": f"{corpus}{i}", "text": text,
                "country": "US", "lang": "en"}, ensure_ascii=False))
        lines[corpus] = posts
    return inv, plan, lines


def test_criterion_7_frequency_exactness():
    with criterion(7, "hand-counted 200-post fixture: exact counts and shared sets", 30):
        inv, plan, lines = build_200_post_fixture()
        streams = {}
        for corpus, posts in lines.items():
            assert len(posts) == 100
            got, counts = ingest_corpus(posts, FilterConfig(lang="en", country="US"), inv)
            assert counts.read == 100
            streams[corpus] = got
        table = count_frequencies(streams, inv)
        for corpus, expected in plan.items():
            assert dict(table.counts[corpus]) == expected
            assert sum(table.normalized(corpus).values()) == pytest.approx(1.0, abs=1e-9)

        # manual enumeration of shared membership at each threshold
        totals = {}
        for counts in plan.values():
            for e, n in counts.items():
                totals[e] = totals.get(e, 0) + n
        everywhere = {e for e in totals if all(e in c for c in plan.values())}
        for threshold in (1, 3, 1000):
            expected = {e for e in everywhere if totals[e] >= threshold}
            got = set(shared_set(table, threshold).emoji)
            assert got == expected, (threshold, got, expected)


# --- 8: inventory size --------------------------------------------------------------------

def test_criterion_8_inventory_size():
    with criterion(8, "full first-release emoji data file loads 1281 entries", 10):
        inv = load_default_inventory()
        assert len(inv) == 1281


# --- 9: culture-averaging linearity ---------------------------------------------------------

def test_criterion_9_averaging_linearity():
    with criterion(9, "run-set tensor equals mean of single-run tensors; 0.4 exact", 10):
        rng = np.random.default_rng(55)
        axes, targets = ("a", "b"), ("x", "y", "z")
        run_a = rng.uniform(-1, 1, (1, 2, 3))
        run_b = rng.uniform(-1, 1, (1, 2, 3))

        def tensor(per_run):
            return SimilarityTensor(
                axes=axes, targets=targets, corpora=("C",),
                culture_of={"C": "West"}, per_run={"C": per_run})

        both = tensor(np.concatenate([run_a, run_b]))
        mean_of_singles = (tensor(run_a).corpus_mean("C")
                           + tensor(run_b).corpus_mean("C")) / 2.0
        assert np.max(np.abs(both.corpus_mean("C") - mean_of_singles)) < 1e-12

        # West average of per-country values (0.2, 0.4, 0.6) is exactly 0.4
        vals = [np.array([0.2]), np.array([0.4]), np.array([0.6])]
        assert culture_average(vals)[0] == 0.4

        # and the same via a three-corpus tensor
        per_run = {c: np.full((1, 1, 1), v)
                   for c, v in (("US", 0.2), ("UK", 0.4), ("CA", 0.6))}
        t = SimilarityTensor(axes=("a",), targets=("x",),
                             corpora=("US", "UK", "CA"),
                             culture_of={c: "West" for c in ("US", "UK", "CA")},
                             per_run=per_run)
        assert t.culture_mean("West")[0, 0] == 0.4
