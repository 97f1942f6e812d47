"""Task harnesses and metrics: WSD, USM, WiC, graded similarity in context,
contextual word similarity, paired synset similarity, plus the shared
numeric machinery (correlations, rank metrics, truncated SVD, silhouette,
PCA coordinates).

Contextual vectors for pair tasks come from store records keyed
"<instance_id>::a0", "::a1", "::b0", "::b1" (side a/b, target 0/1).
Correlation helpers return values in [-1, 1]; reports scale them by 100.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .corpus import AnnotatedCorpus
from .embedstore import pool_layers
from .errors import (
    DegenerateClustering,
    DegenerateSeries,
    DimError,
    EmptyCandidates,
    MissingRecord,
    MissingSense,
    ZeroVector,
)
from .inventory import SenseInventory
from .senseindex import SenseIndex
from .senselearn import SenseEmbeddingSet

_POS_LETTER = {"n": "N", "v": "V", "a": "A", "r": "R"}
_POS_ORDER = {"N": 0, "V": 1, "A": 2, "R": 3}


@dataclass
class EvalReport:
    task: str
    metrics: dict[str, float]
    n: int
    per_pos: dict[str, dict[str, float]] | None = None
    config_fingerprint: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {
                "task": self.task,
                "metrics": self.metrics,
                "n": self.n,
                "per_pos": self.per_pos,
                "config_fingerprint": self.config_fingerprint,
            },
            sort_keys=True,
        )


@dataclass
class ContextPairInstance:
    instance_id: str
    tokens_a: list[str]
    spans_a: list[tuple[int, int]]
    tokens_b: list[str]
    spans_b: list[tuple[int, int]]
    lemmas: list[str]
    poses: list[str]
    gold: object = None

    def __post_init__(self):
        for tokens, spans in ((self.tokens_a, self.spans_a), (self.tokens_b, self.spans_b)):
            for start, end in spans:
                if not (0 <= start <= end < len(tokens)):
                    raise ValueError(f"span out of bounds in {self.instance_id}")

    def record_key(self, side: str, slot: int) -> str:
        return f"{self.instance_id}::{side}{slot}"


def config_fingerprint(parts: dict) -> str:
    canon = json.dumps(parts, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(canon).hexdigest()[:16]


def _cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ZeroVector("contextual vector")
    return float(np.dot(u, v) / (nu * nv))


def _pooled(records, key: str, profile) -> np.ndarray:
    if key not in records:
        raise MissingRecord(key)
    return pool_layers(np.asarray(records[key]), profile)


# ---------------------------------------------------------------- metrics


def _ranks_with_ties(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based), ties share the mean of their positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def correlation(kind: str, xs, ys) -> float:
    """Pearson, Spearman (average ranks on ties) or uncentered cosine."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size < 2:
        raise DegenerateSeries(f"need two equal-length series of >= 2 values, got {xs.shape}/{ys.shape}")
    if kind == "uncentered":
        denom = np.sqrt(np.sum(xs * xs) * np.sum(ys * ys))
        if denom == 0:
            raise DegenerateSeries("zero-norm series")
        return float(np.sum(xs * ys) / denom)
    if kind == "spearman":
        xs, ys = _ranks_with_ties(xs), _ranks_with_ties(ys)
        kind = "pearson"
    if kind == "pearson":
        xc = xs - xs.mean()
        yc = ys - ys.mean()
        denom = np.sqrt(np.sum(xc * xc) * np.sum(yc * yc))
        if denom == 0:
            raise DegenerateSeries("constant series")
        return float(np.clip(np.sum(xc * yc) / denom, -1.0, 1.0))
    raise ValueError(f"unknown correlation kind: {kind}")


def harmonic_mean_correlation(a: float, b: float) -> float:
    """Harmonic mean of two correlations, floored at 0 for nonpositive parts."""
    if a <= 0 or b <= 0:
        return 0.0
    return 2 * a * b / (a + b)


def rank_metrics(gold_sets, rankings, k: int) -> dict[str, float]:
    """P@k and MRR over per-instance rankings (duplicate-free id lists)."""
    gold_sets = list(gold_sets)
    rankings = list(rankings)
    if len(gold_sets) != len(rankings):
        raise ValueError("gold/ranking count mismatch")
    hits = 0.0
    reciprocal = 0.0
    for gold, ranking in zip(gold_sets, rankings):
        if len(set(ranking)) != len(ranking):
            raise ValueError("ranking contains duplicates")
        best = None
        for position, sense in enumerate(ranking, start=1):
            if sense in gold:
                best = position
                break
        if best is not None:
            if best <= k:
                hits += 1
            reciprocal += 1.0 / best
    n = len(gold_sets)
    return {f"P@{k}": 100.0 * hits / n, "MRR": 100.0 * reciprocal / n}


def svd_reduce(
    matrix, k: int, seed: int = 42, oversample: int = 10, power_iters: int = 5
) -> np.ndarray:
    """Randomized truncated SVD projection, rows become U_k * S_k.

    Range finding with `oversample` extra columns and `power_iters`
    re-orthonormalized power iterations; deterministic for a fixed seed.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise DimError(f"expected a matrix, got shape {matrix.shape}")
    n, d = matrix.shape
    if not 1 <= k <= min(n, d):
        raise DimError(f"k={k} out of range 1..{min(n, d)}")
    r = min(k + oversample, min(n, d))
    rng = np.random.default_rng(seed)
    sketch = rng.standard_normal((d, r))
    basis, _ = np.linalg.qr(matrix @ sketch)
    for _ in range(power_iters):
        cobasis, _ = np.linalg.qr(matrix.T @ basis)
        basis, _ = np.linalg.qr(matrix @ cobasis)
    small = basis.T @ matrix
    u_small, s, _ = np.linalg.svd(small, full_matrices=False)
    return (basis @ u_small)[:, :k] * s[:k]


def pca_coords(points, k: int = 2, seed: int = 42) -> np.ndarray:
    """Mean-centered projection onto the top-k principal directions."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 2:
        raise DimError(f"need >= 2 points, got shape {points.shape}")
    centered = points - points.mean(axis=0)
    return svd_reduce(centered, k, seed=seed)


def silhouette(points, labels) -> float:
    """Mean silhouette coefficient under cosine distance.

    Singleton clusters score 0 by convention (a(i) undefined there).
    """
    points = np.asarray(points, dtype=np.float64)
    labels = list(labels)
    if points.ndim != 2 or len(labels) != points.shape[0]:
        raise DegenerateClustering("points/labels mismatch")
    groups = sorted(set(labels))
    if len(groups) < 2 or points.shape[0] < 2:
        raise DegenerateClustering("need >= 2 groups and >= 2 points")
    norms = np.linalg.norm(points, axis=1)
    if np.any(norms == 0):
        raise DegenerateClustering("zero vector has no cosine distance")
    unit = points / norms[:, None]
    distance = 1.0 - unit @ unit.T
    labels_arr = np.asarray(labels)
    masks = {group: labels_arr == group for group in groups}
    total = 0.0
    for i in range(points.shape[0]):
        own = masks[labels_arr[i]]
        own_size = int(own.sum())
        if own_size == 1:
            continue  # s(i) = 0
        a = distance[i, own].sum() / (own_size - 1)
        b = min(
            distance[i, masks[other]].mean()
            for other in groups
            if other != labels_arr[i]
        )
        denom = max(a, b)
        if denom > 0:
            total += (b - a) / denom
    return total / points.shape[0]


# ---------------------------------------------------------------- WSD / MFS


def _score_wsd(predictions, task: str, fingerprint: str) -> EvalReport:
    per_pos_counts: dict[str, list[int]] = {}
    correct = 0
    n = 0
    for inst, pred in predictions:
        n += 1
        hit = pred in inst.gold_keys
        correct += hit
        letter = _POS_LETTER.get(inst.pos, inst.pos)
        bucket = per_pos_counts.setdefault(letter, [0, 0])
        bucket[0] += hit
        bucket[1] += 1
    f1 = 100.0 * correct / n if n else 0.0
    per_pos = {
        letter: {"F1": 100.0 * hit / total}
        for letter, (hit, total) in sorted(per_pos_counts.items())
    }
    return EvalReport(task, {"F1": f1}, n, per_pos, fingerprint)


def eval_wsd(
    corpus: AnnotatedCorpus,
    records,
    index: SenseIndex,
    inventory: SenseInventory,
    profile,
) -> EvalReport:
    """Micro F1 of 1NN disambiguation; correct when the prediction is gold."""
    predictions = []
    for inst in corpus.instances:
        if not inst.gold_keys:
            continue
        ctx = _pooled(records, inst.instance_id, profile)
        candidates = inventory.candidates(inst.lemma, inst.pos)
        if not candidates:
            raise EmptyCandidates(f"no candidates for {inst.instance_id}")
        pred, _ = index.disambiguate(ctx, candidates)
        predictions.append((inst, pred))
    fingerprint = config_fingerprint({"task": "wsd", "profile": getattr(profile, "mode", "")})
    return _score_wsd(predictions, "wsd", fingerprint)


def mfs_predictions(train: AnnotatedCorpus, test: AnnotatedCorpus, inventory: SenseInventory):
    """Most-frequent-sense prediction per instance.

    Highest training-annotation frequency among the instance's candidates;
    ties and unseen lemmas fall back to the lowest sense number.
    """
    freq: dict[str, int] = {}
    for inst in train.instances:
        for key in inst.gold_keys:
            freq[key] = freq.get(key, 0) + 1
    for inst in test.instances:
        if not inst.gold_keys:
            continue
        candidates = inventory.candidates(inst.lemma, inst.pos)
        if not candidates:
            raise EmptyCandidates(f"no candidates for {inst.instance_id}")
        best, best_count = candidates[0], freq.get(candidates[0], 0)
        for key in candidates[1:]:
            count = freq.get(key, 0)
            if count > best_count:
                best, best_count = key, count
        yield inst, best


def mfs_baseline(train: AnnotatedCorpus, test: AnnotatedCorpus, inventory: SenseInventory) -> EvalReport:
    fingerprint = config_fingerprint({"task": "wsd-mfs", "train": train.name, "test": test.name})
    return _score_wsd(list(mfs_predictions(train, test, inventory)), "wsd-mfs", fingerprint)


# ---------------------------------------------------------------- USM


def eval_usm(
    corpus: AnnotatedCorpus,
    records,
    index: SenseIndex,
    profile,
    inventory: SenseInventory,
    level: str = "sensekey",
    k: int = 5,
) -> EvalReport:
    """Unrestricted matching over the full index: F1 (top-1), P@k, MRR.

    Gold ids absent from the index contribute 0 to every metric (possible
    after sensekey-to-synset conversion of incomplete sets).
    """
    hits1 = hitsk = reciprocal = 0.0
    n = 0
    per_pos_acc: dict[str, list[float]] = {}
    for inst in corpus.instances:
        if not inst.gold_keys:
            continue
        if level == "synset":
            golds = {inventory.synset_of(key) for key in inst.gold_keys}
        else:
            golds = set(inst.gold_keys)
        ctx = _pooled(records, inst.instance_id, profile)
        present = [g for g in sorted(golds) if g in index]
        best = min((index.rank_of(ctx, g) for g in present), default=None)
        n += 1
        letter = _POS_LETTER.get(inst.pos, inst.pos)
        bucket = per_pos_acc.setdefault(letter, [0.0, 0.0, 0.0, 0.0])
        bucket[3] += 1
        if best is not None:
            hits1 += best == 1
            hitsk += best <= k
            reciprocal += 1.0 / best
            bucket[0] += best == 1
            bucket[1] += best <= k
            bucket[2] += 1.0 / best
    if n == 0:
        raise ValueError("corpus has no gold-annotated instances")
    metrics = {
        "F1": 100.0 * hits1 / n,
        f"P@{k}": 100.0 * hitsk / n,
        "MRR": 100.0 * reciprocal / n,
    }
    per_pos = {
        letter: {
            "F1": 100.0 * h1 / total,
            f"P@{k}": 100.0 * hk / total,
            "MRR": 100.0 * rec / total,
        }
        for letter, (h1, hk, rec, total) in sorted(per_pos_acc.items())
    }
    fingerprint = config_fingerprint({"task": "usm", "level": level, "k": k})
    return EvalReport("usm", metrics, n, per_pos, fingerprint)


# ---------------------------------------------------------------- pair tasks


def _disambiguate_slot(
    pair: ContextPairInstance, side: str, slot: int, records, index, inventory, profile
):
    ctx = _pooled(records, pair.record_key(side, slot), profile)
    candidates = inventory.candidates(pair.lemmas[slot], pair.poses[slot])
    if not candidates:
        raise EmptyCandidates(
            f"no candidates for {pair.lemmas[slot]}/{pair.poses[slot]} in {pair.instance_id}"
        )
    pred, _ = index.disambiguate(ctx, candidates)
    return pred, ctx


def wic_predict(
    pair: ContextPairInstance, records, index: SenseIndex, inventory: SenseInventory, profile
) -> bool:
    """True iff both contexts disambiguate the target to the same sense."""
    pred_a, _ = _disambiguate_slot(pair, "a", 0, records, index, inventory, profile)
    pred_b, _ = _disambiguate_slot(pair, "b", 0, records, index, inventory, profile)
    return pred_a == pred_b


def eval_wic(instances, records, index, inventory, profile) -> EvalReport:
    correct = 0
    for pair in instances:
        if wic_predict(pair, records, index, inventory, profile) == bool(pair.gold):
            correct += 1
    n = len(instances)
    fingerprint = config_fingerprint({"task": "wic", "n": n})
    return EvalReport("wic", {"ACC": 100.0 * correct / n}, n, None, fingerprint)


def pair_similarity(
    pair: ContextPairInstance, side: str, records, index: SenseIndex,
    inventory: SenseInventory, profile,
) -> float:
    """Mean of predicted-sense cosine and contextual cosine for one context."""
    pred0, ctx0 = _disambiguate_slot(pair, side, 0, records, index, inventory, profile)
    pred1, ctx1 = _disambiguate_slot(pair, side, 1, records, index, inventory, profile)
    return 0.5 * (index.similarity(pred0, pred1) + _cosine(ctx0, ctx1))


def eval_gwcs(
    instances, records, index, inventory, profile, subtask2_mode: str = "flattened"
) -> EvalReport:
    """Graded similarity in context: change scores and per-context ratings.

    Sub-task 1 scores each instance as sim(B) - sim(A) and reports the
    uncentered Pearson against gold changes. Sub-task 2 correlates the
    per-context similarity series against gold ratings: either over the
    concatenated A+B series (default) or averaged per context.
    """
    sims_a, sims_b, gold_a, gold_b = [], [], [], []
    for pair in instances:
        sims_a.append(pair_similarity(pair, "a", records, index, inventory, profile))
        sims_b.append(pair_similarity(pair, "b", records, index, inventory, profile))
        ga, gb = pair.gold
        gold_a.append(float(ga))
        gold_b.append(float(gb))
    changes = [sb - sa for sa, sb in zip(sims_a, sims_b)]
    gold_changes = [gb - ga for ga, gb in zip(gold_a, gold_b)]
    sub1 = 100.0 * correlation("uncentered", changes, gold_changes)
    if subtask2_mode == "flattened":
        flat_sys = sims_a + sims_b
        flat_gold = gold_a + gold_b
        sub2 = 100.0 * harmonic_mean_correlation(
            correlation("spearman", flat_sys, flat_gold),
            correlation("pearson", flat_sys, flat_gold),
        )
    elif subtask2_mode == "per_context":
        parts = []
        for sys_series, gold_series in ((sims_a, gold_a), (sims_b, gold_b)):
            parts.append(
                harmonic_mean_correlation(
                    correlation("spearman", sys_series, gold_series),
                    correlation("pearson", sys_series, gold_series),
                )
            )
        sub2 = 100.0 * float(np.mean(parts))
    else:
        raise ValueError(f"unknown subtask2_mode: {subtask2_mode}")
    fingerprint = config_fingerprint({"task": "gwcs", "subtask2_mode": subtask2_mode})
    return EvalReport(
        "gwcs", {"subtask1": sub1, "subtask2": sub2}, len(list(instances)), None, fingerprint
    )


def eval_scws(instances, records, index, inventory, profile) -> EvalReport:
    """Contextual word-pair similarity scored against human ratings (Spearman).

    Each pair has one sentence per word: word 0 in context a, word 1 in
    context b. Per-POS-pair breakdowns are included where defined.
    """
    scores, ratings, pos_pairs = [], [], []
    for pair in instances:
        pred0, ctx0 = _disambiguate_slot(pair, "a", 0, records, index, inventory, profile)
        pred1, ctx1 = _disambiguate_slot(pair, "b", 0, records, index, inventory, profile)
        scores.append(0.5 * (index.similarity(pred0, pred1) + _cosine(ctx0, ctx1)))
        ratings.append(float(pair.gold))
        letters = sorted(
            (_POS_LETTER.get(p, p) for p in pair.poses[:2]),
            key=lambda x: _POS_ORDER.get(x, 9),
        )
        pos_pairs.append("-".join(letters))
    rho = 100.0 * correlation("spearman", scores, ratings)
    per_pos = {}
    for pair_name in sorted(set(pos_pairs)):
        rows = [i for i, p in enumerate(pos_pairs) if p == pair_name]
        if len(rows) < 2:
            continue
        try:
            per_pos[pair_name] = {
                "rho": 100.0 * correlation(
                    "spearman", [scores[i] for i in rows], [ratings[i] for i in rows]
                )
            }
        except DegenerateSeries:
            continue
    fingerprint = config_fingerprint({"task": "scws", "n": len(scores)})
    return EvalReport("scws", {"rho": rho}, len(scores), per_pos or None, fingerprint)


# ---------------------------------------------------------------- SID


def eval_sid(
    pairs,
    embedding_set: SenseEmbeddingSet,
    reduce_to: int = 300,
    seed: int = 42,
    filters: dict | None = None,
) -> EvalReport:
    """Pearson of reduced-space synset cosines against similarity ratings.

    The full embedding matrix is reduced to `reduce_to` dims via truncated
    SVD (skipped when dim is already <= reduce_to); subset metrics come
    from caller-provided pair predicates.
    """
    pairs = list(pairs)
    ids = sorted(embedding_set.vectors)
    row_of = {sense: row for row, sense in enumerate(ids)}
    for syn_a, syn_b, _ in pairs:
        for sense in (syn_a, syn_b):
            if sense not in row_of:
                raise MissingSense(sense)
    matrix = np.asarray([embedding_set.vectors[s] for s in ids], dtype=np.float64)
    if matrix.shape[1] > reduce_to:
        # sets smaller than the target dim cannot lose anything; clamp k
        matrix = svd_reduce(matrix, min(reduce_to, *matrix.shape), seed=seed)
    norms = np.linalg.norm(matrix, axis=1)
    norms[norms == 0] = 1.0
    unit = matrix / norms[:, None]

    def pearson_over(subset) -> float:
        sims = [float(unit[row_of[a]] @ unit[row_of[b]]) for a, b, _ in subset]
        ratings = [float(r) for _, _, r in subset]
        return 100.0 * correlation("pearson", sims, ratings)

    metrics = {"All": pearson_over(pairs)}
    for name, predicate in (filters or {}).items():
        subset = [p for p in pairs if predicate(p)]
        if len(subset) < 2:
            continue
        try:
            metrics[name] = pearson_over(subset)
        except DegenerateSeries:
            continue
    fingerprint = config_fingerprint({"task": "sid", "reduce_to": reduce_to, "seed": seed})
    return EvalReport("sid", metrics, len(pairs), None, fingerprint)


def polarized_filter(low: float = 1.0, high: float = 3.0):
    """Pairs with ratings at or beyond the polarized thresholds."""
    return lambda pair: pair[2] <= low or pair[2] >= high


def observed_filter(seen_synsets: set):
    """Pairs whose both synsets were annotated in training data."""
    return lambda pair: pair[0] in seen_synsets and pair[1] in seen_synsets


# ---------------------------------------------------------------- readers


def _parse_span(text: str) -> tuple[int, int]:
    if "-" in text:
        start, end = text.split("-", 1)
        return int(start), int(end)
    value = int(text)
    return value, value


def read_wic_tsv(data_path, gold_path=None) -> list[ContextPairInstance]:
    """Official-format WiC data: lemma, POS, idxA-idxB, sentence1, sentence2."""
    gold = []
    if gold_path is not None:
        with open(gold_path, encoding="utf-8") as stream:
            gold = [line.strip() == "T" for line in stream if line.strip()]
    instances = []
    pos_map = {"N": "n", "V": "v", "A": "a", "R": "r"}
    with open(data_path, encoding="utf-8") as stream:
        for i, line in enumerate(stream):
            line = line.rstrip("\n")
            if not line:
                continue
            lemma, pos, span_pair, sent1, sent2 = line.split("\t")
            idx_a, idx_b = span_pair.split("-")
            instances.append(
                ContextPairInstance(
                    instance_id=f"wic.{i:05d}",
                    tokens_a=sent1.split(" "),
                    spans_a=[(int(idx_a), int(idx_a))],
                    tokens_b=sent2.split(" "),
                    spans_b=[(int(idx_b), int(idx_b))],
                    lemmas=[lemma],
                    poses=[pos_map.get(pos, pos.lower())],
                    gold=gold[i] if i < len(gold) else None,
                )
            )
    return instances


def read_gwcs_csv(path) -> list[ContextPairInstance]:
    """Toolkit CSV for graded in-context pairs (two targets, two contexts)."""
    instances = []
    with open(path, encoding="utf-8", newline="") as stream:
        for row in csv.DictReader(stream):
            instances.append(
                ContextPairInstance(
                    instance_id=row["id"],
                    tokens_a=row["tokens_a"].split(" "),
                    spans_a=[_parse_span(row["span1_a"]), _parse_span(row["span2_a"])],
                    tokens_b=row["tokens_b"].split(" "),
                    spans_b=[_parse_span(row["span1_b"]), _parse_span(row["span2_b"])],
                    lemmas=[row["lemma1"], row["lemma2"]],
                    poses=[row["pos1"], row["pos2"]],
                    gold=(float(row["sim_a"]), float(row["sim_b"])),
                )
            )
    return instances


def read_scws_csv(path) -> list[ContextPairInstance]:
    """Toolkit CSV for contextual word similarity (one sentence per word)."""
    instances = []
    with open(path, encoding="utf-8", newline="") as stream:
        for row in csv.DictReader(stream):
            instances.append(
                ContextPairInstance(
                    instance_id=row["id"],
                    tokens_a=row["tokens_a"].split(" "),
                    spans_a=[_parse_span(row["span_a"])],
                    tokens_b=row["tokens_b"].split(" "),
                    spans_b=[_parse_span(row["span_b"])],
                    lemmas=[row["lemma1"], row["lemma2"]],
                    poses=[row["pos1"], row["pos2"]],
                    gold=float(row["rating"]),
                )
            )
    return instances


def read_sid_tsv(path) -> list[tuple[str, str, float]]:
    """Synset pair ratings: "synset1<TAB>synset2<TAB>rating" per line."""
    pairs = []
    with open(path, encoding="utf-8") as stream:
        for line in stream:
            line = line.strip()
            if not line:
                continue
            syn_a, syn_b, rating = line.split("\t")
            pairs.append((syn_a, syn_b, float(rating)))
    return pairs
