"""Layer probing and sense profiles: per-layer probing scores, temperature
softmax weighting, and conventional fixed poolings used as baselines."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .corpus import AnnotatedCorpus
from .errors import (
    MissingRecord,
    NonPositiveTemperature,
    TooFewLayers,
    UnrepresentedGoldSense,
)
from .inventory import SenseInventory

MODE_WSD = "wsd"
MODE_USM = "usm"

# Defaults calibrated for probing scores expressed as F1 percentages.
RECOMMENDED_T = {MODE_WSD: 0.005, MODE_USM: 0.1}
TEMPERATURE_SWEEP = (0.002, 0.005, 0.01, 0.1, 1.0)

FIXED_LAST = "last"
FIXED_SECOND_TO_LAST = "second_to_last"
FIXED_SUM_LST4 = "sum_lst4"
FIXED_WS_INT_LST4 = "ws_int_lst4"
FIXED_WS_FRAC_LST4 = "ws_frac_lst4"
FIXED_KINDS = (
    FIXED_LAST,
    FIXED_SECOND_TO_LAST,
    FIXED_SUM_LST4,
    FIXED_WS_INT_LST4,
    FIXED_WS_FRAC_LST4,
)


@dataclass(frozen=True)
class LayerScores:
    model_tag: str
    mode: str
    scores: np.ndarray  # F1 in [0, 100], index 0 = INIT

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        object.__setattr__(self, "scores", scores)
        if scores.ndim != 1 or scores.size < 2:
            raise ValueError("scores must be a vector over at least two layers")
        if np.any(scores < 0) or np.any(scores > 100):
            raise ValueError("scores must lie in [0, 100]")


@dataclass(frozen=True)
class SenseProfile:
    model_tag: str
    mode: str
    temperature: float | None
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", weights)
        if self.temperature is not None and not self.temperature > 0:
            raise NonPositiveTemperature(f"t={self.temperature}")
        if np.any(weights < 0):
            raise ValueError("profile weights must be non-negative")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError(f"profile weights sum to {weights.sum()}, expected 1")

    @property
    def layer_count(self) -> int:
        return self.weights.shape[0]

    def to_json(self) -> str:
        return json.dumps(
            {
                "model": self.model_tag,
                "mode": self.mode,
                "t": self.temperature,
                "weights": self.weights.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SenseProfile":
        data = json.loads(text)
        return cls(data["model"], data["mode"], data["t"], np.asarray(data["weights"]))


def softmax_weights(scores: LayerScores, t: float) -> SenseProfile:
    """Temperature softmax over probing scores.

    Subtracting the max score before exponentiation avoids overflow at the
    small temperatures used in practice and leaves the weights unchanged.
    """
    if not t > 0:
        raise NonPositiveTemperature(f"t={t}")
    shifted = (scores.scores - scores.scores.max()) / t
    exps = np.exp(shifted)
    return SenseProfile(scores.model_tag, scores.mode, t, exps / exps.sum())


def fixed_profile(kind: str, layer_count: int, model_tag: str = "") -> SenseProfile:
    """Conventional fixed poolings, normalized to sum 1 (cosine is scale-free)."""
    kind = kind.lower()
    if kind not in FIXED_KINDS:
        raise ValueError(f"unknown fixed profile kind: {kind}")
    weights = np.zeros(layer_count, dtype=np.float64)
    if kind == FIXED_LAST:
        weights[-1] = 1.0
    elif kind == FIXED_SECOND_TO_LAST:
        if layer_count < 2:
            raise TooFewLayers(f"{kind} needs >= 2 layers")
        weights[-2] = 1.0
    else:
        if layer_count < 5:
            raise TooFewLayers(f"{kind} needs >= 5 layers (INIT + last 4)")
        if kind == FIXED_SUM_LST4:
            weights[-4:] = 1.0
        elif kind == FIXED_WS_INT_LST4:
            weights[-1], weights[-2], weights[-3], weights[-4] = 1.0, 2.0, 3.0, 4.0
        elif kind == FIXED_WS_FRAC_LST4:
            weights[-1], weights[-2], weights[-3], weights[-4] = 1 / 4, 1 / 3, 1 / 2, 1.0
        weights /= weights.sum()
    return SenseProfile(model_tag, kind, None, weights)


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return matrix / norms


def _layer_centroids(corpus, records, layer_count, dim):
    """Per-sensekey mean of (layer_count, dim) matrices over annotations."""
    sums: dict[str, np.ndarray] = {}
    counts: dict[str, int] = {}
    for inst in corpus.instances:
        if not inst.gold_keys:
            continue
        if inst.instance_id not in records:
            raise MissingRecord(inst.instance_id)
        matrix = np.asarray(records[inst.instance_id], dtype=np.float64)
        for key in inst.gold_keys:
            if key in sums:
                sums[key] += matrix
                counts[key] += 1
            else:
                sums[key] = matrix.copy()
                counts[key] = 1
    keys = sorted(sums)
    centroids = np.empty((len(keys), layer_count, dim), dtype=np.float64)
    for row, key in enumerate(keys):
        centroids[row] = sums[key] / counts[key]
    return keys, centroids


def probe_layers(
    train_corpus: AnnotatedCorpus,
    train_records,
    val_corpus: AnnotatedCorpus,
    val_records,
    inventory: SenseInventory,
    mode: str,
    model_tag: str = "",
    workers: int = 0,
) -> LayerScores:
    """Per-layer 1NN F1 using centroids from a single layer at a time.

    Train centroids are learned per sensekey from `train_records` alone (no
    propagation, no glosses). Validation instances must have every gold
    sense represented in training annotations.
    """
    if mode not in (MODE_WSD, MODE_USM):
        raise ValueError(f"unknown probing mode: {mode}")

    train_senses = train_corpus.gold_sensekeys()
    for inst in val_corpus.instances:
        if inst.gold_keys and not inst.gold_keys <= train_senses:
            raise UnrepresentedGoldSense(inst.instance_id)

    scored = [inst for inst in val_corpus.instances if inst.gold_keys]
    if not scored:
        raise ValueError("validation corpus has no gold-annotated instances")
    first = next(iter(train_records.values()))
    layer_count, dim = np.asarray(first).shape

    keys, centroids = _layer_centroids(train_corpus, train_records, layer_count, dim)
    key_row = {key: row for row, key in enumerate(keys)}

    val_matrix = np.empty((len(scored), layer_count, dim), dtype=np.float64)
    for row, inst in enumerate(scored):
        if inst.instance_id not in val_records:
            raise MissingRecord(inst.instance_id)
        val_matrix[row] = np.asarray(val_records[inst.instance_id], dtype=np.float64)

    # candidate rows per instance, restricted to represented senses
    candidate_rows = []
    if mode == MODE_WSD:
        for inst in scored:
            rows = [key_row[k] for k in inventory.candidates(inst.lemma, inst.pos) if k in key_row]
            candidate_rows.append(rows)

    def score_layer(layer: int) -> float:
        sense_m = _normalize_rows(centroids[:, layer, :])
        query_m = _normalize_rows(val_matrix[:, layer, :])
        sims = query_m @ sense_m.T
        correct = 0
        for row, inst in enumerate(scored):
            if mode == MODE_WSD:
                rows = candidate_rows[row]
                if not rows:
                    continue
                pred = keys[rows[int(np.argmax(sims[row, rows]))]]
            else:
                pred = keys[int(np.argmax(sims[row]))]
            if pred in inst.gold_keys:
                correct += 1
        return 100.0 * correct / len(scored)

    scores = np.zeros(layer_count, dtype=np.float64)
    if workers and workers > 1:
        # layers are independent; results merge deterministically by index
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            for layer, value in enumerate(pool.map(score_layer, range(layer_count))):
                scores[layer] = value
    else:
        for layer in range(layer_count):
            scores[layer] = score_layer(layer)
    return LayerScores(model_tag, mode, scores)


def write_heatmap_csv(all_scores: list[LayerScores], path) -> None:
    """Rows = model/mode pairs, columns = INIT then reverse layer indices."""
    width = max(s.scores.size for s in all_scores)
    header = ["model", "mode", "INIT"] + [str(-i) for i in range(width - 1, 0, -1)]
    with open(path, "w", newline="", encoding="utf-8") as out:
        writer = csv.writer(out)
        writer.writerow(header)
        for scores in all_scores:
            pad = [""] * (width - scores.scores.size)
            writer.writerow(
                [scores.model_tag, scores.mode, f"{scores.scores[0]:.4f}"]
                + pad
                + [f"{v:.4f}" for v in scores.scores[1:]]
            )
