"""Exact cosine nearest-neighbor search over a sense embedding set.

Rows are stored unit-normalized in float32 for memory and a fast matrix-
vector product; final scores and orderings are always computed in float64
over the stored rows, using a float32 prefilter with a rounding-error band
wide enough that the refined result equals a full float64 scan. Ties are
broken by candidate order (disambiguation) or ascending sense id (top-k).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCandidates, UnknownSense, ZeroVector
from .senselearn import SenseEmbeddingSet


def _band(dim: int) -> float:
    # conservative bound on |float32 dot - float64 dot| for unit vectors,
    # doubled so prefilter misses are impossible
    return 5e-7 * dim + 1e-5


@dataclass
class SenseIndex:
    ids: list[str]
    matrix: np.ndarray  # (n, dim) float32, unit rows
    level: str
    norms_ok: bool = False
    _row_of: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self._row_of:
            self._row_of = {sense: row for row, sense in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __contains__(self, sense_id: str) -> bool:
        return sense_id in self._row_of

    def _query(self, ctx) -> tuple[np.ndarray, np.ndarray]:
        query = np.asarray(ctx, dtype=np.float64)
        if query.shape != (self.dim,):
            raise ValueError(f"query has shape {query.shape}, index dim is {self.dim}")
        norm = np.linalg.norm(query)
        if norm == 0:
            raise ZeroVector("query")
        query = query / norm
        return query, query.astype(np.float32)

    def _exact_scores(self, rows, query64: np.ndarray) -> np.ndarray:
        # row-wise dot keeps summation semantics identical to a plain
        # per-vector float64 scan (gemv reorders sums by a ulp or two)
        return np.asarray(
            [np.dot(self.matrix[r].astype(np.float64), query64) for r in rows]
        )

    def disambiguate(self, ctx, candidates) -> tuple[str, float]:
        """Highest-cosine candidate; ties keep the earliest candidate."""
        candidates = list(candidates)
        if not candidates:
            raise EmptyCandidates("no candidate senses")
        rows = []
        for sense in candidates:
            row = self._row_of.get(sense)
            if row is None:
                raise UnknownSense(sense)
            rows.append(row)
        query64, _ = self._query(ctx)
        scores = self._exact_scores(rows, query64)
        best = int(np.argmax(scores))
        return candidates[best], float(scores[best])

    def _refine_topk(self, fast: np.ndarray, query64: np.ndarray, k: int):
        n = fast.shape[0]
        if k == 1:
            kth = fast.max()
        elif k < n:
            kth = np.partition(fast, n - k)[n - k]
        else:
            kth = fast.min()
        rows = np.flatnonzero(fast >= kth - _band(self.dim))
        exact = self._exact_scores(rows, query64)
        ranked = sorted(
            zip(exact.tolist(), (self.ids[r] for r in rows)), key=lambda t: (-t[0], t[1])
        )
        return [(sense, score) for score, sense in ranked[:k]]

    def match_topk(self, ctx, k: int) -> list[tuple[str, float]]:
        """Top-k senses by cosine, descending; exact, ties by ascending id."""
        n = len(self.ids)
        if not 1 <= k <= n:
            raise ValueError(f"k={k} out of range 1..{n}")
        query64, query32 = self._query(ctx)
        return self._refine_topk(self.matrix @ query32, query64, k)

    def match_topk_batch(self, ctxs, k: int, block_rows: int = 16384):
        """match_topk for many queries in one pass over the row blocks.

        One blocked GEMM amortizes the full matrix sweep across the batch;
        each query is then refined exactly like the single-query path.
        """
        n = len(self.ids)
        if not 1 <= k <= n:
            raise ValueError(f"k={k} out of range 1..{n}")
        queries = [self._query(ctx) for ctx in ctxs]
        if not queries:
            return []
        query_block = np.stack([q32 for _, q32 in queries], axis=1)
        fast = np.empty((n, query_block.shape[1]), dtype=np.float32)
        for start in range(0, n, block_rows):
            stop = min(start + block_rows, n)
            np.matmul(self.matrix[start:stop], query_block, out=fast[start:stop])
        return [
            self._refine_topk(fast[:, col], query64, k)
            for col, (query64, _) in enumerate(queries)
        ]

    def rank_of(self, ctx, sense_id: str) -> int:
        """1-based rank of `sense_id` in the full match ordering."""
        row = self._row_of.get(sense_id)
        if row is None:
            raise UnknownSense(sense_id)
        query64, query32 = self._query(ctx)
        fast = self.matrix @ query32
        eps = _band(self.dim)
        target = float(self._exact_scores([row], query64)[0])
        above = int(np.count_nonzero(fast > fast[row] + eps))
        uncertain = np.flatnonzero(np.abs(fast - fast[row]) <= eps)
        exact = self._exact_scores(uncertain, query64)
        for idx, score in zip(uncertain, exact.tolist()):
            if idx == row:
                continue
            if score > target or (score == target and self.ids[idx] < sense_id):
                above += 1
        return above + 1

    def similarity(self, sense_a: str, sense_b: str) -> float:
        """Cosine between two stored senses (float64 over unit rows)."""
        for sense in (sense_a, sense_b):
            if sense not in self._row_of:
                raise UnknownSense(sense)
        row_a = self.matrix[self._row_of[sense_a]].astype(np.float64)
        row_b = self.matrix[self._row_of[sense_b]].astype(np.float64)
        return float(row_a @ row_b)


def build_index(embedding_set: SenseEmbeddingSet) -> SenseIndex:
    """Normalize the set's vectors into a searchable index (sorted ids)."""
    ids = sorted(embedding_set.vectors)
    matrix = np.empty((len(ids), embedding_set.dim), dtype=np.float32)
    for row, sense in enumerate(ids):
        vector = np.asarray(embedding_set.vectors[sense], dtype=np.float64)
        norm = np.linalg.norm(vector)
        if norm == 0:
            raise ZeroVector(sense)
        matrix[row] = (vector / norm).astype(np.float32)
    index = SenseIndex(ids=ids, matrix=matrix, level=embedding_set.level)
    norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
    index.norms_ok = bool(np.all(np.abs(norms - 1.0) <= 1e-5))
    return index
