"""Dump per-layer span, gloss-template and pair-task embeddings into the
toolkit's binary store format."""

from __future__ import annotations

import sys
from dataclasses import dataclass

from sensevec.corpus import AnnotatedCorpus
from sensevec.embedstore import GLOSS_PREFIX, LayerEmbeddingRecord, StoreHeader, write_store
from sensevec.inventory import SenseInventory

from .encoder import (
    Encoder,
    all_token_vectors,
    char_span_of_tokens,
    span_vectors,
    window_tokens,
)
@dataclass
class ExtractionJob:
    encoder: Encoder
    batch_size: int = 16
    out_path: str = ""

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")

    def header(self) -> StoreHeader:
        return StoreHeader(
            layer_count=self.encoder.layer_count,
            dim=self.encoder.dim,
            model_tag=self.encoder.tag,
        )


def _batches(items, size):
    for i in range(0, len(items), size):
        yield items[i : i + size]


def span_records(corpus: AnnotatedCorpus, job: ExtractionJob):
    """One record per annotated span: per-layer means over its subwords."""
    tasks = []  # (instance_id, text, char_start, char_end)
    for inst in corpus.instances:
        tokens = corpus.sentences[inst.sentence]
        text, char_start, char_end = char_span_of_tokens(tokens, inst.start, inst.end)
        if job.encoder.subword_count(text) > job.encoder.max_length:
            tokens, new_start, new_end = window_tokens(
                tokens, inst.start, inst.end, job.encoder
            )
            text, char_start, char_end = char_span_of_tokens(tokens, new_start, new_end)
        tasks.append((inst.instance_id, text, char_start, char_end))

    for chunk in _batches(tasks, job.batch_size):
        outputs = job.encoder.encode_batch([t[1] for t in chunk])
        for (instance_id, _, char_start, char_end), output in zip(chunk, outputs):
            matrix, _ = span_vectors(output, char_start, char_end, instance_id)
            yield LayerEmbeddingRecord(instance_id, matrix)


def extract_spans(corpus: AnnotatedCorpus, job: ExtractionJob) -> StoreHeader:
    return write_store(job.header(), span_records(corpus, job), job.out_path)


def gloss_records(inventory: SenseInventory, level: str, job: ExtractionJob):
    """One record per sense: per-layer means over all template tokens."""
    sense_ids = inventory.sense_ids(level)
    templates = []
    for sense_id in sense_ids:
        text = inventory.gloss_template(sense_id, level)
        if job.encoder.subword_count(text) > job.encoder.max_length:
            # glosses are short in practice; truncate the rare outlier
            print(f"warning: truncating template for {sense_id}", file=sys.stderr)
        templates.append((sense_id, text))
    for chunk in _batches(templates, job.batch_size):
        outputs = job.encoder.encode_batch([t[1] for t in chunk])
        for (sense_id, _), output in zip(chunk, outputs):
            yield LayerEmbeddingRecord(GLOSS_PREFIX + sense_id, all_token_vectors(output))


def extract_glosses(inventory: SenseInventory, level: str, job: ExtractionJob) -> StoreHeader:
    return write_store(job.header(), gloss_records(inventory, level, job), job.out_path)


def pair_records(instances, job: ExtractionJob):
    """Records keyed "<id>::<side><slot>" for WiC/GWCS/SCWS style pairs."""
    tasks = []
    for pair in instances:
        for side, tokens, spans in (
            ("a", pair.tokens_a, pair.spans_a),
            ("b", pair.tokens_b, pair.spans_b),
        ):
            for slot, (start, end) in enumerate(spans):
                key = pair.record_key(side, slot)
                view = tokens
                if job.encoder.subword_count(" ".join(tokens)) > job.encoder.max_length:
                    view, start, end = window_tokens(tokens, start, end, job.encoder)
                text, char_start, char_end = char_span_of_tokens(view, start, end)
                tasks.append((key, text, char_start, char_end))
    for chunk in _batches(tasks, job.batch_size):
        outputs = job.encoder.encode_batch([t[1] for t in chunk])
        for (key, _, char_start, char_end), output in zip(chunk, outputs):
            matrix, _ = span_vectors(output, char_start, char_end, key)
            yield LayerEmbeddingRecord(key, matrix)


def extract_pairs(instances, job: ExtractionJob) -> StoreHeader:
    return write_store(job.header(), pair_records(list(instances), job), job.out_path)
