"""Frozen-checkpoint wrapper producing per-layer hidden states with
character offsets for span alignment.

Alignment is driven exclusively by the fast tokenizer's offset mapping;
byte-level BPE tokenizers fold the leading space into the first subword,
which the span reconstruction check strips before comparing surfaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .errors import SequenceTooLong, SpanAlignmentFailure


@dataclass
class Encoder:
    tokenizer: object
    model: object
    tag: str
    max_length: int = 512

    def __post_init__(self):
        self.model.eval()
        config = self.model.config
        self.layer_count = config.num_hidden_layers + 1  # +1 for INIT row
        self.dim = config.hidden_size
        model_max = getattr(config, "max_position_embeddings", None)
        if model_max:
            self.max_length = min(self.max_length, int(model_max))

    @classmethod
    def from_pretrained(cls, model_id: str, max_length: int = 512) -> "Encoder":
        from transformers import AutoModel, AutoTokenizer

        tokenizer = AutoTokenizer.from_pretrained(model_id, use_fast=True)
        model = AutoModel.from_pretrained(model_id)
        return cls(tokenizer, model, tag=model_id, max_length=max_length)

    @torch.no_grad()
    def encode_batch(self, texts: list[str]):
        """Per text: (offsets, special_mask, hidden (layer_count, T, dim))."""
        enc = self.tokenizer(
            texts,
            return_offsets_mapping=True,
            return_special_tokens_mask=True,
            return_tensors="pt",
            padding=True,
            truncation=True,
            max_length=self.max_length,
        )
        offsets = enc.pop("offset_mapping").numpy()
        special = enc.pop("special_tokens_mask").numpy().astype(bool)
        lengths = enc["attention_mask"].sum(dim=1).tolist()
        output = self.model(**enc, output_hidden_states=True)
        # (layer_count, batch, T, dim)
        hidden = torch.stack(output.hidden_states).to(torch.float32).numpy()
        results = []
        for i, n_tokens in enumerate(lengths):
            n = int(n_tokens)
            results.append((offsets[i, :n], special[i, :n], hidden[:, i, :n, :]))
        return results

    def subword_count(self, text: str) -> int:
        return len(self.tokenizer(text, truncation=False)["input_ids"])


def char_span_of_tokens(tokens: list[str], start: int, end: int) -> tuple[str, int, int]:
    """Joined sentence text plus the char range of tokens[start..end]."""
    text = " ".join(tokens)
    char_start = sum(len(t) + 1 for t in tokens[:start])
    char_end = char_start + len(" ".join(tokens[start : end + 1]))
    return text, char_start, char_end


def align_subwords(offsets, special_mask, char_start: int, char_end: int) -> list[int]:
    """Indices of non-special subwords overlapping [char_start, char_end)."""
    picked = []
    for idx, ((sub_start, sub_end), is_special) in enumerate(zip(offsets, special_mask)):
        if is_special or sub_end <= sub_start:
            continue
        if sub_start < char_end and sub_end > char_start:
            picked.append(idx)
    return picked


def window_tokens(
    tokens: list[str], start: int, end: int, encoder: Encoder
) -> tuple[list[str], int, int]:
    """Shrink a too-long sentence around the target span until it fits.

    Stride: the side with more context words loses one word per step, so
    the target stays centered as the window tightens.
    """
    left, right = 0, len(tokens)
    while True:
        text = " ".join(tokens[left:right])
        if encoder.subword_count(text) <= encoder.max_length:
            return tokens[left:right], start - left, end - left
        if left == start and right == end + 1:
            raise SequenceTooLong(
                f"target span alone exceeds max_length={encoder.max_length}"
            )
        if (start - left) >= (right - 1 - end) and left < start:
            left += 1
        elif right > end + 1:
            right -= 1
        else:
            left += 1


def span_vectors(
    encoder_output, char_start: int, char_end: int, instance_id: str
) -> tuple[np.ndarray, list[int]]:
    """Per-layer mean over the span's subwords: (layer_count, dim) float32."""
    offsets, special, hidden = encoder_output
    picked = align_subwords(offsets, special, char_start, char_end)
    if not picked:
        raise SpanAlignmentFailure(instance_id, f"no subwords in [{char_start},{char_end})")
    matrix = hidden[:, picked, :].astype(np.float64).mean(axis=1)
    return matrix.astype(np.float32), picked


def all_token_vectors(encoder_output) -> np.ndarray:
    """Per-layer mean over every content subword (gloss-template pooling)."""
    offsets, special, hidden = encoder_output
    picked = [i for i, s in enumerate(special) if not s]
    if not picked:
        raise SpanAlignmentFailure("<template>", "only special tokens present")
    return hidden[:, picked, :].astype(np.float64).mean(axis=1).astype(np.float32)
