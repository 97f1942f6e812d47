import numpy as np
import pytest
import torch
from tokenizers import Tokenizer, decoders, models, pre_tokenizers, trainers
from transformers import (
    BertConfig,
    BertModel,
    BertTokenizerFast,
    GPT2Config,
    GPT2Model,
    PreTrainedTokenizerFast,
)

from sensevec.corpus import AnnotatedCorpus, AnnotationInstance
from sensevec_extractor.encoder import Encoder

WORDS = [
    "the", "mouse", "ate", "cheese", "click", "button", "they", "race",
    "run", "downhill", "quickly", "fast", "wild", "small", "device",
    "genome", "wheel", "running", "window", "keyboard",
]


def fixture_corpus(n_sentences=100, seed=3) -> AnnotatedCorpus:
    """Deterministic sentences with 1-2 token annotation spans each."""
    rng = np.random.default_rng(seed)
    sentences, instances = [], []
    for s in range(n_sentences):
        length = int(rng.integers(5, 12))
        tokens = [WORDS[int(i)] for i in rng.integers(0, len(WORDS), length)]
        idx = len(sentences)
        sentences.append(tokens)
        n_spans = int(rng.integers(1, 3))
        used = set()
        for j in range(n_spans):
            width = int(rng.integers(1, 3))
            start = int(rng.integers(0, length - width + 1))
            span = (start, start + width - 1)
            if any(a <= span[1] and span[0] <= b for a, b in used):
                continue
            used.add(span)
            instances.append(
                AnnotationInstance(
                    f"fx.s{s:03d}.t{j}", tokens[start], "n", idx, span[0], span[1]
                )
            )
    return AnnotatedCorpus(name="fixture", sentences=sentences, instances=instances)


@pytest.fixture(scope="session")
def wordpiece_encoder(tmp_path_factory):
    """Tiny WordPiece-style checkpoint built locally (no hub access)."""
    pieces = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    pieces += sorted(set(WORDS) - {"genome", "downhill", "running"})  # force splits
    for word in ("genome", "downhill", "running"):
        pieces += [word[:3], f"##{word[3:]}"]
    for ch in "abcdefghijklmnopqrstuvwxyz":
        pieces += [ch, f"##{ch}"]
    vocab_file = tmp_path_factory.mktemp("wp") / "vocab.txt"
    vocab_file.write_text("\n".join(dict.fromkeys(pieces)))
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file), do_lower_case=False)
    torch.manual_seed(7)
    model = BertModel(
        BertConfig(
            vocab_size=tokenizer.vocab_size,
            hidden_size=32,
            num_hidden_layers=3,
            num_attention_heads=2,
            intermediate_size=64,
            max_position_embeddings=128,
        )
    )
    return Encoder(tokenizer, model, tag="tiny-wordpiece", max_length=64)


@pytest.fixture(scope="session")
def bytebpe_encoder():
    """Tiny byte-level-BPE-style checkpoint trained on the fixture text."""
    raw = Tokenizer(models.BPE(unk_token=None))
    raw.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    raw.decoder = decoders.ByteLevel()
    trainer = trainers.BpeTrainer(vocab_size=300, min_frequency=1, special_tokens=["<pad>"])
    corpus = fixture_corpus()
    raw.train_from_iterator([" ".join(s) for s in corpus.sentences], trainer)
    tokenizer = PreTrainedTokenizerFast(tokenizer_object=raw, pad_token="<pad>")
    torch.manual_seed(9)
    model = GPT2Model(
        GPT2Config(
            vocab_size=tokenizer.vocab_size,
            n_embd=32,
            n_layer=3,
            n_head=2,
            n_positions=128,
            bos_token_id=None,
            eos_token_id=None,
        )
    )
    return Encoder(tokenizer, model, tag="tiny-bytebpe", max_length=64)
