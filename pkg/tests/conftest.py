import json

import numpy as np
import pytest

from sensevec.corpus import AnnotatedCorpus, AnnotationInstance
from sensevec.inventory import load_inventory

# Toy graph: two noun synsets under a shared hypernym, one verb synset,
# one adverb synset. Mirrors the shape of the real inventory (multiword
# lemma, polysemous lemma, multiple lexnames) at a tractable size.
TOY_SYNSETS = [
    {
        "id": "00000001n",
        "pos": "n",
        "lexname": "noun.animal",
        "lemmas": ["mouse"],
        "hypernyms": ["00000003n"],
        "gloss": "any of numerous small rodents",
        "senses": [{"key": "mouse%1:05:00::", "lemma": "mouse", "num": 1}],
    },
    {
        "id": "00000002n",
        "pos": "n",
        "lexname": "noun.artifact",
        "lemmas": ["mouse", "computer_mouse"],
        "hypernyms": ["00000004n"],
        "gloss": "a hand-operated electronic device",
        "senses": [
            {"key": "mouse%1:06:00::", "lemma": "mouse", "num": 4},
            {"key": "computer_mouse%1:06:00::", "lemma": "computer_mouse", "num": 1},
        ],
    },
    {
        "id": "00000003n",
        "pos": "n",
        "lexname": "noun.animal",
        "lemmas": ["rodent"],
        "hypernyms": [],
        "gloss": "relatively small gnawing animals",
        "senses": [{"key": "rodent%1:05:00::", "lemma": "rodent", "num": 1}],
    },
    {
        "id": "00000004n",
        "pos": "n",
        "lexname": "noun.artifact",
        "lemmas": ["device"],
        "hypernyms": [],
        "gloss": "an instrumentality invented for a particular purpose",
        "senses": [{"key": "device%1:06:00::", "lemma": "device", "num": 1}],
    },
    {
        "id": "00000005v",
        "pos": "v",
        "lexname": "verb.competition",
        "lemmas": ["run", "race"],
        "hypernyms": [],
        "gloss": "compete in a race",
        "senses": [
            {"key": "race%2:33:00::", "lemma": "race", "num": 1},
            {"key": "run%2:33:01::", "lemma": "run", "num": 2},
        ],
    },
    {
        "id": "00000006r",
        "pos": "r",
        "lexname": "adv.all",
        "lemmas": ["quickly"],
        "hypernyms": [],
        "gloss": "with rapid movements",
        "senses": [{"key": "quickly%4:02:00::", "lemma": "quickly", "num": 1}],
    },
]


def write_inventory_jsonl(path, synsets=TOY_SYNSETS):
    with open(path, "w", encoding="utf-8") as out:
        for record in synsets:
            out.write(json.dumps(record) + "\n")
    return path


@pytest.fixture
def toy_inventory(tmp_path):
    return load_inventory(write_inventory_jsonl(tmp_path / "inventory.jsonl"))


def make_corpus(entries, name="toy"):
    """entries: list of (tokens, [(id, lemma, pos, start, end, keys), ...])."""
    sentences = []
    instances = []
    for tokens, anns in entries:
        idx = len(sentences)
        sentences.append(list(tokens))
        for inst_id, lemma, pos, start, end, keys in anns:
            instances.append(
                AnnotationInstance(inst_id, lemma, pos, idx, start, end, frozenset(keys))
            )
    return AnnotatedCorpus(name=name, sentences=sentences, instances=instances)


@pytest.fixture
def toy_corpus():
    return make_corpus(
        [
            (
                ["the", "mouse", "ate", "cheese"],
                [("d0.s0.t0", "mouse", "n", 1, 1, {"mouse%1:05:00::"})],
            ),
            (
                ["click", "the", "mouse", "button"],
                [("d0.s1.t0", "mouse", "n", 2, 2, {"mouse%1:06:00::"})],
            ),
            (
                ["they", "race", "downhill", "quickly"],
                [
                    ("d0.s2.t0", "race", "v", 1, 1, {"race%2:33:00::"}),
                    ("d0.s2.t1", "quickly", "r", 3, 3, {"quickly%4:02:00::"}),
                ],
            ),
        ]
    )


def layered_records(vectors_by_key, layer_count=3, noise=None, seed=0):
    """Records whose every layer row equals the given pooled vector."""
    rng = np.random.default_rng(seed)
    records = {}
    for key, vector in vectors_by_key.items():
        base = np.tile(np.asarray(vector, dtype=np.float32), (layer_count, 1))
        if noise:
            base = base + rng.normal(0, noise, base.shape).astype(np.float32)
        records[key] = base
    return records
