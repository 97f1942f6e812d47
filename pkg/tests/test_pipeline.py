"""End-to-end pipeline on a synthetic multi-layer store.

Sense signal lives mostly in one intermediate layer; the probe must find
it, the softmax profile must exploit it, and the resulting embeddings
must beat last-layer pooling on held-out disambiguation.
"""

import json

import numpy as np
import pytest
import yaml

from sensevec.cli import main
from sensevec.corpus import AnnotatedCorpus, AnnotationInstance, write_corpus_jsonl
from sensevec.embedstore import GLOSS_PREFIX, LayerEmbeddingRecord, StoreHeader, write_store
from sensevec.inventory import load_inventory
from sensevec.senselearn import import_set

LAYERS = 7  # INIT + 6
DIM = 16
# per-layer signal strength: layer 3 is the sweet spot, the final layer is weak
ALPHA = np.array([0.0, 0.2, 0.5, 2.0, 0.6, 0.4, 0.3])
LEXNAMES = ["noun.animal", "noun.artifact", "noun.act", "noun.state"]


def _build_world(rng, n_lemmas=40):
    """Synthetic inventory: lemmas with 1-3 senses, 4 lexnames, chain hypernyms."""
    synsets = []
    directions = {}
    for i in range(n_lemmas):
        lemma = f"word{i:02d}"
        for s in range(int(rng.integers(1, 4))):
            sid = f"{len(synsets):08d}n"
            key = f"{lemma}%1:{s:02d}:00::"
            hypers = [synsets[-1]["id"]] if synsets and rng.random() < 0.5 else []
            synsets.append(
                {
                    "id": sid,
                    "pos": "n",
                    "lexname": LEXNAMES[len(synsets) % len(LEXNAMES)],
                    "lemmas": [lemma],
                    "hypernyms": hypers,
                    "gloss": f"meaning {s} of {lemma}",
                    "senses": [{"key": key, "lemma": lemma, "num": s + 1}],
                }
            )
            vector = rng.normal(size=DIM)
            directions[key] = vector / np.linalg.norm(vector)
    return synsets, directions


def _occurrence(rng, direction, noise=1.0):
    matrix = rng.normal(0, noise, size=(LAYERS, DIM))
    matrix += ALPHA[:, None] * direction[None, :]
    return matrix.astype(np.float32)


def _corpus_and_store(rng, keys_per_split, prefix, directions, path_jsonl, path_store):
    sentences, instances, records = [], [], []
    for i, key in enumerate(keys_per_split):
        lemma = key.split("%")[0]
        inst_id = f"{prefix}.t{i:04d}"
        sentences.append([lemma])
        instances.append(AnnotationInstance(inst_id, lemma, "n", i, 0, 0, frozenset({key})))
        records.append(LayerEmbeddingRecord(inst_id, _occurrence(rng, directions[key])))
    corpus = AnnotatedCorpus(name=prefix, sentences=sentences, instances=instances)
    write_corpus_jsonl(corpus, path_jsonl)
    write_store(StoreHeader(LAYERS, DIM, model_tag="synthetic"), records, path_store)
    return corpus


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("pipeline")
    rng = np.random.default_rng(202)
    synsets, directions = _build_world(rng)
    inv_path = tmp / "inventory.jsonl"
    with open(inv_path, "w") as out:
        for record in synsets:
            out.write(json.dumps(record) + "\n")
    inventory = load_inventory(inv_path)

    all_keys = sorted(directions)
    rng.shuffle(all_keys)
    # annotate 70% of senses but make sure every lexname stays seeded
    annotated = set(all_keys[: int(0.7 * len(all_keys))])
    for lexname in LEXNAMES:
        keys = [k for k in all_keys
                if inventory.synsets[inventory.synset_of(k)].lexname == lexname]
        if not annotated & set(keys):
            annotated.add(keys[0])
    annotated = sorted(annotated)

    train_keys = [k for k in annotated for _ in range(4)]
    val_keys = [k for k in annotated for _ in range(2)]
    test_keys = [k for k in annotated for _ in range(2)]
    _corpus_and_store(rng, train_keys, "tr", directions, tmp / "train.jsonl", tmp / "train.lmse")
    _corpus_and_store(rng, val_keys, "va", directions, tmp / "val.jsonl", tmp / "val.lmse")
    _corpus_and_store(rng, test_keys, "te", directions, tmp / "test.jsonl", tmp / "test.lmse")

    gloss_records = [
        LayerEmbeddingRecord(GLOSS_PREFIX + key, _occurrence(rng, directions[key], noise=0.5))
        for key in all_keys
    ]
    write_store(StoreHeader(LAYERS, DIM, model_tag="synthetic"), gloss_records, tmp / "gloss.lmse")

    config = {
        "inventory": str(inv_path),
        "corpora": {"train": [str(tmp / "train.jsonl")], "validation": str(tmp / "val.jsonl"),
                    "test": {"synth": str(tmp / "test.jsonl")}},
        "stores": {"train": [str(tmp / "train.lmse")], "validation": str(tmp / "val.lmse"),
                   "test": {"synth": str(tmp / "test.lmse")}, "gloss": str(tmp / "gloss.lmse")},
        "profile": {"mode": "wsd", "t": 0.005},
        "output": str(tmp / "out"),
    }
    config_path = tmp / "config.yaml"
    config_path.write_text(yaml.safe_dump(config))
    return {"tmp": tmp, "config": str(config_path), "out": str(tmp / "out"),
            "inventory": inventory, "n_senses": len(all_keys)}


def test_probe_finds_informative_layer(world):
    assert main(["--config", world["config"], "probe"]) == 0
    scores = json.load(open(f"{world['out']}/layer_scores.json"))["scores"]
    assert len(scores) == LAYERS
    assert int(np.argmax(scores)) == 3
    assert scores[3] > scores[0] + 10  # INIT is noise


def test_profile_learn_full_coverage_and_eval(world):
    out = world["out"]
    main(["--config", world["config"], "probe"])
    assert main(["--config", world["config"], "profile",
                 "--scores", f"{out}/layer_scores.json"]) == 0
    profile = json.load(open(f"{out}/profile.json"))
    assert int(np.argmax(profile["weights"])) == 3

    assert main(["--config", world["config"],
                 "--set", f"profile.path={out}/profile.json",
                 "--set", "merge=average", "learn"]) == 0
    embeddings = import_set(f"{out}/sense_vectors.txt")
    assert len(embeddings.vectors) == world["n_senses"]  # full coverage
    assert embeddings.gloss_merged

    assert main(["--config", world["config"],
                 "--set", f"profile.path={out}/profile.json",
                 "--set", f"embeddings={out}/sense_vectors.txt",
                 "evaluate", "wsd"]) == 0
    report = json.load(open(f"{out}/report_wsd_synth.json"))
    assert report["metrics"]["F1"] >= 85.0

    assert main(["--config", world["config"],
                 "--set", f"profile.path={out}/profile.json",
                 "--set", f"embeddings={out}/sense_vectors.txt",
                 "evaluate", "usm"]) == 0
    usm = json.load(open(f"{out}/report_usm_synth.json"))
    assert usm["metrics"]["MRR"] >= usm["metrics"]["F1"]
    assert usm["metrics"]["P@5"] >= usm["metrics"]["F1"]


def test_profile_beats_last_layer_pooling(world):
    """The point of layer weighting: a weak final layer must not dominate."""
    out = world["out"]
    main(["--config", world["config"], "probe"])
    main(["--config", world["config"], "profile", "--scores", f"{out}/layer_scores.json"])
    main(["--config", world["config"], "--set", f"profile.path={out}/profile.json",
          "--set", f"output={world['tmp']}/sp", "learn"])
    main(["--config", world["config"], "--out", f"{world['tmp']}/fixed",
          "profile", "--fixed", "last", "--layers", str(LAYERS)])
    main(["--config", world["config"],
          "--set", f"profile.path={world['tmp']}/fixed/profile.json",
          "--set", f"output={world['tmp']}/fixed", "learn"])

    def f1_of(profile_path, vectors_path, out_dir):
        code = main(["--config", world["config"],
                     "--set", f"profile.path={profile_path}",
                     "--set", f"embeddings={vectors_path}",
                     "--set", f"output={out_dir}",
                     "evaluate", "wsd"])
        assert code == 0
        return json.load(open(f"{out_dir}/report_wsd_synth.json"))["metrics"]["F1"]

    sp_f1 = f1_of(f"{out}/profile.json", f"{world['tmp']}/sp/sense_vectors.txt",
                  f"{world['tmp']}/sp")
    last_f1 = f1_of(f"{world['tmp']}/fixed/profile.json",
                    f"{world['tmp']}/fixed/sense_vectors.txt", f"{world['tmp']}/fixed")
    assert sp_f1 > last_f1
