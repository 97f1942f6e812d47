"""Building full-coverage sense embeddings.

Pipeline stages: centroids from annotations, three-pass relation
propagation (synset, shared direct hypernym, lexname), gloss-template
encoding, and gloss merging by averaging or concatenation of
unit-normalized parts. Sets can be exported as word2vec-style text or a
binary mirror of the store framing, plus a provenance sidecar JSON.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .embedstore import GLOSS_PREFIX, pool_layers
from .errors import (
    DimMismatch,
    KeySetMismatch,
    MalformedHeader,
    MissingRecord,
    UncoveredLexname,
    UnknownSense,
    ZeroVector,
)
from .inventory import SenseInventory

PROV_ANNOTATED = "annotated"
PROV_SYNSET = "prop_synset"
PROV_HYPERNYM = "prop_hypernym"
PROV_LEXNAME = "prop_lexname"
PROV_GLOSS = "gloss_only"
_PROV_ORDER = (PROV_ANNOTATED, PROV_SYNSET, PROV_HYPERNYM, PROV_LEXNAME, PROV_GLOSS)

_BIN_MAGIC = b"LMSV"
_BIN_VERSION = 1
_BIN_HEADER = struct.Struct("<4sHIQBB")
_U16 = struct.Struct("<H")


@dataclass
class SenseEmbeddingSet:
    level: str  # "sensekey" | "synset"
    dim: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)
    gloss_merged: bool = False
    profile_tag: str = ""

    def __post_init__(self):
        if self.level not in ("sensekey", "synset"):
            raise ValueError(f"unknown level: {self.level}")

    def copy(self) -> "SenseEmbeddingSet":
        return SenseEmbeddingSet(
            self.level,
            self.dim,
            {k: v.copy() for k, v in self.vectors.items()},
            dict(self.provenance),
            self.gloss_merged,
            self.profile_tag,
        )


def learn_from_annotations(
    corpus,
    records,
    profile,
    inventory: SenseInventory,
    level: str = "sensekey",
    synset_mode: str = "direct",
) -> SenseEmbeddingSet:
    """Centroids of layer-pooled context vectors per annotated sense.

    With level="synset" and synset_mode="direct", each sensekey annotation
    is mapped to its synset before aggregation; "indirect_source" first
    learns sensekey centroids and then averages them per synset.
    """
    if synset_mode not in ("direct", "indirect_source"):
        raise ValueError(f"unknown synset_mode: {synset_mode}")
    if level == "synset" and synset_mode == "indirect_source":
        base = learn_from_annotations(corpus, records, profile, inventory, "sensekey")
        return to_synset_indirect(base, inventory, require_full=False)

    sums: dict[str, np.ndarray] = {}
    counts: dict[str, int] = {}
    dim = None
    for inst in corpus.instances:
        if not inst.gold_keys:
            continue
        if inst.instance_id not in records:
            raise MissingRecord(inst.instance_id)
        pooled = pool_layers(np.asarray(records[inst.instance_id]), profile)
        dim = pooled.shape[0]
        for key in sorted(inst.gold_keys):
            if key not in inventory.sensekeys:
                raise UnknownSense(key)
            target = inventory.synset_of(key) if level == "synset" else key
            if target in sums:
                sums[target] += pooled
                counts[target] += 1
            else:
                sums[target] = pooled.copy()
                counts[target] = 1
    if dim is None:
        raise ValueError("corpus has no gold-annotated instances")
    vectors = {sense: sums[sense] / counts[sense] for sense in sums}
    tag = getattr(profile, "mode", "") or ""
    return SenseEmbeddingSet(
        level=level,
        dim=dim,
        vectors=vectors,
        provenance={sense: PROV_ANNOTATED for sense in vectors},
        profile_tag=tag,
    )


def _sense_relations(inventory: SenseInventory, level: str):
    """(sense id -> synset id, sense id -> hypernyms, sense id -> lexname)."""
    if level == "sensekey":
        synset_of = {k: s.synset_id for k, s in inventory.sensekeys.items()}
    else:
        synset_of = {sid: sid for sid in inventory.synsets}
    hypers = {sid: inventory.synsets[syn].hypernyms for sid, syn in synset_of.items()}
    lexnames = {sid: inventory.synsets[syn].lexname for sid, syn in synset_of.items()}
    return synset_of, hypers, lexnames


def propagate(embedding_set: SenseEmbeddingSet, inventory: SenseInventory) -> SenseEmbeddingSet:
    """Infer unrepresented senses from increasingly abstract relations.

    Passes run in order (same synset, shared direct hypernym, same lexname);
    each pass averages embeddings represented at the start of the pass, and
    its results join the represented set before the next pass. Synset-level
    sets skip the first pass. Existing vectors are never overwritten.
    """
    if not embedding_set.vectors:
        raise ValueError("cannot propagate from an empty embedding set")
    level = embedding_set.level
    all_ids = inventory.sense_ids(level)
    known = set(all_ids)
    for sense in embedding_set.vectors:
        if sense not in known:
            raise UnknownSense(sense)

    synset_of, hypers, lexnames = _sense_relations(inventory, level)
    result = embedding_set.copy()
    unrepresented = [s for s in all_ids if s not in result.vectors]

    def run_pass(sources_for, tag):
        snapshot = result.vectors  # additions are deferred, so this is the pass-start view
        additions = {}
        for sense in unrepresented:
            sources = sources_for(sense, snapshot)
            if sources:
                additions[sense] = np.mean([snapshot[s] for s in sources], axis=0)
        for sense, vector in additions.items():
            result.vectors[sense] = vector
            result.provenance[sense] = tag
        return [s for s in unrepresented if s not in additions]

    if level == "sensekey":
        by_synset: dict[str, list[str]] = {}
        for sense in result.vectors:
            by_synset.setdefault(synset_of[sense], []).append(sense)
        unrepresented = run_pass(
            lambda sense, snap: sorted(by_synset.get(synset_of[sense], ())),
            PROV_SYNSET,
        )

    by_hyper: dict[str, list[str]] = {}
    for sense in result.vectors:
        for hyper in hypers[sense]:
            by_hyper.setdefault(hyper, []).append(sense)

    def hypernym_sources(sense, snap):
        found = set()
        for hyper in hypers[sense]:
            found.update(by_hyper.get(hyper, ()))
        return sorted(found)

    unrepresented = run_pass(hypernym_sources, PROV_HYPERNYM)

    by_lexname: dict[str, list[str]] = {}
    for sense in result.vectors:
        by_lexname.setdefault(lexnames[sense], []).append(sense)
    for sense in unrepresented:
        if lexnames[sense] not in by_lexname:
            raise UncoveredLexname(lexnames[sense])
    lexname_means = {
        name: np.mean([result.vectors[s] for s in sorted(senses)], axis=0)
        for name, senses in by_lexname.items()
    }
    for sense in unrepresented:
        result.vectors[sense] = lexname_means[lexnames[sense]].copy()
        result.provenance[sense] = PROV_LEXNAME
    return result


def embed_glosses(inventory: SenseInventory, records, profile, level: str) -> SenseEmbeddingSet:
    """Pooled gloss-template vectors, one per sense at the chosen level.

    Each ``gloss::<id>`` record holds the per-layer mean over the template's
    token embeddings, so pooling it yields the template representation.
    """
    vectors: dict[str, np.ndarray] = {}
    dim = None
    for sense in inventory.sense_ids(level):
        record_key = GLOSS_PREFIX + sense
        if record_key not in records:
            raise MissingRecord(record_key)
        pooled = pool_layers(np.asarray(records[record_key]), profile)
        vectors[sense] = pooled
        dim = pooled.shape[0]
    if dim is None:
        raise ValueError("inventory has no senses at this level")
    tag = getattr(profile, "mode", "") or ""
    return SenseEmbeddingSet(
        level=level,
        dim=dim,
        vectors=vectors,
        provenance={sense: PROV_GLOSS for sense in vectors},
        profile_tag=tag,
    )


def _unit(vector: np.ndarray, sense_id: str) -> np.ndarray:
    norm = np.linalg.norm(vector)
    if norm == 0:
        raise ZeroVector(sense_id)
    return vector / norm


def merge_gloss(
    base: SenseEmbeddingSet, gloss: SenseEmbeddingSet, mode: str = "average"
) -> SenseEmbeddingSet:
    """Merge gloss vectors into base vectors, per sense.

    "average" halves the sum of the two unit-normalized parts (same
    dimensionality, left unnormalized since cosine inference is
    scale-invariant); "concat" joins the unit parts, doubling the
    dimensionality.
    """
    if mode not in ("average", "concat"):
        raise ValueError(f"unknown merge mode: {mode}")
    if base.level != gloss.level:
        raise KeySetMismatch(f"levels differ: {base.level} vs {gloss.level}")
    if set(base.vectors) != set(gloss.vectors):
        missing = set(base.vectors) ^ set(gloss.vectors)
        raise KeySetMismatch(f"key sets differ on {len(missing)} sense(s)")
    vectors = {}
    for sense, vector in base.vectors.items():
        unit_base = _unit(vector, sense)
        unit_gloss = _unit(gloss.vectors[sense], sense)
        if mode == "average":
            vectors[sense] = 0.5 * (unit_base + unit_gloss)
        else:
            vectors[sense] = np.concatenate([unit_base, unit_gloss])
    return SenseEmbeddingSet(
        level=base.level,
        dim=base.dim if mode == "average" else 2 * base.dim,
        vectors=vectors,
        provenance=dict(base.provenance),
        gloss_merged=True,
        profile_tag=base.profile_tag,
    )


def to_synset_indirect(
    embedding_set: SenseEmbeddingSet, inventory: SenseInventory, require_full: bool = True
) -> SenseEmbeddingSet:
    """Synset vectors as the unweighted mean of member sensekey vectors."""
    if embedding_set.level != "sensekey":
        raise ValueError("indirect conversion expects a sensekey-level set")
    if require_full:
        for key in inventory.sensekeys:
            if key not in embedding_set.vectors:
                raise MissingRecord(key)
    members: dict[str, list[str]] = {}
    for key, vector in embedding_set.vectors.items():
        sense = inventory.sensekeys.get(key)
        if sense is None:
            raise UnknownSense(key)
        members.setdefault(sense.synset_id, []).append(key)
    vectors = {}
    provenance = {}
    prov_rank = {tag: rank for rank, tag in enumerate(_PROV_ORDER)}
    for synset_id, keys in members.items():
        keys.sort()
        vectors[synset_id] = np.mean([embedding_set.vectors[k] for k in keys], axis=0)
        tags = [embedding_set.provenance.get(k, PROV_ANNOTATED) for k in keys]
        provenance[synset_id] = min(tags, key=lambda t: prov_rank.get(t, len(prov_rank)))
    return SenseEmbeddingSet(
        level="synset",
        dim=embedding_set.dim,
        vectors=vectors,
        provenance=provenance,
        gloss_merged=embedding_set.gloss_merged,
        profile_tag=embedding_set.profile_tag,
    )


def _sidecar_path(path) -> str:
    return f"{path}.provenance.json"


def _write_sidecar(embedding_set: SenseEmbeddingSet, path) -> None:
    meta = {
        "level": embedding_set.level,
        "gloss_merged": embedding_set.gloss_merged,
        "profile_tag": embedding_set.profile_tag,
        "provenance": {k: embedding_set.provenance.get(k, "") for k in sorted(embedding_set.vectors)},
    }
    with open(_sidecar_path(path), "w", encoding="utf-8") as out:
        json.dump(meta, out, ensure_ascii=False, indent=0, sort_keys=True)


def export_set(embedding_set: SenseEmbeddingSet, path, format: str = "text") -> None:
    """Write a set as word2vec-style text or binary, plus provenance sidecar."""
    ids = sorted(embedding_set.vectors)
    if format == "text":
        with open(path, "w", encoding="utf-8") as out:
            out.write(f"{len(ids)} {embedding_set.dim}\n")
            for sense in ids:
                values = " ".join(f"{v:.6f}" for v in embedding_set.vectors[sense])
                out.write(f"{sense} {values}\n")
    elif format == "binary":
        with open(path, "wb") as out:
            out.write(
                _BIN_HEADER.pack(
                    _BIN_MAGIC,
                    _BIN_VERSION,
                    embedding_set.dim,
                    len(ids),
                    0 if embedding_set.level == "sensekey" else 1,
                    1 if embedding_set.gloss_merged else 0,
                )
            )
            tag = embedding_set.profile_tag.encode("utf-8")
            out.write(_U16.pack(len(tag)))
            out.write(tag)
            for sense in ids:
                raw = sense.encode("utf-8")
                out.write(_U16.pack(len(raw)))
                out.write(raw)
                out.write(np.asarray(embedding_set.vectors[sense], dtype="<f8").tobytes())
    else:
        raise ValueError(f"unknown export format: {format}")
    _write_sidecar(embedding_set, path)


def _import_text(path) -> SenseEmbeddingSet:
    with open(path, encoding="utf-8") as stream:
        header = stream.readline().split()
        if len(header) != 2:
            raise MalformedHeader("expected 'count dim' header")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise MalformedHeader(f"non-integer header: {header}")
        vectors: dict[str, np.ndarray] = {}
        for line in stream:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise DimMismatch(f"row for {parts[0]!r} has {len(parts) - 1} values, expected {dim}")
            vectors[parts[0]] = np.asarray([float(v) for v in parts[1:]], dtype=np.float64)
    if len(vectors) != count:
        raise MalformedHeader(f"header says {count} vectors, file has {len(vectors)}")
    level = "sensekey" if any("%" in sense for sense in vectors) else "synset"
    return SenseEmbeddingSet(level=level, dim=dim, vectors=vectors)


def _import_binary(path) -> SenseEmbeddingSet:
    with open(path, "rb") as stream:
        raw = stream.read(_BIN_HEADER.size)
        if len(raw) != _BIN_HEADER.size:
            raise MalformedHeader("file shorter than header")
        magic, version, dim, count, level_code, merged = _BIN_HEADER.unpack(raw)
        if magic != _BIN_MAGIC or version != _BIN_VERSION:
            raise MalformedHeader(f"bad magic/version: {magic!r}/{version}")
        (tag_len,) = _U16.unpack(stream.read(_U16.size))
        profile_tag = stream.read(tag_len).decode("utf-8")
        vectors: dict[str, np.ndarray] = {}
        row_bytes = dim * 8
        for _ in range(count):
            raw_len = stream.read(_U16.size)
            if len(raw_len) != _U16.size:
                raise MalformedHeader("header says more vectors than file contains")
            (key_len,) = _U16.unpack(raw_len)
            sense = stream.read(key_len).decode("utf-8")
            buf = stream.read(row_bytes)
            if len(buf) != row_bytes:
                raise DimMismatch(f"truncated vector for {sense!r}")
            vectors[sense] = np.frombuffer(buf, dtype="<f8").copy()
    return SenseEmbeddingSet(
        level="sensekey" if level_code == 0 else "synset",
        dim=dim,
        vectors=vectors,
        gloss_merged=bool(merged),
        profile_tag=profile_tag,
    )


def import_set(path) -> SenseEmbeddingSet:
    """Read a text or binary embedding set (format sniffed from the file)."""
    with open(path, "rb") as probe:
        binary = probe.read(4) == _BIN_MAGIC
    result = _import_binary(path) if binary else _import_text(path)
    try:
        with open(_sidecar_path(path), encoding="utf-8") as stream:
            meta = json.load(stream)
        result.provenance = {k: v for k, v in meta.get("provenance", {}).items() if v}
        result.level = meta.get("level", result.level)
        result.gloss_merged = bool(meta.get("gloss_merged", result.gloss_merged))
        result.profile_tag = meta.get("profile_tag", result.profile_tag)
    except FileNotFoundError:
        pass
    return result
