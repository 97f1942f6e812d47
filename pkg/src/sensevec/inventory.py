"""Sense-inventory graph: synsets, sensekeys, candidate lookup, gloss templates.

The on-disk format is one synset per JSONL line:

    {"id": "02330245n", "pos": "n", "lexname": "noun.animal",
     "lemmas": ["mouse"], "hypernyms": ["01864707n"], "gloss": "...",
     "senses": [{"key": "mouse%1:05:00::", "lemma": "mouse", "num": 1}]}

Inventories are immutable after load and safe for concurrent readers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import DanglingReference, MalformedRecord, UnknownSense

POS_TAGS = ("n", "v", "a", "r")

# Universal POS tags used by the evaluation-framework XML.
POS_FROM_UNIVERSAL = {"NOUN": "n", "VERB": "v", "ADJ": "a", "ADV": "r"}


@dataclass(frozen=True)
class Synset:
    id: str
    pos: str
    lexname: str
    lemmas: tuple[str, ...]
    hypernyms: tuple[str, ...]
    gloss: str


@dataclass(frozen=True)
class SenseKey:
    key: str
    lemma: str
    synset_id: str
    sense_number: int


class SenseRelations(NamedTuple):
    synset_id: str
    hypernyms: tuple[str, ...]
    lexname: str


@dataclass
class SenseInventory:
    synsets: dict[str, Synset] = field(default_factory=dict)
    sensekeys: dict[str, SenseKey] = field(default_factory=dict)
    by_lemma_pos: dict[tuple[str, str], list[str]] = field(default_factory=dict)

    def candidates(self, lemma: str, pos: str) -> list[str]:
        """Sensekeys for (lemma, pos), ascending sense number; [] if unknown."""
        return list(self.by_lemma_pos.get((lemma, pos), ()))

    def relations_lookup(self, key: str) -> SenseRelations:
        """Synset id, direct hypernyms and lexname for one sensekey."""
        sense = self.sensekeys.get(key)
        if sense is None:
            raise UnknownSense(key)
        synset = self.synsets[sense.synset_id]
        return SenseRelations(synset.id, synset.hypernyms, synset.lexname)

    def synset_of(self, key: str) -> str:
        sense = self.sensekeys.get(key)
        if sense is None:
            raise UnknownSense(key)
        return sense.synset_id

    def gloss_template(self, sense_id: str, level: str = "sensekey") -> str:
        """Template string encoding lemma, synonyms and gloss for one sense.

        Sensekey level: "<lemma> , <synset lemmas> - <gloss>"; synset level
        drops the leading lemma component. Underscores in multiword lemmas
        become spaces (what an encoder expects to see).
        """
        if level == "sensekey":
            sense = self.sensekeys.get(sense_id)
            if sense is None:
                raise UnknownSense(sense_id)
            synset = self.synsets[sense.synset_id]
            lemma = sense.lemma.replace("_", " ")
            synonyms = ", ".join(l.replace("_", " ") for l in synset.lemmas)
            return f"{lemma} , {synonyms} - {synset.gloss}"
        if level == "synset":
            synset = self.synsets.get(sense_id)
            if synset is None:
                raise UnknownSense(sense_id)
            synonyms = ", ".join(l.replace("_", " ") for l in synset.lemmas)
            return f"{synonyms} - {synset.gloss}"
        raise ValueError(f"unknown template level: {level}")

    def sense_ids(self, level: str) -> list[str]:
        """All sense ids at the given level, in deterministic order."""
        if level == "sensekey":
            return sorted(self.sensekeys)
        if level == "synset":
            return sorted(self.synsets)
        raise ValueError(f"unknown level: {level}")

    @property
    def lemma_count(self) -> int:
        return len({sense.lemma for sense in self.sensekeys.values()})

    @property
    def lexnames(self) -> set[str]:
        return {synset.lexname for synset in self.synsets.values()}

    def stats(self) -> dict:
        return {
            "synsets": len(self.synsets),
            "senses": len(self.sensekeys),
            "lemmas": self.lemma_count,
            "lexnames": len(self.lexnames),
        }


def _parse_record(line_no: int, line: str) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(line_no, f"invalid JSON ({exc.msg})")
    if not isinstance(record, dict):
        raise MalformedRecord(line_no, "record is not an object")
    for field_name in ("id", "pos", "lexname", "lemmas", "gloss", "senses"):
        if field_name not in record:
            raise MalformedRecord(line_no, f"missing field {field_name!r}")
    if record["pos"] not in POS_TAGS:
        raise MalformedRecord(line_no, f"bad pos {record['pos']!r}")
    if not record["id"].endswith(record["pos"]):
        raise MalformedRecord(line_no, f"pos {record['pos']!r} inconsistent with id {record['id']!r}")
    if not record["lemmas"]:
        raise MalformedRecord(line_no, "empty lemma list")
    if not record["gloss"]:
        raise MalformedRecord(line_no, "empty gloss")
    return record


def load_inventory(path) -> SenseInventory:
    """Load an inventory JSONL file, resolving all cross-references."""
    inv = SenseInventory()
    with open(path, encoding="utf-8") as stream:
        for line_no, line in enumerate(stream, start=1):
            line = line.strip()
            if not line:
                continue
            record = _parse_record(line_no, line)
            synset_id = record["id"]
            if synset_id in inv.synsets:
                raise MalformedRecord(line_no, f"duplicate synset id {synset_id}")
            synset = Synset(
                id=synset_id,
                pos=record["pos"],
                lexname=record["lexname"],
                lemmas=tuple(record["lemmas"]),
                hypernyms=tuple(record.get("hypernyms", ())),
                gloss=record["gloss"],
            )
            inv.synsets[synset_id] = synset
            for sense in record["senses"]:
                try:
                    key, lemma, num = sense["key"], sense["lemma"], int(sense["num"])
                except (KeyError, TypeError, ValueError):
                    raise MalformedRecord(line_no, "bad sense entry")
                if num < 1:
                    raise MalformedRecord(line_no, f"sense number {num} < 1")
                if key in inv.sensekeys:
                    raise MalformedRecord(line_no, f"duplicate sensekey {key}")
                inv.sensekeys[key] = SenseKey(key, lemma, synset_id, num)

    for sense in inv.sensekeys.values():
        if sense.synset_id not in inv.synsets:
            raise DanglingReference(sense.synset_id)
    for synset in inv.synsets.values():
        for hyper in synset.hypernyms:
            if hyper not in inv.synsets:
                raise DanglingReference(hyper)

    grouped: dict[tuple[str, str], list[SenseKey]] = {}
    for sense in inv.sensekeys.values():
        pos = inv.synsets[sense.synset_id].pos
        grouped.setdefault((sense.lemma, pos), []).append(sense)
    inv.by_lemma_pos = {
        lemma_pos: [s.key for s in sorted(senses, key=lambda s: (s.sense_number, s.key))]
        for lemma_pos, senses in grouped.items()
    }
    return inv


def dump_inventory(inv: SenseInventory, path) -> None:
    """Write an inventory back to JSONL (inverse of load_inventory)."""
    sense_by_synset: dict[str, list[SenseKey]] = {}
    for sense in inv.sensekeys.values():
        sense_by_synset.setdefault(sense.synset_id, []).append(sense)
    with open(path, "w", encoding="utf-8") as stream:
        for synset_id, synset in inv.synsets.items():
            senses = sorted(
                sense_by_synset.get(synset_id, []), key=lambda s: (s.sense_number, s.key)
            )
            record = {
                "id": synset.id,
                "pos": synset.pos,
                "lexname": synset.lexname,
                "lemmas": list(synset.lemmas),
                "hypernyms": list(synset.hypernyms),
                "gloss": synset.gloss,
                "senses": [
                    {"key": s.key, "lemma": s.lemma, "num": s.sense_number} for s in senses
                ],
            }
            stream.write(json.dumps(record, ensure_ascii=False) + "\n")
