"""Sense-annotated corpora: framework XML + gold keys, toolkit JSONL, stats.

Two interchangeable serializations are supported:

  1. The standard evaluation-framework XML (corpus/text/sentence elements
     with ``wf``/``instance`` tokens) plus a space-separated gold key file.
  2. Toolkit JSONL, one sentence per line:
     {"tokens": [...], "annotations": [{"id", "lemma", "pos", "start",
      "end", "keys"}]} with inclusive token spans.

Parsed corpora are immutable and shareable across threads.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace

from .errors import MalformedXml, NoCandidates, UnknownInstanceInKeys
from .inventory import POS_FROM_UNIVERSAL, SenseInventory


@dataclass(frozen=True)
class AnnotationInstance:
    instance_id: str
    lemma: str
    pos: str
    sentence: int
    start: int
    end: int  # inclusive
    gold_keys: frozenset[str] = frozenset()


@dataclass
class AnnotatedCorpus:
    name: str
    sentences: list[list[str]] = field(default_factory=list)
    instances: list[AnnotationInstance] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for inst in self.instances:
            if inst.instance_id in seen:
                raise ValueError(f"duplicate instance id {inst.instance_id}")
            seen.add(inst.instance_id)
            tokens = self.sentences[inst.sentence]
            if not (0 <= inst.start <= inst.end < len(tokens)):
                raise ValueError(f"span out of bounds for {inst.instance_id}")

    def by_id(self) -> dict[str, AnnotationInstance]:
        return {inst.instance_id: inst for inst in self.instances}

    def gold_sensekeys(self) -> set[str]:
        keys: set[str] = set()
        for inst in self.instances:
            keys |= inst.gold_keys
        return keys


def _pos_from_attr(raw: str) -> str:
    if raw in POS_FROM_UNIVERSAL:
        return POS_FROM_UNIVERSAL[raw]
    if raw in ("n", "v", "a", "r"):
        return raw
    # framework files occasionally carry Penn-style tags for wf elements;
    # instances are expected to carry universal tags
    raise MalformedXml(f"unsupported pos tag {raw!r}")


def read_gold_keys(path) -> dict[str, set[str]]:
    """Key file lines are "instance_id key1 [key2 ...]"."""
    gold: dict[str, set[str]] = {}
    with open(path, encoding="utf-8") as stream:
        for line in stream:
            parts = line.split()
            if not parts:
                continue
            gold[parts[0]] = set(parts[1:])
    return gold


def parse_framework_xml(
    data_xml,
    gold_keys=None,
    name: str = "",
    inventory: SenseInventory | None = None,
) -> AnnotatedCorpus:
    """Parse evaluation-framework XML, attaching gold keys where present.

    Instances absent from the key file keep an empty gold set. When an
    inventory is supplied, instances whose lemma/pos has no candidates are
    rejected with a diagnostic list (surfaces corpus/inventory mismatches).
    """
    gold = read_gold_keys(gold_keys) if gold_keys is not None else {}

    try:
        tree = ET.parse(data_xml)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc))
    root = tree.getroot()
    if root.tag != "corpus":
        raise MalformedXml(f"root element is {root.tag!r}, expected 'corpus'")

    sentences: list[list[str]] = []
    instances: list[AnnotationInstance] = []
    seen_ids: set[str] = set()
    for sent_el in root.iter("sentence"):
        tokens: list[str] = []
        for el in sent_el:
            if el.tag not in ("wf", "instance"):
                continue
            text = (el.text or "").strip()
            position = len(tokens)
            tokens.append(text)
            if el.tag == "instance":
                inst_id = el.get("id")
                lemma = el.get("lemma")
                pos_attr = el.get("pos")
                if not inst_id or not lemma or not pos_attr:
                    raise MalformedXml(f"instance missing id/lemma/pos in sentence {len(sentences)}")
                instances.append(
                    AnnotationInstance(
                        instance_id=inst_id,
                        lemma=lemma,
                        pos=_pos_from_attr(pos_attr),
                        sentence=len(sentences),
                        start=position,
                        end=position,
                        gold_keys=frozenset(gold.get(inst_id, ())),
                    )
                )
                seen_ids.add(inst_id)
        sentences.append(tokens)

    for inst_id in gold:
        if inst_id not in seen_ids:
            raise UnknownInstanceInKeys(inst_id)

    corpus = AnnotatedCorpus(name=name or "corpus", sentences=sentences, instances=instances)
    if inventory is not None:
        missing = [
            inst.instance_id
            for inst in corpus.instances
            if not inventory.candidates(inst.lemma, inst.pos)
        ]
        if missing:
            raise NoCandidates(missing)
    return corpus


def write_corpus_jsonl(corpus: AnnotatedCorpus, path) -> None:
    per_sentence: dict[int, list[AnnotationInstance]] = {}
    for inst in corpus.instances:
        per_sentence.setdefault(inst.sentence, []).append(inst)
    with open(path, "w", encoding="utf-8") as stream:
        for idx, tokens in enumerate(corpus.sentences):
            annotations = [
                {
                    "id": inst.instance_id,
                    "lemma": inst.lemma,
                    "pos": inst.pos,
                    "start": inst.start,
                    "end": inst.end,
                    "keys": sorted(inst.gold_keys),
                }
                for inst in per_sentence.get(idx, [])
            ]
            stream.write(
                json.dumps({"tokens": tokens, "annotations": annotations}, ensure_ascii=False)
                + "\n"
            )


def read_corpus_jsonl(path, name: str = "") -> AnnotatedCorpus:
    sentences: list[list[str]] = []
    instances: list[AnnotationInstance] = []
    with open(path, encoding="utf-8") as stream:
        for line in stream:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            sent_idx = len(sentences)
            sentences.append(list(record["tokens"]))
            for ann in record.get("annotations", ()):
                instances.append(
                    AnnotationInstance(
                        instance_id=ann["id"],
                        lemma=ann["lemma"],
                        pos=ann["pos"],
                        sentence=sent_idx,
                        start=int(ann["start"]),
                        end=int(ann["end"]),
                        gold_keys=frozenset(ann.get("keys", ())),
                    )
                )
    return AnnotatedCorpus(name=name or "corpus", sentences=sentences, instances=instances)


def restrict_to_seen(corpus: AnnotatedCorpus, seen: set[str]) -> AnnotatedCorpus:
    """Drop every sentence with an instance whose gold keys are not all in `seen`.

    Idempotent; remaining instances are re-indexed to the surviving sentences.
    """
    bad_sentences = {
        inst.sentence for inst in corpus.instances if not inst.gold_keys <= seen
    }
    keep = [i for i in range(len(corpus.sentences)) if i not in bad_sentences]
    remap = {old: new for new, old in enumerate(keep)}
    return AnnotatedCorpus(
        name=corpus.name,
        sentences=[corpus.sentences[i] for i in keep],
        instances=[
            replace(inst, sentence=remap[inst.sentence])
            for inst in corpus.instances
            if inst.sentence in remap
        ],
    )


def concat_corpora(corpora: list[AnnotatedCorpus], name: str = "combined") -> AnnotatedCorpus:
    """Append corpora in order; instance ids must stay globally unique."""
    sentences: list[list[str]] = []
    instances: list[AnnotationInstance] = []
    for corpus in corpora:
        offset = len(sentences)
        sentences.extend(corpus.sentences)
        instances.extend(
            replace(inst, sentence=inst.sentence + offset) for inst in corpus.instances
        )
    return AnnotatedCorpus(name=name, sentences=sentences, instances=instances)


def corpus_stats(corpus: AnnotatedCorpus, inventory: SenseInventory) -> dict:
    """Annotation count, distinct sensekeys/synsets, and inventory coverage."""
    keys = corpus.gold_sensekeys()
    synsets = {
        inventory.sensekeys[k].synset_id for k in keys if k in inventory.sensekeys
    }
    n_inventory = len(inventory.sensekeys)
    return {
        "annotations": sum(1 for inst in corpus.instances if inst.gold_keys),
        "sensekeys": len(keys),
        "synsets": len(synsets),
        "coverage": (len(keys) / n_inventory) if n_inventory else 0.0,
    }
