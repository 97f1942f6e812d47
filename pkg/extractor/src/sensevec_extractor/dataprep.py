"""Convert source resources into the toolkit's file formats.

Sources: native WordNet database files (dict/ directory) into inventory
JSONL; framework-format annotated corpora into corpus JSONL; WiC, graded
word-similarity-in-context and contextual word similarity releases into
the evaluation TSV/CSV formats; BabelNet-keyed synset pair ratings into
WordNet pair TSV.
"""

from __future__ import annotations

import csv
import json
import os
import re

from sensevec.corpus import parse_framework_xml, write_corpus_jsonl
from sensevec.evaltasks import read_wic_tsv

from .errors import SourceMissing, VersionMismatch

# lexicographer file numbers, fixed since WordNet's release
LEXNAMES = [
    "adj.all", "adj.pert", "adv.all", "noun.Tops", "noun.act", "noun.animal",
    "noun.artifact", "noun.attribute", "noun.body", "noun.cognition",
    "noun.communication", "noun.event", "noun.feeling", "noun.food",
    "noun.group", "noun.location", "noun.motive", "noun.object",
    "noun.person", "noun.phenomenon", "noun.plant", "noun.possession",
    "noun.process", "noun.quantity", "noun.relation", "noun.shape",
    "noun.state", "noun.substance", "noun.time", "verb.body", "verb.change",
    "verb.cognition", "verb.communication", "verb.competition",
    "verb.consumption", "verb.contact", "verb.creation", "verb.emotion",
    "verb.motion", "verb.perception", "verb.possession", "verb.social",
    "verb.stative", "verb.weather", "adj.ppl",
]

_POS_OF_SSTYPE = {"n": "n", "v": "v", "a": "a", "s": "a", "r": "r"}
_POS_OF_DIGIT = {"1": "n", "2": "v", "3": "a", "4": "r", "5": "a"}
_DATA_FILES = ("data.noun", "data.verb", "data.adj", "data.adv")
_MARKER = re.compile(r"\((?:a|p|ip)\)$")


def _parse_data_line(line: str):
    """One synset from a data.pos line; returns (id, lexname, lemmas,
    hypernyms, gloss)."""
    body, _, gloss = line.partition("|")
    fields = body.split()
    offset, lex_filenum, ss_type = fields[0], int(fields[1]), fields[2]
    pos = _POS_OF_SSTYPE[ss_type]
    w_cnt = int(fields[3], 16)
    lemmas = []
    cursor = 4
    for _ in range(w_cnt):
        lemmas.append(_MARKER.sub("", fields[cursor]))
        cursor += 2  # skip lex_id
    p_cnt = int(fields[cursor])
    cursor += 1
    hypernyms = []
    for _ in range(p_cnt):
        symbol, target, target_pos = fields[cursor], fields[cursor + 1], fields[cursor + 2]
        cursor += 4  # symbol offset pos source/target
        if symbol in ("@", "@i"):
            hypernyms.append(f"{target}{_POS_OF_SSTYPE[target_pos]}")
    return f"{offset}{pos}", LEXNAMES[lex_filenum], lemmas, hypernyms, gloss.strip()


def _check_version(path):
    with open(path, encoding="utf-8", errors="replace") as stream:
        for line in stream:
            if not line.startswith("  "):
                return
            if "WordNet" in line:
                match = re.search(r"WordNet (\d+\.\d+)", line)
                if match and match.group(1) != "3.0":
                    raise VersionMismatch(f"{os.path.basename(path)} is WordNet {match.group(1)}")


def prep_wordnet(dict_dir, out_path) -> dict:
    """Native WordNet 3.0 database files -> inventory JSONL; returns counts."""
    for name in _DATA_FILES + ("index.sense",):
        if not os.path.exists(os.path.join(dict_dir, name)):
            raise SourceMissing(f"missing {name} under {dict_dir}")

    synsets = {}
    order = []
    for name in _DATA_FILES:
        path = os.path.join(dict_dir, name)
        _check_version(path)
        with open(path, encoding="utf-8", errors="replace") as stream:
            for line in stream:
                if line.startswith("  ") or not line.strip():
                    continue
                synset_id, lexname, lemmas, hypernyms, gloss = _parse_data_line(line)
                synsets[synset_id] = {
                    "id": synset_id,
                    "pos": synset_id[-1],
                    "lexname": lexname,
                    "lemmas": lemmas,
                    "hypernyms": hypernyms,
                    "gloss": gloss,
                    "senses": [],
                }
                order.append(synset_id)

    with open(os.path.join(dict_dir, "index.sense"), encoding="utf-8") as stream:
        for line in stream:
            fields = line.split()
            if len(fields) < 3:
                continue
            key, offset, num = fields[0], fields[1], int(fields[2])
            lemma, _, rest = key.partition("%")
            synset_id = f"{offset}{_POS_OF_DIGIT[rest[0]]}"
            if synset_id not in synsets:
                raise SourceMissing(f"index.sense references unknown synset {synset_id}")
            synsets[synset_id]["senses"].append({"key": key, "lemma": lemma, "num": num})

    lemmas = set()
    n_senses = 0
    with open(out_path, "w", encoding="utf-8") as out:
        for synset_id in order:
            record = synsets[synset_id]
            record["senses"].sort(key=lambda s: (s["num"], s["key"]))
            n_senses += len(record["senses"])
            lemmas.update(s["lemma"] for s in record["senses"])
            out.write(json.dumps(record, ensure_ascii=False) + "\n")
    return {
        "synsets": len(order),
        "senses": n_senses,
        "lemmas": len(lemmas),
        "lexnames": len({synsets[s]["lexname"] for s in order}),
    }


def prep_framework_corpus(data_xml, gold_keys, out_path, name="") -> int:
    """Framework XML + key file -> toolkit corpus JSONL; returns instances."""
    corpus = parse_framework_xml(data_xml, gold_keys, name=name)
    write_corpus_jsonl(corpus, out_path)
    return len(corpus.instances)


def prep_wic(data_txt, gold_txt, out_data, out_gold) -> int:
    """Validate and normalize a WiC split (already the toolkit format)."""
    instances = read_wic_tsv(data_txt, gold_txt)
    with open(data_txt, encoding="utf-8") as src, open(out_data, "w", encoding="utf-8") as out:
        out.write(src.read())
    with open(gold_txt, encoding="utf-8") as src, open(out_gold, "w", encoding="utf-8") as out:
        out.write(src.read())
    return len(instances)


_TAG = re.compile(r"</?(strong|b)>")


def _marked_token_index(context: str, tag: str) -> tuple[list[str], int]:
    """Whitespace tokens with markup stripped + index of the tagged token."""
    tokens = context.split()
    marked = None
    clean = []
    open_tag, close_tag = f"<{tag}>", f"</{tag}>"
    for token in tokens:
        if open_tag in token:
            # standalone "<b>" tokens mark the next real token
            marked = len(clean)
        stripped = _TAG.sub("", token)
        if stripped:
            clean.append(stripped)
    if marked is None:
        raise SourceMissing(f"no <{tag}> marker in context: {context[:60]}...")
    return clean, marked


def _two_marked_tokens(context: str, tag: str) -> tuple[list[str], int, int]:
    tokens = context.split()
    open_tag = f"<{tag}>"
    clean, marks = [], []
    for token in tokens:
        if open_tag in token:
            marks.append(len(clean))
        stripped = _TAG.sub("", token)
        if stripped:
            clean.append(stripped)
    if len(marks) != 2:
        raise SourceMissing(f"expected two <{tag}> markers, found {len(marks)}")
    return clean, marks[0], marks[1]


def prep_gwcs(source_tsv, out_csv, default_pos: str = "n") -> int:
    """Graded-similarity-in-context TSV (two tagged targets per context)
    -> toolkit CSV. Source rows carry both per-context ratings."""
    count = 0
    with open(source_tsv, encoding="utf-8", newline="") as src, open(
        out_csv, "w", encoding="utf-8", newline=""
    ) as dst:
        reader = csv.DictReader(src, delimiter="\t")
        writer = csv.writer(dst)
        writer.writerow(
            ["id", "lemma1", "pos1", "lemma2", "pos2", "tokens_a", "span1_a",
             "span2_a", "tokens_b", "span1_b", "span2_b", "sim_a", "sim_b"]
        )
        for i, row in enumerate(reader):
            tokens_a, mark1_a, mark2_a = _two_marked_tokens(row["context1"], "strong")
            tokens_b, mark1_b, mark2_b = _two_marked_tokens(row["context2"], "strong")
            writer.writerow(
                [
                    f"gwcs.{i:04d}", row["word1"], default_pos, row["word2"], default_pos,
                    " ".join(tokens_a), mark1_a, mark2_a,
                    " ".join(tokens_b), mark1_b, mark2_b,
                    row["sim1"], row["sim2"],
                ]
            )
            count += 1
    return count


def prep_scws(ratings_path, out_csv) -> int:
    """Contextual word similarity ratings (one tagged target per context)
    -> toolkit CSV. Input lines: id, word1, pos1, word2, pos2, context1,
    context2, rating[, individual ratings...] separated by tabs."""
    count = 0
    with open(ratings_path, encoding="utf-8") as src, open(
        out_csv, "w", encoding="utf-8", newline=""
    ) as dst:
        writer = csv.writer(dst)
        writer.writerow(
            ["id", "lemma1", "pos1", "lemma2", "pos2", "tokens_a", "span_a",
             "tokens_b", "span_b", "rating"]
        )
        for line in src:
            line = line.strip()
            if not line:
                continue
            fields = line.split("\t")
            pair_id, word1, pos1, word2, pos2, ctx1, ctx2, rating = fields[:8]
            tokens_a, mark_a = _marked_token_index(ctx1, "b")
            tokens_b, mark_b = _marked_token_index(ctx2, "b")
            writer.writerow(
                [f"scws.{pair_id}", word1, pos1.lower(), word2, pos2.lower(),
                 " ".join(tokens_a), mark_a, " ".join(tokens_b), mark_b, rating]
            )
            count += 1
    return count


def prep_sid(pairs_csv, mapping_tsv, out_tsv) -> int:
    """BabelNet-keyed synset pair ratings -> WordNet pair TSV.

    Pairs are kept only when both ids map to WordNet and the mapped
    synsets differ.
    """
    mapping = {}
    with open(mapping_tsv, encoding="utf-8") as stream:
        for line in stream:
            parts = line.split()
            if len(parts) >= 2:
                mapping[parts[0]] = parts[1]
    count = 0
    with open(pairs_csv, encoding="utf-8", newline="") as src, open(
        out_tsv, "w", encoding="utf-8"
    ) as dst:
        for row in csv.DictReader(src):
            wn_a = mapping.get(row["synset1"])
            wn_b = mapping.get(row["synset2"])
            if not wn_a or not wn_b or wn_a == wn_b:
                continue
            dst.write(f"{wn_a}\t{wn_b}\t{row['rating']}\n")
            count += 1
    return count
