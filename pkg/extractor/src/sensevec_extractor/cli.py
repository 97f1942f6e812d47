"""CLI: `extract spans|glosses|pairs` and `dataprep <source>`."""

from __future__ import annotations

import argparse
import sys

from sensevec.corpus import read_corpus_jsonl
from sensevec.evaltasks import read_gwcs_csv, read_scws_csv, read_wic_tsv
from sensevec.inventory import load_inventory

from . import dataprep
from .encoder import Encoder
from .extract import ExtractionJob, extract_glosses, extract_pairs, extract_spans


def _job(args) -> ExtractionJob:
    encoder = Encoder.from_pretrained(args.model, max_length=args.max_length)
    return ExtractionJob(encoder=encoder, batch_size=args.batch_size, out_path=args.out)


def cmd_extract(args) -> int:
    job = _job(args)
    if args.what == "spans":
        corpus = read_corpus_jsonl(args.corpus)
        header = extract_spans(corpus, job)
    elif args.what == "glosses":
        inventory = load_inventory(args.inventory)
        header = extract_glosses(inventory, args.level, job)
    else:
        readers = {"wic": read_wic_tsv, "gwcs": read_gwcs_csv, "scws": read_scws_csv}
        instances = readers[args.task](args.data)
        header = extract_pairs(instances, job)
    print(
        f"wrote {header.record_count} records "
        f"(layers={header.layer_count}, dim={header.dim}) -> {args.out}"
    )
    return 0


def cmd_dataprep(args) -> int:
    if args.source == "wordnet":
        counts = dataprep.prep_wordnet(args.src, args.out)
        print(" ".join(f"{k}={v}" for k, v in counts.items()))
    elif args.source in ("semcor", "uwa", "framework-xml"):
        n = dataprep.prep_framework_corpus(args.src, args.keys, args.out, name=args.source)
        print(f"instances={n}")
    elif args.source == "wic":
        n = dataprep.prep_wic(args.src, args.keys, args.out, args.out + ".gold.txt")
        print(f"instances={n}")
    elif args.source == "gwcs":
        print(f"pairs={dataprep.prep_gwcs(args.src, args.out)}")
    elif args.source == "scws":
        print(f"pairs={dataprep.prep_scws(args.src, args.out)}")
    elif args.source == "sid":
        print(f"pairs={dataprep.prep_sid(args.src, args.keys, args.out)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sensevec-extract", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ext = sub.add_parser("extract", help="dump per-layer embeddings")
    p_ext.add_argument("what", choices=["spans", "glosses", "pairs"])
    p_ext.add_argument("--model", required=True, help="checkpoint id or local path")
    p_ext.add_argument("--corpus", help="corpus JSONL (spans)")
    p_ext.add_argument("--inventory", help="inventory JSONL (glosses)")
    p_ext.add_argument("--level", default="sensekey", choices=["sensekey", "synset"])
    p_ext.add_argument("--task", choices=["wic", "gwcs", "scws"], help="pairs input kind")
    p_ext.add_argument("--data", help="task data file (pairs)")
    p_ext.add_argument("--out", required=True)
    p_ext.add_argument("--batch-size", type=int, default=16)
    p_ext.add_argument("--max-length", type=int, default=512)

    p_prep = sub.add_parser("dataprep", help="convert source resources")
    p_prep.add_argument("source", choices=["wordnet", "semcor", "uwa", "framework-xml",
                                           "wic", "gwcs", "scws", "sid"])
    p_prep.add_argument("--src", required=True, help="source path (dict dir, xml, tsv)")
    p_prep.add_argument("--keys", help="gold key file / gold labels / bn-wn mapping")
    p_prep.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "extract":
            return cmd_extract(args)
        return cmd_dataprep(args)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
