"""Command-line pipeline orchestration.

A single declarative config document (YAML or JSON) drives every command;
any field can be overridden with ``--set dotted.path=value``. Artifacts are
deterministic given identical config and inputs; each run writes a
manifest with the config fingerprint and input hashes (timestamps live in
a separate run_info.json).

Exit codes: 0 ok, 1 config error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np
import yaml

from . import __version__, errors
from .corpus import concat_corpora, parse_framework_xml, read_corpus_jsonl
from .embedstore import CombinedRecords, load_store_dict, pool_layers
from .evaltasks import (
    config_fingerprint,
    eval_gwcs,
    eval_scws,
    eval_sid,
    eval_usm,
    eval_wic,
    eval_wsd,
    mfs_baseline,
    observed_filter,
    pca_coords,
    polarized_filter,
    read_gwcs_csv,
    read_scws_csv,
    read_sid_tsv,
    read_wic_tsv,
    silhouette,
)
from .inventory import load_inventory
from .profiles import (
    LayerScores,
    RECOMMENDED_T,
    SenseProfile,
    fixed_profile,
    probe_layers,
    softmax_weights,
    write_heatmap_csv,
)
from .senseindex import build_index
from .senselearn import (
    embed_glosses,
    export_set,
    import_set,
    learn_from_annotations,
    merge_gloss,
    propagate,
)


_DEFAULTS = {
    "level": "sensekey",
    "synset_mode": "direct",
    "merge": "none",
    "propagate": True,
    "seed": 42,
    "workers": 0,
    "output": "out",
}


def _set_path(config: dict, dotted: str, value: str) -> None:
    keys = dotted.split(".")
    node = config
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise errors.ConfigError(f"cannot override non-mapping field {dotted!r}")
    node[keys[-1]] = yaml.safe_load(value)


def load_config(path: str | None, overrides: list[str]) -> dict:
    config = dict(_DEFAULTS)
    if path:
        try:
            with open(path, encoding="utf-8") as stream:
                loaded = yaml.safe_load(stream) or {}
        except FileNotFoundError:
            raise errors.ConfigError(f"config file not found: {path}")
        except yaml.YAMLError as exc:
            raise errors.ConfigError(f"config parse error: {exc}")
        if not isinstance(loaded, dict):
            raise errors.ConfigError("config root must be a mapping")
        config.update(loaded)
    for item in overrides:
        if "=" not in item:
            raise errors.ConfigError(f"--set expects field.path=value, got {item!r}")
        dotted, value = item.split("=", 1)
        _set_path(config, dotted, value)
    if not (isinstance(config["seed"], int)):
        raise errors.ConfigError(f"seed must be an integer, got {config['seed']!r}")
    return config


def _require(config: dict, field: str):
    node = config
    for key in field.split("."):
        if not isinstance(node, dict) or key not in node:
            raise errors.ConfigError(f"missing config field: {field}")
        node = node[key]
    return node


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as stream:
        for chunk in iter(lambda: stream.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: str, command: str, config: dict, inputs: list[str]) -> None:
    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "command": command,
        "config_fingerprint": config_fingerprint(config),
        "inputs": {p: _sha256(p) for p in sorted(set(inputs)) if p and os.path.exists(p)},
        "versions": {
            "sensevec": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as out:
        json.dump(manifest, out, indent=2, sort_keys=True)
    with open(os.path.join(out_dir, "run_info.json"), "w", encoding="utf-8") as out:
        json.dump({"completed_unix": time.time()}, out)


def _load_corpus(spec, inventory=None, name=""):
    """Corpus from toolkit JSONL path or {"xml": ..., "keys": ...} mapping."""
    if isinstance(spec, str):
        return read_corpus_jsonl(spec, name=name or os.path.basename(spec))
    if isinstance(spec, dict) and "xml" in spec:
        return parse_framework_xml(
            spec["xml"], spec.get("keys"), name=name or os.path.basename(spec["xml"]),
            inventory=inventory,
        )
    raise errors.ConfigError(f"bad corpus spec: {spec!r}")


def _load_corpus_multi(spec, inventory=None, name="train"):
    """One corpus or an appended combination when the spec is a list."""
    if isinstance(spec, (str, dict)):
        spec = [spec]
    corpora = [
        _load_corpus(one, inventory=inventory, name=f"{name}{i}") for i, one in enumerate(spec)
    ]
    return corpora[0] if len(corpora) == 1 else concat_corpora(corpora, name=name)


def _corpus_paths(spec) -> list[str]:
    if isinstance(spec, str):
        return [spec]
    if isinstance(spec, list):
        return [p for one in spec for p in _corpus_paths(one)]
    if isinstance(spec, dict):
        return [v for v in spec.values() if isinstance(v, str)]
    return []


def _load_records(paths):
    if isinstance(paths, str):
        paths = [paths]
    elif isinstance(paths, dict):
        paths = [paths[name] for name in sorted(paths)]
    loaded = [load_store_dict(p) for p in paths]
    header = loaded[0][0]
    if len(loaded) == 1:
        return header, loaded[0][1]
    return header, CombinedRecords(*(records for _, records in loaded))


def _load_profile(config) -> SenseProfile:
    spec = _require(config, "profile")
    if isinstance(spec, dict) and "path" in spec:
        with open(spec["path"], encoding="utf-8") as stream:
            return SenseProfile.from_json(stream.read())
    raise errors.ConfigError("profile.path is required (run `sensevec profile` first)")


# ---------------------------------------------------------------- commands


def cmd_probe(config: dict, args) -> int:
    inventory = load_inventory(_require(config, "inventory"))
    train = _load_corpus_multi(_require(config, "corpora.train"), name="train")
    val = _load_corpus(_require(config, "corpora.validation"), name="validation")
    _, train_records = _load_records(_require(config, "stores.train"))
    _, val_records = _load_records(_require(config, "stores.validation"))
    mode = config.get("profile", {}).get("mode", "wsd")
    model_tag = config.get("model_tag", "")
    workers = config["workers"] or (os.cpu_count() or 1)
    scores = probe_layers(
        train, train_records, val, val_records, inventory, mode, model_tag, workers=workers
    )
    out_dir = config["output"]
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "layer_scores.json"), "w", encoding="utf-8") as out:
        json.dump(
            {"model": scores.model_tag, "mode": scores.mode, "scores": scores.scores.tolist()},
            out,
        )
    write_heatmap_csv([scores], os.path.join(out_dir, "heatmap.csv"))
    inputs = [_require(config, "inventory")]
    for field in ("corpora.train", "corpora.validation", "stores.train", "stores.validation"):
        inputs += _corpus_paths(_require(config, field))
    _write_manifest(out_dir, "probe", config, inputs)
    print(f"probe[{scores.mode}] layers={scores.scores.size} "
          f"best={scores.scores.max():.1f}@{int(np.argmax(scores.scores))}")
    return 0


def cmd_profile(config: dict, args) -> int:
    out_dir = config["output"]
    os.makedirs(out_dir, exist_ok=True)
    spec = config.get("profile", {})
    if args.fixed:
        if not args.layers:
            raise errors.ConfigError("--layers is required with --fixed")
        profile = fixed_profile(args.fixed, args.layers, config.get("model_tag", ""))
    else:
        if not args.scores:
            raise errors.ConfigError("either --fixed or --scores is required")
        with open(args.scores, encoding="utf-8") as stream:
            data = json.load(stream)
        scores = LayerScores(data.get("model", ""), data.get("mode", "wsd"), np.asarray(data["scores"]))
        t = args.t if args.t is not None else spec.get("t", RECOMMENDED_T[scores.mode])
        profile = softmax_weights(scores, t)
    path = os.path.join(out_dir, "profile.json")
    with open(path, "w", encoding="utf-8") as out:
        out.write(profile.to_json())
    _write_manifest(out_dir, "profile", config, [args.scores] if args.scores else [])
    print(f"profile mode={profile.mode} t={profile.temperature} -> {path}")
    return 0


def _learn_embeddings(config: dict, inventory):
    profile = _load_profile(config)
    train = _load_corpus_multi(_require(config, "corpora.train"))
    _, records = _load_records(_require(config, "stores.train"))
    level = config["level"]
    embeddings = learn_from_annotations(
        train, records, profile, inventory, level, config["synset_mode"]
    )
    if config["propagate"]:
        embeddings = propagate(embeddings, inventory)
    if config["merge"] != "none":
        _, gloss_records = _load_records(_require(config, "stores.gloss"))
        gloss = embed_glosses(inventory, gloss_records, profile, level)
        embeddings = merge_gloss(embeddings, gloss, config["merge"])
    return embeddings


def cmd_learn(config: dict, args) -> int:
    inventory = load_inventory(_require(config, "inventory"))
    embeddings = _learn_embeddings(config, inventory)
    out_dir = config["output"]
    os.makedirs(out_dir, exist_ok=True)
    fmt = config.get("format", "text")
    path = os.path.join(out_dir, "sense_vectors.txt" if fmt == "text" else "sense_vectors.bin")
    export_set(embeddings, path, fmt)
    _write_manifest(out_dir, "learn", config, [_require(config, "inventory")])
    print(f"learned {len(embeddings.vectors)} {embeddings.level} vectors (dim {embeddings.dim}) -> {path}")
    return 0


def _test_corpus_and_records(config: dict, test_name: str | None):
    tests = _require(config, "corpora.test")
    stores = _require(config, "stores.test")
    if test_name is None:
        if isinstance(tests, dict) and len(tests) == 1:
            test_name = next(iter(tests))
        elif not isinstance(tests, dict):
            test_name = "test"
    corpus_spec = tests[test_name] if isinstance(tests, dict) else tests
    store_spec = stores[test_name] if isinstance(stores, dict) else stores
    corpus = _load_corpus(corpus_spec, name=test_name or "test")
    _, records = _load_records(store_spec)
    return corpus, records


def cmd_evaluate(config: dict, args) -> int:
    inventory = load_inventory(_require(config, "inventory"))
    out_dir = config["output"]
    os.makedirs(out_dir, exist_ok=True)
    reports = {}
    task = args.task

    if task == "wsd" and args.baseline == "mfs":
        train = _load_corpus_multi(_require(config, "corpora.train"))
        tests = _require(config, "corpora.test")
        if not isinstance(tests, dict):
            tests = {"test": tests}
        for name, spec in tests.items():
            if args.test and name != args.test:
                continue
            reports[name] = mfs_baseline(train, _load_corpus(spec, name=name), inventory)
    elif task in ("wsd", "usm"):
        embeddings = import_set(_require(config, "embeddings"))
        index = build_index(embeddings)
        profile = _load_profile(config)
        corpus, records = _test_corpus_and_records(config, args.test)
        if task == "wsd":
            reports[corpus.name] = eval_wsd(corpus, records, index, inventory, profile)
        else:
            reports[corpus.name] = eval_usm(
                corpus, records, index, profile, inventory, level=config["level"]
            )
    elif task in ("wic", "gwcs", "scws"):
        embeddings = import_set(_require(config, "embeddings"))
        index = build_index(embeddings)
        profile = _load_profile(config)
        _, records = _load_records(_require(config, "stores.test"))
        data_path = _require(config, f"tasks.{task}.data")
        if task == "wic":
            instances = read_wic_tsv(data_path, config.get("tasks", {}).get("wic", {}).get("gold"))
            reports[task] = eval_wic(instances, records, index, inventory, profile)
        elif task == "gwcs":
            instances = read_gwcs_csv(data_path)
            reports[task] = eval_gwcs(instances, records, index, inventory, profile)
        else:
            instances = read_scws_csv(data_path)
            reports[task] = eval_scws(instances, records, index, inventory, profile)
    elif task == "sid":
        embeddings = import_set(_require(config, "embeddings"))
        pairs = read_sid_tsv(_require(config, "tasks.sid.pairs"))
        filters = {"Polarized": polarized_filter()}
        seen_spec = config.get("tasks", {}).get("sid", {}).get("seen_corpus")
        if seen_spec:
            seen_corpus = _load_corpus(seen_spec, name="seen")
            seen = {
                inventory.synset_of(k)
                for k in seen_corpus.gold_sensekeys()
                if k in inventory.sensekeys
            }
            filters["Observed"] = observed_filter(seen)
        reports[task] = eval_sid(pairs, embeddings, seed=config["seed"], filters=filters)
    else:
        raise errors.ConfigError(f"unknown task: {task}")

    for name, report in reports.items():
        path = os.path.join(out_dir, f"report_{task}_{name}.json")
        with open(path, "w", encoding="utf-8") as out:
            out.write(report.to_json())
        metrics = " ".join(f"{k}={v:.1f}" for k, v in report.metrics.items())
        print(f"{task}[{name}] n={report.n} {metrics}")
    _write_manifest(out_dir, f"evaluate-{task}", config, [])
    return 0


def cmd_match(config: dict, args) -> int:
    embeddings = import_set(_require(config, "embeddings"))
    index = build_index(embeddings)
    _, records = _load_records(_require(config, "stores.test"))
    profile = _load_profile(config)
    if args.record not in records:
        raise errors.MissingRecord(args.record)

    ctx = pool_layers(np.asarray(records[args.record]), profile)
    for sense, score in index.match_topk(ctx, args.k):
        print(f"{args.record}\t{sense}\t{score:.6f}")
    return 0


def cmd_export(config: dict, args) -> int:
    embeddings = import_set(args.input)
    export_set(embeddings, args.out_file, args.format)
    print(f"exported {len(embeddings.vectors)} vectors -> {args.out_file}")
    return 0


def cmd_analyze(config: dict, args) -> int:
    out_dir = config["output"]
    os.makedirs(out_dir, exist_ok=True)
    if args.what == "heatmap":
        all_scores = []
        for path in args.scores:
            with open(path, encoding="utf-8") as stream:
                data = json.load(stream)
            all_scores.append(
                LayerScores(data.get("model", ""), data.get("mode", "wsd"), np.asarray(data["scores"]))
            )
        write_heatmap_csv(all_scores, os.path.join(out_dir, "heatmap.csv"))
        print(f"heatmap for {len(all_scores)} model(s) -> {out_dir}/heatmap.csv")
        return 0

    # silhouette / pca group pooled contextual vectors by gold sense
    inventory = load_inventory(_require(config, "inventory"))
    profile = _load_profile(config)
    corpus, records = _test_corpus_and_records(config, args.test)

    points, labels = [], []
    for inst in corpus.instances:
        if not inst.gold_keys:
            continue
        points.append(pool_layers(np.asarray(records[inst.instance_id]), profile))
        labels.append(sorted(inst.gold_keys)[0])
    points = np.asarray(points)
    if args.what == "silhouette":
        score = silhouette(points, labels)
        with open(os.path.join(out_dir, "silhouette.json"), "w", encoding="utf-8") as out:
            json.dump({"silhouette": score, "n": len(labels)}, out)
        print(f"silhouette={score:.3f} over {len(labels)} instances")
    elif args.what == "pca":
        coords = pca_coords(points, k=2, seed=config["seed"])
        path = os.path.join(out_dir, "pca.csv")
        with open(path, "w", encoding="utf-8") as out:
            out.write("sense,x,y\n")
            for label, (x, y) in zip(labels, coords):
                out.write(f"{label},{x:.6f},{y:.6f}\n")
        print(f"pca coords for {len(labels)} instances -> {path}")
    else:
        raise errors.ConfigError(f"unknown analyze target: {args.what}")
    return 0


# ---------------------------------------------------------------- entry


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sensevec", description=__doc__)
    parser.add_argument("--config", help="YAML/JSON pipeline config")
    parser.add_argument("--set", action="append", default=[], metavar="FIELD=VALUE",
                        help="override a config field (dotted path)")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="random seed (overrides config)")
    parser.add_argument("--workers", type=int, help="worker count (overrides config)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("probe", help="per-layer probing scores")

    p_profile = sub.add_parser("profile", help="build a layer-weight profile")
    p_profile.add_argument("--scores", help="layer_scores.json from probe")
    p_profile.add_argument("--t", type=float, help="softmax temperature")
    p_profile.add_argument("--fixed", help="fixed pooling kind")
    p_profile.add_argument("--layers", type=int, help="layer count for --fixed")

    sub.add_parser("learn", help="learn, propagate and merge sense vectors")

    p_eval = sub.add_parser("evaluate", help="run a task harness")
    p_eval.add_argument("task", choices=["wsd", "usm", "wic", "gwcs", "scws", "sid"])
    p_eval.add_argument("--baseline", choices=["mfs"], help="wsd: score a baseline instead")
    p_eval.add_argument("--test", help="restrict to one named test set")

    p_match = sub.add_parser("match", help="print top-k matches for a store record")
    p_match.add_argument("--record", required=True)
    p_match.add_argument("--k", type=int, default=5)

    p_export = sub.add_parser("export", help="convert an embedding set")
    p_export.add_argument("--input", required=True)
    p_export.add_argument("--format", choices=["text", "binary"], default="text")
    p_export.add_argument("--out-file", required=True)

    p_an = sub.add_parser("analyze", help="heatmap / silhouette / pca exports")
    p_an.add_argument("what", choices=["heatmap", "silhouette", "pca"])
    p_an.add_argument("--scores", nargs="*", default=[], help="layer score JSONs (heatmap)")
    p_an.add_argument("--test", help="test set name (silhouette/pca)")
    return parser


_COMMANDS = {
    "probe": cmd_probe,
    "profile": cmd_profile,
    "learn": cmd_learn,
    "evaluate": cmd_evaluate,
    "match": cmd_match,
    "export": cmd_export,
    "analyze": cmd_analyze,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.set)
        if args.out:
            config["output"] = args.out
        if args.seed is not None:
            config["seed"] = args.seed
        if args.workers is not None:
            config["workers"] = args.workers
        return _COMMANDS[args.command](config, args)
    except errors.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (errors.SensevecError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3

if __name__ == "__main__":
    sys.exit(main())
