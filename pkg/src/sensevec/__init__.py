"""Sense embeddings from per-layer contextual representations.

Submodules: inventory (sense graph), corpus (annotated corpora),
embedstore (binary layer dumps + pooling), profiles (probing and layer
weighting), senselearn (centroids, propagation, gloss merge), senseindex
(exact cosine 1NN), evaltasks (task harnesses and metrics), cli.
"""

__version__ = "0.1.0"

from . import errors
from .corpus import (
    AnnotatedCorpus,
    AnnotationInstance,
    concat_corpora,
    corpus_stats,
    parse_framework_xml,
    read_corpus_jsonl,
    restrict_to_seen,
    write_corpus_jsonl,
)
from .embedstore import (
    GLOSS_PREFIX,
    LayerEmbeddingRecord,
    StoreHeader,
    average_vectors,
    load_store_dict,
    pool_layers,
    read_store,
    write_store,
)
from .evaltasks import (
    ContextPairInstance,
    EvalReport,
    correlation,
    eval_gwcs,
    eval_scws,
    eval_sid,
    eval_usm,
    eval_wic,
    eval_wsd,
    mfs_baseline,
    pair_similarity,
    pca_coords,
    rank_metrics,
    silhouette,
    svd_reduce,
    wic_predict,
)
from .inventory import SenseInventory, SenseKey, Synset, dump_inventory, load_inventory
from .profiles import (
    LayerScores,
    SenseProfile,
    fixed_profile,
    probe_layers,
    softmax_weights,
)
from .senseindex import SenseIndex, build_index
from .senselearn import (
    SenseEmbeddingSet,
    embed_glosses,
    export_set,
    import_set,
    learn_from_annotations,
    merge_gloss,
    propagate,
    to_synset_indirect,
)
