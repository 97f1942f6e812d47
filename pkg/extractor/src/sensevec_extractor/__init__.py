"""Transformer glue for the sense-embedding toolkit: per-layer extraction
into LMSE stores plus source-resource conversion."""

__version__ = "0.1.0"

from .encoder import Encoder
from .extract import ExtractionJob, extract_glosses, extract_pairs, extract_spans
