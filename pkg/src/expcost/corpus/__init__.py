"""Case-study programs with their cost oracles and certificates."""
from .entries import EXACT, UPPER, CorpusEntry, corpus_entries, get_entry
from .loader import corpus_dir, read_include, read_source
from .oracles import (
    oracle_coupon,
    oracle_harmonic,
    oracle_log_factorial,
    oracle_meld,
    oracle_quicksort_entropy,
    oracle_quicksort_t,
    quicksort_closed_bound,
)

__all__ = [
    "EXACT", "UPPER", "CorpusEntry", "corpus_entries", "get_entry", "corpus_dir",
    "read_include", "read_source", "oracle_coupon", "oracle_harmonic",
    "oracle_log_factorial", "oracle_meld", "oracle_quicksort_entropy",
    "oracle_quicksort_t", "quicksort_closed_bound",
]
