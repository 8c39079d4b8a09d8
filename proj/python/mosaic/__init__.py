"""Python bindings for the mosaic C++ core."""

import json as _json
from pkgutil import extend_path as _extend_path

# Lets an in-tree build directory supply the compiled module.
__path__ = _extend_path(__path__, __name__)

from ._mosaic import (  # noqa: E402
    MosaicError,
    __version__,
    count_window,
    damerau_levenshtein,
    hamming,
    jaccard_ngram,
    jaccard_token,
    kendall_tau,
    lcs_distance,
    levenshtein,
    load_corpus,
    multiset_overlap_distance,
    nu_eq,
    repeated_windows,
    rho,
    roc_auc,
    save_corpus,
    simulate_dedup,
    smooth_curve,
)
from . import _mosaic


def scan_fuzzy(docs, targets, **config):
    """Scan `docs` for fuzzy copies of `targets` ({id: tokens} or a list of
    token lists). Keyword arguments are scan settings such as max_distance or
    sample_fraction. Returns the report as a dict."""
    if isinstance(targets, dict):
        pairs = list(targets.items())
    else:
        pairs = [(f"t{i}", list(t)) for i, t in enumerate(targets)]
    return _json.loads(_mosaic._scan_fuzzy(docs, pairs, _json.dumps(config)))


def generate(tokens, algo, params=None, seed=0, canary_id="c0"):
    """Fuzzy duplicates of one canary. Returns (dups, achieved_tau); dups[0]
    is the canary itself."""
    return _mosaic._generate(canary_id, list(tokens), algo, _json.dumps(params or {}), seed)


__all__ = [
    "MosaicError",
    "count_window",
    "damerau_levenshtein",
    "generate",
    "hamming",
    "jaccard_ngram",
    "jaccard_token",
    "kendall_tau",
    "lcs_distance",
    "levenshtein",
    "load_corpus",
    "multiset_overlap_distance",
    "nu_eq",
    "repeated_windows",
    "rho",
    "roc_auc",
    "save_corpus",
    "scan_fuzzy",
    "simulate_dedup",
    "smooth_curve",
]
