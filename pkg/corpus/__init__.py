from .profiles import (
    CorpusEntry,
    CORPUS,
    find_entry,
    build_entry,
    corpus_profiles,
    unit_mass_corpus,
    reset_corpus_cache,
)
from .acceptance import critical_path

__all__ = [
    "CorpusEntry",
    "CORPUS",
    "find_entry",
    "build_entry",
    "corpus_profiles",
    "unit_mass_corpus",
    "reset_corpus_cache",
    "critical_path",
]
