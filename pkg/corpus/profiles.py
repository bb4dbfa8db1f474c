"""Regression corpus of radial profiles."""
from dataclasses import dataclass

from families import cone_profile, fs_profile, zero_profile
from radial_core import GridSpec, RadialProfile, normalize_mass, scale_profile


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    kind: str  # "zero", "cone" or "fs"
    n: int
    param: float = 0.0
    bounded: bool = True


CORPUS = [
    CorpusEntry("zero-1", "zero", 1),
    CorpusEntry("zero-2", "zero", 2),
    CorpusEntry("zero-3", "zero", 3),
    CorpusEntry("cone-1-0.5", "cone", 1, 0.5, bounded=False),
    CorpusEntry("cone-2-0.5", "cone", 2, 0.5, bounded=False),
    CorpusEntry("cone-2-1", "cone", 2, 1.0, bounded=False),
    CorpusEntry("fs-1-1", "fs", 1, 1.0),
    CorpusEntry("fs-2-0.1", "fs", 2, 0.1),
    CorpusEntry("fs-2-0.5", "fs", 2, 0.5),
    CorpusEntry("fs-2-1", "fs", 2, 1.0),
    CorpusEntry("fs-2-2", "fs", 2, 2.0),
    CorpusEntry("fs-3-1", "fs", 3, 1.0),
]

# Built profiles, keyed by (name, grid)
_profiles: dict[tuple[str, GridSpec], RadialProfile] = {}


def find_entry(name: str) -> CorpusEntry | None:
    """Look up a corpus entry by name."""
    return next((e for e in CORPUS if e.name == name), None)


def build_entry(entry: CorpusEntry, grid_spec: GridSpec | None = None) -> RadialProfile:
    """Profile for a corpus entry, built once per grid."""
    spec = grid_spec or GridSpec()
    key = (entry.name, spec)
    if key not in _profiles:
        if entry.kind == "zero":
            profile = zero_profile(entry.n, spec)
        elif entry.kind == "cone":
            profile = cone_profile(entry.n, entry.param, spec)
        else:
            profile = fs_profile(entry.n, entry.param, spec)
        _profiles[key] = profile
    return _profiles[key]


def corpus_profiles(
    n: int | None = None,
    bounded_only: bool = False,
    grid_spec: GridSpec | None = None,
) -> list[RadialProfile]:
    """Corpus profiles filtered by dimension and boundedness."""
    entries = [e for e in CORPUS if (n is None or e.n == n) and (e.bounded or not bounded_only)]
    return [build_entry(e, grid_spec) for e in entries]


def unit_mass_corpus(n: int, grid_spec: GridSpec | None = None) -> list[RadialProfile]:
    """Nonzero corpus profiles of dimension n rescaled to unit Monge-Ampère mass."""
    out = []
    for entry in CORPUS:
        if entry.n != n or entry.kind == "zero":
            continue
        profile = build_entry(entry, grid_spec)
        out.append(scale_profile(profile, 1.0 / entry.param) if entry.kind == "cone" else normalize_mass(profile))
    return out


def reset_corpus_cache() -> None:
    """Drop built profiles (for testing)."""
    _profiles.clear()
