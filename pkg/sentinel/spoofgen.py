"""
Early-warning stage: fuzzy spoof permutations of protected domains and
exact matching of newly observed domains against them.

Public suffixes are handled by splitting on the last dot only, so
multi-label suffixes such as co.uk are not recognized. The pipeline is
ASCII-only; Unicode confusables are not generated.
"""
import logging
import re
from types import MappingProxyType
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Set, Tuple

from models.permutation import ALL_TECHNIQUES, COMMON_TLDS, Permutation, PermutationHit, Technique
from sentinel.errors import DataError

logger = logging.getLogger(__name__)

_LABEL_RE = re.compile(r"^[a-z0-9](?:[a-z0-9-]{0,61}[a-z0-9])?$")
LABEL_CHARS = frozenset("abcdefghijklmnopqrstuvwxyz0123456789-")
ADDITION_CHARS = "abcdefghijklmnopqrstuvwxyz0123456789"
VOWELS = "aeiou"

QWERTY_ADJACENT = {
    "1": "2q", "2": "3wq1", "3": "4ew2", "4": "5re3", "5": "6tr4",
    "6": "7yt5", "7": "8uy6", "8": "9iu7", "9": "0oi8", "0": "po9",
    "q": "12wa", "w": "3esaq2", "e": "4rdsw3", "r": "5tfde4", "t": "6ygfr5",
    "y": "7uhgt6", "u": "8ijhy7", "i": "9okju8", "o": "0plki9", "p": "lo0",
    "a": "qwsz", "s": "edxzaw", "d": "rfcxse", "f": "tgvcdr", "g": "yhbvft",
    "h": "ujnbgy", "j": "ikmnhu", "k": "olmji", "l": "kop",
    "z": "asx", "x": "zsdc", "c": "xdfv", "v": "cfgb", "b": "vghn",
    "n": "bhjm", "m": "njk",
}

# ASCII look-alikes only
HOMOGLYPHS = {
    "o": ("0",), "l": ("1",), "i": ("1",), "e": ("3",), "a": ("4",),
    "s": ("5",), "b": ("8",), "g": ("9",), "m": ("rn",), "w": ("vv",),
}


def split_registrable(domain: str) -> Tuple[str, str]:
    """Split a registrable domain into (second-level label, suffix)."""
    sld, dot, tld = domain.rpartition(".")
    if not dot or not tld:
        raise DataError(f"{domain!r} has no public suffix")
    if not sld:
        raise DataError(f"{domain!r} has an empty second-level label")
    if "." in sld:
        raise DataError(f"{domain!r} is not a registrable domain (expected label.suffix)")
    return sld, tld


def is_valid_candidate(domain: str) -> bool:
    return all(_LABEL_RE.match(label) for label in domain.split("."))


def _addition(sld: str, tld: str) -> Iterator[str]:
    for c in ADDITION_CHARS:
        yield f"{sld}{c}.{tld}"


def _bitsquatting(sld: str, tld: str) -> Iterator[str]:
    for i, ch in enumerate(sld):
        for bit in range(8):
            flipped = ord(ch) ^ (1 << bit)
            if flipped > 0x7F:
                continue
            squat = chr(flipped).lower()
            if squat in LABEL_CHARS and squat != ch:
                yield f"{sld[:i]}{squat}{sld[i + 1:]}.{tld}"


def _homoglyph(sld: str, tld: str) -> Iterator[str]:
    for i, ch in enumerate(sld):
        for glyph in HOMOGLYPHS.get(ch, ()):
            yield f"{sld[:i]}{glyph}{sld[i + 1:]}.{tld}"


def _hyphenation(sld: str, tld: str) -> Iterator[str]:
    for i in range(1, len(sld)):
        yield f"{sld[:i]}-{sld[i:]}.{tld}"


def _insertion(sld: str, tld: str) -> Iterator[str]:
    for i, ch in enumerate(sld):
        for key in QWERTY_ADJACENT.get(ch, ""):
            yield f"{sld[:i]}{key}{sld[i:]}.{tld}"
            yield f"{sld[:i + 1]}{key}{sld[i + 1:]}.{tld}"


def _omission(sld: str, tld: str) -> Iterator[str]:
    for i in range(len(sld)):
        shorter = sld[:i] + sld[i + 1:]
        if shorter:
            yield f"{shorter}.{tld}"


def _repetition(sld: str, tld: str) -> Iterator[str]:
    for i, ch in enumerate(sld):
        yield f"{sld[:i]}{ch}{sld[i:]}.{tld}"


def _replacement(sld: str, tld: str) -> Iterator[str]:
    for i, ch in enumerate(sld):
        for key in QWERTY_ADJACENT.get(ch, ""):
            yield f"{sld[:i]}{key}{sld[i + 1:]}.{tld}"


def _subdomain(sld: str, tld: str) -> Iterator[str]:
    for i in range(1, len(sld)):
        yield f"{sld[:i]}.{sld[i:]}.{tld}"


def _transposition(sld: str, tld: str) -> Iterator[str]:
    for i in range(len(sld) - 1):
        if sld[i] != sld[i + 1]:
            yield f"{sld[:i]}{sld[i + 1]}{sld[i]}{sld[i + 2:]}.{tld}"


def _vowel_swap(sld: str, tld: str) -> Iterator[str]:
    for i, ch in enumerate(sld):
        if ch in VOWELS:
            for vowel in VOWELS:
                if vowel != ch:
                    yield f"{sld[:i]}{vowel}{sld[i + 1:]}.{tld}"


def _tld_swap(sld: str, tld: str) -> Iterator[str]:
    for suffix in COMMON_TLDS:
        if suffix != tld:
            yield f"{sld}.{suffix}"


GENERATORS: Dict[Technique, Callable[[str, str], Iterator[str]]] = {
    Technique.ADDITION: _addition,
    Technique.BITSQUATTING: _bitsquatting,
    Technique.HOMOGLYPH: _homoglyph,
    Technique.HYPHENATION: _hyphenation,
    Technique.INSERTION: _insertion,
    Technique.OMISSION: _omission,
    Technique.REPETITION: _repetition,
    Technique.REPLACEMENT: _replacement,
    Technique.SUBDOMAIN: _subdomain,
    Technique.TRANSPOSITION: _transposition,
    Technique.VOWEL_SWAP: _vowel_swap,
    Technique.TLD_SWAP: _tld_swap,
}


def generate(origin: str, techniques: Iterable[Technique] = ALL_TECHNIQUES) -> List[Permutation]:
    """All valid spoof candidates of `origin`, sorted by (technique, candidate)."""
    sld, tld = split_registrable(origin)
    found: Set[Tuple[str, str]] = set()
    for technique in set(techniques):
        for candidate in GENERATORS[technique](sld, tld):
            if candidate != origin and is_valid_candidate(candidate):
                found.add((technique.value, candidate))
    permutations = [
        Permutation(technique=Technique(tech), candidate=candidate, origin=origin)
        for tech, candidate in sorted(found)
    ]
    logger.debug("Generated %d permutations for %s", len(permutations), origin)
    return permutations


class WatchIndex:
    """Immutable candidate -> ((brand, technique), ...) lookup."""

    def __init__(self, entries: Dict[str, Tuple[Tuple[str, Technique], ...]]):
        self._entries: Mapping[str, Tuple[Tuple[str, Technique], ...]] = MappingProxyType(dict(entries))

    def __contains__(self, candidate: str) -> bool:
        return candidate in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, candidate: str) -> Tuple[Tuple[str, Technique], ...]:
        return self._entries.get(candidate, ())

    def candidates(self) -> List[str]:
        return sorted(self._entries)


def build_watch_index(brands: Iterable[str], techniques: Iterable[Technique] = ALL_TECHNIQUES) -> WatchIndex:
    brands = list(dict.fromkeys(brands))
    if not brands:
        raise DataError("at least one brand domain is required")
    techniques = set(techniques)
    entries: Dict[str, Set[Tuple[str, Technique]]] = {}
    for brand in brands:
        for permutation in generate(brand, techniques):
            entries.setdefault(permutation.candidate, set()).add((brand, permutation.technique))
    index = WatchIndex({
        candidate: tuple(sorted(owners, key=lambda o: (o[0], o[1].value)))
        for candidate, owners in entries.items()
    })
    logger.info("Watch index built: %d candidates for %d brands", len(index), len(brands))
    return index


def match_stream(index: WatchIndex, observed: Iterable[Tuple[str, int]]) -> List[PermutationHit]:
    """Hits for observed domains that exactly equal a watched candidate."""
    first_seen: Dict[Tuple[str, str, Technique], int] = {}
    for domain, ts in observed:
        for brand, technique in index.get(domain):
            key = (domain, brand, technique)
            if key not in first_seen or ts < first_seen[key]:
                first_seen[key] = ts
    hits = [
        PermutationHit(
            observed=domain,
            permutation=Permutation(technique=technique, candidate=domain, origin=brand),
            brand=brand,
            first_seen=ts,
        )
        for (domain, brand, technique), ts in first_seen.items()
    ]
    hits.sort(key=lambda h: (h.first_seen, h.observed, h.brand, h.permutation.technique.value))
    logger.info("Matched %d permutation hits", len(hits))
    return hits


def damerau_levenshtein(a: str, b: str) -> int:
    """Optimal string alignment distance (adjacent transpositions count 1)."""
    rows = len(a) + 1
    cols = len(b) + 1
    dist = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        dist[i][0] = i
    for j in range(cols):
        dist[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            dist[i][j] = min(dist[i - 1][j] + 1, dist[i][j - 1] + 1, dist[i - 1][j - 1] + cost)
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                dist[i][j] = min(dist[i][j], dist[i - 2][j - 2] + 1)
    return dist[-1][-1]
