"""
Reference domain generation algorithms.

Four deterministic archetypes stand in for real malware families: an
arithmetic PRNG, a hash digest, a wordlist concatenation and a
date-seeded PRNG. None of them reproduces a real family's domains.
"""
import datetime
import logging
from typing import Dict, Iterator, List, Sequence

from corpus.rng import SplitMix64
from models.dga import DgaConfig, DgaFamily, FamilyDescriptor
from models.permutation import Technique
from models.samples import SampleKind, TextSample
from sentinel import spoofgen
from sentinel.errors import DataError

logger = logging.getLogger(__name__)

LCG_MULTIPLIER = 1664525
LCG_INCREMENT = 1013904223
MASK32 = (1 << 32) - 1

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211
MASK64 = (1 << 64) - 1

WORDLIST = (
    "able", "acid", "army", "away", "baby", "bank", "bird", "blue",
    "boat", "book", "cash", "city", "club", "code", "cold", "cool",
    "copy", "dark", "data", "dawn", "deal", "door", "down", "east",
    "easy", "edge", "face", "fair", "farm", "fast", "fire", "fish",
    "flat", "food", "free", "gold", "good", "green", "hall", "hand",
    "hard", "home", "hope", "iron", "island", "jump", "just", "keep",
    "king", "lake", "land", "last", "life", "light", "line", "lion",
    "live", "lock", "long", "mail", "main", "moon", "north", "ocean",
)

LURE_TOKENS = (
    "account", "auth", "banking", "confirm", "login", "password",
    "secure", "signin", "update", "verify", "wallet", "webscr",
)

FAMILY_DESCRIPTORS = (
    FamilyDescriptor(
        name=DgaFamily.LCG_CHAR,
        parameters={"seed": "32-bit LCG start state", "length": "label length (4-32)", "tld": "suffix"},
        archetype="arithmetic PRNG emitting one letter per state step",
    ),
    FamilyDescriptor(
        name=DgaFamily.HASH_HEX,
        parameters={"seed": "64-bit integer mixed into every digest", "length": "label length (4-32)", "tld": "suffix"},
        archetype="hex digest of a counter (FNV-1a 64)",
    ),
    FamilyDescriptor(
        name=DgaFamily.WORDLIST_CONCAT,
        parameters={"seed": "SplitMix64 seed for word picks", "tld": "suffix"},
        archetype="two dictionary words concatenated",
    ),
    FamilyDescriptor(
        name=DgaFamily.DATE_SEEDED,
        parameters={"date": "(year, month, day) folded into the LCG seed", "length": "label length (4-32)", "tld": "suffix"},
        archetype="date-seeded arithmetic PRNG",
    ),
)


def list_families() -> List[FamilyDescriptor]:
    return list(FAMILY_DESCRIPTORS)


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & MASK64
    return h


def _lcg_labels(seed: int, length: int) -> Iterator[str]:
    x = seed & MASK32
    while True:
        chars = []
        for _ in range(length):
            x = (LCG_MULTIPLIER * x + LCG_INCREMENT) & MASK32
            chars.append(chr(ord("a") + x % 26))
        yield "".join(chars)


def _hash_labels(seed: int, length: int) -> Iterator[str]:
    i = 0
    while True:
        digest = f"{fnv1a64(f'{seed}:{i}'.encode('ascii')):016x}"
        while len(digest) < length:
            digest += f"{fnv1a64(digest[-16:].encode('ascii')):016x}"
        yield digest[:length]
        i += 1


def _word_labels(seed: int) -> Iterator[str]:
    rng = SplitMix64(seed)
    while True:
        first = WORDLIST[rng.next_below(len(WORDLIST))]
        second = WORDLIST[rng.next_below(len(WORDLIST))]
        yield first + second


def _date_seed(date) -> int:
    year, month, day = date
    try:
        datetime.date(year, month, day)
    except ValueError as e:
        raise DataError(f"invalid date {date}: {e}") from e
    return year * 10000 + month * 100 + day


def _labels(config: DgaConfig) -> Iterator[str]:
    if config.family == DgaFamily.LCG_CHAR:
        return _lcg_labels(config.seed, config.length)
    if config.family == DgaFamily.HASH_HEX:
        return _hash_labels(config.seed, config.length)
    if config.family == DgaFamily.WORDLIST_CONCAT:
        return _word_labels(config.seed)
    return _lcg_labels(_date_seed(config.date), config.length)


def _attempt_cap(count: int) -> int:
    return count * 100 + 1000


def generate_dga(config: DgaConfig) -> List[TextSample]:
    """Exactly `config.count` distinct labeled malicious domains."""
    seen: Dict[str, None] = {}
    labels = _labels(config)
    for _ in range(_attempt_cap(config.count)):
        domain = f"{next(labels)}.{config.tld}"
        seen.setdefault(domain, None)
        if len(seen) == config.count:
            break
    if len(seen) < config.count:
        raise DataError(
            f"{config.family.value} produced only {len(seen)} distinct domains of {config.count} requested"
        )
    source = f"dga:{config.family.value}"
    samples = [TextSample(text=d, label=1, kind=SampleKind.DOMAIN, source=source) for d in seen]
    logger.info("Generated %d %s domains (seed=%d)", len(samples), config.family.value, config.seed)
    return samples


def _split_url(url: str):
    scheme, sep, rest = url.partition("://")
    if not sep:
        scheme, rest = "", url
    cut = len(rest)
    for delimiter in "/?#":
        position = rest.find(delimiter)
        if position != -1:
            cut = min(cut, position)
    prefix = f"{scheme}://" if scheme else ""
    return prefix, rest[:cut], rest[cut:]


def generate_phishing_urls(
    benign_urls: Sequence[str],
    brands: Sequence[str],
    seed: int,
    count: int,
) -> List[TextSample]:
    """Synthetic phishing URLs: a benign URL's host replaced by a brand spoof,
    with credential-lure path segments prepended to its path."""
    if not benign_urls:
        raise DataError("at least one benign URL is required")
    if not brands:
        raise DataError("at least one brand domain is required")
    if count < 1:
        raise DataError(f"count must be positive, got {count}")

    spoofs = {}
    for brand in brands:
        spoofs[brand] = [
            p.candidate for p in spoofgen.generate(brand) if p.technique != Technique.TLD_SWAP
        ] or [p.candidate for p in spoofgen.generate(brand)]

    rng = SplitMix64(seed)
    seen: Dict[str, None] = {}
    for _ in range(_attempt_cap(count)):
        prefix, _host, path = _split_url(benign_urls[rng.next_below(len(benign_urls))])
        candidates = spoofs[brands[rng.next_below(len(brands))]]
        host = candidates[rng.next_below(len(candidates))]
        lure = "/".join(
            LURE_TOKENS[rng.next_below(len(LURE_TOKENS))] for _ in range(1 + rng.next_below(2))
        )
        if path and not path.startswith("/"):
            path = "/" + path
        seen.setdefault(f"{prefix}{host}/{lure}{path}", None)
        if len(seen) == count:
            break
    if len(seen) < count:
        raise DataError(f"produced only {len(seen)} distinct phishing URLs of {count} requested")
    logger.info("Generated %d synthetic phishing URLs (seed=%d)", len(seen), seed)
    return [TextSample(text=u, label=1, kind=SampleKind.URL, source="synthetic:phish") for u in seen]
