"""
Tests for spoof permutation generation and watch matching.
"""
import random
import re

import pytest

from models.permutation import COMMON_TLDS, Technique
from sentinel import spoofgen
from sentinel.errors import DataError

LABEL_RE = re.compile(r"^[a-z0-9](?:[a-z0-9-]{0,61}[a-z0-9])?$")
# exempt from the two-edit bound on the second-level label
EDIT_UNBOUNDED = {Technique.SUBDOMAIN, Technique.HYPHENATION, Technique.ADDITION, Technique.TLD_SWAP}


def _sld(domain: str) -> str:
    return domain.rsplit(".", 1)[0]


def _random_origin(rng: random.Random) -> str:
    length = rng.randint(2, 14)
    sld = "".join(rng.choice("abcdefghijklmnopqrstuvwxyz0123456789") for _ in range(length))
    return f"{sld}.{rng.choice(COMMON_TLDS)}"


def test_amazon_examples():
    candidates = {(p.technique, p.candidate) for p in spoofgen.generate("amazon.com")}
    assert (Technique.HOMOGLYPH, "amaz0n.com") in candidates
    assert (Technique.OMISSION, "amaon.com") in candidates
    assert (Technique.TRANSPOSITION, "maazon.com") in candidates
    assert (Technique.TLD_SWAP, "amazon.net") in candidates
    assert (Technique.HOMOGLYPH, "arnazon.com") in candidates


def test_output_is_sorted_and_unique():
    permutations = spoofgen.generate("paypal.com")
    keys = [(p.technique.value, p.candidate) for p in permutations]
    assert keys == sorted(set(keys))


def test_technique_subset():
    permutations = spoofgen.generate("bank.com", [Technique.OMISSION])
    assert [p.candidate for p in permutations] == ["ank.com", "bak.com", "ban.com", "bnk.com"]


def test_tld_swap_uses_embedded_list():
    swaps = spoofgen.generate("bank.com", [Technique.TLD_SWAP])
    assert len(swaps) == len(COMMON_TLDS) - 1
    assert all(_sld(p.candidate) == "bank" for p in swaps)


def test_subdomain_and_hyphenation():
    subs = [p.candidate for p in spoofgen.generate("abc.com", [Technique.SUBDOMAIN])]
    assert subs == ["a.bc.com", "ab.c.com"]
    hyphens = [p.candidate for p in spoofgen.generate("abc.com", [Technique.HYPHENATION])]
    assert hyphens == ["a-bc.com", "ab-c.com"]


def test_split_registrable_errors():
    assert spoofgen.split_registrable("amazon.com") == ("amazon", "com")
    for bad in ("amazon", ".com", "www.amazon.com", "amazon."):
        with pytest.raises(DataError):
            spoofgen.split_registrable(bad)


def test_permutation_invariants_on_fuzzed_origins():
    rng = random.Random(2024)
    for _ in range(1000):
        origin = _random_origin(rng)
        origin_sld = _sld(origin)
        permutations = spoofgen.generate(origin)
        counts = {t: 0 for t in Technique}
        for p in permutations:
            counts[p.technique] += 1
            assert p.candidate != origin
            assert all(LABEL_RE.match(label) for label in p.candidate.split("."))
            if p.technique not in EDIT_UNBOUNDED:
                cand_sld, _ = spoofgen.split_registrable(p.candidate)
                assert spoofgen.damerau_levenshtein(cand_sld, origin_sld) <= 2, p
            if p.technique == Technique.OMISSION:
                assert len(_sld(p.candidate)) == len(origin_sld) - 1
            elif p.technique == Technique.BITSQUATTING:
                cand_sld = _sld(p.candidate)
                diffs = [(a, b) for a, b in zip(cand_sld, origin_sld) if a != b]
                assert len(cand_sld) == len(origin_sld) and len(diffs) == 1
                xor = ord(diffs[0][0]) ^ ord(diffs[0][1])
                assert xor & (xor - 1) == 0
            elif p.technique == Technique.TRANSPOSITION:
                cand_sld = _sld(p.candidate)
                positions = [i for i, (a, b) in enumerate(zip(cand_sld, origin_sld)) if a != b]
                assert len(positions) == 2 and positions[1] == positions[0] + 1
                i = positions[0]
                assert cand_sld[i] == origin_sld[i + 1] and cand_sld[i + 1] == origin_sld[i]
        assert counts[Technique.OMISSION] <= len(origin_sld)
        assert counts[Technique.TRANSPOSITION] <= len(origin_sld) - 1


def test_generation_is_deterministic():
    rng = random.Random(5)
    for _ in range(50):
        origin = _random_origin(rng)
        assert spoofgen.generate(origin) == spoofgen.generate(origin)


def test_watch_index_size_bound():
    index = spoofgen.build_watch_index(["amazon.com"], [Technique.OMISSION])
    assert len(index) <= len("amazon")
    assert "amaon.com" in index
    assert index.get("amaon.com") == (("amazon.com", Technique.OMISSION),)


def test_watch_index_requires_brands():
    with pytest.raises(DataError):
        spoofgen.build_watch_index([])


def test_match_stream_keeps_first_sighting():
    index = spoofgen.build_watch_index(["amazon.com", "paypal.com"])
    observed = [
        ("example.org", 1),
        ("paypa1.com", 50),
        ("amaz0n.com", 40),
        ("amaz0n.com", 10),
        ("amazon.com", 5),
    ]
    hits = spoofgen.match_stream(index, observed)
    # amaz0n.com is both a homoglyph and a keyboard replacement of amazon.com
    assert [(h.observed, h.brand, h.permutation.technique, h.first_seen) for h in hits] == [
        ("amaz0n.com", "amazon.com", Technique.HOMOGLYPH, 10),
        ("amaz0n.com", "amazon.com", Technique.REPLACEMENT, 10),
        ("paypa1.com", "paypal.com", Technique.HOMOGLYPH, 50),
    ]


def test_damerau_levenshtein():
    assert spoofgen.damerau_levenshtein("amazon", "maazon") == 1
    assert spoofgen.damerau_levenshtein("amazon", "amaon") == 1
    assert spoofgen.damerau_levenshtein("ca", "abc") == 3
    assert spoofgen.damerau_levenshtein("", "abc") == 3
    for p in spoofgen.generate("wellsfargo.com", [Technique.TRANSPOSITION, Technique.REPLACEMENT]):
        assert spoofgen.damerau_levenshtein(_sld(p.candidate), "wellsfargo") == 1
