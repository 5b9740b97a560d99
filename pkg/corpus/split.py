"""
Stratified, seeded train/validation/test splitting.
"""
import logging
import math
from typing import Dict, List, Sequence, Tuple

from corpus.rng import SplitMix64
from models.samples import DatasetSplit, TextSample
from sentinel.errors import DataError

logger = logging.getLogger(__name__)


def _largest_remainder(total: int, fractions: Sequence[float]) -> List[int]:
    quotas = [total * f for f in fractions]
    counts = [math.floor(q) for q in quotas]
    order = sorted(range(len(quotas)), key=lambda s: (-(quotas[s] - counts[s]), s))
    for s in order[: total - sum(counts)]:
        counts[s] += 1
    return counts


def _allocate(class_sizes: Dict[int, int], fractions: Sequence[float]) -> Dict[int, List[int]]:
    """Per-class split counts that also add up to the global split sizes.

    Every class starts from the floor of its quota; the leftover samples are
    placed with the Gale-Ryser construction (largest row demand first, into
    the splits with the largest remaining demand), so each per-class count
    stays within one sample of its exact quota.
    """
    total = sum(class_sizes.values())
    split_totals = _largest_remainder(total, fractions)
    counts = {c: [math.floor(n * f) for f in fractions] for c, n in class_sizes.items()}
    frac = {c: [n * f - math.floor(n * f) for f in fractions] for c, n in class_sizes.items()}
    row_need = {c: n - sum(counts[c]) for c, n in class_sizes.items()}
    col_need = [split_totals[s] - sum(counts[c][s] for c in counts) for s in range(len(fractions))]

    for c in sorted(row_need, key=lambda k: (-row_need[k], k)):
        ranked = sorted(
            (s for s in range(len(fractions)) if fractions[s] > 0),
            key=lambda s: (-col_need[s], -frac[c][s], s),
        )
        for s in ranked[: row_need[c]]:
            counts[c][s] += 1
            col_need[s] -= 1
    return counts


def stratified_split(samples: Sequence[TextSample], seed: int, fractions: Tuple[float, float, float]) -> DatasetSplit:
    """Split samples into train/validation/test preserving class proportions."""
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise DataError(f"fractions must be three non-negative numbers, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DataError(f"fractions must sum to 1, got {sum(fractions)}")

    by_class: Dict[int, List[int]] = {}
    for index, sample in enumerate(samples):
        by_class.setdefault(sample.label, []).append(index)
    class_sizes = {c: len(idx) for c, idx in sorted(by_class.items())}

    needed = sum(1 for f in fractions if f > 0)
    if any(n < needed for n in class_sizes.values()):
        raise DataError(
            f"class counts {class_sizes} too small for fractions {fractions}: "
            f"each class needs at least {needed} samples"
        )

    rng = SplitMix64(seed)
    counts = _allocate(class_sizes, fractions)
    parts: List[List[TextSample]] = [[], [], []]
    for label in sorted(by_class):
        order = rng.shuffle(list(by_class[label]))
        start = 0
        for s, count in enumerate(counts[label]):
            parts[s].extend(samples[i] for i in order[start:start + count])
            start += count
    for part in parts:
        rng.shuffle(part)

    logger.info(
        "Stratified split (seed %d): train=%d validation=%d test=%d",
        seed, len(parts[0]), len(parts[1]), len(parts[2]),
    )
    return DatasetSplit(train=parts[0], validation=parts[1], test=parts[2], seed=seed, fractions=fractions)
