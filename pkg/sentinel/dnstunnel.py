"""
DNS tunneling detection.

Per-query payload features plus per-source request frequency, combined
by weighted scoring, aggregated per (source, registered domain, window)
and post-filtered by whitelist and blacklist suffixes.
"""
import logging
import math
import re
from collections import Counter
from typing import Dict, Iterable, List, Sequence, Tuple

from models.samples import DnsQueryRecord, QType
from models.tunnel import TunnelAlert, TunnelConfig, TunnelFeatures, Verdict

logger = logging.getLogger(__name__)

VOWELS = frozenset("aeiou")
CONSONANTS = frozenset("abcdefghijklmnopqrstuvwxyz") - VOWELS
DIGITS = frozenset("0123456789")
SUSPICIOUS_QTYPES = frozenset({QType.TXT, QType.NULL, QType.CNAME})
DNS_PORT = 53

WindowKey = Tuple[str, str, int]


def registered_domain(qname: str) -> str:
    """Final two labels, the registered-domain approximation."""
    labels = qname.rstrip(".").split(".")
    return ".".join(labels[-2:])


def analyzed_part(qname: str) -> Tuple[str, bool]:
    """(qname minus its registered domain, short-qname flag)."""
    labels = qname.rstrip(".").split(".")
    if len(labels) < 2:
        return qname, True
    return ".".join(labels[:-2]), False


def shannon_entropy(text: str) -> float:
    """Bits per character of `text`'s character histogram."""
    if not text:
        return 0.0
    total = len(text)
    entropy = 0.0
    for count in Counter(text).values():
        p = count / total
        entropy -= p * math.log2(p)
    return entropy


_RUN_CACHE: Dict[frozenset, "re.Pattern"] = {}


def longest_run(text: str, charset: frozenset) -> int:
    pattern = _RUN_CACHE.get(charset)
    if pattern is None:
        pattern = re.compile("[" + re.escape("".join(sorted(charset))) + "]+")
        _RUN_CACHE[charset] = pattern
    return max((len(m) for m in pattern.findall(text)), default=0)


def window_key(record: DnsQueryRecord, window: int) -> WindowKey:
    return record.src, registered_domain(record.qname), record.ts // (window * 1000)


def window_counts(records: Iterable[DnsQueryRecord], window: int) -> Counter:
    """Queries per (src, registered domain, tumbling window bucket)."""
    return Counter(window_key(record, window) for record in records)


def extract_features(record: DnsQueryRecord, context: Counter, window: int = 60) -> TunnelFeatures:
    part, short = analyzed_part(record.qname)
    letters = part.replace(".", "")
    return TunnelFeatures(
        qname_len=len(part),
        unique_chars=len(set(letters)),
        max_consonants=longest_run(part, CONSONANTS),
        max_digits=longest_run(part, DIGITS),
        entropy=shannon_entropy(letters),
        payload_len=record.payload_len,
        freq=context.get(window_key(record, window), 0),
        qtype_flag=int(record.qtype in SUSPICIOUS_QTYPES),
        port_flag=int(record.dst_port != DNS_PORT),
        short_qname=short,
    )


def normalized_features(features: TunnelFeatures, config: TunnelConfig) -> Dict[str, float]:
    caps = config.caps
    return {
        "entropy": min(features.entropy / caps.entropy, 1.0),
        "freq": min(features.freq / caps.freq, 1.0),
        "qname_len": min(features.qname_len / caps.qname_len, 1.0),
        "qtype": float(features.qtype_flag),
        "unique_chars": min(features.unique_chars / caps.unique_chars, 1.0),
        "max_run": min(features.max_run / caps.max_run, 1.0),
        "port": float(features.port_flag),
    }


def score_query(features: TunnelFeatures, config: TunnelConfig) -> float:
    weights = config.weights.model_dump()
    normalized = normalized_features(features, config)
    return sum(weights[name] * value for name, value in normalized.items())


def suffix_match(domain: str, suffixes: Sequence[str]) -> bool:
    return any(domain == s or domain.endswith("." + s) for s in suffixes)


def detect(records: Sequence[DnsQueryRecord], config: TunnelConfig) -> List[TunnelAlert]:
    """At most one verdict per (src, registered domain, window), ordered by window start.

    The window score is the maximum query score in the window. Whitelist
    matches take precedence and are reported as suppressed only when the
    score would have alerted; blacklist matches are always reported.
    """
    context = window_counts(records, config.window)
    best: Dict[WindowKey, Tuple[float, Dict[str, float]]] = {}
    for record in sorted(records, key=lambda r: r.ts):
        features = extract_features(record, context, config.window)
        query_score = score_query(features, config)
        key = window_key(record, config.window)
        if key not in best or query_score > best[key][0]:
            best[key] = (query_score, normalized_features(features, config))

    whitelist = [s.lower().strip(".") for s in config.whitelist]
    blacklist = [s.lower().strip(".") for s in config.blacklist]
    alerts: List[TunnelAlert] = []
    for (src, domain, bucket), (window_score, normalized) in best.items():
        if suffix_match(domain, whitelist):
            if window_score < config.alert_threshold:
                continue
            verdict = Verdict.SUPPRESSED
        elif suffix_match(domain, blacklist):
            verdict = Verdict.BLACKLIST_FORCED
        elif window_score >= config.alert_threshold:
            verdict = Verdict.ALERT
        else:
            continue
        alerts.append(TunnelAlert(
            src=src,
            registered_domain=domain,
            window_start=bucket * config.window * 1000,
            score=window_score,
            features=normalized,
            verdict=verdict,
        ))
    alerts.sort(key=lambda a: (a.window_start, a.src, a.registered_domain))
    counts = Counter(a.verdict.value for a in alerts)
    logger.info(
        "Scored %d queries in %d windows: %d alert, %d blacklist_forced, %d suppressed",
        len(records), len(best), counts["alert"], counts["blacklist_forced"], counts["suppressed"],
    )
    return alerts
