"""
File loaders for rankings, line lists, labeled splits, DNS logs and WHOIS
fixtures.
"""
import csv
import logging
import re
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

from pydantic import ValidationError

from corpus.normalize import is_valid_domain, normalize_text
from models.samples import (
    MIN_PLAUSIBLE_EPOCH,
    DnsQueryRecord,
    Protocol,
    QType,
    SampleKind,
    TextSample,
    WhoisRecord,
)
from sentinel.errors import DataError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DNS_LOG_COLUMNS = ("ts", "src", "qname", "qtype", "proto", "src_port", "dst_port", "payload_len")
DNS_LOG_HEADER = "\t".join(DNS_LOG_COLUMNS)

_INT_RE = re.compile(r"-?\d+")

WHOIS_KEYS = {
    "domain name": "domain",
    "registrant name": "registrant_name",
    "registrant email": "registrant_email",
    "registrar": "registrar",
    "name server": "name_servers",
    "creation date": "created",
}


def _read_lines(path: PathLike) -> List[str]:
    """Read a UTF-8 text file into lines, accepting LF or CRLF endings."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            content = f.read()
    except (OSError, UnicodeDecodeError) as e:
        logger.error("Failed to read %s: %s", path, e)
        raise DataError(f"Cannot read {path}: {e}") from e
    lines = content.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [line[:-1] if line.endswith("\r") else line for line in lines]


def _warn_skipped(path: PathLike, count: int, what: str) -> None:
    if count:
        logger.warning("Skipped %d %s in %s", count, what, path)


def load_domain_ranking(path: PathLike, limit: Optional[int] = None) -> List[TextSample]:
    """Load a headerless `rank,domain` CSV as benign domain samples.

    Samples come back in ascending rank order with duplicates removed
    (first occurrence wins); malformed rows are skipped and counted.
    """
    rows: List[Tuple[int, int, str]] = []
    skipped = 0
    for line_no, row in enumerate(csv.reader(_read_lines(path))):
        if not row:
            continue
        try:
            if len(row) != 2:
                raise ValueError(f"expected 2 columns, got {len(row)}")
            rank = int(row[0])
            domain = normalize_text(row[1], SampleKind.DOMAIN)
            if not is_valid_domain(domain):
                raise ValueError(f"invalid domain {row[1]!r}")
        except ValueError as e:
            skipped += 1
            logger.debug("%s:%d skipped: %s", path, line_no + 1, e)
            continue
        rows.append((rank, line_no, domain))
    _warn_skipped(path, skipped, "malformed ranking rows")

    rows.sort()
    samples: List[TextSample] = []
    seen = set()
    for _, _, domain in rows:
        if domain in seen:
            continue
        seen.add(domain)
        samples.append(TextSample(text=domain, label=0, kind=SampleKind.DOMAIN, source=f"ranking:{Path(path).name}"))
        if limit is not None and len(samples) >= limit:
            break
    logger.info("Loaded %d ranked domains from %s", len(samples), path)
    return samples


def load_line_list(path: PathLike, label: int, kind: SampleKind, source: Optional[str] = None) -> List[TextSample]:
    """Load one item per line; blank lines and '#' comments are ignored."""
    source = source or f"list:{Path(path).name}"
    samples: List[TextSample] = []
    seen = set()
    skipped = 0
    for line in _read_lines(path):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        text = normalize_text(stripped, kind)
        if text in seen:
            continue
        try:
            samples.append(TextSample(text=text, label=label, kind=kind, source=source))
        except ValidationError as e:
            skipped += 1
            logger.debug("%s: rejected %r: %s", path, stripped, e)
            continue
        seen.add(text)
    _warn_skipped(path, skipped, "invalid items")
    logger.info("Loaded %d %s items (label %d) from %s", len(samples), kind.value, label, path)
    return samples


def load_query_lines(path: PathLike, kind: SampleKind) -> List[str]:
    """Normalized items to score, one per non-blank, non-comment line.

    Duplicates and items that would fail sample validation are kept so the
    output lines up with the input.
    """
    texts = [
        normalize_text(stripped, kind)
        for stripped in (line.strip() for line in _read_lines(path))
        if stripped and not stripped.startswith("#")
    ]
    logger.info("Read %d %s items to score from %s", len(texts), kind.value, path)
    return texts


def merge_sources(*sources: Iterable[TextSample]) -> List[TextSample]:
    """Concatenate sample lists, resolving cross-source duplicates.

    Same text with the same label keeps its first occurrence; a text seen
    with both labels is dropped everywhere and counted.
    """
    labels: Dict[str, set] = {}
    ordered: List[TextSample] = []
    for source in sources:
        for sample in source:
            labels.setdefault(sample.text, set()).add(sample.label)
            ordered.append(sample)

    conflicts = {text for text, seen in labels.items() if len(seen) > 1}
    if conflicts:
        logger.warning("Dropped %d texts with conflicting labels across sources", len(conflicts))

    merged: List[TextSample] = []
    kept = set()
    for sample in ordered:
        if sample.text in conflicts or sample.text in kept:
            continue
        kept.add(sample.text)
        merged.append(sample)
    return merged


def load_labeled(path: PathLike) -> List[TextSample]:
    """Load `label<TAB>kind<TAB>text` rows written by write_labeled."""
    samples: List[TextSample] = []
    skipped = 0
    for line_no, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        try:
            if len(parts) != 3:
                raise ValueError(f"expected 3 columns, got {len(parts)}")
            samples.append(TextSample(text=parts[2], label=int(parts[0]), kind=SampleKind(parts[1]), source=str(path)))
        except (ValueError, ValidationError) as e:
            skipped += 1
            logger.debug("%s:%d skipped: %s", path, line_no, e)
    _warn_skipped(path, skipped, "malformed labeled rows")
    return samples


def write_labeled(samples: Iterable[TextSample], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for sample in samples:
            f.write(f"{sample.label}\t{sample.kind.value}\t{sample.text}\n")


def load_domain_feed(path: PathLike) -> List[Tuple[str, int]]:
    """Load a newly-observed-domain feed as (domain, epoch ms) pairs.

    Each line is a domain optionally followed by a tab and an epoch
    millisecond timestamp; lines without one use their 1-based line number.
    """
    observed: List[Tuple[str, int]] = []
    skipped = 0
    for line_no, line in enumerate(_read_lines(path), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split("\t")
        domain = normalize_text(parts[0], SampleKind.DOMAIN)
        try:
            ts = int(parts[1]) if len(parts) > 1 and parts[1].strip() else line_no
        except ValueError:
            ts = None
        if ts is None or not is_valid_domain(domain):
            skipped += 1
            continue
        observed.append((domain, ts))
    _warn_skipped(path, skipped, "malformed feed lines")
    return observed


def _parse_int(value: str, column: str) -> int:
    if not _INT_RE.fullmatch(value):
        raise ValueError(f"{column} is not an integer: {value!r}")
    return int(value)


def load_dns_log(path: PathLike) -> List[DnsQueryRecord]:
    """Parse a tab-separated DNS query log with the fixed header row."""
    lines = _read_lines(path)
    if not lines or lines[0] != DNS_LOG_HEADER:
        raise DataError(f"{path}: missing DNS log header {DNS_LOG_HEADER!r}")

    records: List[DnsQueryRecord] = []
    rejected = 0
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        try:
            if len(fields) != len(DNS_LOG_COLUMNS):
                raise ValueError(f"expected {len(DNS_LOG_COLUMNS)} fields, got {len(fields)}")
            records.append(DnsQueryRecord(
                ts=_parse_int(fields[0], "ts"),
                src=fields[1],
                qname=normalize_text(fields[2], SampleKind.DOMAIN),
                qtype=QType.parse(fields[3]),
                proto=Protocol(fields[4].strip().lower()),
                src_port=_parse_int(fields[5], "src_port"),
                dst_port=_parse_int(fields[6], "dst_port"),
                payload_len=_parse_int(fields[7], "payload_len"),
            ))
        except (ValueError, ValidationError) as e:
            rejected += 1
            logger.debug("%s:%d rejected: %s", path, line_no, e)
    _warn_skipped(path, rejected, "rejected DNS rows")
    logger.info("Loaded %d DNS queries from %s", len(records), path)
    return records


def format_dns_log(records: Iterable[DnsQueryRecord]) -> str:
    rows = [DNS_LOG_HEADER]
    for r in records:
        rows.append("\t".join((
            str(r.ts), r.src, r.qname, r.qtype.value, r.proto.value,
            str(r.src_port), str(r.dst_port), str(r.payload_len),
        )))
    return "\n".join(rows) + "\n"


def write_dns_log(records: Iterable[DnsQueryRecord], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(format_dns_log(records))


def _parse_rfc3339(value: str) -> int:
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    moment = datetime.fromisoformat(text)
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    return int(moment.timestamp())


def _whois_block_to_record(block: List[str], path: PathLike) -> Optional[WhoisRecord]:
    fields: Dict[str, object] = {"name_servers": []}
    for line in block:
        key, sep, value = line.partition(":")
        target = WHOIS_KEYS.get(key.strip().lower())
        value = value.strip()
        if not sep or target is None or not value:
            continue
        if target == "domain":
            fields["domain"] = normalize_text(value, SampleKind.DOMAIN)
        elif target == "registrant_email":
            fields[target] = value.lower()
        elif target == "name_servers":
            fields["name_servers"].append(normalize_text(value, SampleKind.DOMAIN))
        elif target == "created":
            try:
                created = _parse_rfc3339(value)
            except ValueError:
                logger.warning("%s: unparseable Creation Date %r ignored", path, value)
                continue
            if created <= MIN_PLAUSIBLE_EPOCH:
                logger.warning("%s: implausible Creation Date %r ignored", path, value)
                continue
            fields["created"] = created
        else:
            fields[target] = value
    if "domain" not in fields:
        return None
    try:
        return WhoisRecord(**fields)
    except ValidationError as e:
        logger.debug("%s: rejected WHOIS block for %s: %s", path, fields.get("domain"), e)
        return None


def _split_blocks(lines: List[str]) -> List[List[str]]:
    blocks: List[List[str]] = []
    current: List[str] = []
    for line in lines:
        if not line.strip():
            if current:
                blocks.append(current)
                current = []
            continue
        if line.lstrip().startswith(("%", "#")):
            continue
        current.append(line)
    if current:
        blocks.append(current)
    return blocks


def parse_whois_fixture(path: PathLike) -> List[WhoisRecord]:
    """Parse WHOIS fixture blocks from a file or every file in a directory."""
    target = Path(path)
    if target.is_dir():
        files = sorted(p for p in target.iterdir() if p.is_file())
    else:
        files = [target]

    records: List[WhoisRecord] = []
    skipped = 0
    for file_path in files:
        for block in _split_blocks(_read_lines(file_path)):
            record = _whois_block_to_record(block, file_path)
            if record is None:
                skipped += 1
                continue
            records.append(record)
    _warn_skipped(path, skipped, "WHOIS blocks without a usable Domain Name")
    logger.info("Parsed %d WHOIS records from %s", len(records), path)
    return records
