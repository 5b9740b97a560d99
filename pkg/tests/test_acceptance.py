"""
End-to-end experiments on synthetic and desk-scale corpora.

The DNS experiment and the reduced-scale classifier experiments are
self-contained. The full classifier experiments need a benign corpus on
disk and only run when SENTINEL_BENIGN_RANKING (a rank,domain CSV) or
SENTINEL_BENIGN_URLS (one URL per line) is set.
"""
import os
import time

import pytest

from corpus.loaders import load_domain_ranking, load_line_list, merge_sources
from corpus.rng import SplitMix64
from corpus.split import stratified_split
from models.classifier import FeatureMode, LinearConfig, LstmHyper
from models.dga import DgaConfig, DgaFamily
from models.samples import DnsQueryRecord, Protocol, QType, SampleKind, TextSample
from models.tunnel import TunnelConfig, Verdict
from sentinel import artifacts, baseline, dgagen, dnstunnel, evalharness, lstm

SEED = 42
FRACTIONS = (0.8, 0.1, 0.1)
BENIGN_HOSTS = ("www", "mail", "cdn", "api", "img", "m", "static")
BENIGN_DOMAINS = ("example.com", "news.org", "shop.net", "bank.com", "video.tv", "social.io")
ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789"
BRANDS = ("paypal.com", "chase.com", "wellsfargo.com", "citibank.com", "hsbc.com", "amazon.com")


def _record(ts, src, qname, qtype):
    return DnsQueryRecord(
        ts=ts, src=src, qname=qname, qtype=qtype, proto=Protocol.UDP,
        src_port=33000, dst_port=53, payload_len=len(qname) + 40,
    )


def _dns_ground_truth():
    rng = SplitMix64(SEED)
    records = []
    benign_sources = [f"192.168.{k // 250}.{k % 250}" for k in range(5000)]
    for k, src in enumerate(benign_sources):
        offset = k % 15
        for q in range(20):
            host = BENIGN_HOSTS[rng.next_below(len(BENIGN_HOSTS))]
            domain = BENIGN_DOMAINS[rng.next_below(len(BENIGN_DOMAINS))]
            records.append(_record((q * 15 + offset) * 1000, src, f"{host}.{domain}", QType.A))
    tunnel_sources = [f"10.66.0.{k}" for k in range(20)]
    for src in tunnel_sources:
        for q in range(240):
            label = "".join(ALPHABET[rng.next_below(len(ALPHABET))] for _ in range(45))
            records.append(_record(q * 500, src, f"{label}.t{src.rsplit('.', 1)[1]}.xyz", QType.TXT))
    return records, set(benign_sources), set(tunnel_sources)


def test_tunnel_detection_on_synthetic_traffic():
    records, benign, tunnels = _dns_ground_truth()
    assert len(records) == 100000 + 20 * 240

    start = time.perf_counter()
    alerts = dnstunnel.detect(records, TunnelConfig())
    elapsed = time.perf_counter() - start

    flagged = {a.src for a in alerts if a.verdict == Verdict.ALERT}
    assert len(flagged & tunnels) >= 0.95 * len(tunnels)
    assert len(flagged & benign) <= 0.01 * len(benign)
    assert elapsed <= 60.0


def _train_and_evaluate(split, task, linear_mode):
    hyper = LstmHyper.for_task(
        task, embed_dim=32, hidden_dim=64, max_epochs=15, patience=3, seed=SEED,
    )
    lstm_artifact, _ = lstm.train_lstm(split.train, split.validation, hyper)
    model, _ = baseline.train_linear(
        split.train, split.validation, LinearConfig(mode=linear_mode, seed=SEED),
    )
    linear_artifact = artifacts.linear_to_artifact(model)
    lstm_report, _ = evalharness.evaluate(lstm_artifact, split.test)
    linear_report, _ = evalharness.evaluate(linear_artifact, split.test)
    return lstm_artifact, lstm_report, linear_report


def _tpr_within(report, fpr):
    return next(p.tpr for p in report.operating_points if p.target_fpr == fpr)


def _dga_split():
    benign = load_domain_ranking(os.environ["SENTINEL_BENIGN_RANKING"], limit=8000)
    malicious = []
    for family in DgaFamily:
        date = (2024, 1, 1) if family == DgaFamily.DATE_SEEDED else None
        malicious += dgagen.generate_dga(DgaConfig(family=family, seed=SEED, count=2000, date=date))
    return stratified_split(merge_sources(benign, malicious), SEED, FRACTIONS)


@pytest.mark.slow
@pytest.mark.skipif(
    not os.getenv("SENTINEL_BENIGN_RANKING"),
    reason="SENTINEL_BENIGN_RANKING environment variable not set"
)
def test_dga_experiment():
    split = _dga_split()
    artifact, lstm_report, linear_report = _train_and_evaluate(split, "dga", FeatureMode.CHAR_NGRAM)

    assert lstm_report.auc >= 0.98
    assert linear_report.auc >= 0.90
    assert lstm_report.auc >= linear_report.auc + 0.005
    assert _tpr_within(lstm_report, 0.01) >= _tpr_within(linear_report, 0.01) + 0.05

    again_artifact, again_report, _ = _train_and_evaluate(_dga_split(), "dga", FeatureMode.CHAR_NGRAM)
    assert artifacts.artifact_to_json(again_artifact) == artifacts.artifact_to_json(artifact)
    assert evalharness.report_to_json(again_report) == evalharness.report_to_json(lstm_report)


@pytest.mark.slow
@pytest.mark.skipif(
    not os.getenv("SENTINEL_BENIGN_URLS"),
    reason="SENTINEL_BENIGN_URLS environment variable not set"
)
def test_phishing_experiment():
    benign = load_line_list(os.environ["SENTINEL_BENIGN_URLS"], 0, SampleKind.URL)[:5000]
    phishing = dgagen.generate_phishing_urls([s.text for s in benign], BRANDS, SEED, 5000)
    split = stratified_split(merge_sources(benign, phishing), SEED, FRACTIONS)

    _, lstm_report, linear_report = _train_and_evaluate(split, "phish", FeatureMode.TOKEN_BOW)
    assert lstm_report.auc > linear_report.auc
    assert linear_report.auc >= 0.90


# Reduced-scale classifier experiments on a synthetic benign corpus.

SMALL_FRACTIONS = (0.6, 0.2, 0.2)
BENIGN_WORDS = (
    "apple", "garden", "river", "summer", "pixel", "travel", "market", "planet",
    "silver", "forest", "studio", "rocket", "winter", "coffee", "yellow", "valley",
    "harbor", "letter", "camera", "pocket", "orange", "mirror", "castle", "bridge",
)
BENIGN_TLDS = ("com", "net", "org", "io")
BENIGN_PATHS = ("", "/", "/about", "/blog/post", "/products/list", "/help/faq", "/news/today", "/search?q=shoes")


def _synthetic_benign_domains(count):
    rng = SplitMix64(SEED)
    seen = {}
    while len(seen) < count:
        first = BENIGN_WORDS[rng.next_below(len(BENIGN_WORDS))]
        second = BENIGN_WORDS[rng.next_below(len(BENIGN_WORDS))]
        tld = BENIGN_TLDS[rng.next_below(len(BENIGN_TLDS))]
        seen.setdefault(f"{first}{second}.{tld}", None)
    return [TextSample(text=d, label=0, kind=SampleKind.DOMAIN, source="synthetic") for d in seen]


def _small_dga_split():
    benign = _synthetic_benign_domains(300)
    malicious = []
    # the wordlist family draws from the same dictionary style as the synthetic benign set
    for family in (DgaFamily.LCG_CHAR, DgaFamily.HASH_HEX, DgaFamily.DATE_SEEDED):
        date = (2024, 1, 1) if family == DgaFamily.DATE_SEEDED else None
        malicious += dgagen.generate_dga(DgaConfig(family=family, seed=SEED, count=100, date=date))
    return stratified_split(merge_sources(benign, malicious), SEED, SMALL_FRACTIONS)


def _train_small(split, task, linear_mode):
    hyper = LstmHyper.for_task(
        task, embed_dim=8, hidden_dim=16, lr=0.02, batch_size=32,
        dropout_rate=0.0, max_epochs=12, patience=4, seed=SEED,
    )
    lstm_artifact, _ = lstm.train_lstm(split.train, split.validation, hyper)
    model, _ = baseline.train_linear(
        split.train, split.validation, LinearConfig(mode=linear_mode, epochs=20, seed=SEED),
    )
    lstm_report, _ = evalharness.evaluate(lstm_artifact, split.test)
    linear_report, _ = evalharness.evaluate(artifacts.linear_to_artifact(model), split.test)
    return lstm_artifact, lstm_report, linear_report


def test_small_dga_experiment():
    split = _small_dga_split()
    artifact, lstm_report, linear_report = _train_small(split, "dga", FeatureMode.CHAR_NGRAM)

    assert lstm_report.auc >= 0.95
    assert linear_report.auc >= 0.90

    again_artifact, again_report, _ = _train_small(_small_dga_split(), "dga", FeatureMode.CHAR_NGRAM)
    assert artifacts.artifact_to_json(again_artifact) == artifacts.artifact_to_json(artifact)
    assert evalharness.report_to_json(again_report) == evalharness.report_to_json(lstm_report)


def test_small_phishing_experiment():
    hosts = [s.text for s in _synthetic_benign_domains(150)]
    benign = [
        TextSample(text=f"https://www.{host}{BENIGN_PATHS[k % len(BENIGN_PATHS)]}", label=0,
                   kind=SampleKind.URL, source="synthetic")
        for k, host in enumerate(hosts)
    ]
    phishing = dgagen.generate_phishing_urls([s.text for s in benign], BRANDS, SEED, 150)
    split = stratified_split(merge_sources(benign, phishing), SEED, SMALL_FRACTIONS)

    _, lstm_report, linear_report = _train_small(split, "phish", FeatureMode.TOKEN_BOW)
    assert linear_report.auc >= 0.90
    assert lstm_report.auc >= 0.85
