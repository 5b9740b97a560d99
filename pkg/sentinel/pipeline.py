"""
Stage orchestration for BotnetSentinel.

DetectionPipeline wires the corpus loaders to the detection engines for
each stage of the attack timeline: spoof registration, bulk WHOIS
registration, DGA command-and-control and DNS tunneling.
"""
import logging
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from corpus.loaders import (
    load_dns_log,
    load_domain_feed,
    load_domain_ranking,
    load_labeled,
    load_line_list,
    merge_sources,
    parse_whois_fixture,
    write_labeled,
)
from corpus.split import stratified_split
from models.artifact import ModelArtifact
from models.classifier import FeatureMode, LinearConfig, LstmHyper, TrainingHistory
from models.dga import DgaConfig
from models.evaluation import EvalReport, RocCurve
from models.graph import LinkGraph, RankAlgorithm, RankResult
from models.permutation import ALL_TECHNIQUES, Permutation, PermutationHit, Technique
from models.run_config import RunConfig
from models.samples import DatasetSplit, SampleKind, TextSample
from models.tunnel import TunnelAlert, TunnelConfig
from sentinel import artifacts, baseline, dgagen, dnstunnel, evalharness, lstm, spoofgen, whoisgraph
from sentinel.errors import DataError

logger = logging.getLogger(__name__)

ARCHITECTURES = ("lstm", "ngram-lr", "bow-lr")
SPLIT_FILES = ("train.tsv", "validation.tsv", "test.tsv")


@contextmanager
def log_phase(name: str, **fields) -> Iterator[Dict[str, object]]:
    """Log one `phase=<name> elapsed_ms=<n> key=value...` line when the block ends.

    The yielded dict can be filled with extra fields inside the block.
    """
    extra: Dict[str, object] = dict(fields)
    start = time.perf_counter()
    try:
        yield extra
    finally:
        elapsed_ms = int((time.perf_counter() - start) * 1000)
        details = "".join(f" {key}={value}" for key, value in extra.items())
        logger.info("phase=%s elapsed_ms=%d%s", name, elapsed_ms, details)


class DetectionPipeline:
    """
    Runs each detection stage from files on disk, honoring one RunConfig.
    """

    def __init__(self, config: Optional[RunConfig] = None):
        self.config = config or RunConfig.from_env()
        logger.info("Detection pipeline initialized (seed=%d)", self.config.seed)

    # corpus

    def split_corpus(
        self,
        benign_path: str,
        malicious_path: str,
        kind: SampleKind,
        out_dir: str,
        fractions: Tuple[float, float, float] = (0.8, 0.1, 0.1),
        ranking: bool = False,
        limit: Optional[int] = None,
    ) -> DatasetSplit:
        """
        Load, merge and split a labeled corpus, writing the three parts as TSV.

        Args:
            benign_path: Benign list, or a rank,domain CSV when `ranking` is set
            malicious_path: Malicious list, one item per line
            kind: Whether the items are domains or URLs
            out_dir: Directory that receives train.tsv, validation.tsv and test.tsv
            fractions: Train, validation and test shares summing to 1
            ranking: Read `benign_path` as a ranking CSV
            limit: Keep only the top `limit` ranked domains

        Returns:
            DatasetSplit: The stratified partition that was written
        """
        with log_phase("corpus.split") as extra:
            if ranking:
                benign = load_domain_ranking(benign_path, limit=limit)
            else:
                benign = load_line_list(benign_path, 0, kind)
            malicious = load_line_list(malicious_path, 1, kind)
            split = stratified_split(merge_sources(benign, malicious), self.config.seed, fractions)
            target = Path(out_dir)
            target.mkdir(parents=True, exist_ok=True)
            for name, part in zip(SPLIT_FILES, (split.train, split.validation, split.test)):
                write_labeled(part, target / name)
            extra.update(train=len(split.train), validation=len(split.validation), test=len(split.test))
        return split

    # spoof registration

    def generate_permutations(self, domain: str, techniques=ALL_TECHNIQUES) -> List[Permutation]:
        """
        Spoof candidates for one protected domain.

        Args:
            domain: Normalized registrable domain, e.g. amazon.com
            techniques: Techniques to apply

        Returns:
            List[Permutation]: Candidates sorted by (technique, candidate)
        """
        with log_phase("spoofgen.gen", origin=domain) as extra:
            permutations = spoofgen.generate(domain, techniques)
            extra["candidates"] = len(permutations)
        return permutations

    def watch(self, brands_path: str, feed_path: str, techniques=ALL_TECHNIQUES) -> List[PermutationHit]:
        """
        Match a newly-observed-domain feed against permutations of the brands.

        Args:
            brands_path: Protected domains, one per line
            feed_path: Observed domains with optional epoch-ms timestamps
            techniques: Techniques used to build the watch index

        Returns:
            List[PermutationHit]: One hit per (observed, brand, technique) match
        """
        with log_phase("spoofgen.watch") as extra:
            brands = [s.text for s in load_line_list(brands_path, 0, SampleKind.DOMAIN, source="brands")]
            index = spoofgen.build_watch_index(brands, techniques)
            hits = spoofgen.match_stream(index, load_domain_feed(feed_path))
            extra.update(brands=len(brands), index=len(index), hits=len(hits))
        return hits

    # bulk registration

    def rank_whois(
        self, fixtures: str, algorithm: RankAlgorithm
    ) -> Tuple[LinkGraph, RankResult]:
        """
        Build the WHOIS link graph from a fixture file and rank its nodes.

        Args:
            fixtures: WHOIS fixture file or directory
            algorithm: PageRank or HITS

        Returns:
            Tuple[LinkGraph, RankResult]: The graph and its node scores
        """
        with log_phase("whois.rank", algorithm=algorithm.value) as extra:
            graph = whoisgraph.build_graph(parse_whois_fixture(fixtures))
            result = whoisgraph.rank(graph, algorithm)
            extra.update(nodes=graph.size, iterations=result.iterations, converged=result.converged)
        return graph, result

    def find_campaigns(self, fixtures: str, window: int) -> List[List[str]]:
        """
        Cluster domains that look registered together in one campaign.

        Args:
            fixtures: WHOIS fixture file or directory
            window: Registrar co-registration window in seconds

        Returns:
            List[List[str]]: Sorted clusters of two or more domains
        """
        with log_phase("whois.campaigns") as extra:
            clusters = whoisgraph.campaigns(parse_whois_fixture(fixtures), window)
            extra["clusters"] = len(clusters)
        return clusters

    # command and control

    def generate_dga(self, config: DgaConfig) -> List[TextSample]:
        """
        Labeled malicious domains from one reference DGA family.

        Args:
            config: Family, seed, count and family-specific settings

        Returns:
            List[TextSample]: Exactly `config.count` distinct domains
        """
        with log_phase("dga.gen", family=config.family.value) as extra:
            samples = dgagen.generate_dga(config)
            extra["count"] = len(samples)
        return samples

    def train_model(
        self,
        arch: str,
        task: str,
        train_path: str,
        val_path: Optional[str] = None,
        **overrides,
    ) -> Tuple[ModelArtifact, TrainingHistory]:
        """
        Train a classifier from labeled TSV files.

        Args:
            arch: One of lstm, ngram-lr or bow-lr
            task: dga or phish; sets the LSTM input length
            train_path: Labeled training rows
            val_path: Labeled validation rows for early stopping (optional)
            **overrides: Hyperparameters replacing the task defaults; None values are ignored

        Returns:
            Tuple[ModelArtifact, TrainingHistory]: The trained model and its per-epoch history

        Raises:
            DataError: If the architecture is unknown or the data is unusable
        """
        if arch not in ARCHITECTURES:
            raise DataError(f"unknown architecture {arch!r}; expected one of {', '.join(ARCHITECTURES)}")
        train = load_labeled(train_path)
        val = load_labeled(val_path) if val_path else []
        with log_phase("model.train", arch=arch, task=task) as extra:
            if arch == "lstm":
                hyper = LstmHyper.for_task(task, seed=self.config.seed, **overrides)
                artifact, history = lstm.train_lstm(train, val, hyper)
            else:
                config = LinearConfig(
                    mode=FeatureMode.CHAR_NGRAM if arch == "ngram-lr" else FeatureMode.TOKEN_BOW,
                    seed=self.config.seed,
                    **{k: v for k, v in overrides.items() if v is not None},
                )
                model, history = baseline.train_linear(train, val, config)
                artifact = artifacts.linear_to_artifact(model, {"config": config.model_dump(mode="json")})
            extra.update(epochs=len(history), train=len(train), validation=len(val))
        return artifact, history

    def classify(self, model_path: str, texts: Sequence[str]) -> List[float]:
        """
        Score texts with a saved model.

        Args:
            model_path: Model artifact JSON
            texts: Normalized domains or URLs

        Returns:
            List[float]: Malicious probability per text, in input order
        """
        artifact = artifacts.load_artifact(model_path)
        with log_phase("model.classify", count=len(texts)):
            return artifacts.score_artifact(artifact, texts)

    def evaluate_model(
        self,
        model_path: str,
        test_path: str,
        targets: Sequence[float] = evalharness.DEFAULT_FPR_TARGETS,
        interpolate: bool = False,
    ) -> Tuple[EvalReport, RocCurve]:
        """
        Evaluate a saved model on a labeled test file.

        Args:
            model_path: Model artifact JSON
            test_path: Labeled test rows
            targets: False-positive rates to report the TPR at
            interpolate: Interpolate TPR between ROC vertices

        Returns:
            Tuple[EvalReport, RocCurve]: Summary metrics and the full curve
        """
        artifact = artifacts.load_artifact(model_path)
        test = load_labeled(test_path)
        with log_phase("model.eval") as extra:
            report, curve = evalharness.evaluate(artifact, test, targets, interpolate)
            extra.update(samples=len(test), auc=f"{report.auc:.6f}")
        return report, curve

    # exfiltration

    def score_dns(self, log_path: str, config: TunnelConfig) -> List[TunnelAlert]:
        """
        Score a DNS query log for tunneling.

        Args:
            log_path: Tab-separated query log with a header row
            config: Thresholds, weights and whitelist

        Returns:
            List[TunnelAlert]: At most one verdict per (source, registered domain, window)
        """
        records = load_dns_log(log_path)
        with log_phase("dns.score") as extra:
            alerts = dnstunnel.detect(records, config)
            extra.update(queries=len(records), alerts=len(alerts))
        return alerts
