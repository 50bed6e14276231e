"""Topic discovery via term co-occurrence networks and community detection."""

from .analytics import (
    ClassStats,
    CrossTable,
    TopicFlowMatrix,
    TopicShares,
    classification_stats,
    compare_topic_sets,
    crosstable,
    topic_shares,
)
from .community import DetectParams, Partition, TopicSet, detect_topics, leiden, modularity
from .errors import (
    ArtifactError,
    ConvergenceError,
    CorpusFormatError,
    DataError,
    MissingPrerequisiteError,
    TermWeaveError,
)
from .graph import TermGraph, build_corpus_graph, from_weighted_edges, reduce_document
from .ingest import (
    AnnotatedDocument,
    AnnotatedToken,
    AnnotationConfig,
    RawDocument,
    Vocabulary,
    annotate,
    build_vocabulary,
    ingest_preannotated,
    load_corpus,
)
from .presentation import (
    CoherenceReport,
    EmbeddingTable,
    TopicSheet,
    coherence,
    embed,
    load_vectors,
    stratify,
)
from .ranking import (
    CorpusRanking,
    DocRanking,
    DocTermGraph,
    RankParams,
    build_doc_term_graph,
    corpus_rank,
    discretize,
    idf,
    pos_idf_rank,
    rank_corpus,
    rank_document,
)
from .store import Project

__version__ = "0.1.0"
