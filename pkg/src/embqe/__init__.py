"""Word-embedding query expansion over a Jelinek-Mercer language-model retriever."""

from .embed import EmbeddingStore, NeighborList, compose_bigram, cosine, incremental_nn, knn, load_vectors
from .evaluation import EvalReport, SignificanceResult, average_precision, evaluate_run, paired_t_test
from .index import Index, build_index, load, save
from .lm import QueryModel, RankedList, mle_query_model, retrieve, score_document
from .qe import Eqts, ExpansionConfig, build_eqts, expand, generate_candidates, mean_similarity
from .rm3 import estimate_rm1, rm3_expand
from .textpipe import AnalyzedDocument, RawDocument, Topic, analyze, parse_topics, parse_trec_docs
from .porter import porter_stem

__version__ = "0.1.0"
