"""Experiment configuration and the batch search pipeline."""

from __future__ import annotations

import dataclasses
import itertools
import logging
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Iterable, Sequence

from .embed import EmbeddingStore
from .index import Index
from .lm import DEFAULT_K, DEFAULT_LAMBDA, QueryModel, RankedList, mle_query_model, retrieve
from .qe import ExpansionConfig, Expansion, NoCandidates, QueryNotCovered, expand
from .rm3 import rm3_query_model
from .textpipe import Topic

log = logging.getLogger(__name__)

SEARCH_METHODS = ("none", "pre", "post", "incremental", "rm3")


@dataclass
class ExperimentConfig:
    index_path: str | None = None
    vectors_path: str | None = None
    topics_path: str | None = None
    qrels_path: str | None = None
    method: str = "none"
    lam: float = DEFAULT_LAMBDA
    K: int = 50
    alpha: float = 0.6
    fb_docs: int = 10
    use_composition: bool = True
    n_per_unit: int | None = None
    n_initial: int | None = None
    prune_k: int | None = None
    l: int = 5
    k_retrieve: int = DEFAULT_K
    rm3_mix: float = 0.5
    p_at: int = 5
    run_tag: str = "embqe"

    def validate(self) -> None:
        if self.method not in SEARCH_METHODS:
            raise ValueError(f"method must be one of {', '.join(SEARCH_METHODS)}")
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lambda must lie in (0, 1)")
        if self.k_retrieve < 1:
            raise ValueError("k_retrieve must be >= 1")
        if self.method in ("pre", "post", "incremental"):
            self.expansion()  # range checks
        if self.method == "rm3":
            if self.K < 1 or self.fb_docs < 1:
                raise ValueError("rm3 needs K >= 1 and fb_docs >= 1")
            if not 0.0 <= self.rm3_mix <= 1.0:
                raise ValueError("rm3_mix must lie in [0, 1]")

    def expansion(self) -> ExpansionConfig:
        return ExpansionConfig(
            method=self.method,
            use_composition=self.use_composition,
            K=self.K,
            alpha=self.alpha,
            fb_docs=self.fb_docs,
            n_per_unit=self.n_per_unit,
            n_initial=self.n_initial,
            prune_k=self.prune_k,
            l=self.l,
        )

    def replace(self, **changes: Any) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# config-file / grid aliases for field names
ALIASES = {"lambda": "lam", "composition": "use_composition", "tag": "run_tag"}


def _field_types() -> dict[str, str]:
    return {f.name: str(f.type) for f in fields(ExperimentConfig)}


def coerce(name: str, raw: str) -> Any:
    """Parse a string value for config field ``name``."""
    name = ALIASES.get(name, name)
    types = _field_types()
    if name not in types:
        raise ValueError(f"unknown config key {name!r}")
    ftype = types[name]
    raw = raw.strip()
    if "None" in ftype and raw.lower() in ("", "none"):
        return None
    if ftype.startswith("bool"):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    if ftype.startswith("int"):
        return int(raw)
    if ftype.startswith("float"):
        return float(raw)
    return raw


def read_config_file(path: str | Path) -> dict[str, Any]:
    """``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        try:
            values[ALIASES.get(key, key)] = coerce(key, raw)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return values


def parse_grid_axis(spec: str) -> tuple[str, list[Any]]:
    """``name=a,b,c`` or ``name=start:stop:step`` (inclusive)."""
    if "=" not in spec:
        raise ValueError(f"grid axis {spec!r}: expected name=values")
    name, values = (s.strip() for s in spec.split("=", 1))
    name = ALIASES.get(name, name)
    if ":" in values:
        parts = values.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid axis {spec!r}: range needs start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"grid axis {spec!r}: empty range")
        n = int(round((stop - start) / step))
        raw = [repr(round(start + i * step, 10)) for i in range(n + 1)]
        if _field_types().get(name, "").startswith("int"):
            raw = [str(int(float(r))) for r in raw]
    else:
        raw = [v for v in values.split(",") if v.strip()]
    if not raw:
        raise ValueError(f"grid axis {spec!r}: no values")
    return name, [coerce(name, r) for r in raw]


def grid_points(axes: Sequence[tuple[str, list[Any]]]) -> list[dict[str, Any]]:
    names = [n for n, _ in axes]
    return [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in axes))]


def query_model_for(
    topic: Topic,
    cfg: ExperimentConfig,
    index: Index,
    store: EmbeddingStore | None,
) -> Expansion:
    """Query model for one topic; falls back to the unexpanded model when the
    embeddings cannot expand it."""
    if cfg.method == "none":
        return Expansion(topic.query_id, mle_query_model(topic.title_terms))
    if cfg.method == "rm3":
        try:
            qm = rm3_query_model(index, list(topic.title_terms), cfg.lam, cfg.fb_docs, cfg.K, cfg.rm3_mix)
        except ValueError as exc:
            log.warning("query %s: %s; using unexpanded model", topic.query_id, exc)
            return Expansion(topic.query_id, mle_query_model(topic.title_terms), note=str(exc))
        return Expansion(topic.query_id, qm)
    if store is None:
        raise ValueError(f"method {cfg.method} needs word vectors")
    try:
        return expand(topic, index, store, cfg.expansion(), cfg.lam)
    except (QueryNotCovered, NoCandidates) as exc:
        log.warning("%s; using unexpanded model", exc)
        return Expansion(topic.query_id, mle_query_model(topic.title_terms), note=str(exc))


def run_search(
    cfg: ExperimentConfig,
    index: Index,
    topics: Iterable[Topic],
    store: EmbeddingStore | None = None,
    models: dict[str, QueryModel] | None = None,
) -> tuple[list[RankedList], list[Expansion]]:
    """Retrieve for every topic. ``models`` overrides per-query models (re-scoring)."""
    cfg.validate()
    runs, expansions = [], []
    for topic in topics:
        if models is not None and topic.query_id in models:
            exp = Expansion(topic.query_id, models[topic.query_id], note="loaded")
        else:
            exp = query_model_for(topic, cfg, index, store)
        expansions.append(exp)
        runs.append(retrieve(index, exp.model, cfg.lam, cfg.k_retrieve, topic.query_id))
    return runs, expansions
