"""TREC-style effectiveness measures and paired significance testing."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

from scipy.special import stdtr

from .lm import RankedList

log = logging.getLogger(__name__)

GMAP_EPSILON = 1e-5


class FormatError(ValueError):
    pass


Qrels = dict[str, dict[str, int]]


def parse_qrels(stream: TextIO) -> Qrels:
    """``qid iter docid rel`` lines -> {qid: {docid: grade}}."""
    qrels: Qrels = {}
    for lineno, line in enumerate(stream, 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 4:
            raise FormatError(f"qrels line {lineno}: expected 4 fields, found {len(parts)}")
        qid, _, doc_id, rel = parts
        try:
            grade = int(rel)
        except ValueError:
            raise FormatError(f"qrels line {lineno}: relevance {rel!r} is not an integer") from None
        judged = qrels.setdefault(qid, {})
        if doc_id in judged:
            raise FormatError(f"qrels line {lineno}: duplicate judgment for ({qid}, {doc_id})")
        judged[doc_id] = grade
    return qrels


def parse_run(stream: TextIO) -> dict[str, RankedList]:
    """Read a 6-column TREC run; entries re-sorted by score, ties by doc id."""
    raw: dict[str, list[tuple[str, float]]] = {}
    seen: set[tuple[str, str]] = set()
    for lineno, line in enumerate(stream, 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 6:
            raise FormatError(f"run line {lineno}: expected 6 fields, found {len(parts)}")
        qid, _, doc_id, _rank, score, _tag = parts
        try:
            s = float(score)
        except ValueError:
            raise FormatError(f"run line {lineno}: score {score!r} is not a number") from None
        if (qid, doc_id) in seen:
            raise FormatError(f"run line {lineno}: document {doc_id} repeated for query {qid}")
        seen.add((qid, doc_id))
        raw.setdefault(qid, []).append((doc_id, s))
    return {
        qid: RankedList(qid, sorted(entries, key=lambda e: (-e[1], e[0])))
        for qid, entries in raw.items()
    }


def _relevant(qrels: Qrels, query_id: str) -> set[str]:
    return {d for d, g in qrels.get(query_id, {}).items() if g >= 1}


def average_precision(run: RankedList | Sequence[str], qrels: Qrels, query_id: str) -> float | None:
    """AP over the full relevant set; None when the query has no relevant docs."""
    relevant = _relevant(qrels, query_id)
    if not relevant:
        return None
    docs = run.doc_ids if isinstance(run, RankedList) else list(run)
    hits = 0
    total = 0.0
    for rank, doc_id in enumerate(docs, 1):
        if doc_id in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


def precision_at(run: RankedList | Sequence[str], qrels: Qrels, query_id: str, k: int) -> float:
    relevant = _relevant(qrels, query_id)
    docs = run.doc_ids if isinstance(run, RankedList) else list(run)
    return sum(1 for d in docs[:k] if d in relevant) / k


@dataclass
class QueryScores:
    ap: float
    p_at_k: float
    num_rel: int


@dataclass
class EvalReport:
    k: int
    per_query: dict[str, QueryScores]
    map: float
    gmap: float
    p_at_k_mean: float
    skipped: list[str] = field(default_factory=list)  # judged queries without relevant docs
    missing: list[str] = field(default_factory=list)  # judged queries absent from the run

    def ap(self) -> dict[str, float]:
        return {q: s.ap for q, s in self.per_query.items()}


def evaluate_run(runs: Mapping[str, RankedList], qrels: Qrels, k: int = 5) -> EvalReport:
    """MAP, GMAP and mean P@k over every judged query with >= 1 relevant doc.

    Queries missing from the run score 0; run queries without judgments are
    ignored.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    unknown = sorted(set(runs) - set(qrels))
    if unknown:
        log.warning("ignoring %d run query id(s) absent from qrels: %s", len(unknown), " ".join(unknown))
    per_query: dict[str, QueryScores] = {}
    skipped, missing = [], []
    for qid in sorted(qrels):
        run = runs.get(qid, RankedList(qid, []))
        ap = average_precision(run, qrels, qid)
        if ap is None:
            skipped.append(qid)
            continue
        if qid not in runs:
            missing.append(qid)
        per_query[qid] = QueryScores(ap, precision_at(run, qrels, qid, k), len(_relevant(qrels, qid)))
    if not per_query:
        raise ValueError("no evaluable queries (none has a relevant judgment)")
    n = len(per_query)
    aps = [per_query[q].ap for q in sorted(per_query)]
    mean_ap = math.fsum(aps) / n
    gmap = math.exp(math.fsum(math.log(max(a, GMAP_EPSILON)) for a in aps) / n)
    p_mean = math.fsum(per_query[q].p_at_k for q in sorted(per_query)) / n
    return EvalReport(k, per_query, mean_ap, gmap, p_mean, skipped, missing)


@dataclass
class SignificanceResult:
    t_statistic: float
    p_value: float
    n: int
    note: str = ""

    @property
    def significant_at_95(self) -> bool:
        return self.p_value < 0.05


def paired_t_test(a: Sequence[float], b: Sequence[float], alternative: str = "two-sided") -> SignificanceResult:
    """Paired t-test on differences a - b.

    ``alternative`` is "two-sided" or "greater" (a better than b). All-zero
    differences give t = 0, p = 1. Constant non-zero differences have no
    variance; t is then +/-inf and p = 0 (note "zero-variance").
    """
    if len(a) != len(b):
        raise ValueError("paired samples differ in length")
    n = len(a)
    if n < 2:
        raise ValueError("paired t-test needs at least 2 pairs")
    if alternative not in ("two-sided", "greater"):
        raise ValueError(f"unknown alternative {alternative!r}")
    diffs = [x - y for x, y in zip(a, b)]
    mean = math.fsum(diffs) / n
    var = math.fsum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        if mean == 0.0:
            return SignificanceResult(0.0, 1.0, n)
        t = math.copysign(math.inf, mean)
        p = 0.0 if (alternative == "two-sided" or mean > 0) else 1.0
        return SignificanceResult(t, p, n, "zero-variance")
    t = mean / math.sqrt(var / n)
    if alternative == "two-sided":
        p = 2.0 * float(stdtr(n - 1, -abs(t)))
    else:
        p = float(stdtr(n - 1, -t))
    return SignificanceResult(t, min(p, 1.0), n)


def ap_difference_table(report_a: EvalReport, report_b: EvalReport) -> list[tuple[str, float]]:
    """(query_id, AP_a - AP_b) for shared queries, largest gain first."""
    common = set(report_a.per_query) & set(report_b.per_query)
    if not common:
        raise ValueError("reports share no queries")
    rows = [(q, report_a.per_query[q].ap - report_b.per_query[q].ap) for q in common]
    return sorted(rows, key=lambda r: (-r[1], r[0]))


def write_per_query_csv(report: EvalReport, out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["query_id", "ap", f"p@{report.k}", "num_rel"])
    for q in sorted(report.per_query):
        s = report.per_query[q]
        w.writerow([q, f"{s.ap:.6f}", f"{s.p_at_k:.6f}", s.num_rel])


def write_difference_csv(rows: Iterable[tuple[str, float]], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["query_id", "ap_difference"])
    for q, d in rows:
        w.writerow([q, f"{d:.6f}"])
