"""Binarization and Hamming-space retrieval evaluation: mAP@K, P@N, precision
within Hamming radius 2, P-R curves, and intra/inter-class mean distances.

Codes are stored packed (one bit per position, +1 -> 1, little-endian bit
order within each byte). Ranking ties at equal Hamming distance break by
ascending database index, and a query with no relevant database items
contributes 0 to every averaged metric; both conventions are deliberate and
keep every number reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "binarize",
    "pack_bits",
    "unpack_bits",
    "hamming_distance",
    "hamming_to_all",
    "RetrievalSet",
    "map_at_k",
    "precision_at_n",
    "precision_at_radius",
    "pr_curve",
    "intra_inter_distances",
]

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int32)


def binarize(codes: np.ndarray) -> np.ndarray:
    """Sign pattern of continuous codes: -1 where h <= 0 (including exact 0),
    +1 otherwise."""
    codes = np.asarray(codes)
    return np.where(codes <= 0.0, -1, 1).astype(np.int8)


def pack_bits(signs: np.ndarray) -> np.ndarray:
    """Pack rows of +-1 signs into uint8 rows (+1 -> bit 1), losslessly."""
    signs = np.atleast_2d(np.asarray(signs))
    if not np.all(np.isin(signs, (-1, 1))):
        raise ValueError("signs must be +-1")
    return np.packbits(signs > 0, axis=1, bitorder="little")


def unpack_bits(packed: np.ndarray, n_bits: int) -> np.ndarray:
    """Inverse of ``pack_bits`` given the true bit count."""
    packed = np.atleast_2d(np.asarray(packed, dtype=np.uint8))
    bits = np.unpackbits(packed, axis=1, bitorder="little")[:, :n_bits]
    return np.where(bits > 0, 1, -1).astype(np.int8)


def hamming_distance(a: np.ndarray, b: np.ndarray) -> int:
    """Number of disagreeing bit positions between two packed rows."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape:
        raise ValueError("codes have mismatched packed lengths")
    return int(_POPCOUNT[np.bitwise_xor(a, b)].sum())


def hamming_to_all(query_row: np.ndarray, db: np.ndarray) -> np.ndarray:
    """Hamming distances from one packed row to every packed database row."""
    xor = np.bitwise_xor(db, query_row[None, :])
    return _POPCOUNT[xor].sum(axis=1)


def _label_matrix(label_sets, vocabulary: dict[int, int]) -> np.ndarray:
    out = np.zeros((len(label_sets), len(vocabulary)), dtype=np.uint8)
    for i, labels in enumerate(label_sets):
        for lab in labels:
            out[i, vocabulary[lab]] = 1
    return out


@dataclass
class RetrievalSet:
    """Query and database codes with their label sets.

    Relevance follows the multi-label convention: a database item is relevant
    to a query when their label sets intersect.
    """

    query_codes: np.ndarray
    query_labels: list
    db_codes: np.ndarray
    db_labels: list
    n_bits: int

    def __post_init__(self):
        self.query_codes = np.atleast_2d(np.asarray(self.query_codes, dtype=np.uint8))
        self.db_codes = np.atleast_2d(np.asarray(self.db_codes, dtype=np.uint8))
        if self.query_codes.shape[1] != self.db_codes.shape[1]:
            raise ValueError("query and database codes have mismatched widths")
        expected = (self.n_bits + 7) // 8
        if self.query_codes.shape[1] != expected:
            raise ValueError(
                f"packed width {self.query_codes.shape[1]} does not match n_bits={self.n_bits}"
            )
        if len(self.query_labels) != self.query_codes.shape[0]:
            raise ValueError("query labels and codes have different lengths")
        if len(self.db_labels) != self.db_codes.shape[0]:
            raise ValueError("database labels and codes have different lengths")
        vocab = {}
        for labels in list(self.query_labels) + list(self.db_labels):
            for lab in labels:
                vocab.setdefault(lab, len(vocab))
        q = _label_matrix(self.query_labels, vocab)
        d = _label_matrix(self.db_labels, vocab)
        # (n_query, n_db) boolean relevance: label sets intersect
        self.relevance = (q.astype(np.int32) @ d.astype(np.int32).T) > 0

    @property
    def n_queries(self) -> int:
        return self.query_codes.shape[0]

    @property
    def n_db(self) -> int:
        return self.db_codes.shape[0]


def _ranked_relevance(rset: RetrievalSet, qi: int, exclude_self: bool):
    """Relevance flags of the database sorted by (Hamming distance, db index)."""
    dist = hamming_to_all(rset.query_codes[qi], rset.db_codes)
    rel = rset.relevance[qi]
    if exclude_self:
        keep = np.arange(rset.n_db) != qi
        dist, rel = dist[keep], rel[keep]
    order = np.argsort(dist, kind="stable")
    return rel[order], dist[order]


def _average_precision(ranked_rel: np.ndarray, n_relevant: int, k: int) -> float:
    if n_relevant == 0:
        return 0.0
    top = ranked_rel[:k]
    hits = np.cumsum(top)
    ranks = np.arange(1, top.size + 1)
    score = float((hits[top] / ranks[top]).sum())
    return score / min(n_relevant, k)


def map_at_k(rset: RetrievalSet, k: int, exclude_self: bool = False) -> float:
    """Mean over queries of average precision on the top-k Hamming ranking.

    The AP denominator is min(#relevant in the database, k); queries with no
    relevant items contribute 0. ``exclude_self`` drops database item i when
    scoring query i (self-retrieval evaluation).
    """
    total = 0.0
    for qi in range(rset.n_queries):
        rel, _ = _ranked_relevance(rset, qi, exclude_self)
        total += _average_precision(rel, int(rel.sum()), k)
    return total / max(rset.n_queries, 1)


def precision_at_n(rset: RetrievalSet, ns) -> dict[int, float]:
    """Fraction of relevant items among the top-N ranked results, averaged
    over queries; N is capped at the database size."""
    ns = [int(n) for n in ns]
    totals = dict.fromkeys(ns, 0.0)
    for qi in range(rset.n_queries):
        rel, _ = _ranked_relevance(rset, qi, False)
        for n in ns:
            eff = min(n, rel.size)
            totals[n] += float(rel[:eff].sum()) / eff if eff else 0.0
    return {n: totals[n] / max(rset.n_queries, 1) for n in ns}


def precision_at_radius(rset: RetrievalSet, radius: int = 2) -> float:
    """Precision among database items within the given Hamming radius,
    averaged over queries; an empty ball contributes 0."""
    total = 0.0
    for qi in range(rset.n_queries):
        dist = hamming_to_all(rset.query_codes[qi], rset.db_codes)
        inside = dist <= radius
        if np.any(inside):
            total += float(rset.relevance[qi][inside].mean())
    return total / max(rset.n_queries, 1)


def pr_curve(rset: RetrievalSet):
    """Macro-averaged precision and recall of the retrieved set {distance <= t}
    for every threshold t = 0..n_bits. Returns (thresholds, precision, recall).
    """
    thresholds = np.arange(rset.n_bits + 1)
    precision = np.zeros(thresholds.size)
    recall = np.zeros(thresholds.size)
    for qi in range(rset.n_queries):
        dist = hamming_to_all(rset.query_codes[qi], rset.db_codes)
        rel = rset.relevance[qi]
        n_rel = int(rel.sum())
        for ti, t in enumerate(thresholds):
            inside = dist <= t
            found = int(rel[inside].sum())
            if np.any(inside):
                precision[ti] += found / int(inside.sum())
            if n_rel:
                recall[ti] += found / n_rel
    n = max(rset.n_queries, 1)
    return thresholds, precision / n, recall / n


def intra_inter_distances(codes: np.ndarray, label_sets) -> tuple[float, float]:
    """Mean Hamming distance over same-class and different-class pairs of one
    code collection (classes match when label sets intersect). A side with no
    pairs reports 0."""
    codes = np.atleast_2d(np.asarray(codes, dtype=np.uint8))
    n = codes.shape[0]
    if len(label_sets) != n:
        raise ValueError("labels and codes have different lengths")
    vocab = {}
    for labels in label_sets:
        for lab in labels:
            vocab.setdefault(lab, len(vocab))
    lm = _label_matrix(label_sets, vocab).astype(np.int32)
    same = (lm @ lm.T) > 0
    intra_sum = inter_sum = 0.0
    intra_n = inter_n = 0
    for i in range(n - 1):
        d = hamming_to_all(codes[i], codes[i + 1 :])
        s = same[i, i + 1 :]
        intra_sum += float(d[s].sum())
        intra_n += int(s.sum())
        inter_sum += float(d[~s].sum())
        inter_n += int((~s).sum())
    d_intra = intra_sum / intra_n if intra_n else 0.0
    d_inter = inter_sum / inter_n if inter_n else 0.0
    return d_intra, d_inter
