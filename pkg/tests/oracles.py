"""Independent reference implementations used to certify the production code.

Two families live here:

* extended-precision scalar evaluations of the ball-geometry closed forms
  (mpmath, 50 digits), kept free of any clamping or vectorization;
* straight-line transcriptions of the contrastive/quantization objectives as
  plain Python loops over ``math`` scalars, with no log-sum-exp stabilization.

Nothing in this module imports the package under test.
"""

from __future__ import annotations

import math

import mpmath as mp

mp.mp.dps = 50


# ---------------------------------------------------------------------------
# high-precision geometry
# ---------------------------------------------------------------------------

def mp_mobius_add(x, y, c):
    x = [mp.mpf(v) for v in x]
    y = [mp.mpf(v) for v in y]
    c = mp.mpf(c)
    xy = mp.fsum(a * b for a, b in zip(x, y))
    x2 = mp.fsum(a * a for a in x)
    y2 = mp.fsum(b * b for b in y)
    den = 1 + 2 * c * xy + c**2 * x2 * y2
    return [((1 + 2 * c * xy + c * y2) * a + (1 - c * x2) * b) / den for a, b in zip(x, y)]


def mp_distance(x, y, c):
    c = mp.mpf(c)
    m = mp_mobius_add([-mp.mpf(v) for v in x], y, c)
    norm = mp.sqrt(mp.fsum(v * v for v in m))
    return 2 / mp.sqrt(c) * mp.atanh(mp.sqrt(c) * norm)


def mp_expmap0(v, c):
    c = mp.mpf(c)
    v = [mp.mpf(a) for a in v]
    norm = mp.sqrt(mp.fsum(a * a for a in v))
    if norm == 0:
        return [mp.mpf(0) for _ in v]
    coef = mp.tanh(mp.sqrt(c) * norm) / (mp.sqrt(c) * norm)
    return [coef * a for a in v]


def mp_logmap0(y, c):
    c = mp.mpf(c)
    y = [mp.mpf(a) for a in y]
    norm = mp.sqrt(mp.fsum(a * a for a in y))
    if norm == 0:
        return [mp.mpf(0) for _ in y]
    coef = mp.atanh(mp.sqrt(c) * norm) / (mp.sqrt(c) * norm)
    return [coef * a for a in y]


def mp_poincare_to_klein(x, c):
    c = mp.mpf(c)
    x = [mp.mpf(a) for a in x]
    den = 1 + c * mp.fsum(a * a for a in x)
    return [2 * a / den for a in x]


def mp_klein_to_poincare(x, c):
    c = mp.mpf(c)
    x = [mp.mpf(a) for a in x]
    den = 1 + mp.sqrt(1 - c * mp.fsum(a * a for a in x))
    return [a / den for a in x]


def mp_einstein_midpoint(points, c, weights=None):
    c = mp.mpf(c)
    if weights is None:
        weights = [mp.mpf(1)] * len(points)
    klein = [mp_poincare_to_klein(p, c) for p in points]
    gammas = [
        mp.mpf(w) / mp.sqrt(1 - c * mp.fsum(a * a for a in k))
        for k, w in zip(klein, weights)
    ]
    total = mp.fsum(gammas)
    dim = len(points[0])
    mid = [mp.fsum(g * k[j] for g, k in zip(gammas, klein)) / total for j in range(dim)]
    return mp_klein_to_poincare(mid, c)


# ---------------------------------------------------------------------------
# naive objective transcription (float64 scalars, no stabilization)
# ---------------------------------------------------------------------------

def naive_hyperbolic_distance(x, y, c):
    xy = sum(a * b for a, b in zip(x, y))
    x2 = sum(a * a for a in x)
    y2 = sum(b * b for b in y)
    den = 1 - 2 * c * xy + c**2 * x2 * y2
    m = [
        ((1 - 2 * c * xy + c * y2) * -a + (1 - c * x2) * b) / den
        for a, b in zip(x, y)
    ]
    norm = math.sqrt(sum(v * v for v in m))
    return 2 / math.sqrt(c) * math.atanh(math.sqrt(c) * norm)


def naive_cosine_distance(x, y):
    k = len(x)
    nx = math.sqrt(sum(a * a for a in x))
    ny = math.sqrt(sum(b * b for b in y))
    cos = sum(a * b for a, b in zip(x, y)) / (nx * ny)
    return (k / 2.0) * (1.0 - cos)


class NaiveLoss:
    """Direct per-anchor summation of the training objectives.

    ``views`` is a pair of B x n lists (the two augmented views in the metric
    space the losses act on), ``ancestors[l][i]`` the layer-l ancestor index of
    batch item i, and ``prototypes[l]`` the layer-l prototype coordinates.
    """

    def __init__(self, views, ancestors, prototypes, tau, metric, c):
        self.views = views
        self.ancestors = ancestors
        self.prototypes = prototypes
        self.tau = tau
        self.metric = metric
        self.c = c
        self.batch = len(views[0])

    def dist(self, x, y):
        if self.metric == "hyperbolic":
            return naive_hyperbolic_distance(x, y, self.c)
        return naive_cosine_distance(x, y)

    def instance_negatives(self, i, layer):
        anc = self.ancestors[layer]
        return [j for j in range(self.batch) if anc[j] != anc[i]]

    def instance_term(self, i, view, negatives):
        other = 1 - view
        pos = math.exp(-self.dist(self.views[view][i], self.views[other][i]) / self.tau)
        neg = 0.0
        for j in negatives:
            for u in (0, 1):
                neg += math.exp(-self.dist(self.views[view][i], self.views[u][j]) / self.tau)
        return -math.log(pos / (pos + neg))

    def hierarchical_instance(self):
        layers = len(self.ancestors)
        total = 0.0
        for i in range(self.batch):
            for layer in range(layers):
                negatives = self.instance_negatives(i, layer)
                for view in (0, 1):
                    total += self.instance_term(i, view, negatives) / (layer + 1)
        return total / (self.batch * layers)

    def flat_instance(self):
        total = 0.0
        for i in range(self.batch):
            negatives = [j for j in range(self.batch) if j != i]
            for view in (0, 1):
                total += self.instance_term(i, view, negatives)
        return total / self.batch

    def prototype_term(self, i, view, layer):
        anc = self.ancestors[layer][i]
        protos = self.prototypes[layer]
        pos = math.exp(-self.dist(self.views[view][i], protos[anc]) / self.tau)
        neg = 0.0
        for j in range(len(protos)):
            if j != anc:
                neg += math.exp(-self.dist(self.views[view][i], protos[j]) / self.tau)
        return -math.log(pos / (pos + neg))

    def hierarchical_prototype(self):
        layers = len(self.prototypes)
        total = 0.0
        for i in range(self.batch):
            for layer in range(layers):
                for view in (0, 1):
                    total += self.prototype_term(i, view, layer) / (layer + 1)
        return total / (self.batch * layers)


def naive_quantization(codes1, codes2):
    total = 0.0
    for codes in (codes1, codes2):
        for row in codes:
            for h in row:
                total += math.log(math.cosh(abs(h) - 1.0))
    return 0.5 * total


# ---------------------------------------------------------------------------
# brute-force retrieval counting
# ---------------------------------------------------------------------------

def naive_hamming(a, b):
    return sum(1 for x, y in zip(a, b) if x != y)


def naive_average_precision(ranked_relevance, n_relevant, k):
    if n_relevant == 0:
        return 0.0
    hits = 0
    score = 0.0
    for rank, rel in enumerate(ranked_relevance[:k], start=1):
        if rel:
            hits += 1
            score += hits / rank
    return score / min(n_relevant, k)
