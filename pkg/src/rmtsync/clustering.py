"""Average-linkage agglomerative clustering (AGNES) and Newick export.

Node ids follow the usual linkage convention: 0..n-1 are leaves and the merge
at step k creates node n+k.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np

from rmtsync.errors import DataError
from rmtsync.matrix import CorrelationMatrix


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    values: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        a = np.array(self.values, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DataError(f"distance matrix must be square, got {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise DataError("distances must be finite and non-negative")
        if not np.array_equal(a, a.T):
            raise DataError("distance matrix must be symmetric")
        if np.any(np.diag(a) != 0):
            raise DataError("distance matrix must have a zero diagonal")
        labels = tuple(self.labels) if self.labels is not None else tuple(map(str, range(len(a))))
        if len(labels) != len(a):
            raise DataError(f"{len(labels)} labels for {len(a)} points")
        a.setflags(write=False)
        object.__setattr__(self, "values", a)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float


@dataclass(frozen=True)
class Dendrogram:
    labels: tuple[str, ...]
    merges: tuple[Merge, ...]

    @property
    def n(self) -> int:
        return len(self.labels)

    def members(self, node: int) -> list[int]:
        """Leaf ids under ``node``, left subtree first."""
        if node < self.n:
            return [node]
        m = self.merges[node - self.n]
        return self.members(m.left) + self.members(m.right)

    def leaf_order(self) -> list[int]:
        return self.members(2 * self.n - 2) if self.n > 1 else [0]

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "merges": [{"left": m.left, "right": m.right, "height": m.height} for m in self.merges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> Dendrogram:
        return cls(
            tuple(d["labels"]),
            tuple(Merge(int(m["left"]), int(m["right"]), float(m["height"])) for m in d["merges"]),
        )


def _distances(a: np.ndarray, labels) -> DistanceMatrix:
    a = 0.5 * (a + a.T)
    np.fill_diagonal(a, 0.0)
    return DistanceMatrix(np.maximum(a, 0.0), labels)


def corr_rows_to_distances(c: CorrelationMatrix) -> DistanceMatrix:
    """Euclidean distance between rows of the correlation matrix, each row a feature vector."""
    x = c.values
    diff = x[:, None, :] - x[None, :, :]
    return _distances(np.sqrt(np.sum(diff * diff, axis=2)), c.labels)


def corr_to_metric_distance(c: CorrelationMatrix) -> DistanceMatrix:
    """The conventional correlation distance ``sqrt(2 (1 - rho))``."""
    return _distances(np.sqrt(np.maximum(2.0 * (1.0 - c.values), 0.0)), c.labels)


def agnes_average(d: DistanceMatrix) -> Dendrogram:
    """Average-linkage agglomeration with Lance-Williams updates.

    Ties on the merge height go to the lexicographically smallest
    ``(min id, max id)`` pair of node ids.
    """
    n = d.n
    if n < 2:
        raise DataError("need at least 2 points to cluster")
    dist = np.array(d.values, dtype=float)
    np.fill_diagonal(dist, np.inf)
    node = list(range(n))  # slot -> current node id
    size = [1] * n
    alive = np.ones(n, dtype=bool)
    merges = []
    for step in range(n - 1):
        live = np.flatnonzero(alive)
        sub = dist[np.ix_(live, live)]
        best = sub.min()
        ii, jj = np.nonzero(sub == best)
        pairs = sorted(
            (min(node[live[i]], node[live[j]]), max(node[live[i]], node[live[j]]), live[i], live[j])
            for i, j in zip(ii, jj)
            if i < j
        )
        lo_id, hi_id, si, sj = pairs[0]
        merges.append(Merge(lo_id, hi_id, float(best)))
        ni, nj = size[si], size[sj]
        row = (ni * dist[si] + nj * dist[sj]) / (ni + nj)
        dist[si, :] = row
        dist[:, si] = row
        dist[si, si] = np.inf
        alive[sj] = False
        dist[sj, :] = np.inf
        dist[:, sj] = np.inf
        size[si] = ni + nj
        node[si] = n + step
    return Dendrogram(d.labels, tuple(merges))


_NEWICK_META = re.compile(r"[\s()\[\]':;,]")


def _newick_label(label: str) -> str:
    if label and not _NEWICK_META.search(label):
        return label
    return "'" + label.replace("'", "''") + "'"


def _fmt(x: float) -> str:
    s = f"{x:.15g}"
    return "0" if s == "-0" else s


def to_newick(dendro: Dendrogram) -> str:
    """Newick text with ultrametric branch lengths.

    Each node sits at half its merge height, so every leaf is ``root_height / 2``
    from the root and a single merge at height 2 prints as ``(a:1,b:1);``.
    """
    n = dendro.n
    if n == 1:
        return _newick_label(dendro.labels[0]) + ";"

    def depth(node: int) -> float:
        return 0.0 if node < n else dendro.merges[node - n].height / 2.0

    def render(node: int) -> str:
        if node < n:
            return _newick_label(dendro.labels[node])
        m = dendro.merges[node - n]
        here = depth(node)
        parts = [f"{render(c)}:{_fmt(max(here - depth(c), 0.0))}" for c in (m.left, m.right)]
        return "(" + ",".join(parts) + ")"

    return render(2 * n - 2) + ";"


def height_of(dendro: Dendrogram) -> float:
    return dendro.merges[-1].height if dendro.merges else 0.0


def cophenetic(dendro: Dendrogram) -> np.ndarray:
    """Matrix of merge heights at which each pair of leaves first joins."""
    n = dendro.n
    out = np.zeros((n, n))
    for m in dendro.merges:
        left, right = dendro.members(m.left), dendro.members(m.right)
        for i in left:
            for j in right:
                out[i, j] = out[j, i] = m.height
    return out


def first_merge_labels(dendro: Dendrogram) -> frozenset[str]:
    m = dendro.merges[0]
    return frozenset(dendro.labels[i] for i in dendro.members(m.left) + dendro.members(m.right))


__all__ = [
    "DistanceMatrix",
    "Dendrogram",
    "Merge",
    "corr_rows_to_distances",
    "corr_to_metric_distance",
    "agnes_average",
    "to_newick",
    "cophenetic",
    "first_merge_labels",
    "height_of",
]
