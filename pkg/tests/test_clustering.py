import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_average, random_distances
from rmtsync.clustering import (
    Dendrogram,
    DistanceMatrix,
    Merge,
    agnes_average,
    cophenetic,
    corr_rows_to_distances,
    corr_to_metric_distance,
    first_merge_labels,
    to_newick,
)
from rmtsync.errors import DataError
from rmtsync.matrix import CorrelationMatrix, correlation_matrix


def parse_newick(text):
    """Minimal reader: returns nested tuples of (children | label, branch length)."""
    pos = 0

    def label():
        nonlocal pos
        if text[pos] == "'":
            pos += 1
            buf = []
            while True:
                if text[pos] == "'":
                    if text[pos + 1 : pos + 2] == "'":
                        buf.append("'")
                        pos += 2
                        continue
                    pos += 1
                    return "".join(buf)
                buf.append(text[pos])
                pos += 1
        start = pos
        while text[pos] not in ",):;":
            pos += 1
        return text[start:pos]

    def length():
        nonlocal pos
        if text[pos] != ":":
            return None
        pos += 1
        start = pos
        while text[pos] not in ",);":
            pos += 1
        return float(text[start:pos])

    def node():
        nonlocal pos
        if text[pos] == "(":
            pos += 1
            kids = [node()]
            while text[pos] == ",":
                pos += 1
                kids.append(node())
            assert text[pos] == ")"
            pos += 1
            return (tuple(kids), length())
        return (label(), length())

    tree = node()
    assert text[pos:] == ";"
    return tree


def clades(tree):
    """Set of leaf-label sets for every internal node."""
    out = set()

    def walk(t):
        body, _ = t
        if isinstance(body, str):
            return frozenset([body])
        leaves = frozenset().union(*(walk(k) for k in body))
        out.add(leaves)
        return leaves

    walk(tree)
    return out


def root_paths(tree, acc=0.0):
    body, length = tree
    acc += length or 0.0
    if isinstance(body, str):
        return {body: acc}
    res = {}
    for k in body:
        res.update(root_paths(k, acc))
    return res


def dendro_clades(dendro):
    return {frozenset(dendro.labels[i] for i in dendro.members(dendro.n + k)) for k in range(len(dendro.merges))}


def corr(values, labels=None):
    values = np.array(values, float)
    return CorrelationMatrix(values, labels or tuple("abcdefghijklmnop"[: len(values)]))


def test_row_distance_identity():
    assert corr_rows_to_distances(corr(np.eye(2))).values[0, 1] == pytest.approx(math.sqrt(2), abs=1e-15)


def test_row_distance_duplicate_rows():
    x = np.array([1.0, 3.0, 2.0, 7.0, 5.0])
    c = correlation_matrix(np.column_stack([x, x, x**2]))
    assert corr_rows_to_distances(c).values[0, 1] == pytest.approx(0.0, abs=1e-12)
    exact = corr([[1, 1, 0.3], [1, 1, 0.3], [0.3, 0.3, 1]])
    assert corr_rows_to_distances(exact).values[0, 1] == 0.0


def test_row_distance_hand_computed():
    c = corr([[1, 0.5, 0.2], [0.5, 1, 0.0], [0.2, 0.0, 1]])
    d = corr_rows_to_distances(c).values
    # row differences: (0.5,-0.5,0.2), (0.8,0.5,-0.8), (0.3,1,-1)
    assert d[0, 1] == pytest.approx(0.7348469228349535, abs=1e-14)
    assert d[0, 2] == pytest.approx(1.2369316876852983, abs=1e-14)
    assert d[1, 2] == pytest.approx(1.445683229480096, abs=1e-14)
    assert np.array_equal(d, d.T)


@pytest.mark.parametrize("rho, expected", [(1.0, 0.0), (-1.0, 2.0), (0.0, math.sqrt(2))])
def test_metric_distance_examples(rho, expected):
    d = corr_to_metric_distance(corr([[1, rho], [rho, 1]]))
    assert d.values[0, 1] == pytest.approx(expected, abs=1e-15)


def test_distance_matrix_validation():
    with pytest.raises(DataError):
        DistanceMatrix([[0, 1], [2, 0]], ("a", "b"))
    with pytest.raises(DataError):
        DistanceMatrix([[1, 1], [1, 0]], ("a", "b"))
    with pytest.raises(DataError):
        DistanceMatrix([[0, -1], [-1, 0]], ("a", "b"))
    with pytest.raises(DataError, match="labels"):
        DistanceMatrix([[0, 1], [1, 0]], ("a",))


def test_agnes_two_points():
    dendro = agnes_average(DistanceMatrix([[0, 3], [3, 0]], ("a", "b")))
    assert dendro.merges == (Merge(0, 1, 3.0),)


def test_agnes_forced_order():
    d = DistanceMatrix([[0, 1, 4], [1, 0, 4], [4, 4, 0]], ("a", "b", "c"))
    dendro = agnes_average(d)
    assert dendro.merges == (Merge(0, 1, 1.0), Merge(2, 3, 4.0))
    assert first_merge_labels(dendro) == {"a", "b"}


def test_agnes_needs_two_points():
    with pytest.raises(DataError):
        agnes_average(DistanceMatrix([[0.0]], ("a",)))


def test_agnes_tie_rule():
    # every pair at distance 1: the (0, 1) pair wins, then the new node 4 is compared at 1 with 2 and 3
    d = np.ones((4, 4)) - np.eye(4)
    dendro = agnes_average(DistanceMatrix(d, tuple("abcd")))
    assert [(m.left, m.right) for m in dendro.merges] == [(0, 1), (2, 3), (4, 5)]
    assert brute_force_average(d) == [(m.left, m.right, m.height) for m in dendro.merges]


@pytest.mark.parametrize("n", [2, 3, 5, 8, 12])
def test_agnes_matches_brute_force(rng, n):
    for _ in range(20):
        d = random_distances(rng, n)
        got = agnes_average(DistanceMatrix(d, None)).merges
        want = brute_force_average(d)
        assert [(m.left, m.right) for m in got] == [(a, b) for a, b, _ in want]
        np.testing.assert_allclose([m.height for m in got], [h for *_, h in want], rtol=0, atol=1e-10)


def test_heights_monotone_and_cophenetic(rng):
    for _ in range(30):
        n = int(rng.integers(2, 13))
        dendro = agnes_average(DistanceMatrix(random_distances(rng, n), None))
        h = [m.height for m in dendro.merges]
        assert all(b >= a - 1e-12 for a, b in zip(h, h[1:]))
        coph = cophenetic(dendro)
        assert coph.max() == h[-1]
        assert sorted(dendro.leaf_order()) == list(range(n))


def test_permutation_invariance(rng):
    for _ in range(20):
        n = int(rng.integers(3, 10))
        d = random_distances(rng, n)
        labels = tuple(f"x{i}" for i in range(n))
        perm = rng.permutation(n)
        base = agnes_average(DistanceMatrix(d, labels))
        moved = agnes_average(DistanceMatrix(d[np.ix_(perm, perm)], tuple(labels[i] for i in perm)))
        assert dendro_clades(base) == dendro_clades(moved)
        np.testing.assert_allclose([m.height for m in moved.merges], [m.height for m in base.merges], atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 8), st.integers(0, 2**32 - 1))
def test_row_distances_triangle_inequality(n, seed):
    rng = np.random.default_rng(seed)
    c = correlation_matrix(rng.normal(size=(n + 5, n)))
    d = corr_rows_to_distances(c).values
    for i, j, k in itertools.permutations(range(n), 3):
        assert d[i, k] <= d[i, j] + d[j, k] + 1e-12


def test_newick_single_merge():
    dendro = Dendrogram(("a", "b"), (Merge(0, 1, 2.0),))
    assert to_newick(dendro) == "(a:1,b:1);"


def test_newick_forced_order_nested():
    d = DistanceMatrix([[0, 1, 4], [1, 0, 4], [4, 4, 0]], ("a", "b", "c"))
    text = to_newick(agnes_average(d))
    assert text == "(c:2,(a:0.5,b:0.5):1.5);"
    tree = parse_newick(text)
    assert clades(tree) == {frozenset("ab"), frozenset("abc")}
    assert set(root_paths(tree).values()) == {2.0}


def test_newick_roundtrip_topology(rng):
    for _ in range(25):
        n = int(rng.integers(2, 13))
        labels = tuple(f"c{i}" for i in range(n))
        dendro = agnes_average(DistanceMatrix(random_distances(rng, n), labels))
        tree = parse_newick(to_newick(dendro))
        assert clades(tree) == dendro_clades(dendro)
        paths = root_paths(tree)
        assert set(paths) == set(labels)
        # ultrametric: every leaf the same distance from the root
        np.testing.assert_allclose(list(paths.values()), dendro.merges[-1].height / 2, atol=1e-12)


def test_newick_quotes_metacharacters():
    labels = ("New Zealand", "it's", "a,b", "usa")
    d = np.ones((4, 4)) - np.eye(4)
    text = to_newick(agnes_average(DistanceMatrix(d, labels)))
    assert "'New Zealand'" in text and "'it''s'" in text and "'a,b'" in text
    assert "'usa'" not in text
    assert {lab for lab in root_paths(parse_newick(text))} == set(labels)


def test_dendrogram_json_roundtrip(rng):
    dendro = agnes_average(DistanceMatrix(random_distances(rng, 6), tuple("abcdef")))
    assert Dendrogram.from_dict(dendro.to_dict()) == dendro
