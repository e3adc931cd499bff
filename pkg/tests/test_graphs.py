from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bccd.errors import ArgumentError, CapacityError
from bccd.graphs._batch import batch_ancestors, batch_fingerprints, ci_index, ci_lookup, fingerprint_keys
from bccd.graphs.core import CiStatement, Dag, Mag, Mark, Pag
from bccd.graphs.enumeration import (
    ancestral_table,
    dag_fingerprints,
    dag_index,
    dag_table,
    enumerate_dags,
    index_of_dag,
    markov_equivalence_class,
)
from bccd.graphs.separation import (
    ancestors,
    d_separated,
    independence_fingerprint,
    latent_project,
    m_separated,
    markov_equivalent,
    pag_of,
    potentially_directed_path,
)
from bccd.graphs.textio import format_graph, parse_graph

from conftest import T, V, X, dags, mags
from oracles import all_dags_bruteforce, robinson_dag_count, separated_by_paths

A, B, C = 0, 1, 2
T_, H_, TT = Mark.TAIL, Mark.ARROW, Mark.CIRCLE


def chain():
    return Dag(3, {(A, C), (C, B)})  # A -> C -> B


def collider():
    return Dag(3, {(A, C), (B, C)})


def fork():
    return Dag(3, {(C, A), (C, B)})


def bidir(n, *pairs):
    return Mag(n, {p: (H_, H_) for p in pairs})


# ---------------------------------------------------------------- types


class TestTypes:
    def test_dag_rejects_cycle_loop_and_double_edge(self):
        with pytest.raises(ArgumentError):
            Dag(2, {(0, 1), (1, 0)})
        with pytest.raises(ArgumentError):
            Dag(2, {(0, 0)})
        with pytest.raises(ArgumentError):
            Dag(3, {(0, 1), (1, 2), (2, 0)})
        with pytest.raises(ArgumentError):
            Dag(2, {(0, 5)})

    def test_mag_rejects_undirected_and_almost_cycles(self):
        with pytest.raises(ArgumentError):
            Mag(2, {(0, 1): (T_, T_)})
        with pytest.raises(ArgumentError):
            Mag(2, {(0, 1): (TT, H_)})
        # 0 -> 1 -> 2 with 0 <-> 2 is not ancestral
        with pytest.raises(ArgumentError):
            Mag(3, {(0, 1): (T_, H_), (1, 2): (T_, H_), (0, 2): (H_, H_)})

    def test_pag_allows_circles(self):
        p = Pag(2, {(1, 0): (TT, H_)})
        assert p.mark_at(0, 1) == H_ and p.mark_at(1, 0) == TT
        assert p.edges == ((0, 1, H_, TT),)

    def test_ci_statement_canonical(self):
        s = CiStatement(3, 1, {0})
        assert (s.x, s.y) == (1, 3)
        with pytest.raises(ArgumentError):
            CiStatement(1, 1)
        with pytest.raises(ArgumentError):
            CiStatement(0, 1, {1})

    def test_free_parameters(self):
        assert Dag(3).n_free_parameters() == 3
        assert collider().n_free_parameters() == 1 + 1 + 4
        assert collider().n_free_parameters(arity=3) == 2 + 2 + 9 * 2


# ----------------------------------------------------------- separation


class TestSeparation:
    def test_d_separation_examples(self):
        assert d_separated(chain(), A, B, {C})
        assert not d_separated(collider(), A, B, {C})
        assert d_separated(collider(), A, B, set())

    def test_m_separation_examples(self):
        assert not m_separated(bidir(2, (0, 1)), 0, 1)
        g = bidir(3, (A, C), (C, B))
        assert m_separated(g, A, B)
        assert not m_separated(g, A, B, {C})
        assert separated_by_paths(g, A, B, {C}) is False

    def test_descendant_of_collider_opens(self):
        g = Dag(4, {(0, 2), (1, 2), (2, 3)})
        assert not d_separated(g, 0, 1, {3})

    def test_argument_errors(self):
        with pytest.raises(ArgumentError):
            d_separated(chain(), A, A)
        with pytest.raises(ArgumentError):
            d_separated(chain(), A, B, {A})
        with pytest.raises(ArgumentError):
            d_separated(chain(), A, 7)
        with pytest.raises(ArgumentError):
            d_separated(bidir(2, (0, 1)), 0, 1)

    @pytest.mark.parametrize("n", [3, 4])
    def test_scalar_batch_and_path_oracle_agree_on_ancestral_graphs(self, n):
        pa, sp = ancestral_table(n)
        fp = batch_fingerprints(pa, sp)
        rng = np.random.default_rng(n)
        idx = np.arange(len(pa)) if n == 3 else rng.choice(len(pa), 400, replace=False)
        for g in idx:
            m = Mag.from_masks(pa[g], sp[g])
            for q, (x, y, zm) in enumerate(ci_index(n)):
                z = [v for v in range(n) if zm >> v & 1]
                assert m_separated(m, x, y, z) == fp[g, q] == separated_by_paths(m, x, y, z)

    def test_symmetry_all_small_dags(self):
        for n in (3, 4):
            for g in enumerate_dags(n):
                for x, y, zm in ci_index(n):
                    z = [v for v in range(n) if zm >> v & 1]
                    assert d_separated(g, x, y, z) == d_separated(g, y, x, z)

    @given(mags(2, 5), st.data())
    def test_separation_matches_path_oracle(self, m, data):
        n = m.node_count
        x, y = data.draw(st.permutations(range(n)))[:2]
        z = [v for v in range(n) if v not in (x, y) and data.draw(st.booleans())]
        assert m_separated(m, x, y, z) == separated_by_paths(m, x, y, z)


class TestAncestors:
    def test_examples(self):
        g = Dag(3, {(0, 1), (1, 2)})
        assert ancestors(g, 2) == {0, 1, 2}
        assert ancestors(Dag(1), 0) == {0}
        assert ancestors(bidir(2, (0, 1)), 1) == {1}
        with pytest.raises(ArgumentError):
            ancestors(g, 3)

    @given(dags(1, 6))
    def test_batch_matches_scalar(self, g):
        masks = batch_ancestors(np.array([g.parent_masks], dtype=np.int64))[0]
        assert tuple(int(v) for v in masks) == g.ancestor_masks


# ------------------------------------------------------------- projection


class TestLatentProjection:
    def test_examples(self):
        m = latent_project(Dag(2, {(0, 1)}), [0, 1])
        assert m.edges == ((0, 1, T_, H_),)
        # X <- H -> Y
        m = latent_project(Dag(3, {(2, 0), (2, 1)}), [0, 1])
        assert m.edges == ((0, 1, H_, H_),)

    def test_empty_observed(self):
        with pytest.raises(ArgumentError):
            latent_project(chain(), [])

    def test_inducing_path_makes_adjacency(self):
        # 0 -> 1 <- H -> 2 with H hidden gives 0 -> 1 <-> 2
        g = Dag(4, {(0, 1), (3, 1), (3, 2)})
        m = latent_project(g, [0, 1, 2])
        assert m.adjacent(1, 2) and not m.adjacent(0, 2)
        assert m.mark_at(1, 2) == H_ and m.mark_at(2, 1) == H_

    def test_confounded_projection(self, confounded, confounded_mag):
        full, udag = confounded
        m = confounded_mag
        assert m.node_count == 6
        # hidden confounder of V and T leaves a bidirected edge
        assert m.mark_at(V, T) == H_ and m.mark_at(T, V) == H_
        assert m_separated(m, X, T) and not m.adjacent(X, T)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_fingerprint_preserved_exhaustive(self, n):
        for g in enumerate_dags(n):
            _check_projection(g)

    def test_fingerprint_preserved_exhaustive_five(self):
        """Every 5-node DAG and subset of size <= 4, by batch projection."""
        pa = dag_table(5).astype(np.int64)
        fp = dag_fingerprints(5)
        anc = batch_ancestors(pa).astype(np.int64)
        full = ci_lookup(5)
        for k in range(1, 5):
            for S in combinations(range(5), k):
                ppa, psp = _batch_project(pa, fp, anc, S)
                got = batch_fingerprints(ppa, psp)
                cols = [full[(S[x], S[y], _lift(zm, S))] for x, y, zm in ci_index(k)]
                assert np.array_equal(got, fp[:, cols]), S

    def test_batch_projection_matches_scalar(self):
        pa = dag_table(5).astype(np.int64)
        fp = dag_fingerprints(5)
        anc = batch_ancestors(pa).astype(np.int64)
        rng = np.random.default_rng(0)
        for g in rng.choice(len(pa), 40, replace=False):
            for S in [(0, 1, 2), (1, 3, 4), (0, 2, 3, 4)]:
                ppa, psp = _batch_project(pa[g : g + 1], fp[g : g + 1], anc[g : g + 1], S)
                m = latent_project(Dag.from_parent_masks(pa[g]), S)
                assert m.parent_masks == tuple(int(v) for v in ppa[0])
                assert m.spouse_masks == tuple(int(v) for v in psp[0])

    @given(dags(2, 7), st.data())
    def test_projection_is_maximal_and_preserves_fingerprint(self, g, data):
        k = data.draw(st.integers(1, min(g.node_count, 5)))
        S = sorted(data.draw(st.permutations(range(g.node_count)))[:k])
        _check_projection(g, [S])


def _lift(mask, S):
    return sum(1 << S[i] for i in range(len(S)) if mask >> i & 1)


def _batch_project(pa, fp, anc, S):
    """Project many DAGs at once: adjacency iff no subset of S separates."""
    n = pa.shape[1]
    look = ci_lookup(n)
    k = len(S)
    ppa = np.zeros((len(pa), k), dtype=np.int64)
    psp = np.zeros((len(pa), k), dtype=np.int64)
    for i, j in combinations(range(k), 2):
        a, b = S[i], S[j]
        rest = [v for v in S if v not in (a, b)]
        sep = np.zeros(len(pa), dtype=bool)
        for r in range(len(rest) + 1):
            for z in combinations(rest, r):
                sep |= fp[:, look[(a, b, sum(1 << v for v in z))]]
        adj = ~sep
        a_anc_b = (anc[:, b] >> a & 1).astype(bool)
        b_anc_a = (anc[:, a] >> b & 1).astype(bool)
        ppa[:, j] |= np.where(adj & a_anc_b, 1 << i, 0)
        ppa[:, i] |= np.where(adj & b_anc_a, 1 << j, 0)
        both = adj & ~a_anc_b & ~b_anc_a
        psp[:, i] |= np.where(both, 1 << j, 0)
        psp[:, j] |= np.where(both, 1 << i, 0)
    return ppa, psp


def _check_projection(g, subsets=None):
    n = g.node_count
    fp = independence_fingerprint(g) if n <= 6 else None
    if subsets is None:
        subsets = [S for k in range(1, min(n, 4) + 1) for S in combinations(range(n), k)]
    for S in subsets:
        m = latent_project(g, S)
        for i, j in combinations(range(len(S)), 2):
            rest = [v for v in range(len(S)) if v not in (i, j)]
            separable = any(m_separated(m, i, j, z) for r in range(len(rest) + 1) for z in combinations(rest, r))
            assert separable != m.adjacent(i, j)
        for x, y, zm in ci_index(len(S)):
            z = [v for v in range(len(S)) if zm >> v & 1]
            want = d_separated(g, S[x], S[y], [S[v] for v in z])
            if fp is not None:
                assert want == (CiStatement(S[x], S[y], frozenset(S[v] for v in z)) in fp)
            assert m_separated(m, x, y, z) == want


# ---------------------------------------------------------- fingerprints


class TestFingerprints:
    def test_examples(self):
        assert independence_fingerprint(Dag(2)) == {CiStatement(0, 1)}
        assert independence_fingerprint(Dag(2, {(0, 1)})) == frozenset()

    def test_three_node_classes(self):
        fps = {independence_fingerprint(g) for g in enumerate_dags(3)}
        assert len(fps) == 11

    def test_capacity(self):
        with pytest.raises(CapacityError):
            independence_fingerprint(Dag(7))

    def test_markov_equivalence_examples(self):
        assert markov_equivalent(Dag(2, {(0, 1)}), Dag(2, {(1, 0)}))
        assert not markov_equivalent(collider(), chain())
        assert markov_equivalent(chain(), fork())
        with pytest.raises(ArgumentError):
            markov_equivalent(Dag(2), Dag(3))

    @given(dags(3, 4), dags(3, 4), dags(3, 4))
    def test_equivalence_relation(self, a, b, c):
        assert markov_equivalent(a, a)
        if a.node_count == b.node_count:
            assert markov_equivalent(a, b) == markov_equivalent(b, a)
            if b.node_count == c.node_count and markov_equivalent(a, b) and markov_equivalent(b, c):
                assert markov_equivalent(a, c)

    def test_batch_matches_scalar_fingerprint(self):
        for g in enumerate_dags(4)[::7]:
            fp = batch_fingerprints(np.array([g.parent_masks]))[0]
            want = {CiStatement(x, y, frozenset(v for v in range(4) if z >> v & 1)) for (x, y, z), f in zip(ci_index(4), fp) if f}
            assert want == independence_fingerprint(g)


# ------------------------------------------------------------ enumeration


class TestEnumeration:
    @pytest.mark.parametrize("n,count", [(1, 1), (2, 3), (3, 25), (4, 543), (5, 29281)])
    def test_counts(self, n, count):
        assert len(enumerate_dags(n)) == count == robinson_dag_count(n)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_bruteforce_set(self, n):
        assert set(enumerate_dags(n)) == set(all_dags_bruteforce(n))

    @pytest.mark.parametrize("n", [4, 5])
    def test_no_duplicates_and_canonical_order(self, n):
        pa = dag_table(n)
        assert len({tuple(r) for r in pa}) == len(pa)
        keys = []
        for row in pa:
            bits = "".join(str(row[j] >> i & 1) for i in range(n) for j in range(n))
            keys.append(bits)
        assert keys == sorted(keys)
        assert not pa[0].any()

    def test_index_round_trip(self):
        for i, g in enumerate(enumerate_dags(4)):
            assert index_of_dag(g) == i
        assert len(dag_index(3)) == 25

    @pytest.mark.parametrize("n", [0, 6])
    def test_capacity(self, n):
        with pytest.raises(CapacityError):
            enumerate_dags(n)


# ------------------------------------------------------------------ PAGs


def _dag_classes(n):
    """Canonical DAG indices grouped by independence fingerprint."""
    groups = {}
    for i, key in enumerate(fingerprint_keys(dag_fingerprints(n))):
        groups.setdefault(key, []).append(i)
    return list(groups.values())


class TestPag:
    def test_two_node_class(self):
        p = pag_of([Dag(2, {(0, 1)}), Dag(2, {(1, 0)})])
        assert p.edges == ((0, 1, TT, TT),)

    def test_singleton_collider(self):
        p = pag_of([collider()])
        assert p.mark_at(C, A) == H_ and p.mark_at(A, C) == T_
        assert pag_of(markov_equivalence_class(collider())).mark_at(A, C) == TT

    def test_chain_class(self):
        p = pag_of(markov_equivalence_class(chain()))
        assert {(a, b): (ma, mb) for a, b, ma, mb in p.edges} == {(0, 2): (TT, TT), (1, 2): (TT, TT)}

    def test_errors(self):
        with pytest.raises(ArgumentError):
            pag_of([])
        with pytest.raises(ArgumentError):
            pag_of([Dag(2), Dag(2, {(0, 1)})])

    @pytest.mark.parametrize("n", [3, 4])
    def test_circles_exactly_where_members_differ(self, n):
        dags_n = enumerate_dags(n)
        for members in _dag_classes(n):
            p = pag_of([dags_n[i] for i in members])
            for a, b, ma, mb in p.edges:
                for end, other, mark in ((a, b, ma), (b, a, mb)):
                    marks = {Mag.from_dag(dags_n[i]).mark_at(end, other) for i in members}
                    assert (mark == TT) == (len(marks) > 1)

    def test_dag_class_by_mag_enumeration_matches_dag_enumeration(self):
        dags_n = enumerate_dags(4)
        for members in _dag_classes(4)[::5]:
            cls = markov_equivalence_class(dags_n[members[0]])
            assert {m.to_dag() for m in cls if m.is_dag()} == {dags_n[i] for i in members}

    def test_potentially_directed_paths(self):
        xy = Dag(2, {(0, 1)})
        assert potentially_directed_path(xy, 0, 1) and not potentially_directed_path(xy, 1, 0)
        circ = Pag(2, {(0, 1): (TT, TT)})
        assert potentially_directed_path(circ, 0, 1) and potentially_directed_path(circ, 1, 0)
        assert not potentially_directed_path(fork(), A, B)
        with pytest.raises(ArgumentError):
            potentially_directed_path(circ, 0, 0)

    def test_potentially_directed_path_via_orientations(self):
        """A pdp exists iff some DAG member of the class orients a directed path."""
        for g in enumerate_dags(4)[::5]:
            cls = markov_equivalence_class(g)
            p = pag_of(cls)
            dags_in = [m.to_dag() for m in cls if m.is_dag()]
            for x in range(4):
                for y in range(4):
                    if x != y:
                        exists = any(x in ancestors(d, y) for d in dags_in)
                        if exists:
                            assert potentially_directed_path(p, x, y)


# ----------------------------------------------------------------- text io


class TestTextFormat:
    def test_round_trip(self):
        p = Pag(4, {(0, 1): (T_, H_), (0, 2): (H_, H_), (1, 3): (TT, TT), (2, 3): (TT, H_)})
        text = format_graph(p)
        assert "0 -> 1" in text and "0 <-> 2" in text and "1 o-o 3" in text and "2 o-> 3" in text
        assert parse_graph(text) == p or format_graph(parse_graph(text)) == text

    @given(dags(1, 6))
    def test_dag_round_trip(self, g):
        assert parse_graph(format_graph(g), Dag) == g

    @given(mags(2, 5))
    def test_mag_round_trip(self, m):
        assert format_graph(parse_graph(format_graph(m), Mag)) == format_graph(m)

    def test_comments_and_errors(self):
        assert parse_graph("# hello\nnodes: 2\n0 -> 1  # edge\n", Dag) == Dag(2, {(0, 1)})
        for bad in ["0 -> 1\n", "nodes: 2\n0 => 1\n", "nodes: 2\n0 -> 1\n1 -> 0\n", "nodes: 2\n0 -> 2\n", ""]:
            with pytest.raises(ArgumentError):
                parse_graph(bad, Dag)
        with pytest.raises(ArgumentError):
            parse_graph("nodes: 2\n0 o-> 1\n", Dag)
