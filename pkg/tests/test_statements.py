import struct
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bccd.errors import ArgumentError, CapacityError
from bccd.graphs.core import Dag, Mag, Mark
from bccd.graphs.enumeration import dag_fingerprints, enumerate_dags, markov_equivalence_class
from bccd.graphs.separation import latent_project, m_separated
from bccd.statements.catalog import dag_class_of, mag_catalog
from bccd.statements.core import (
    Cause,
    CausalStatement,
    DisjunctiveCause,
    Kind,
    NonAdjacent,
    NonCause,
    close_rows,
    rows_to_sets,
    set_to_row,
    statement_space,
)
from bccd.statements.mapping import (
    MAGIC,
    MAPPING_VERSION,
    build_mapping,
    decode_mapping,
    dump_text,
    encode_mapping,
    get_mapping,
    load_mapping,
    save_mapping,
)
from bccd.statements.rules import (
    Certainty,
    bruteforce_statements,
    certified_dependence,
    minimal_imaps,
    noncause_statements_from_optimal_udag,
    open_path_counts,
    optimal_dags_by_mag_class,
    optimal_udags_of_mag,
    oracle_rows,
    pdp_not_cause,
    statements_from_faithful_structure,
    udag_ci_query,
    udag_unique_path_query,
)

from conftest import H, T, V, W, X, Y, Z
from oracles import (
    all_dags_bruteforce,
    all_maximal_mags,
    count_open_paths,
    faithful_statement_oracle,
    group_classes,
    optimal_dags_oracle,
    separation_set,
)

HH = Mark.ARROW
IND, DEP, UNK = Certainty.INDEPENDENT, Certainty.DEPENDENT, Certainty.UNKNOWN


@lru_cache(maxsize=None)
def classes(n):
    return list(group_classes(all_maximal_mags(n)).items())


@lru_cache(maxsize=None)
def bruteforce_rows_independent(n):
    """Mapping-oracle rows computed without any package table."""
    dags = enumerate_dags(n)
    dag_sep = [separation_set(d) for d in dags]
    kept = [[] for _ in dags]
    for sep_m, members in classes(n):
        fits = [i for i, s in enumerate(dag_sep) if s <= sep_m]
        best = min(dags[i].n_free_parameters() for i in fits)
        stm = faithful_statement_oracle(members)
        for i in fits:
            if dags[i].n_free_parameters() == best:
                kept[i].append(stm)
    rows = []
    for sets in kept:
        assert sets, "every DAG is optimal for at least its own class"
        rows.append(set_to_row(frozenset.intersection(*sets), n))
    return np.array(rows)


def sampled_five_node_mags(k, seed):
    """Projections of random 7-node DAGs onto 5 nodes; maximal by construction."""
    from bccd.simgen.generate import random_dag

    rng = np.random.default_rng(seed)
    out = []
    while len(out) < k:
        g = random_dag(7, edge_density=0.45, seed=rng)
        keep = sorted(rng.choice(7, 5, replace=False).tolist())
        out.append(latent_project(g, keep))
    return out


# ------------------------------------------------------------- statements


class TestCausalStatement:
    def test_canonical_order_and_errors(self):
        assert DisjunctiveCause(0, 3, 1) == DisjunctiveCause(0, 1, 3)
        assert NonAdjacent("b", "a").variables == ("a", "b")
        with pytest.raises(ArgumentError):
            NonCause(1, 1)
        with pytest.raises(ArgumentError):
            DisjunctiveCause(1, 1, 2)
        with pytest.raises(ArgumentError):
            CausalStatement(Kind.CAUSE, 0, 1, 2)

    @pytest.mark.parametrize("n,size", [(2, 1 + 2 + 0 + 2), (3, 3 + 6 + 3 + 6), (5, 10 + 20 + 30 + 20)])
    def test_space_size(self, n, size):
        space = statement_space(n)
        assert len(space) == size == len(set(space))
        kinds = [s.kind for s in space]
        assert kinds == sorted(kinds)
        assert all(0 <= v < n for s in space for v in s.variables)

    def test_relabel_and_str(self):
        s = DisjunctiveCause(2, 1, 0).relabel(["A", "B", "C"])
        assert s == DisjunctiveCause("C", "A", "B")
        assert str(s) == "(C => A) or (C => B)"
        assert str(NonCause("a", "b")) == "a =/=> b"

    @given(st.sets(st.sampled_from(statement_space(4))))
    def test_row_round_trip(self, stmts):
        assert rows_to_sets(set_to_row(stmts, 4), 4)[0] == stmts

    def test_row_rejects_foreign_statements(self):
        with pytest.raises(ArgumentError):
            set_to_row({NonCause(0, 4)}, 4)


class TestClosure:
    def close(self, stmts, n=4):
        row, bad = close_rows(set_to_row(stmts, n)[None], n)
        return rows_to_sets(row, n)[0], bool(bad[0])

    def test_transitivity(self):
        out, bad = self.close({Cause(0, 1), Cause(1, 2)})
        assert Cause(0, 2) in out and not bad
        assert NonCause(2, 0) in out and NonCause(1, 0) in out

    def test_disjunction_elimination(self):
        out, _ = self.close({DisjunctiveCause(2, 0, 1), NonCause(2, 0)})
        assert Cause(2, 1) in out

    def test_absorption_and_introduction(self):
        out, _ = self.close({DisjunctiveCause(2, 0, 1), Cause(1, 0)})
        assert Cause(2, 0) in out
        out, _ = self.close({Cause(0, 1)}, 3)
        assert DisjunctiveCause(0, 1, 2) in out

    def test_cycle_is_contradiction(self):
        _, bad = self.close({Cause(0, 1), Cause(1, 0)})
        assert bad
        _, bad = self.close({Cause(0, 1), Cause(1, 2), NonCause(0, 2)})
        assert bad

    @given(st.sets(st.sampled_from(statement_space(4)), max_size=6))
    def test_idempotent_and_monotone(self, stmts):
        once, bad = self.close(stmts)
        assert stmts <= once
        if not bad:
            twice, _ = self.close(once)
            assert once == twice
            more, _ = self.close(stmts | {NonAdjacent(0, 1)})
            assert once <= more


# ---------------------------------------------------------- faithful route


class TestFaithfulStatements:
    def test_collider(self):
        out = statements_from_faithful_structure(Dag(3, {(0, 2), (1, 2)}))
        assert {NonAdjacent(0, 1), NonCause(2, 0), NonCause(2, 1)} <= out

    def test_single_edge(self):
        assert statements_from_faithful_structure(Dag(2, {(0, 1)})) == frozenset()

    def test_chain_gives_disjunction(self):
        out = statements_from_faithful_structure(Dag(3, {(0, 2), (2, 1)}))
        assert DisjunctiveCause(2, 0, 1) in out and NonAdjacent(0, 1) in out
        assert not any(s.kind == Kind.NON_CAUSE for s in out)

    def test_confounded_yvz_projection(self, confounded):
        m = latent_project(confounded[0], [Y, V, Z])
        assert m_separated(m, 0, 1, [2]) and not m_separated(m, 0, 1)
        assert DisjunctiveCause(2, 0, 1) in statements_from_faithful_structure(m)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            statements_from_faithful_structure(Dag(6))

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_matches_rule_oracle_both_minimality_readings(self, n):
        """Single-removal and full-subset minimality give identical statements."""
        for _, members in classes(n):
            got = statements_from_faithful_structure(members[0])
            assert got == faithful_statement_oracle(members, True)
            assert got == faithful_statement_oracle(members, False)

    def test_minimality_readings_agree_on_five_nodes(self):
        for m in sampled_five_node_mags(40, seed=5):
            members = markov_equivalence_class(m)
            got = statements_from_faithful_structure(m)
            assert got == faithful_statement_oracle(members, True) == faithful_statement_oracle(members, False)


# -------------------------------------------------------------- uDAG rules


class TestUdagQueries:
    def test_examples(self):
        xy = Dag(2, {(0, 1)})
        assert udag_ci_query(xy, 0, 1) == DEP
        chain = Dag(3, {(0, 2), (2, 1)})
        assert udag_ci_query(chain, 0, 1, [2]) == IND
        assert udag_ci_query(chain, 0, 1) == UNK
        two_paths = Dag(3, {(0, 1), (0, 2), (2, 1)})
        assert udag_unique_path_query(two_paths, 0, 1) == UNK
        assert udag_unique_path_query(chain, 0, 1) == DEP

    def test_confounded_queries(self, confounded):
        g = confounded[1]
        assert udag_ci_query(g, X, T, [Z]) == IND
        assert udag_ci_query(g, X, T) == UNK
        assert udag_unique_path_query(g, X, T, [V, W]) == DEP
        assert udag_unique_path_query(g, Y, V) == DEP

    def test_capacity_and_arguments(self):
        with pytest.raises(CapacityError):
            udag_ci_query(Dag(7), 0, 1)
        with pytest.raises(ArgumentError):
            udag_ci_query(Dag(3), 0, 0)

    @pytest.mark.parametrize("n", [3, 4])
    def test_open_path_counts_match_path_oracle(self, n):
        from bccd.graphs._batch import ci_index
        from bccd.graphs.enumeration import dag_table

        counts = open_path_counts(dag_table(n), saturate=99)
        dags = enumerate_dags(n)
        step = 1 if n == 3 else 9
        for g in range(0, len(dags), step):
            for q, (x, y, zm) in enumerate(ci_index(n)):
                z = [v for v in range(n) if zm >> v & 1]
                assert counts[g, q] == count_open_paths(dags[g], x, y, z)

    def test_certified_dependence_matches_scalar_queries(self):
        from bccd.graphs._batch import ci_index

        dep = certified_dependence(4)
        dags = enumerate_dags(4)
        for g in range(0, len(dags), 3):
            for q, (x, y, zm) in enumerate(ci_index(4)):
                z = [v for v in range(4) if zm >> v & 1]
                want = udag_ci_query(dags[g], x, y, z) == DEP or udag_unique_path_query(dags[g], x, y, z) == DEP
                assert dep[g, q] == want

    @pytest.mark.parametrize("n", [3, 4])
    def test_certified_dependence_never_contradicts_a_represented_mag(self, n):
        cat = mag_catalog(n)
        dep = certified_dependence(n)
        for c, dags in enumerate(optimal_dags_by_mag_class(n)):
            assert not (dep[dags] & cat.fp[c]).any()


class TestNonCause:
    def test_examples(self):
        out = noncause_statements_from_optimal_udag(Dag(3, {(0, 2), (1, 2)}))
        assert {NonCause(2, 0), NonCause(2, 1)} <= out
        # no potentially directed path between the two parents either
        assert out == {NonCause(2, 0), NonCause(2, 1), NonCause(0, 1), NonCause(1, 0)}
        assert noncause_statements_from_optimal_udag(Dag(2, {(0, 1)})) == frozenset()

    def test_batch_route_matches_scalar(self):
        cat = mag_catalog(4)
        nc = pdp_not_cause(cat.pag[dag_class_of(4)])
        for i, g in enumerate(enumerate_dags(4)):
            want = {NonCause(a, b) for a in range(4) for b in range(4) if nc[i, a, b]}
            assert noncause_statements_from_optimal_udag(g) == want

    def test_markov_coherence(self):
        dags = enumerate_dags(4)
        keys = {}
        for i, key in enumerate(map(bytes, np.packbits(dag_fingerprints(4), axis=1))):
            keys.setdefault(key, []).append(i)
        for members in keys.values():
            sets = {noncause_statements_from_optimal_udag(dags[i]) for i in members}
            assert len(sets) == 1

    def test_one_v_structure_matches_oracle(self):
        g = Dag(4, {(0, 2), (1, 2), (2, 3)})
        nc = noncause_statements_from_optimal_udag(g)
        assert nc <= bruteforce_statements(g)
        assert {NonCause(2, 0), NonCause(3, 0), NonCause(2, 1), NonCause(3, 1)} <= nc


# -------------------------------------------------------------- optimality


class TestOptimalUdags:
    def test_dag_gives_its_class(self):
        g = Dag(3, {(0, 2), (2, 1)})
        want = {d for d in enumerate_dags(3) if separation_set(d) == separation_set(g)}
        assert optimal_udags_of_mag(g) == want

    def test_bidirected_pair(self):
        m = Mag(2, {(0, 1): (HH, HH)})
        assert optimal_udags_of_mag(m) == {Dag(2, {(0, 1)}), Dag(2, {(1, 0)})}

    def test_confounded_contains_udag(self, confounded, confounded_mag):
        opt = optimal_udags_of_mag(confounded_mag)
        assert confounded[1] in opt

    @pytest.mark.parametrize("n", [2, 3])
    def test_matches_path_oracle(self, n):
        dags = all_dags_bruteforce(n)
        for sep_m, members in classes(n):
            want = optimal_dags_oracle(sep_m, dags)
            for m in members:
                assert optimal_udags_of_mag(m) == want

    def test_two_routes_agree_on_all_four_node_mags(self):
        for _, members in classes(4):
            for m in members:
                assert optimal_udags_of_mag(m) == minimal_imaps(m)

    def test_two_routes_agree_on_sampled_five_node_mags(self):
        for m in sampled_five_node_mags(60, seed=1):
            assert optimal_udags_of_mag(m) == minimal_imaps(m)

    def test_class_table_matches_scalar(self):
        cat = mag_catalog(4)
        table = optimal_dags_by_mag_class(4)
        dags = enumerate_dags(4)
        by_fp = {}
        for sep_m, members in classes(4):
            by_fp[sep_m] = optimal_udags_of_mag(members[0])
        from bccd.graphs._batch import ci_index

        for c in range(len(cat)):
            sep = frozenset(
                (x, y, frozenset(v for v in range(4) if z >> v & 1)) for (x, y, z), f in zip(ci_index(4), cat.fp[c]) if f
            )
            assert {dags[i] for i in table[c]} == by_fp[sep]


# ------------------------------------------------------------- the oracle


class TestBruteforce:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_package_oracle_matches_independent_oracle(self, n):
        assert np.array_equal(oracle_rows(n), bruteforce_rows_independent(n))

    def test_three_node_rows_equal_faithful(self):
        for g in enumerate_dags(3):
            assert bruteforce_statements(g) == statements_from_faithful_structure(g)

    def test_confounded_faithful_reading_is_wrong(self, confounded, confounded_mag):
        """Reading the uDAG faithfully claims Z causes X or T; the truth says neither."""
        g, m = confounded[1], confounded_mag
        assert m_separated(g, X, T, [Z]) and not m_separated(g, X, T)
        full = confounded[0]
        assert not (full.ancestor_masks[X] >> Z & 1) and not (full.ancestor_masks[T] >> Z & 1)
        # the uDAG rules refuse the premise: X, T dependence is not certified
        assert udag_ci_query(g, X, T) == UNK and udag_unique_path_query(g, X, T) == UNK
        assert m_separated(m, X, T)
        assert H == 6


# --------------------------------------------------------------- mapping


@pytest.fixture(scope="module")
def mapping():
    return get_mapping(5)


class TestMapping:
    def test_level_sizes(self, mapping):
        assert [mapping.row_count(n) for n in range(1, 6)] == [1, 3, 25, 543, 29281]

    def test_level_two(self):
        table = build_mapping(2)
        assert table.row_count(2) == 3
        edgeless = table.statements_of(Dag(2))
        assert edgeless == {NonAdjacent(0, 1), NonCause(0, 1), NonCause(1, 0)}
        assert table.statements_of(Dag(2, {(0, 1)})) == frozenset()

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_equals_oracle_up_to_four(self, mapping, n):
        assert np.array_equal(mapping.level_rows(n), oracle_rows(n))

    @pytest.mark.parametrize("n", [3, 4])
    def test_equals_faithful_statements(self, mapping, n):
        for g in enumerate_dags(n)[:: 1 if n == 3 else 4]:
            assert mapping.statements_of(g) == statements_from_faithful_structure(g)

    def test_sound_on_five_node_sample(self, mapping):
        rows = mapping.level_rows(5)
        orc = oracle_rows(5)
        idx = np.random.default_rng(2024).choice(len(rows), 200, replace=False)
        assert not (rows[idx] & ~orc[idx]).any()

    def test_sound_on_all_five_node_rows(self, mapping):
        assert not (mapping.level_rows(5) & ~oracle_rows(5)).any()

    def test_rows_are_closed_and_consistent(self, mapping):
        for n in range(2, 6):
            rows = mapping.level_rows(n)
            closed, bad = close_rows(rows, n)
            assert not bad.any() and np.array_equal(closed, rows)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            build_mapping(6)


class TestMappingCache:
    def test_round_trip_and_determinism(self, tmp_path):
        table = build_mapping(3)
        data = encode_mapping(table)
        assert data == encode_mapping(build_mapping(3))
        assert decode_mapping(data) == table
        save_mapping(table, tmp_path / "m.bin")
        assert load_mapping(tmp_path / "m.bin") == table

    def test_header_layout(self):
        data = encode_mapping(build_mapping(2))
        assert data[:8] == MAGIC == b"BCCDMAP1"
        version, k_max = struct.unpack_from("<IB", data, 8)
        assert version == MAPPING_VERSION and k_max == 2
        # level 1: one row with no statements
        assert struct.unpack_from("<IH", data, 13) == (1, 0)
        # level 2 edgeless row: 3 statements of 4 bytes, unused slot 0xFF
        assert struct.unpack_from("<IH", data, 19) == (3, 3)
        assert data[25:29] == bytes([Kind.NON_ADJACENT, 0xFF, 0, 1])

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda d: b"XXXXXXXX" + d[8:],
            lambda d: d[:8] + struct.pack("<I", MAPPING_VERSION + 1) + d[12:],
            lambda d: d[:-1],
            lambda d: d + b"\0",
            lambda d: d[:12] + b"\x09" + d[13:],
        ],
    )
    def test_corrupt_files_rejected(self, mutate):
        data = encode_mapping(build_mapping(2))
        with pytest.raises(ArgumentError):
            decode_mapping(mutate(data))

    def test_stale_cache_is_rebuilt(self, tmp_path):
        path = tmp_path / "m.bin"
        path.write_bytes(b"garbage")
        table = get_mapping(2, path)
        assert table == build_mapping(2)
        assert load_mapping(path) == table

    def test_text_dump(self):
        text = dump_text(build_mapping(2))
        lines = text.splitlines()
        assert lines[0] == f"# mapping version {MAPPING_VERSION:#x} k_max 2"
        assert "level 2 rows 3" in lines
        assert "2:0: 0 -/- 1; 0 =/=> 1; 1 =/=> 0" in lines


def test_every_row_stays_inside_its_structure(mapping):
    for n in range(1, 6):
        for s in statement_space(n):
            assert all(0 <= v < n for v in s.variables)
