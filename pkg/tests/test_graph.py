import io

import numpy as np
import pytest
import scipy.sparse as sp

from opdyn.errors import ParseError, ValidityError
from opdyn.graph import (
    EdgeDirection,
    InfluenceMatrix,
    build_influence_matrix,
    generate_regular,
    network_stats,
    parse_edge_list,
    validate_doubly_stochastic,
)


def parse(text: str, **kw):
    return parse_edge_list(io.StringIO(text), **kw)


class TestParseEdgeList:
    def test_mutual_pair(self):
        e = parse("0 1\n1 0\n")
        assert e.node_count == 2
        assert e.arc_count == 2

    def test_dedup_and_remap(self):
        e = parse("5 9\n5 9\n9 5\n")
        assert e.node_count == 2
        assert e.arc_count == 2
        assert list(e.original_ids) == [5, 9]
        assert e.dense_index == {5: 0, 9: 1}

    def test_remap_round_trip(self):
        e = parse("10 30\n30 20\n20 10\n")
        for orig in (10, 20, 30):
            assert e.original_ids[e.dense_index[orig]] == orig

    def test_comments_and_blank_lines_skipped(self):
        e = parse("# header\n\n0 1\n  \n# trailing\n1 0\n")
        assert e.arc_count == 2

    def test_custom_comment_prefix(self):
        e = parse("% note\n0 1\n", comment_prefix="%")
        assert e.arc_count == 1

    def test_wrong_arity_reports_line_number(self):
        with pytest.raises(ParseError, match="line 3"):
            parse("0 1\n1 0\n2 3 4\n")

    def test_non_integer_token_reports_line_number(self):
        with pytest.raises(ParseError, match="line 2"):
            parse("0 1\nx 0\n")

    def test_negative_id_rejected(self):
        with pytest.raises(ParseError, match="line 1"):
            parse("-1 0\n")

    def test_empty_input_rejected(self):
        with pytest.raises(ParseError, match="no edges"):
            parse("# only comments\n")

    def test_self_edges_dropped(self):
        e = parse("0 0\n0 1\n")
        assert e.arc_count == 1

    def test_only_self_edges_is_empty(self):
        with pytest.raises(ParseError, match="no edges"):
            parse("3 3\n7 7\n")

    def test_undirected_expands_arcs(self):
        e = parse("0 1\n1 2\n", undirected=True)
        assert e.undirected
        assert e.arc_count == 4
        assert e.edge_count == 2

    def test_undirected_mutual_line_collapses(self):
        # "0 1" and "1 0" describe the same undirected link.
        e = parse("0 1\n1 0\n", undirected=True)
        assert e.arc_count == 2
        assert e.edge_count == 1


class TestBuildInfluenceMatrix:
    def test_mutual_pair_either_convention(self):
        e = parse("0 1\n1 0\n")
        for direction in EdgeDirection:
            W = build_influence_matrix(e, direction=direction)
            assert np.allclose(W.matrix.toarray(), [[0, 1], [1, 0]])

    def test_uniform_split_and_dangling_self_loop(self):
        e = parse("0 1\n0 2\n")
        W = build_influence_matrix(e, direction=EdgeDirection.SOURCE_INFLUENCED_BY_TARGET)
        dense = W.matrix.toarray()
        assert np.allclose(dense[0], [0.0, 0.5, 0.5])
        assert np.allclose(dense[1], [0.0, 1.0, 0.0])
        assert np.allclose(dense[2], [0.0, 0.0, 1.0])

    def test_directed_cycle_rows_by_hand(self):
        e = parse("0 1\n1 2\n2 0\n")
        W = build_influence_matrix(e, direction=EdgeDirection.SOURCE_INFLUENCED_BY_TARGET)
        expect = np.zeros((3, 3))
        expect[0, 1] = expect[1, 2] = expect[2, 0] = 1.0
        assert np.allclose(W.matrix.toarray(), expect)

    def test_reverse_convention_transposes_influence(self):
        e = parse("0 1\n1 2\n2 0\n")
        fwd = build_influence_matrix(e, direction=EdgeDirection.SOURCE_INFLUENCED_BY_TARGET)
        rev = build_influence_matrix(e, direction=EdgeDirection.TARGET_INFLUENCED_BY_SOURCE)
        assert np.allclose(rev.matrix.toarray(), fwd.matrix.toarray().T)

    def test_row_sums_random_inputs(self, rng):
        for _ in range(20):
            n = int(rng.integers(3, 40))
            lines = []
            for _ in range(int(rng.integers(1, 4 * n))):
                u, v = rng.integers(0, n, size=2)
                if u != v:
                    lines.append(f"{u} {v}")
            if not lines:
                continue
            W = build_influence_matrix(parse("\n".join(lines)))
            sums = np.asarray(W.matrix.sum(axis=1)).ravel()
            assert np.max(np.abs(sums - 1.0)) <= 1e-12

    def test_deterministic_layout(self):
        text = "4 7\n7 2\n2 4\n4 2\n"
        a = build_influence_matrix(parse(text)).matrix
        b = build_influence_matrix(parse(text)).matrix
        assert np.array_equal(a.indptr, b.indptr)
        assert np.array_equal(a.indices, b.indices)
        assert np.array_equal(a.data, b.data)


class TestGenerateRegular:
    def test_cycle_of_four(self):
        W = generate_regular(4, 2).matrix.toarray()
        expect = np.array([
            [0.0, 0.5, 0.0, 0.5],
            [0.5, 0.0, 0.5, 0.0],
            [0.0, 0.5, 0.0, 0.5],
            [0.5, 0.0, 0.5, 0.0],
        ])
        assert np.allclose(W, expect)

    def test_complete_on_three(self):
        W = generate_regular(3, 2).matrix.toarray()
        assert np.allclose(W, [[0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]])

    def test_column_sums_one(self):
        for n, k in ((5, 2), (10, 4), (12, 6), (101, 8)):
            W = generate_regular(n, k)
            cols = W.column_sums()
            assert np.max(np.abs(cols - 1.0)) <= 1e-12
            assert validate_doubly_stochastic(W, 1e-12)

    def test_symmetric(self):
        W = generate_regular(9, 4).matrix.toarray()
        assert np.allclose(W, W.T)

    @pytest.mark.parametrize("n,k", [(2, 2), (5, 3), (5, 6), (5, 0), (4, 4)])
    def test_invalid_parameters(self, n, k):
        with pytest.raises(ValidityError):
            generate_regular(n, k)


class TestValidateDoublyStochastic:
    def test_regular_graph_true(self):
        assert validate_doubly_stochastic(generate_regular(10, 4), 1e-12)

    def test_star_graph_false(self):
        # Hub column sums to the leaf count.
        e = parse("1 0\n2 0\n3 0\n4 0\n0 1\n0 2\n0 3\n0 4\n")
        W = build_influence_matrix(e)
        assert not validate_doubly_stochastic(W, 1e-9)
        assert abs(W.column_sums()[0] - 4.0) <= 1e-12

    def test_permutation_matrix_true(self):
        diag = sp.csr_matrix(np.eye(4))
        assert validate_doubly_stochastic(InfluenceMatrix(diag), 1e-12)


class TestInfluenceMatrixValidation:
    def test_rejects_empty_row(self):
        mat = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
        with pytest.raises(ValidityError, match="row 1"):
            InfluenceMatrix(mat)

    def test_rejects_bad_row_sum(self):
        mat = sp.csr_matrix(np.array([[0.5, 0.4], [0.0, 1.0]]))
        with pytest.raises(ValidityError, match="row 0"):
            InfluenceMatrix(mat)

    def test_rejects_nonpositive_weight(self):
        mat = sp.csr_matrix(np.array([[1.5, -0.5], [0.0, 1.0]]))
        with pytest.raises(ValidityError):
            InfluenceMatrix(mat)

    def test_rejects_non_square(self):
        mat = sp.csr_matrix(np.array([[0.5, 0.5, 0.0]]))
        with pytest.raises(ValidityError, match="square"):
            InfluenceMatrix(mat)


class TestNetworkStats:
    def test_mutual_pair(self):
        s = network_stats(parse("0 1\n1 0\n"))
        assert s.node_count == 2
        assert s.edge_count == 2
        assert s.density == 1.0

    def test_directed_counts(self):
        s = network_stats(parse("0 1\n1 2\n2 0\n3 0\n"))
        assert s.node_count == 4
        assert s.edge_count == 4
        assert s.directed_arc_count == 4
        assert s.mean_degree == 1.0
        assert abs(s.density - 4.0 / 12.0) <= 1e-15

    def test_undirected_native_convention(self):
        s = network_stats(parse("0 1\n1 2\n", undirected=True))
        assert s.undirected_input
        assert s.edge_count == 2
        assert s.directed_arc_count == 4

    def test_json_fields(self):
        d = network_stats(parse("0 1\n1 0\n")).to_json()
        assert set(d) == {
            "node_count", "edge_count", "directed_arc_count",
            "mean_degree", "density", "undirected_input",
        }
