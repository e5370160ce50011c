import math

import numpy as np
import pytest

from eghwt import (BasisSpec, CoeffTable, CostFunction, FictitiousKey,
                   build_partition_tree_midpoint, cost_eval, f2c_view,
                   ghwt_analyze, ghwt_basis_vector, haar_basis, level_basis,
                   synthesize, walsh_basis)

from helpers import jittered_tree, random_connected_graph, random_tree
from oracles import packet_matrices, tag_to_sequency, walsh_matrix

SQ2 = math.sqrt(2.0)
SQ3 = math.sqrt(3.0)
SQ6 = math.sqrt(6.0)


class TestAnalyzeGoldens:
    """Worked six-node example: f = [2, -2, 1, 3, -1, -2] on the path's
    spectral tree ({0,1,2}|{3,4,5}, then {0,1}|{2} and {3,4}|{5})."""

    def test_global_scaling(self, p6):
        _, tree, f = p6
        table = ghwt_analyze(f, tree)
        assert abs(table[(0, 0, 0)] - SQ6 / 6) < 1e-12

    def test_level1_scaling(self, p6):
        _, tree, f = p6
        table = ghwt_analyze(f, tree)
        assert abs(table[(1, 0, 0)] - SQ3 / 3) < 1e-12
        assert abs(table[(1, 1, 0)] - 0.0) < 1e-12

    def test_level1_haar(self, p6):
        _, tree, f = p6
        table = ghwt_analyze(f, tree)
        assert abs(table[(1, 1, 1)] - SQ6) < 1e-12

    def test_level0_walsh(self, p6):
        _, tree, f = p6
        table = ghwt_analyze(f, tree)
        assert abs(table[(0, 0, 2)] - 2 * SQ3 / 3) < 1e-12
        assert abs(table[(0, 0, 4)] - 4.0) < 1e-12
        assert abs(table[(0, 0, 5)] - 0.0) < 1e-12

    def test_leaf_level_is_signal(self, p6):
        _, tree, f = p6
        table = ghwt_analyze(f, tree)
        leaves = sorted(tree.regions[tree.jmax].items())
        got = [table[(tree.jmax, k, 0)] for k, _ in leaves]
        assert np.allclose(got, [f[r[0]] for _, r in leaves], atol=1e-15)

    def test_constant_signal(self):
        tree = build_partition_tree_midpoint(9)
        table = ghwt_analyze(np.full(9, 2.5), tree)
        assert abs(table[(0, 0, 0)] - 2.5 * 3.0) < 1e-12
        others = [v for k, v in table.items() if k != (0, 0, 0)
                  and k[2] >= 1]
        assert max(abs(v) for v in others) < 1e-12

    def test_shape_mismatch_rejected(self):
        tree = build_partition_tree_midpoint(4)
        with pytest.raises(ValueError):
            ghwt_analyze(np.zeros(5), tree)


class TestAgainstClassicalPackets:
    def test_dyadic_levels_match_packet_recursion(self):
        rng = np.random.default_rng(21)
        for m in (1, 2, 3, 4):
            n = 2 ** m
            tree = build_partition_tree_midpoint(n)
            f = rng.standard_normal(n)
            table = ghwt_analyze(f, tree)
            mats = packet_matrices(m)
            for j in range(m + 1):
                width = 2 ** (m - j)
                want = mats[j] @ f
                for k in range(2 ** j):
                    for t in range(width):
                        got = table[(j, k, t)]
                        assert abs(got - want[k * width + t]) < 1e-12

    def test_impulse_level0_matches_sequency_walsh(self):
        n = 8
        tree = build_partition_tree_midpoint(n)
        e0 = np.zeros(n)
        e0[0] = 1.0
        table = ghwt_analyze(e0, tree)
        W = walsh_matrix(n)
        for t in range(n):
            want = W[tag_to_sequency(t), 0] / math.sqrt(n)
            assert abs(table[(0, 0, t)] - want) < 1e-12


class TestBasisVectors:
    def test_global_scaling_vector(self, p6):
        _, tree, _ = p6
        v = ghwt_basis_vector((0, 0, 0), tree)
        assert np.allclose(v, np.full(6, 1 / SQ6), atol=1e-15)

    def test_leaf_vectors_are_unit_impulses(self, p6):
        _, tree, _ = p6
        for k, region in tree.regions[tree.jmax].items():
            v = ghwt_basis_vector((tree.jmax, k, 0), tree)
            want = np.zeros(6)
            want[region[0]] = 1.0
            assert np.array_equal(v, want)

    def test_global_haar_vector(self, p6):
        _, tree, _ = p6
        v = ghwt_basis_vector((0, 0, 1), tree)
        want = np.array([1, 1, 1, -1, -1, -1]) / SQ6
        assert np.allclose(v, want, atol=1e-12)

    def test_analysis_equals_inner_products(self, p6):
        _, tree, f = p6
        table = ghwt_analyze(f, tree)
        for key in list(table)[::5]:
            v = ghwt_basis_vector(key, tree)
            assert abs(table[key] - v @ f) < 1e-12

    def test_levelwise_orthonormality(self):
        rng = np.random.default_rng(8)
        tree = random_tree(rng, 16)
        for j in range(tree.jmax + 1):
            rows = [ghwt_basis_vector(key, tree)
                    for key in sorted(k for k in iter_keys(tree, j))]
            V = np.vstack(rows)
            assert np.abs(V @ V.T - np.eye(len(rows))).max() < 1e-10

    def test_fictitious_key_raises(self, p6):
        _, tree, _ = p6
        with pytest.raises(FictitiousKey):
            ghwt_basis_vector((1, 5, 0), tree)


def iter_keys(tree, j):
    from eghwt.ghwt import _layout_for
    layout = _layout_for(tree)
    ks, ls = layout.keys_k[j], layout.keys_l[j]
    return [(j, int(k), int(l)) for k, l in zip(ks, ls)]


class TestCoeffTable:
    def test_mapping_protocol(self, p6):
        _, tree, f = p6
        table = ghwt_analyze(f, tree)
        assert len(table) == 6 * (tree.jmax + 1)
        assert set(iter_keys(tree, 0)).issubset(set(table))
        with pytest.raises(FictitiousKey):
            table[(0, 0, 99)]

    def test_values_at_returns_copy(self, p6):
        _, tree, f = p6
        table = ghwt_analyze(f, tree)
        vals = table.values_at(0)
        vals[:] = 0.0
        assert table.values_at(0).any()

    def test_parseval_per_level(self):
        rng = np.random.default_rng(9)
        for n in (5, 12, 33):
            tree = jittered_tree(rng, n)
            f = rng.standard_normal(n)
            table = ghwt_analyze(f, tree)
            energy = float(f @ f)
            for j in range(tree.jmax + 1):
                lv = table.values_at(j)
                assert abs(lv @ lv - energy) < 1e-10 * (1 + energy)

    def test_f2c_view_layout(self, p6):
        _, tree, f = p6
        table = ghwt_analyze(f, tree)
        view = f2c_view(table)
        assert len(view) == len(table)
        tags = [key[2] for key, _ in view]
        assert tags == sorted(tags)
        # within the leading tag-0 band, level runs fine to coarse
        zero_levels = [key[0] for key, _ in view if key[2] == 0]
        assert zero_levels == sorted(zero_levels, reverse=True)
        assert all(abs(table[key] - val) < 1e-15 for key, val in view[:10])


class TestBasisSpecAndSynthesis:
    def test_round_trip_all_standard_bases(self):
        rng = np.random.default_rng(10)
        for n in (6, 11):
            tree = random_tree(rng, n)
            f = rng.standard_normal(n)
            table = ghwt_analyze(f, tree)
            specs = [haar_basis(tree), walsh_basis(tree)]
            specs += [level_basis(tree, j) for j in range(tree.jmax + 1)]
            for spec in specs:
                assert spec.is_complete()
                coeffs = spec.coefficients(table)
                back = synthesize(spec, coeffs, tree)
                assert np.abs(back - f).max() < 1e-10

    def test_incomplete_detected(self, p6):
        _, tree, _ = p6
        keys = sorted(level_basis(tree, 1).keys)
        spec = BasisSpec(tree, keys[:-1])
        assert not spec.is_complete()

    def test_overcomplete_detected(self, p6):
        _, tree, _ = p6
        keys = sorted(level_basis(tree, 1).keys) + [(0, 0, 0)]
        spec = BasisSpec(tree, keys)
        assert not spec.is_complete()

    def test_keys_must_exist(self, p6):
        _, tree, _ = p6
        with pytest.raises(FictitiousKey):
            BasisSpec(tree, [(0, 0, 42)])

    def test_coeff_sequence_matches_sorted_keys(self, p6):
        _, tree, f = p6
        table = ghwt_analyze(f, tree)
        spec = level_basis(tree, 2)
        coeffs = spec.coefficients(table)
        back_map = synthesize(spec, dict(zip(spec.sorted_keys(), coeffs)),
                              tree)
        back_seq = synthesize(spec, coeffs, tree)
        assert np.array_equal(back_map, back_seq)

    def test_synthesize_accepts_plain_key_iterable(self, p6):
        _, tree, f = p6
        table = ghwt_analyze(f, tree)
        keys = sorted(walsh_basis(tree).keys)
        vals = [table[k] for k in keys]
        back = synthesize(keys, vals, tree)
        assert np.abs(back - f).max() < 1e-10

    def test_coefficient_count_checked(self, p6):
        _, tree, _ = p6
        spec = walsh_basis(tree)
        with pytest.raises(ValueError):
            synthesize(spec, [1.0, 2.0], tree)

    def test_partial_synthesis_is_projection(self):
        rng = np.random.default_rng(13)
        tree = build_partition_tree_midpoint(8)
        f = rng.standard_normal(8)
        table = ghwt_analyze(f, tree)
        spec = haar_basis(tree)
        keys = sorted(spec.keys)[:3]
        part = synthesize(keys, [table[k] for k in keys], tree)
        want = sum(table[k] * ghwt_basis_vector(k, tree) for k in keys)
        assert np.abs(part - want).max() < 1e-12

    def test_level_basis_range_checked(self, p6):
        _, tree, _ = p6
        with pytest.raises(ValueError):
            level_basis(tree, tree.jmax + 1)

    def test_haar_basis_shape(self, p6):
        _, tree, _ = p6
        spec = haar_basis(tree)
        assert (0, 0, 0) in spec.keys
        assert all(key[2] == 1 for key in spec.keys if key != (0, 0, 0))
        assert spec.is_complete()


class TestCostFunction:
    def test_l1(self):
        assert cost_eval(np.array([3.0, -4.0]), CostFunction.lp(1)) == 7.0

    def test_l0_with_threshold(self):
        c = CostFunction.l0(0.25)
        assert cost_eval(np.array([0.0, 0.5, -2.0]), c) == 2.0

    def test_l0_zero_threshold(self):
        c = CostFunction.l0()
        assert cost_eval(np.array([0.0, 0.5, -2.0]), c) == 2.0

    def test_fractional_p(self):
        c = CostFunction.lp(0.5)
        assert abs(cost_eval(np.array([1.0, 1.0]), c) - 2.0) < 1e-15

    def test_p_range_validated(self):
        for p in (0.0, 2.0, -1.0, 2.5):
            with pytest.raises(ValueError):
                CostFunction.lp(p)

    def test_threshold_validated(self):
        with pytest.raises(ValueError):
            CostFunction.l0(-0.1)

    def test_custom_cost(self):
        c = CostFunction.custom(lambda x: x * x, "energy")
        assert cost_eval(np.array([1.0, 2.0]), c) == 5.0
        assert c.name == "energy"

    def test_names(self):
        assert CostFunction.lp(1).name == "l1"
        assert CostFunction.lp(0.5).name == "l0.5"
        assert CostFunction.l0(0.1).name == "l0[0.1]"
