import numpy as np
import pytest

from smk.assemble import (
    assemble,
    match_marginals,
    maximal_support_set,
    measures_close,
    pushforward,
    verify_global,
)
from smk.core import CliqueCover, Projection
from smk.errors import FinalMarginalCheckFailed, MarginalMismatch
from smk.extract import AtomicMeasure
from smk.rip import RipWitnesses, check_rip
from smk import demo

from conftest import CHAIN_PAIR_ATOMS, TRIANGLE_CLIQUE_ATOMS, random_flat_instance


def chain_pair_measures():
    return [
        AtomicMeasure((1, 2), [[1.0, 0.0], [-1.0, 0.0]], [0.5, 0.5]),
        AtomicMeasure((2, 3), [[0.0, 1.0], [0.0, -1.0]], [0.5, 0.5]),
    ]


def chain_triple_measures():
    return [
        AtomicMeasure((1, 2), [[1, 1], [1, -1], [-1, 1], [-1, -1]], [0.25] * 4),
        AtomicMeasure((2, 3), [[1.0, 0.0], [-1.0, 0.0]], [0.5, 0.5]),
        AtomicMeasure((3, 4), [[0.0, 1.0], [0.0, -1.0]], [0.5, 0.5]),
    ]


def triangle_measures():
    return [
        AtomicMeasure((1, 2), *TRIANGLE_CLIQUE_ATOMS[1]),
        AtomicMeasure((2, 3), *TRIANGLE_CLIQUE_ATOMS[2]),
        AtomicMeasure((1, 3), *TRIANGLE_CLIQUE_ATOMS[3]),
    ]


class TestPushforward:
    def test_diagonal_pair(self):
        mu = AtomicMeasure((1, 2), [[1, 1], [-1, -1]], [0.5, 0.5])
        out = pushforward(mu, Projection((1, 2), (2,)))
        assert measures_close(out, AtomicMeasure((2,), [[1.0], [-1.0]], [0.5, 0.5]))

    def test_atoms_merge(self):
        mu = chain_pair_measures()[0]
        out = pushforward(mu, Projection((1, 2), (2,)))
        assert out.num_atoms == 1
        assert out.atoms[0, 0] == 0.0
        assert out.weights[0] == pytest.approx(1.0)

    def test_identity(self):
        mu = chain_pair_measures()[0]
        out = pushforward(mu, Projection((1, 2), (1, 2)))
        assert measures_close(out, mu)

    def test_empty_target(self):
        mu = chain_pair_measures()[0]
        out = pushforward(mu, Projection((1, 2), ()))
        assert out.num_atoms == 1
        assert out.mass == pytest.approx(1.0)


class TestMatchMarginals:
    def test_chain_pair(self):
        a, b = chain_pair_measures()
        groups = match_marginals(a, b, (2,))
        assert len(groups.masses) == 1
        assert groups.points[0, 0] == 0.0
        assert groups.masses[0] == pytest.approx(1.0)
        assert groups.groups_a == ((0, 1),)
        assert groups.groups_b == ((0, 1),)

    def test_chain_triple_two_points(self):
        m1, m2, _ = chain_triple_measures()
        groups = match_marginals(m1, m2, (2,))
        assert len(groups.masses) == 2
        assert sorted(groups.points[:, 0]) == [-1.0, 1.0]
        assert np.allclose(groups.masses, 0.5)

    def test_mass_mismatch(self):
        a = AtomicMeasure((1,), [[1.0], [-1.0]], [0.5, 0.5])
        b = AtomicMeasure((1,), [[1.0]], [1.0])
        with pytest.raises(MarginalMismatch):
            match_marginals(a, b, (1,))

    def test_point_mismatch(self):
        a = AtomicMeasure((1,), [[1.0]], [1.0])
        b = AtomicMeasure((1,), [[0.5]], [1.0])
        with pytest.raises(MarginalMismatch):
            match_marginals(a, b, (1,))


class TestAssemble:
    def test_chain_pair(self):
        measures = chain_pair_measures()
        wit = check_rip(CliqueCover(3, ((1, 2), (2, 3))))
        mu = assemble(measures, wit).sorted_by_atoms()
        assert mu.variables == (1, 2, 3)
        expect = CHAIN_PAIR_ATOMS[np.lexsort(CHAIN_PAIR_ATOMS.T[::-1])]
        assert np.allclose(mu.atoms, expect)
        assert np.allclose(mu.weights, 0.25)

    def test_chain_triple(self):
        measures = chain_triple_measures()
        wit = check_rip(CliqueCover(4, ((1, 2), (2, 3), (3, 4))))
        mu = assemble(measures, wit).sorted_by_atoms()
        expect = demo.chain_triple_minimizers()
        expect = expect[np.lexsort(expect.T[::-1])]
        assert np.allclose(mu.atoms, expect)
        assert np.allclose(mu.weights, 0.125)

    def test_single_clique(self):
        mu0 = chain_pair_measures()[0]
        wit = RipWitnesses((1,), {})
        assert measures_close(assemble([mu0], wit), mu0)

    def test_triangle_forced_matching_fails_final_check(self):
        measures = triangle_measures()
        forced = RipWitnesses((1, 2, 3), {2: frozenset({1}), 3: frozenset({1, 2})})
        for j in (1, 2):
            with pytest.raises(FinalMarginalCheckFailed):
                assemble(measures, forced, chosen={2: 1, 3: j})

    def test_weights_sum_to_mass(self):
        measures = chain_triple_measures()
        wit = check_rip(CliqueCover(4, ((1, 2), (2, 3), (3, 4))))
        mu = assemble(measures, wit)
        assert mu.mass == pytest.approx(1.0, abs=1e-10)

    def test_clique_marginals_reproduced(self):
        measures = chain_triple_measures()
        wit = check_rip(CliqueCover(4, ((1, 2), (2, 3), (3, 4))))
        mu = assemble(measures, wit)
        for mu_i in measures:
            marg = pushforward(mu, Projection(mu.variables, mu_i.variables))
            assert measures_close(marg, mu_i)

    def test_atom_set_invariant_across_valid_orders(self):
        cover = CliqueCover(4, ((1, 2), (2, 3), (3, 4)))
        measures = chain_triple_measures()
        wit = check_rip(cover)
        ref = assemble(measures, wit).sorted_by_atoms()
        # the reversed chain also satisfies the property
        order = (3, 2, 1)
        wit_rev = check_rip(cover.reorder(order))
        reordered = [measures[i - 1] for i in order]
        alt = assemble(reordered, wit_rev).sorted_by_atoms()
        assert np.allclose(ref.atoms, alt.atoms)
        assert np.allclose(ref.weights, alt.weights, atol=1e-12)

    def test_atom_count_at_least_max_clique_rank(self):
        for seed in range(10):
            cover, atoms, weights, y = random_flat_instance(seed + 40)
            measures = []
            for i in range(1, cover.m + 1):
                proj = Projection(tuple(range(1, cover.n + 1)), cover.clique(i))
                measures.append(
                    pushforward(AtomicMeasure(tuple(range(1, cover.n + 1)), atoms, weights), proj)
                )
            wit = check_rip(cover)
            mu = assemble(measures, wit)
            assert mu.num_atoms >= max(m.num_atoms for m in measures)


class TestMaximalSupport:
    def test_chain_pair(self):
        pts = maximal_support_set(chain_pair_measures(), CliqueCover(3, ((1, 2), (2, 3))))
        expect = CHAIN_PAIR_ATOMS[np.lexsort(CHAIN_PAIR_ATOMS.T[::-1])]
        assert np.allclose(pts, expect)

    def test_triangle_empty(self):
        pts = maximal_support_set(triangle_measures(), CliqueCover(3, ((1, 2), (2, 3), (1, 3))))
        assert pts.shape == (0, 3)

    def test_single_clique(self):
        mu = chain_pair_measures()[0]
        pts = maximal_support_set([mu], CliqueCover(2, ((1, 2),)))
        assert np.allclose(pts, [[-1.0, 0.0], [1.0, 0.0]])

    def test_order_independence(self):
        measures = chain_triple_measures()
        cover = CliqueCover(4, ((1, 2), (2, 3), (3, 4)))
        a = maximal_support_set(measures, cover)
        b = maximal_support_set(measures[::-1], cover)
        assert np.allclose(a, b)

    def test_support_of_assembly_equals_maximal_set(self):
        measures = chain_triple_measures()
        cover = CliqueCover(4, ((1, 2), (2, 3), (3, 4)))
        mu = assemble(measures, check_rip(cover)).sorted_by_atoms()
        assert np.allclose(mu.atoms, maximal_support_set(measures, cover))


class TestVerifyGlobal:
    def test_chain_pair_quarter_weights(self):
        y = demo.chain_pair_moments()
        mu = AtomicMeasure((1, 2, 3), CHAIN_PAIR_ATOMS, [0.25] * 4)
        assert verify_global(mu, y) <= 1e-10

    def test_lambda_family(self):
        # every mixture with weights (t, 1/2 - t, 1/2 - t, t) represents the
        # same chain-pair moment vector
        y = demo.chain_pair_moments()
        for lam in (0.0, 0.3, 0.5):
            w = [lam, 0.5 - lam, 0.5 - lam, lam]
            keep = [k for k, v in enumerate(w) if v > 0]
            mu = AtomicMeasure((1, 2, 3), CHAIN_PAIR_ATOMS[keep], np.array(w)[keep])
            assert verify_global(mu, y) <= 1e-10

    def test_empty_measure(self):
        y = demo.chain_pair_moments()
        mu = AtomicMeasure((1, 2, 3), np.zeros((0, 3)), np.zeros(0))
        assert verify_global(mu, y) == pytest.approx(1.0)  # max |y| entry
