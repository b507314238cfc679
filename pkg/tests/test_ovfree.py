import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from amalgam import fps, ovfree
from amalgam.errors import (EmbeddingNotHomomorphism, ExpectationError, FaithfulnessError, UnsupportedWord,
                            ValidationError)
from amalgam.finalg import BlockAlgebra, FaithfulState
from amalgam.ovfree import (AmalgamatedModel, Arm, Letter, cumulant_from_moments, moment_centering,
                            moment_cumulant, multiplicity_embedding, ov_cumulant, scalar_moment)

import oracles

seed_st = st.integers(0, 2**32 - 1)
T = 0.25


@pytest.fixture(scope="module")
def rotated():
    return fps.example_47_model(T, n_arms=3)


def _dense(word_arms, t=T):
    """E of an x-word in the rotated-projection model, computed with dense matrices.

    Freeness over the diagonal lets every maximal run of one arm be replaced
    by the diagonal part of the product evaluated innermost-first; only
    patterns with a single interior run (i j i) or no repeats are used here.
    """
    x = oracles.rotated_projection(t)
    D = oracles.diag_part
    arms = list(word_arms)
    if len(set(arms)) == len(arms):
        out = np.eye(2)
        for _ in arms:
            out = out @ D(x)
        return np.diag(out)
    if len(arms) == 3 and arms[0] == arms[2] != arms[1]:
        return np.diag(D(x @ D(x) @ x))
    raise NotImplementedError


def test_rotated_model_low_moments(rotated):
    E1 = moment_centering(rotated, rotated.x_word([0]))
    assert np.allclose(E1.vec(), [T, 1 - T])
    E12 = moment_centering(rotated, rotated.x_word([0, 1]))
    assert np.allclose(E12.vec(), _dense([0, 1]))
    assert np.isclose(scalar_moment(rotated, rotated.x_word([0, 1])), 5 / 16)
    E121 = moment_centering(rotated, rotated.x_word([0, 1, 0]))
    assert np.allclose(E121.vec(), _dense([0, 1, 0]))
    assert np.allclose(moment_centering(rotated, rotated.x_word([0, 1, 2])).vec(), _dense([0, 1, 2]))


def test_rotated_model_cumulants(rotated):
    B = rotated.base
    k2 = ov_cumulant(rotated, 0, 2)
    assert np.allclose(k2.vec(), [T * (1 - T)] * 2)
    k2b = ov_cumulant(rotated, 0, 2, [B.element([[[1.0]], [[0.0]]])])
    assert np.allclose(k2b.vec(), [0, T * (1 - T)])


def test_single_arm_word_equals_direct_expectation(rotated):
    arm = rotated.arms[0]
    b = rotated.base.element([[[2.0]], [[-1.0]]])
    word = (rotated.x_letter(0), rotated.x_letter(0, b), rotated.x_letter(0))
    direct = arm.expect(arm.x @ arm.x @ arm.embed(b) @ arm.x)
    assert moment_centering(rotated, word).allclose(direct, 1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_scalar_base_matches_classical_free_moments(seed):
    rng = np.random.default_rng(seed)
    measures = []
    for _ in range(2):
        s = int(rng.integers(2, 4))
        atoms = rng.standard_normal(s)
        masses = rng.uniform(0.2, 1.0, s)
        measures.append((atoms, masses / masses.sum()))
    model = oracles.scalar_arm_model(measures)
    cums = [oracles.classical_free_cumulants(oracles.measure_moments(a, m, 6)) for a, m in measures]
    for n in range(1, 6):
        for arms in itertools.product(range(2), repeat=n):
            ref = oracles.scalar_free_moment(arms, cums)
            assert np.isclose(scalar_moment(model, model.x_word(arms)), ref, atol=1e-10)
            assert np.isclose(ovfree.scalar_moment(model, model.x_word(arms)),
                              model.state(moment_cumulant(model, model.x_word(arms))), atol=1e-10)


@given(seed_st)
def test_engines_agree_on_random_models(seed):
    rng = np.random.default_rng(seed)
    model = oracles.random_model(rng)
    B = model.base
    for _ in range(3):
        n = int(rng.integers(1, 6))
        word = tuple(model.x_letter(int(rng.integers(2)), B.random_element(rng)) for _ in range(n))
        a, b = moment_centering(model, word), moment_cumulant(model, word)
        assert np.max(np.abs((a - b).vec())) < 1e-8 * max(1.0, np.max(np.abs(a.vec())))


@given(seed_st)
def test_mixed_cumulants_vanish(seed):
    rng = np.random.default_rng(seed)
    model = oracles.random_model(rng)
    B = model.base
    n = int(rng.integers(2, 5))
    arms = [0, 1] + [int(rng.integers(2)) for _ in range(n - 2)]
    rng.shuffle(arms)
    k = cumulant_from_moments(model, [(i, B.random_element(rng)) for i in arms])
    assert np.max(np.abs(k.vec())) < 1e-8


@given(seed_st)
def test_pure_cumulants_agree_between_engines(seed):
    rng = np.random.default_rng(seed)
    model = oracles.random_model(rng)
    B = model.base
    n = int(rng.integers(1, 5))
    cs = [B.random_element(rng) for _ in range(n - 1)]
    a = ov_cumulant(model, 1, n, cs)
    b = cumulant_from_moments(model, [(1, c) for c in cs] + [(1, B.unit())])
    assert np.max(np.abs((a - b).vec())) < 1e-8


@given(seed_st)
def test_state_positivity_on_random_words(seed):
    rng = np.random.default_rng(seed)
    model = oracles.random_model(rng)
    n = int(rng.integers(1, 4))
    word = tuple(Letter(i, model.arms[i].algebra.random_element(rng))
                 for i in (int(rng.integers(2)) for _ in range(n)))
    val = scalar_moment(model, ovfree.adjoint_word(word) + word)
    assert val.real >= -1e-9 and abs(val.imag) < 1e-9


@given(seed_st)
def test_expectation_is_a_bimodule_map_on_words(seed):
    rng = np.random.default_rng(seed)
    model = oracles.random_model(rng)
    B = model.base
    b1, b2 = B.random_element(rng), B.random_element(rng)
    word = model.x_word([0, 1, 0])
    left = moment_centering(model, ovfree.push_right(model, ovfree.push_left(model, b1, word), b2))
    assert left.allclose(b1 @ moment_centering(model, word) @ b2, 1e-9)


def test_adjoint_word_conjugates_expectation(rotated):
    rng = np.random.default_rng(3)
    word = tuple(Letter(i, rotated.arms[i].algebra.random_element(rng)) for i in (0, 1, 0, 2))
    a = moment_centering(rotated, word)
    b = moment_centering(rotated, ovfree.adjoint_word(word))
    assert b.allclose(a.adjoint(), 1e-12)


def test_non_product_letter_unsupported_by_cumulant_engine(rotated):
    A = rotated.arms[0].algebra
    word = (Letter(0, A.matrix_unit(0, 0, 1)), rotated.x_letter(1))
    with pytest.raises(UnsupportedWord):
        moment_cumulant(rotated, word)


def test_parse_word(rotated):
    assert [L.arm for L in ovfree.parse_word(rotated, "x1 x3, x2")] == [0, 2, 1]
    with pytest.raises(ValidationError):
        ovfree.parse_word(rotated, "x4")
    with pytest.raises(ValidationError):
        ovfree.parse_word(rotated, "y1")


def test_word_length_cap(rotated):
    with pytest.raises(ValidationError):
        moment_centering(rotated, rotated.x_word([0, 1] * 7))


def test_identical_distribution(rotated):
    assert ovfree.check_identically_distributed(rotated, 4)
    other = rotated.arms[0].with_variable(rotated.arms[0].x @ rotated.arms[0].x * 0.5)
    model = rotated.with_arms([rotated.arms[0], other])
    assert ovfree.identical_distribution_residual(model, 2) > 0.1


def test_multiplicity_embedding_is_homomorphism():
    B = BlockAlgebra((1, 2))
    A = BlockAlgebra((3, 2))
    I = multiplicity_embedding(B, A, [[1, 1], [0, 1]])
    rng = np.random.default_rng(0)
    a, b = B.random_element(rng), B.random_element(rng)
    img = lambda e: A.from_vec(I @ e.vec())
    assert img(a @ b).allclose(img(a) @ img(b))
    with pytest.raises(EmbeddingNotHomomorphism):
        multiplicity_embedding(B, A, [[1, 0], [0, 1]])


def _simple_arm(B, psi):
    A = BlockAlgebra((2,))
    I = multiplicity_embedding(B, A, [[1, 1]])
    E = np.zeros((2, 4))
    E[0, 0] = E[1, 3] = 1
    return A, I, E


def test_arm_validation_failures():
    B = BlockAlgebra((1, 1))
    psi = FaithfulState(B, [[[0.5]], [[0.5]]])
    A, I, E = _simple_arm(B, psi)
    x = A.element([np.diag([1.0, 2.0])])
    bad_I = I.copy()
    bad_I[1, 0] = 1.0
    with pytest.raises(EmbeddingNotHomomorphism) as info:
        AmalgamatedModel(B, psi, [Arm(B, A, bad_I, E, x)])
    assert info.value.residual > 0
    with pytest.raises(ExpectationError):
        AmalgamatedModel(B, psi, [Arm(B, A, I, 2 * E, x)])
    singular = np.zeros((2, 4))
    singular[0, 0] = 1.0
    singular[1, 0] = 1.0
    with pytest.raises((ExpectationError, FaithfulnessError)):
        AmalgamatedModel(B, psi, [Arm(B, A, I, singular, x)])
    with pytest.raises(ValidationError):
        AmalgamatedModel(B, psi, [Arm(B, A, I, E, A.matrix_unit(0, 0, 1))])
    with pytest.raises(ValidationError):
        Arm(B, A, I[:, :1], E, x)
