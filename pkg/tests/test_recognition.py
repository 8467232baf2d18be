import json

import numpy as np
import pytest

from gomkit.errors import (DegenerateDataError, DimensionError, EmptyModelSetError,
                           InsufficientDataError)
from gomkit.recognition import (ERGODIC, LEFT_TO_RIGHT, HmmModel, Standardizer, classify,
                                cross_validate, hmm_fit, loglik, train_classifier)
from oracles import hmm_brute_loglik, sample_hmm


def random_model(rng, n, d, topology=ERGODIC):
    A = rng.random((n, n))
    if topology == LEFT_TO_RIGHT:
        A = np.triu(A) * (np.arange(n)[None, :] - np.arange(n)[:, None] <= 1)
    A /= A.sum(axis=1, keepdims=True)
    pi = rng.random(n) if topology == ERGODIC else np.eye(n)[0]
    pi = pi / pi.sum()
    return HmmModel(n, topology, pi, A, rng.normal(0, 2, (n, d)), rng.uniform(0.3, 2, (n, d)))


def test_forward_matches_path_enumeration(rng):
    for topo in (ERGODIC, LEFT_TO_RIGHT):
        for _ in range(10):
            n, T, d = int(rng.integers(1, 5)), int(rng.integers(1, 6)), int(rng.integers(1, 3))
            m = random_model(rng, n, d, topo)
            X = rng.normal(0, 2, (T, d))
            expected = hmm_brute_loglik(m.startprob, m.transmat, m.means, m.variances, X)
            assert loglik(m, X) == pytest.approx(expected, abs=1e-8)


def test_one_state_is_a_sum_of_gaussians(rng):
    m = random_model(rng, 1, 2)
    X = rng.standard_normal((9, 2))
    dens = -0.5 * (np.log(2 * np.pi * m.variances[0]) + (X - m.means[0]) ** 2 / m.variances[0])
    assert loglik(m, X) == pytest.approx(dens.sum(), rel=1e-12)


def test_long_sequences_stay_finite(rng):
    m = random_model(rng, 3, 2)
    assert np.isfinite(loglik(m, rng.normal(0, 30, (20000, 2))))


def test_recovers_a_two_state_left_to_right_chain():
    rng = np.random.default_rng(7)
    pi, A = np.array([1.0, 0.0]), np.array([[0.95, 0.05], [0.0, 1.0]])
    seqs = [sample_hmm(rng, pi, A, np.array([0.0, 5.0]), 1.0, 80)[0] for _ in range(20)]
    m = hmm_fit(seqs, 2, LEFT_TO_RIGHT)
    np.testing.assert_allclose(np.sort(m.means[:, 0]), [0.0, 5.0], atol=0.3)
    assert np.all(np.diff(m.history) >= -1e-9)


def test_left_to_right_structure_is_preserved(rng):
    seqs = [rng.standard_normal((30, 2)) + np.linspace(0, 6, 30)[:, None] for _ in range(5)]
    m = hmm_fit(seqs, 4, LEFT_TO_RIGHT)
    assert m.startprob.tolist() == [1.0, 0.0, 0.0, 0.0]
    i, j = np.indices((4, 4))
    assert np.all(m.transmat[(j < i) | (j > i + 1)] == 0.0)
    np.testing.assert_allclose(m.transmat.sum(axis=1), 1.0)
    assert np.all(m.variances >= 1e-6)


def test_em_is_monotone_for_both_topologies(rng):
    for topo in (LEFT_TO_RIGHT, ERGODIC):
        for _ in range(5):
            seqs = [rng.standard_normal((int(rng.integers(10, 40)), 3)).cumsum(axis=0)
                    for _ in range(4)]
            m = hmm_fit(seqs, int(rng.integers(2, 5)), topo)
            assert np.all(np.diff(m.history) >= -1e-9 * np.abs(m.history[1:]).max())


def test_fit_guards(rng):
    with pytest.raises(DegenerateDataError):
        hmm_fit([np.ones((20, 1))], 2)
    with pytest.raises(InsufficientDataError):
        hmm_fit([rng.standard_normal((3, 1))], 4, LEFT_TO_RIGHT)
    with pytest.raises(DimensionError):
        hmm_fit([rng.standard_normal((9, 1)), rng.standard_normal((9, 2))], 2)


def test_classify(rng):
    low = [rng.normal(0, 1, (20, 1)) for _ in range(5)]
    high = [rng.normal(10, 1, (20, 1)) for _ in range(5)]
    models = {"a": hmm_fit(low, 2), "b": hmm_fit(high, 2)}
    assert classify(models, np.full((20, 1), 10.0)) == "b"
    assert classify({"only": models["a"]}, np.full((20, 1), 10.0)) == "only"
    with pytest.raises(EmptyModelSetError):
        classify({}, low[0])
    with pytest.raises(DimensionError):
        classify(models, np.zeros((20, 2)))


def test_ties_go_to_the_first_label(rng):
    m = hmm_fit([rng.standard_normal((20, 1)) for _ in range(3)], 2)
    assert classify({"z": m, "b": m, "k": m}, np.zeros((10, 1))) == "b"


def test_decisions_invariant_to_affine_rescaling(rng):
    seqs, labels = [], []
    for c, mu in enumerate((0.0, 1.0, 2.5)):
        for _ in range(6):
            seqs.append(rng.normal(mu, 1.0, (25, 2)))
            labels.append(f"G{c}")
    scaler, models = train_classifier(seqs, labels, 2)
    base = [classify(models, scaler.transform(s)) for s in seqs]
    scaled = [s * np.array([3.0, 0.2]) + np.array([-40.0, 7.0]) for s in seqs]
    scaler2, models2 = train_classifier(scaled, labels, 2)
    assert [classify(models2, scaler2.transform(s)) for s in scaled] == base


def _separable(rng, n_classes, reps, T=24, d=2):
    seqs, labels = [], []
    for c in range(n_classes):
        for _ in range(reps):
            ramp = np.linspace(0, 1, T)[:, None] * (c + 1)
            seqs.append(3.0 * c + ramp + 0.2 * rng.standard_normal((T, d)))
            labels.append(f"G{c}")
    return seqs, labels


def test_separable_two_classes(rng):
    seqs, labels = _separable(rng, 2, 10)
    rep = cross_validate(seqs, labels, 3, folds=10, seed=0)
    assert rep.accuracy == 1.0 and rep.macro_f1 == 1.0
    assert rep.confusion.sum(axis=1).tolist() == [10, 10]
    assert len(rep.fold_accuracy) == 10


def test_cv_is_reproducible_and_serialises(rng):
    seqs, labels = _separable(rng, 3, 4)
    a = cross_validate(seqs, labels, 2, folds=3, seed=11)
    b = cross_validate(seqs, labels, 2, folds=3, seed=11)
    assert a.to_json() == b.to_json()
    doc = json.loads(a.to_json())
    assert doc["classes"] == ["G0", "G1", "G2"] and doc["folds"] == 3
    row = a.csv_row("TVA", ["LA", "SP1"]).splitlines()
    assert row[0] == "vocabulary,n_classes,sensors,accuracy,f1"
    assert row[1].startswith("TVA,3,LA SP1,")


def test_cv_reduces_folds_with_warning(rng, caplog):
    seqs, labels = _separable(rng, 2, 3)
    with caplog.at_level("WARNING"):
        rep = cross_validate(seqs, labels, 2, folds=10)
    assert rep.folds == 3 and "reducing folds" in caplog.text


def test_cv_needs_two_repetitions(rng):
    seqs, labels = _separable(rng, 2, 2)
    with pytest.raises(InsufficientDataError):
        cross_validate(seqs[:3], labels[:3], 2)


def test_standardizer(rng):
    seqs = [rng.normal(5, 3, (10, 2)) for _ in range(3)]
    s = Standardizer.fit(seqs)
    z = np.vstack([s.transform(x) for x in seqs])
    np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(z.std(axis=0), 1.0)
