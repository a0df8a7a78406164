import itertools
import math

import numpy as np
import pytest
from scipy.special import logsumexp

from trendner.corpus import Instance
from trendner.evalmetrics import entity_f1
from trendner.tagger import (
    CrfModel,
    TaggerConfig,
    bio_labels,
    extract_features,
    word_shape,
)

LABELS = bio_labels(("PER", "LOC", "ORG"))  # 7 labels, O first


def inst(tokens, labels, i=0, year=2015):
    return Instance(i, tuple(tokens), tuple(labels), year)


def random_instance(rng, length, with_entity=True):
    vocab = ["Acme", "visited", "Paris", "quickly", "Jordan", "the", "Office", "ran"]
    tokens = [vocab[rng.integers(len(vocab))] for _ in range(length)]
    labels = ["O"] * length
    if with_entity and length >= 2:
        labels[0], labels[1] = "B-PER", "I-PER"
    return inst(tokens, labels)


def fresh_model(config=None, data=()):
    model = CrfModel(LABELS, config)
    if data:
        model.register_features(data)
    return model


def randomize_weights(model, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    model.weights = rng.normal(0.0, scale, size=model.weights.shape)


# -- independent oracles ------------------------------------------------------


def enumerate_path_scores(emissions, trans, labels=LABELS, constrained=False):
    """Score every label path by direct summation. When ``constrained``,
    BIO-invalid paths (derived from the label names alone) score -inf."""
    n_steps, n_labels = emissions.shape
    paths = np.array(list(itertools.product(range(n_labels), repeat=n_steps)))
    scores = emissions[0, paths[:, 0]].astype(float)
    if constrained:
        start_ok = np.array([not lab.startswith("I-") for lab in labels])
        trans_ok = np.ones((n_labels, n_labels), dtype=bool)
        for j, lab in enumerate(labels):
            if lab.startswith("I-"):
                for i, prev in enumerate(labels):
                    trans_ok[i, j] = prev in (f"B-{lab[2:]}", f"I-{lab[2:]}")
        scores = np.where(start_ok[paths[:, 0]], scores, -np.inf)
    for t in range(1, n_steps):
        step = trans[paths[:, t - 1], paths[:, t]] + emissions[t, paths[:, t]]
        if constrained:
            ok = trans_ok[paths[:, t - 1], paths[:, t]]
            step = np.where(ok, step, -np.inf)
        scores = scores + step
    return paths, scores


def chain_score(emissions, trans, label_ids):
    total = emissions[0, label_ids[0]]
    for t in range(1, len(label_ids)):
        total += trans[label_ids[t - 1], label_ids[t]] + emissions[t, label_ids[t]]
    return total


# -- feature templates --------------------------------------------------------


class TestFeatures:
    def test_capitalized_first_token(self):
        feats = extract_features(inst(["Jordan", "wins"], ["B-PER", "O"]), 0)
        for expected in ("w0=jordan", "shape=Xx", "cap", "start", "suf3=dan", "pre1=j"):
            assert expected in feats

    def test_url_token(self):
        feats = extract_features(inst(["http://t.co/x"], ["O"]), 0)
        assert "url" in feats
        assert "w0=<URL>" in feats

    def test_no_next_token_features_at_the_end(self):
        feats = extract_features(inst(["a", "b"], ["O", "O"]), 1)
        assert not any(f.startswith("w+1=") for f in feats)
        assert any(f.startswith("w-1=") for f in feats)

    def test_mention_and_hashtag(self):
        feats = extract_features(inst(["@fan", "#hype"], ["O", "O"]), 0)
        assert "mention" in feats
        feats = extract_features(inst(["@fan", "#hype"], ["O", "O"]), 1)
        assert "hashtag" in feats

    @pytest.mark.parametrize(
        "token,shape",
        [("Jordan", "Xx"), ("USA", "XX"), ("hello", "xx"), ("1234", "dd"), ("iPhone7", "mixed")],
    )
    def test_word_shapes(self, token, shape):
        assert word_shape(token) == shape

    def test_deterministic(self):
        target = inst(["Jordan", "wins"], ["B-PER", "O"])
        assert extract_features(target, 0) == extract_features(target, 0)


# -- likelihood ---------------------------------------------------------------


class TestLogLikelihood:
    def test_single_token_uniform_at_zero_weights(self):
        target = inst(["Jordan"], ["B-PER"])
        model = fresh_model(TaggerConfig(l2=0.0), [target])
        value, _ = model.log_likelihood_and_gradient([target])
        assert value == pytest.approx(-math.log(len(LABELS)), abs=1e-12)

    def test_gradient_at_zero_weights_is_empirical_minus_uniform(self):
        target = inst(["Acme", "Corp", "wins"], ["B-ORG", "I-ORG", "O"])
        model = fresh_model(TaggerConfig(l2=0.0), [target])
        _, grad = model.log_likelihood_and_gradient([target])
        n_labels = len(LABELS)
        emit = grad[: len(model.feature_vocab) * n_labels].reshape(-1, n_labels)
        trans = grad[len(model.feature_vocab) * n_labels :].reshape(n_labels, n_labels)

        gold_ids = [LABELS.index(lab) for lab in target.labels]
        expected_emit = np.zeros_like(emit)
        for t in range(len(target)):
            for name in extract_features(target, t):
                row = model.feature_vocab[name]
                expected_emit[row] -= 1.0 / n_labels
                expected_emit[row, gold_ids[t]] += 1.0
        np.testing.assert_allclose(emit, expected_emit, atol=1e-12)

        expected_trans = np.full((n_labels, n_labels), -2.0 / n_labels**2)
        for a, b in zip(gold_ids, gold_ids[1:]):
            expected_trans[a, b] += 1.0
        np.testing.assert_allclose(trans, expected_trans, atol=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        for trial in range(6):
            target = random_instance(rng, int(rng.integers(2, 6)))
            model = fresh_model(TaggerConfig(l2=1e-3), [target])
            randomize_weights(model, 100 + trial, scale=0.5)
            _, grad = model.log_likelihood_and_gradient([target])
            coords = list(rng.choice(model.weights.size, size=10, replace=False))
            h = 1e-6
            for c in coords:
                saved = model.weights[c]
                model.weights[c] = saved + h
                up, _ = model.log_likelihood_and_gradient([target])
                model.weights[c] = saved - h
                down, _ = model.log_likelihood_and_gradient([target])
                model.weights[c] = saved
                fd = (up - down) / (2 * h)
                rel = abs(grad[c] - fd) / max(1.0, abs(grad[c]), abs(fd))
                assert rel <= 1e-4, f"coordinate {c}: analytic {grad[c]} vs fd {fd}"

    def test_log_partition_matches_brute_force(self):
        rng = np.random.default_rng(17)
        for length in range(1, 6):
            target = random_instance(rng, length)
            model = fresh_model(data=[target])
            randomize_weights(model, length)
            emissions, trans = model.chain_potentials(target)
            gold_ids = [LABELS.index(lab) for lab in target.labels]
            log_z = chain_score(emissions, trans, gold_ids) - model.sequence_log_prob(target)
            _, scores = enumerate_path_scores(emissions, trans)
            assert log_z == pytest.approx(logsumexp(scores), abs=1e-8)

    def test_unknown_label_rejected(self):
        model = fresh_model()
        with pytest.raises(ValueError):
            model.log_likelihood_and_gradient([inst(["x"], ["B-GPE"])])

    def test_nan_weights_are_a_hard_error(self):
        target = inst(["x"], ["O"])
        model = fresh_model(data=[target])
        model.weights[:] = np.nan
        with pytest.raises(FloatingPointError):
            model.log_likelihood_and_gradient([target])


# -- decoding -----------------------------------------------------------------


class TestViterbi:
    def test_matches_constrained_enumeration_on_random_models(self):
        rng = np.random.default_rng(23)
        for trial in range(20):
            length = int(rng.integers(1, 6))
            target = random_instance(rng, length)
            model = fresh_model(data=[target])
            randomize_weights(model, 1000 + trial)
            decoded = model.viterbi(target)
            emissions, trans = model.chain_potentials(target)
            paths, scores = enumerate_path_scores(emissions, trans, constrained=True)
            best = paths[int(np.argmax(scores))]
            assert decoded == [LABELS[i] for i in best]
            decoded_score = chain_score(emissions, trans, [LABELS.index(l) for l in decoded])
            assert decoded_score == pytest.approx(scores.max(), abs=1e-9)

    def test_zero_weights_decode_all_outside(self):
        target = inst(["a", "b", "c", "d"], ["O"] * 4)
        model = fresh_model(data=[target])
        assert model.viterbi(target) == ["O", "O", "O", "O"]

    def test_transition_mask_forces_valid_prefix(self):
        target = inst(["a", "b"], ["O", "O"])
        model = fresh_model(data=[target])
        # hugely reward I-PER on the second token; the only valid way to
        # reach it is through B-PER
        row = model.feature_vocab["w0=b"]
        emit = model.weights[: len(model.feature_vocab) * len(LABELS)].reshape(-1, len(LABELS))
        emit[row, LABELS.index("I-PER")] = 10.0
        assert model.viterbi(target) == ["B-PER", "I-PER"]

    def test_decoded_sequences_are_always_valid_bio(self):
        rng = np.random.default_rng(31)
        for trial in range(25):
            target = random_instance(rng, int(rng.integers(1, 7)))
            model = fresh_model(data=[target])
            randomize_weights(model, 2000 + trial, scale=2.0)
            decoded = model.viterbi(target)
            prev = "O"
            for lab in decoded:
                if lab.startswith("I-"):
                    assert prev in (f"B-{lab[2:]}", f"I-{lab[2:]}"), decoded
                prev = lab

    def test_empty_batch(self):
        assert fresh_model().decode([]) == []


# -- training -----------------------------------------------------------------


def tiny_dataset():
    data = [
        inst(["Acme", "Corp", "wins"], ["B-ORG", "I-ORG", "O"], i=0),
        inst(["Jordan", "visited", "Paris"], ["B-PER", "O", "B-LOC"], i=1),
        inst(["nothing", "happened"], ["O", "O"], i=2),
        inst(["Paris", "loves", "Acme", "Corp"], ["B-LOC", "O", "B-ORG", "I-ORG"], i=3),
    ]
    dev = [
        inst(["Jordan", "wins"], ["B-PER", "O"], i=10),
        inst(["Acme", "Corp", "visited", "Paris"], ["B-ORG", "I-ORG", "O", "B-LOC"], i=11),
    ]
    return data, dev


class TestFit:
    def test_single_repeated_instance_reaches_high_path_probability(self):
        target = inst(["Jordan", "visited", "Paris"], ["B-PER", "O", "B-LOC"])
        model = fresh_model(TaggerConfig(l2=0.0, max_epochs=300, tol=0.0))
        model.fit([target])
        assert math.exp(model.sequence_log_prob(target)) > 0.99

    def test_objective_is_monotone_over_accepted_steps(self):
        data, dev = tiny_dataset()
        model = fresh_model(TaggerConfig(max_epochs=40))
        log = model.fit(data, dev)
        diffs = [b - a for a, b in zip(log.objectives, log.objectives[1:])]
        assert all(d >= -1e-12 for d in diffs)

    def test_warm_start_on_same_data_barely_moves_dev_f1(self):
        data, dev = tiny_dataset()
        model = fresh_model(TaggerConfig(max_epochs=120, patience=20))
        model.fit(data, dev)
        before = entity_f1(dev, model.decode(dev)).overall.f1
        model.fit(data, dev)
        after = entity_f1(dev, model.decode(dev)).overall.f1
        assert abs(after - before) < 0.005  # 0.5 F1 points

    def test_training_is_bit_deterministic(self):
        data, dev = tiny_dataset()
        first = fresh_model(TaggerConfig(max_epochs=30))
        second = fresh_model(TaggerConfig(max_epochs=30))
        first.fit(data, dev)
        second.fit(data, dev)
        assert np.array_equal(first.weights, second.weights)
        assert first.feature_vocab == second.feature_vocab

    def test_empty_training_data_rejected(self):
        with pytest.raises(ValueError):
            fresh_model().fit([])

    def test_fit_without_dev_runs_the_budget(self):
        data, _ = tiny_dataset()
        model = fresh_model(TaggerConfig(max_epochs=15))
        log = model.fit(data)
        assert log.dev_f1 == []
        assert len(log.objectives) >= 2


class TestVocabulary:
    def test_register_preserves_existing_weights(self):
        data, _ = tiny_dataset()
        model = fresh_model(data=[data[0]])
        randomize_weights(model, 3)
        before = {
            name: model.weights[idx * len(LABELS) : (idx + 1) * len(LABELS)].copy()
            for name, idx in model.feature_vocab.items()
        }
        trans_before = model._trans_w().copy()
        added = model.register_features([data[1]])
        assert added > 0
        for name, idx in model.feature_vocab.items():
            if name in before:
                got = model.weights[idx * len(LABELS) : (idx + 1) * len(LABELS)]
                np.testing.assert_array_equal(got, before[name])
        np.testing.assert_array_equal(model._trans_w(), trans_before)

    def test_unseen_features_ignored_at_decode_time(self):
        data, _ = tiny_dataset()
        model = fresh_model(data=[data[0]])
        vocab_size = len(model.feature_vocab)
        model.decode([data[1]])
        assert len(model.feature_vocab) == vocab_size


class TestPersistence:
    def test_save_load_round_trip(self, tmp_path):
        data, dev = tiny_dataset()
        model = fresh_model(TaggerConfig(max_epochs=20))
        model.fit(data, dev)
        path = tmp_path / "model.npz"
        model.save(path)
        loaded = CrfModel.load(path)
        assert loaded.labels == model.labels
        assert loaded.feature_vocab == model.feature_vocab
        assert loaded.config == model.config
        np.testing.assert_array_equal(loaded.weights, model.weights)
        assert loaded.decode(data) == model.decode(data)
