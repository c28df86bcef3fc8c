import functools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogspeech.errors import ParseError, ValidationError
from cogspeech.ensemble.bagging import BagInstanceError, train_bag
from cogspeech.ensemble.external import (
    embeddings_to_jsonl,
    predictions_to_jsonl,
    read_external_embeddings,
    read_external_predictions,
)
from cogspeech.ensemble.stacking import (
    audit_out_of_fold,
    external_oof,
    meta_features,
    stack_fit,
    stack_meta_cv,
    stack_predict,
)
from cogspeech.ensemble.types import BagSpec, ExternalEmbedding, PredictionVector
from cogspeech.ensemble.voting import majority_vote, model_a_predict, vote_by_speaker
from cogspeech.evalharness.folds import make_folds
from cogspeech.nn.cnn import CnnSpec, TrainConfig, cnn_fit

from oracles import tally_vote_oracle


def vote(speaker, p_ad, model="m", instance=0, fold=None):
    return PredictionVector(
        speaker_id=speaker, model_id=model, instance_id=instance,
        probs=(1.0 - p_ad, p_ad), fold=fold,
    )


class TestPredictionVector:
    def test_simplex_enforced(self):
        with pytest.raises(ValidationError, match="simplex"):
            PredictionVector("s", "m", 0, probs=(0.7, 0.7))

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            PredictionVector("s", "m", 0, probs=(-0.1, 1.1))

    def test_hard_label_tie_goes_cn(self):
        assert vote("s", 0.5).hard_label == 0
        assert vote("s", 0.51).hard_label == 1


class TestBagSpec:
    def test_instance_seed_xor(self):
        bag = BagSpec(n_instances=4, base_seed=0b1010)
        assert bag.instance_seed(0) == 0b1010
        assert bag.instance_seed(1) == 0b1011
        assert bag.instance_seed(3) == 0b1001

    def test_default_fifty(self):
        assert BagSpec().n_instances == 50


class TestMajorityVote:
    def test_sixty_of_hundred(self):
        votes = [vote(f"s", 0.9, instance=i) for i in range(60)]
        votes += [vote(f"s", 0.1, instance=100 + i) for i in range(40)]
        assert majority_vote(votes) == 1

    def test_unanimous_cn(self):
        votes = [vote("s", 0.2, instance=i) for i in range(5)]
        assert majority_vote(votes) == 0

    def test_tie_broken_by_mean_probability(self):
        votes = [vote("s", 0.95, instance=0), vote("s", 0.25, instance=1)]
        # hard votes 1-1; mean p_ad = 0.6 -> AD
        assert majority_vote(votes) == 1

    def test_double_tie_goes_cn(self):
        votes = [vote("s", 0.8, instance=0), vote("s", 0.2, instance=1)]
        assert majority_vote(votes) == 0

    def test_permutation_invariant(self):
        rng = np.random.default_rng(0)
        votes = [vote("s", p, instance=i) for i, p in enumerate(rng.random(11))]
        expected = majority_vote(votes)
        for _ in range(10):
            rng.shuffle(votes)
            assert majority_vote(votes) == expected

    @settings(max_examples=300)
    @given(
        probs=st.lists(
            st.floats(min_value=0.0, max_value=1.0, allow_nan=False), min_size=1, max_size=30
        )
    )
    def test_matches_brute_force_oracle(self, probs):
        votes = [vote("s", p, instance=i) for i, p in enumerate(probs)]
        assert majority_vote(votes) == tally_vote_oracle([v.probs for v in votes])

    def test_forced_ties_match_oracle(self):
        for pairs in (
            [(0.5, 0.5)] * 4,
            [(0.1, 0.9), (0.9, 0.1)],
            [(0.4, 0.6), (0.6, 0.4), (0.5, 0.5), (0.5, 0.5)],
        ):
            votes = [
                PredictionVector("s", "m", i, probs=p) for i, p in enumerate(pairs)
            ]
            assert majority_vote(votes) == tally_vote_oracle(pairs)

    def test_groups_by_speaker(self):
        votes = [vote("a", 0.9), vote("b", 0.1)]
        assert vote_by_speaker(votes) == {"a": 1, "b": 0}


def _fit_constant(seed, offset=0):
    rng = np.random.default_rng(seed)
    return float(rng.random()) + offset


def _fit_failing(seed):
    raise RuntimeError(f"boom {seed}")


class TestTrainBag:
    def test_bag_of_one_equals_direct_fit(self):
        bag = BagSpec(n_instances=1, base_seed=42)
        assert train_bag(_fit_constant, bag) == [_fit_constant(42)]

    def test_same_base_seed_identical(self):
        bag = BagSpec(n_instances=5, base_seed=9)
        assert train_bag(_fit_constant, bag) == train_bag(_fit_constant, bag)

    def test_failure_names_instance(self):
        with pytest.raises(BagInstanceError, match="instance 0"):
            train_bag(_fit_failing, BagSpec(n_instances=2, base_seed=1))

    def test_parallel_matches_sequential(self):
        bag = BagSpec(n_instances=6, base_seed=3)
        sequential = train_bag(functools.partial(_fit_constant, offset=1), bag, jobs=1)
        parallel = train_bag(functools.partial(_fit_constant, offset=1), bag, jobs=2)
        assert sequential == parallel

    def test_cnn_bag_same_seed_pairwise_identical(self):
        rng = np.random.default_rng(0)
        data = [(rng.normal(size=(4, 3)), i % 2) for i in range(8)]

        def fit(seed):
            return cnn_fit(data, CnnSpec(input_dim=3), TrainConfig(epochs=2, seed=seed))[0]

        bag = BagSpec(n_instances=3, base_seed=77)
        b1 = train_bag(fit, bag)
        b2 = train_bag(fit, bag)
        for m1, m2 in zip(b1, b2):
            for a, b in zip(m1.param_arrays(), m2.param_arrays()):
                assert np.array_equal(a, b)


class TestModelA:
    def test_all_hundred_agree(self):
        cnn_votes = [vote("s", 0.9, model="cnn", instance=i) for i in range(50)]
        ext_votes = [vote("s", 0.8, model="ernie", instance=i) for i in range(50)]
        assert model_a_predict(cnn_votes, ext_votes, ["s"]) == {"s": 1}

    def test_count_composition_sixty_hundred(self):
        # 30/50 AD in each source -> 60/100 AD overall
        cnn_votes = [
            vote("s", 0.9 if i < 30 else 0.1, model="cnn", instance=i) for i in range(50)
        ]
        ext_votes = [
            vote("s", 0.9 if i < 30 else 0.1, model="ernie", instance=i) for i in range(50)
        ]
        assert model_a_predict(cnn_votes, ext_votes, ["s"]) == {"s": 1}

    def test_missing_speaker_listed(self):
        cnn_votes = [vote("a", 0.9, model="cnn")]
        ext_votes = [vote("a", 0.9, model="ernie"), vote("b", 0.9, model="ernie")]
        with pytest.raises(ValidationError, match="b"):
            model_a_predict(cnn_votes, ext_votes, ["a", "b"])


class TestReadExternal:
    def test_two_line_file(self):
        lines = predictions_to_jsonl(
            [vote("a", 0.9, fold=0), vote("b", 0.2, fold=1, instance=1)]
        )
        preds = read_external_predictions(lines)
        assert len(preds) == 2
        assert preds.model_ids() == ["m"]

    def test_simplex_violation_line_number(self):
        bad = json.dumps(
            {"speaker_id": "a", "model_id": "m", "instance_id": 0, "fold": None,
             "probs": [0.7, 0.7]}
        ).encode()
        with pytest.raises(ValidationError, match="line 1"):
            read_external_predictions(bad)

    def test_duplicate_key_named(self):
        lines = predictions_to_jsonl([vote("a", 0.9), vote("a", 0.9)])
        with pytest.raises(ValidationError, match="speaker='a'"):
            read_external_predictions(lines)

    def test_bad_json_line_number(self):
        ok = predictions_to_jsonl([vote("a", 0.9)]).rstrip(b"\n")
        with pytest.raises(ParseError, match="line 2"):
            read_external_predictions(ok + b"\n{not json}\n")

    def test_embeddings_round_trip(self):
        embs = [
            ExternalEmbedding("a", "ernie", (0.1, 0.2)),
            ExternalEmbedding("b", "ernie", (0.3, 0.4)),
        ]
        parsed = read_external_embeddings(embeddings_to_jsonl(embs))
        assert parsed[("ernie", "a")].vector == (0.1, 0.2)

    def test_embedding_dim_conflict(self):
        embs = [
            ExternalEmbedding("a", "ernie", (0.1, 0.2)),
            ExternalEmbedding("b", "ernie", (0.3,)),
        ]
        with pytest.raises(ValidationError, match="dimension"):
            read_external_embeddings(embeddings_to_jsonl(embs))


def two_oracle_fixture(n=80, seed=0):
    """Speakers where oracle-1 knows group A and guesses on B; oracle-2 is
    the reverse. Internal features are pure noise."""
    rng = np.random.default_rng(seed)
    speakers = [f"s{i:03d}" for i in range(n)]
    labels = {s: i % 2 for i, s in enumerate(speakers)}
    group_a = set(speakers[: n // 2])
    plan = make_folds(labels, k=5, seed=1)

    records = []
    for s in speakers:
        fold = plan.fold_of(s)
        for model, knows in (("ernie", s in group_a), ("bert", s not in group_a)):
            if knows:
                p_ad = 0.97 if labels[s] == 1 else 0.03
            else:
                p_ad = float(rng.uniform(0.4, 0.6))
            records.append(
                PredictionVector(
                    speaker_id=s, model_id=model, instance_id=0,
                    probs=(1.0 - p_ad, p_ad), fold=fold,
                )
            )
    predictions = read_external_predictions(predictions_to_jsonl(records))
    internal = {
        "lr_comp": {s: rng.normal(size=4) for s in speakers},
        "lr_disfl": {s: rng.normal(size=3) for s in speakers},
    }
    return speakers, labels, plan, internal, predictions


class TestStacking:
    def test_meta_dimension_is_eight(self):
        speakers, labels, plan, internal, predictions = two_oracle_fixture()
        meta, artifacts = stack_fit(internal, labels, plan, predictions)
        assert meta.weights.shape == (8,)
        assert meta_features(artifacts, speakers[0]).shape == (8,)

    def test_collinear_bases_still_converge(self):
        speakers, labels, plan, internal, predictions = two_oracle_fixture()
        # duplicate one internal model's features: perfectly collinear bases
        internal = {"lr_comp": internal["lr_comp"], "lr_disfl": internal["lr_comp"]}
        meta, _ = stack_fit(internal, labels, plan, predictions, meta_l2=0.01)
        assert np.all(np.isfinite(meta.weights))

    def test_complementary_oracles_beat_best_base(self):
        speakers, labels, plan, internal, predictions = two_oracle_fixture()
        meta, artifacts = stack_fit(internal, labels, plan, predictions)
        stacked = stack_meta_cv(artifacts, labels)
        stacked_acc = np.mean([stacked[s][0] == labels[s] for s in speakers])

        base_accs = []
        for model in ("lr_comp", "lr_disfl", "ernie", "bert"):
            correct = [
                (artifacts.oof[(model, s)][1] > artifacts.oof[(model, s)][0]) == bool(labels[s])
                for s in speakers
            ]
            base_accs.append(np.mean(correct))
        assert stacked_acc >= max(base_accs)
        assert stacked_acc >= 0.95

    def test_missing_oof_rejected(self):
        speakers, labels, plan, internal, predictions = two_oracle_fixture()
        thinned = read_external_predictions(
            predictions_to_jsonl(
                [r for r in predictions.records if r.speaker_id != speakers[0]
                 or r.model_id != "ernie"]
            )
        )
        with pytest.raises(ValidationError, match="lacks out-of-fold"):
            stack_fit(internal, labels, plan, thinned)

    def test_instance_mean_probs(self):
        # two instances at [1,0] and [0,1] average to [0.5, 0.5]
        labels = {f"s{i}": i % 2 for i in range(10)}
        plan = make_folds(labels, k=5, seed=0)
        records = []
        for s in labels:
            for i, p_ad in enumerate((0.0, 1.0)):
                records.append(
                    PredictionVector(s, "m", i, probs=(1.0 - p_ad, p_ad),
                                     fold=plan.fold_of(s))
                )
        oof = external_oof(read_external_predictions(predictions_to_jsonl(records)),
                           "m", plan)
        for s in labels:
            assert oof[s] == (0.5, 0.5)
            assert sum(oof[s]) == pytest.approx(1.0)  # mean stays on the simplex

    def test_contaminated_fold_rejected(self):
        speakers, labels, plan, internal, predictions = two_oracle_fixture()
        wrong_fold = (plan.fold_of(speakers[0]) + 1) % plan.k
        corrupted = [
            PredictionVector(
                speaker_id=r.speaker_id, model_id=r.model_id,
                instance_id=r.instance_id, probs=r.probs,
                fold=wrong_fold if (r.speaker_id == speakers[0] and r.model_id == "ernie") else r.fold,
            )
            for r in predictions.records
        ]
        bad = read_external_predictions(predictions_to_jsonl(corrupted))
        with pytest.raises(ValidationError, match="contaminated"):
            external_oof(bad, "ernie", plan)

    def test_audit_clean_by_construction(self):
        _, labels, plan, internal, predictions = two_oracle_fixture()
        _, artifacts = stack_fit(internal, labels, plan, predictions)
        assert audit_out_of_fold(artifacts) == []

    def test_audit_detects_planted_violation(self):
        speakers, labels, plan, internal, predictions = two_oracle_fixture()
        _, artifacts = stack_fit(internal, labels, plan, predictions)
        key = ("lr_comp", plan.fold_of(speakers[0]))
        artifacts.train_speakers[key] = artifacts.train_speakers[key] | {speakers[0]}
        violations = audit_out_of_fold(artifacts)
        assert any(speakers[0] in v for v in violations)

    def test_predict_averages_instances(self):
        speakers, labels, plan, internal, predictions = two_oracle_fixture()
        meta, artifacts = stack_fit(internal, labels, plan, predictions)
        # test speakers with instance probs [1,0] and [0,1]: model mean [0.5, 0.5]
        test_records = []
        for model in ("ernie", "bert"):
            test_records.append(
                PredictionVector("new", model, 0, probs=(1.0, 0.0), fold=None)
            )
            test_records.append(
                PredictionVector("new", model, 1, probs=(0.0, 1.0), fold=None)
            )
        external_test = read_external_predictions(predictions_to_jsonl(test_records))
        rng = np.random.default_rng(5)
        test_feats = {
            "lr_comp": {"new": rng.normal(size=4)},
            "lr_disfl": {"new": rng.normal(size=3)},
        }
        result = stack_predict(artifacts, meta, test_feats, external_test, ["new"])
        assert "new" in result
        label, probs = result["new"]
        assert label in (0, 1)
        assert probs[0] + probs[1] == pytest.approx(1.0)

    def test_averaging_identity(self):
        # all instances agree at [0.1, 0.9]: the model-mean is [0.1, 0.9]
        speakers, labels, plan, internal, predictions = two_oracle_fixture()
        meta, artifacts = stack_fit(internal, labels, plan, predictions)
        test_records = [
            PredictionVector("new", model, i, probs=(0.1, 0.9), fold=None)
            for model in ("ernie", "bert") for i in range(3)
        ]
        external_test = read_external_predictions(predictions_to_jsonl(test_records))
        rng = np.random.default_rng(6)
        test_feats = {
            "lr_comp": {"new": rng.normal(size=4)},
            "lr_disfl": {"new": rng.normal(size=3)},
        }
        result = stack_predict(artifacts, meta, test_feats, external_test, ["new"])
        assert result["new"][0] in (0, 1)


class TestSingleBaseStack:
    def test_single_base_matches_base_cv_accuracy(self):
        # separable aggregates: a stack of one LR should track the LR itself
        rng = np.random.default_rng(9)
        speakers = [f"s{i:02d}" for i in range(60)]
        labels = {s: i % 2 for i, s in enumerate(speakers)}
        feats = {
            s: rng.normal(size=3) + (2.5 if labels[s] else 0.0) for s in speakers
        }
        plan = make_folds(labels, k=5, seed=2)
        meta, artifacts = stack_fit(
            {"lr_only": feats}, labels, plan,
            read_external_predictions(b""), external_ids=(),
        )
        stacked = stack_meta_cv(artifacts, labels)
        stacked_acc = np.mean([stacked[s][0] == labels[s] for s in speakers])
        base_acc = np.mean(
            [
                (artifacts.oof[("lr_only", s)][1] > 0.5) == bool(labels[s])
                for s in speakers
            ]
        )
        assert abs(stacked_acc - base_acc) <= 0.05
