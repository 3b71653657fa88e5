import dataclasses
import math

import numpy as np
import pytest
from sklearn.metrics import roc_auc_score

from conftest import covers_every_class
from earlydetect.classifier import ClassifierBank, LinearProbClassifier, predict_prob
from earlydetect.codebook import Codebook, quantize
from earlydetect.detector import (
    DetectorModel, DurationPrior, StreamingDetector, after_the_fact_score, benchmark, context_only_score,
    detect_stream, duration_hypotheses, fit_duration_prior, pick_peaks, score_frame,
    score_traces, train_detector, with_hypotheses,
)
from earlydetect.errors import MissingClassError
from earlydetect.onsets import OnsetTemplate
from earlydetect.signature import CascadeConfig, signature_vector
from earlydetect.synthgen import ScenarioConfig, sample_scenario
from earlydetect.timeline import (
    ActivityInstance, ActivityKind, Dataset, FeatureStream, Interval, observed_prefix, scaled_round,
)
from earlydetect.variants import get_variant, mask_bow

N_ORACLE_CASES = 200
N_PROPERTY_CASES = 1000
RTOL = 1e-9


def prior_dataset() -> Dataset:
    streams = [FeatureStream("a", np.zeros((200, 1)), intention="friendly")]
    labels = {"a": [
        ActivityInstance("hug", Interval(0, 40), ActivityKind.MAIN),
        ActivityInstance("hug", Interval(50, 100), ActivityKind.MAIN),
        ActivityInstance("hug", Interval(110, 140), ActivityKind.MAIN),
        ActivityInstance("punch", Interval(150, 170), ActivityKind.MAIN, "hostile"),
    ]}
    return Dataset(streams=streams, labels=labels, main_classes=["hug", "punch"])


def random_model(rng) -> DetectorModel:
    """Small detector with random codebook, templates and classifier weights."""
    W = int(rng.integers(2, 6))
    K = int(rng.integers(1, 3))
    templates = [
        OnsetTemplate(f"o{k}", rng.dirichlet(np.ones(W)), tuple(sorted({int(r) for r in rng.integers(1, 6, size=2)})))
        for k in range(K)
    ]
    mains = ["a", "b"]
    model = DetectorModel(
        codebook=Codebook(centers=rng.normal(size=(W, 2))),
        templates=templates,
        cascade=CascadeConfig(window=int(rng.integers(2, 12)), depth=2, scales=(1, 3)),
        variant_id=str(rng.choice(["histogram_plus_mean_max", "raw_prior_frames", "integral_bow_onset", "context_only", "peak_only"])),
        prior=DurationPrior(
            means={c: float(rng.uniform(3, 15)) for c in mains},
            stds={c: 3.0 for c in mains},
            p_intention={"i": 1.0},
            p_class_given_intention={"i": {"a": 0.5, "b": 0.5}},
        ),
        durations={c: tuple(int(L) for L in rng.integers(2, 15, size=2)) for c in mains},
        main_classes=mains,
        raw_prior_frames=5,
    )
    dim = get_variant(model.variant_id).input_dim(model.spec)
    levels = (0.3, 0.7, 1.0)
    model.bank = ClassifierBank(progress_levels=levels, classifiers={
        (c, d): LinearProbClassifier(
            weights=rng.normal(size=dim), bias=float(rng.normal()),
            platt_a=float(rng.uniform(0.5, 3.0)), platt_b=float(rng.normal()),
        )
        for c in mains for d in levels
    })
    return model


def brute_score(model, feats, words, t, class_id):
    """Exhaustive (d, L, I) enumeration straight from the scoring formula."""
    sigs = feats.signature_set(tuple(tm.class_id for tm in model.templates))
    x = signature_vector(sigs, t, model.cascade)
    mu, sigma = model.prior.means[class_id], model.prior.stds[class_id]
    best = 0.0
    for d in model.levels:
        clf = model.bank.get(class_id, d)
        for L in model.durations[class_id]:
            t1 = t - scaled_round(d, L)
            if t1 < 0:
                continue
            bow = np.bincount(words[t1: t + 1], minlength=model.codebook.size) / (t - t1 + 1)
            p = predict_prob(clf, np.concatenate([bow, x]))
            log_n = -0.5 * math.log(2 * math.pi * sigma ** 2) - (L - mu) ** 2 / (2 * sigma ** 2)
            total = 0.0
            for intention, p_i in model.prior.p_intention.items():
                log_c = math.log(model.prior.p_class_given_intention[intention][class_id])
                total += p * math.exp(model.prior.weight * (log_n + log_c)) * p_i
            best = max(best, total)
    return best


def test_fit_duration_prior():
    prior = fit_duration_prior(prior_dataset(), weight=1.0, sigma_floor=2.0)
    assert prior.means["hug"] == pytest.approx(40.0)
    assert prior.stds["hug"] == pytest.approx(np.std([40, 50, 30]))
    assert prior.stds["punch"] == 2.0
    # friendly: hug 3, punch 0; hostile: punch 1, with add-one smoothing
    assert prior.p_class_given_intention["friendly"] == pytest.approx({"hug": 4 / 5, "punch": 1 / 5})
    assert prior.p_class_given_intention["hostile"] == pytest.approx({"hug": 1 / 3, "punch": 2 / 3})
    assert prior.p_intention == {"friendly": 0.5, "hostile": 0.5}


def test_fit_duration_prior_missing_class():
    ds = prior_dataset()
    ds.main_classes.append("throw")
    with pytest.raises(MissingClassError, match="throw"):
        fit_duration_prior(ds)


def test_duration_hypotheses():
    prior = DurationPrior(
        means={"a": 60.0, "b": 2.0}, stds={"a": 10.0, "b": 5.0},
        p_intention={"i": 1.0}, p_class_given_intention={"i": {"a": 0.5, "b": 0.5}},
    )
    assert duration_hypotheses(prior, "a", R=3) == (50, 60, 70)
    assert duration_hypotheses(prior, "b", R=3, floor=2) == (2, 2, 7)
    assert duration_hypotheses(prior, "a", R=1) == (60,)


def test_prior_factor_without_weight_is_one():
    prior = DurationPrior(
        means={"a": 60.0}, stds={"a": 10.0},
        p_intention={"i": 0.3, "j": 0.7},
        p_class_given_intention={"i": {"a": 0.2}, "j": {"a": 0.9}},
        weight=0.0,
    )
    assert prior.factor("a", 5.0) == pytest.approx(1.0)
    single = dataclasses.replace(prior, p_intention={"i": 1.0}, p_class_given_intention={"i": {"a": 1.0}}, weight=1.0)
    assert single.factor("a", 60.0) == pytest.approx(1.0 / (10.0 * math.sqrt(2 * math.pi)))


def test_pick_peaks():
    assert pick_peaks(np.array([0.0, 0.2, 0.9, 0.3, 0.0]), 2) == [2]
    assert pick_peaks(np.array([0.0, 0.5, 0.1, 0.8, 0.0]), 3) == [3]
    assert pick_peaks(np.array([0.0, 0.5, 0.1, 0.0, 0.0, 0.8, 0.0]), 3) == [5, 1]
    assert pick_peaks(np.zeros(10), 3) == []
    assert pick_peaks(np.array([0.0, 0.4, 0.4, 0.4, 0.0]), 1) == [1]


def test_score_frame_matches_brute_force(tiny_dataset, tiny_model):
    rng = np.random.default_rng(0)
    streams = tiny_dataset.streams[:2]
    feats = {s.id: tiny_model.features(s) for s in streams}
    words = {s.id: quantize(s, tiny_model.codebook) for s in streams}
    for _ in range(N_ORACLE_CASES):
        stream = streams[int(rng.integers(len(streams)))]
        t = int(rng.integers(0, stream.length))
        class_id = tiny_model.main_classes[int(rng.integers(len(tiny_model.main_classes)))]
        score, d, iv = score_frame(tiny_model, feats[stream.id], t, class_id)
        want = brute_score(tiny_model, feats[stream.id], words[stream.id], t, class_id)
        np.testing.assert_allclose(score, want, rtol=RTOL, atol=1e-300)
        assert score >= 0.0
        if iv is not None:
            assert iv.t1 <= t <= iv.t2
            assert d in tiny_model.levels


def test_score_frame_without_prior_weight(tiny_dataset, tiny_model):
    model = dataclasses.replace(tiny_model, prior=dataclasses.replace(tiny_model.prior, weight=0.0))
    stream = tiny_dataset.streams[0]
    feats = model.features(stream)
    class_id = model.main_classes[0]
    t = stream.length - 1
    best = 0.0
    for d in model.levels:
        for L in model.durations[class_id]:
            t1 = t - scaled_round(d, L)
            if t1 >= 0:
                x = model.variant.input_vector(feats, t1, t, model.spec)
                best = max(best, predict_prob(model.bank.get(class_id, d), x))
    assert score_frame(model, feats, t, class_id)[0] == pytest.approx(best, rel=1e-12)


def test_no_feasible_hypothesis_scores_zero(tiny_dataset, tiny_model):
    feats = tiny_model.features(tiny_dataset.streams[0])
    assert score_frame(tiny_model, feats, 0, tiny_model.main_classes[0]) == (0.0, None, None)


def test_streaming_scores_bit_identical(tiny_dataset, tiny_model):
    for stream in tiny_dataset.streams[:2]:
        batch = score_traces(tiny_model, tiny_model.features(stream))
        live = StreamingDetector(tiny_model, stream.id)
        for frame in stream.frames:
            live.push(frame)
        online = live.traces()
        for class_id in tiny_model.main_classes:
            np.testing.assert_array_equal(online[class_id].scores, batch[class_id].scores)
            np.testing.assert_array_equal(online[class_id].progress, batch[class_id].progress)
            np.testing.assert_array_equal(online[class_id].t1, batch[class_id].t1)
        assert live.detections() == detect_stream(tiny_model, stream)


def test_streaming_matches_batch_on_random_models():
    rng = np.random.default_rng(7)
    for case in range(N_PROPERTY_CASES):
        model = random_model(rng)
        T = 300 if case % 100 == 0 else int(rng.integers(1, 30))
        stream = FeatureStream(f"s{case}", rng.normal(size=(T, 2)))
        batch = score_traces(model, model.features(stream))
        live = StreamingDetector(model, stream.id)
        for frame in stream.frames:
            live.push(frame)
        online = live.traces()
        for class_id in model.main_classes:
            np.testing.assert_array_equal(online[class_id].scores, batch[class_id].scores)
            np.testing.assert_array_equal(online[class_id].progress, batch[class_id].progress)
            np.testing.assert_array_equal(online[class_id].t1, batch[class_id].t1)
            np.testing.assert_array_equal(online[class_id].t2, batch[class_id].t2)


def test_detect_stream_output(tiny_dataset, tiny_model):
    dets = detect_stream(tiny_model, tiny_dataset.streams[0])
    assert dets
    assert all(a.score >= b.score for a, b in zip(dets, dets[1:]))
    for det in dets:
        assert det.interval.t1 <= det.t <= det.interval.t2
        assert det.score > 0
        assert set(det.to_dict()) == {"stream", "class", "t", "t1", "t2", "d", "score"}


def test_after_the_fact_score(tiny_dataset, run_config, training_context):
    model = train_detector(tiny_dataset, run_config, "after_the_fact", context=training_context)
    assert model.levels == (1.0,)
    stream = tiny_dataset.streams[0]
    feats = model.features(stream)
    inst = tiny_dataset.instances(stream.id, kind=ActivityKind.MAIN)[0]
    iv = inst.interval
    x = np.concatenate([feats.bow(iv.t1, iv.t2), np.zeros(model.variant.context_dim(model.spec))])
    want = predict_prob(model.bank.get(inst.class_id, 1.0), x) * model.prior.factor(inst.class_id, iv.t2 - iv.t1)
    assert after_the_fact_score(model, feats, iv, inst.class_id) == pytest.approx(want, rel=1e-12)
    with pytest.raises(ValueError):
        after_the_fact_score(model, feats, Interval(0, stream.length), inst.class_id)


def test_implausible_duration_is_suppressed(tiny_model):
    class_id = tiny_model.main_classes[0]
    mu, sigma = tiny_model.prior.means[class_id], tiny_model.prior.stds[class_id]
    near = tiny_model.prior.factor(class_id, mu)
    far = tiny_model.prior.factor(class_id, mu + 6 * sigma)
    assert far < near * math.exp(-17.9)


def test_context_only_score(tiny_dataset, run_config, training_context, tiny_model):
    stream = tiny_dataset.streams[0]
    with pytest.raises(ValueError, match="masked BoW"):
        context_only_score(tiny_model, tiny_model.features(stream), 50, tiny_model.main_classes[0])

    model = train_detector(tiny_dataset, run_config, "context_only", context=training_context)
    feats = model.features(stream)
    score = context_only_score(model, feats, 50, model.main_classes[0])
    assert 0.0 <= score <= 1.0
    v = model.variant.input_vector(feats, 10, 50, model.spec)
    once = mask_bow(v, model.spec.vocabulary)
    np.testing.assert_array_equal(mask_bow(once, model.spec.vocabulary), once)
    np.testing.assert_array_equal(once[: model.spec.vocabulary], 0.0)


def test_context_only_ranks_planted_onset(tiny_scenario, run_config):
    cfg = ScenarioConfig.model_validate(tiny_scenario(
        onset_correlation={"handshake": 1.0, "punch": 0.0},
        spurious_onset_rate=0.5,
        streams_per_set=6,
    ))
    ds = next(
        d for d in (sample_scenario(cfg, seed).dataset for seed in range(100)) if covers_every_class(d)
    )
    model = train_detector(ds.subset(ds.sets["set01"]), run_config, "context_only")
    test = ds.subset(ds.sets["set02"])
    scores, labels = [], []
    for stream in test.streams:
        feats = model.features(stream)
        for inst in test.instances(stream.id, kind=ActivityKind.MAIN):
            t = observed_prefix(inst, 0.3).t2
            scores.append(context_only_score(model, feats, t, "handshake"))
            labels.append(int(inst.class_id == "handshake"))
    assert 0 < sum(labels) < len(labels)
    assert roc_auc_score(labels, scores) > 0.7


def test_gaussian_bayes_detector(tiny_dataset, run_config, training_context):
    model = train_detector(tiny_dataset, run_config, "gaussian_bayes", context=training_context)
    assert model.bank is None and model.bayes is not None
    dets = detect_stream(model, tiny_dataset.streams[0])
    assert all(0.0 < d.score for d in dets)
    assert all(d.d == 1.0 for d in dets)


def test_model_dict_round_trip_scores(tiny_dataset, tiny_model):
    back = DetectorModel.from_dict(tiny_model.to_dict())
    stream = tiny_dataset.streams[1]
    a = score_traces(tiny_model, tiny_model.features(stream))
    b = score_traces(back, back.features(stream))
    for class_id in tiny_model.main_classes:
        np.testing.assert_array_equal(a[class_id].scores, b[class_id].scores)


def test_with_hypotheses(tiny_model):
    smaller = with_hypotheses(tiny_model, n_levels=2, R=2)
    assert len(smaller.levels) == 2
    assert set(smaller.levels) <= set(tiny_model.levels)
    assert all(len(v) == 2 for v in smaller.durations.values())
    assert tiny_model.levels == (0.3, 0.6, 1.0)


def test_benchmark_report(tiny_dataset, tiny_model):
    result = benchmark(tiny_model, tiny_dataset.streams[0], repeat=1, max_frames=20)
    assert result["frames"] == 20
    assert 0.0 < result["p50_sec"] <= result["p99_sec"]
    assert [(row["levels"], row["R"]) for row in result["scaling"]] == [(3, 3), (3, 3), (3, 6)]
