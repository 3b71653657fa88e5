import json
import math
from fractions import Fraction

import numpy as np
import pytest

from earlydetect.errors import DatasetLoadError
from earlydetect.timeline import (
    ActivityInstance, ActivityKind, Dataset, FeatureStream, Interval, interval_overlap,
    load_dataset, load_stream, observed_prefix, round_half_up, save_dataset, save_stream, scaled_round,
    validate_dataset,
)


def two_stream_dataset() -> Dataset:
    streams = [
        FeatureStream("a", np.zeros((50, 2))),
        FeatureStream("b", np.ones((40, 2)), intention="friendly"),
    ]
    labels = {
        "a": [ActivityInstance("hug", Interval(5, 20), ActivityKind.MAIN, "friendly")],
        "b": [
            ActivityInstance("waving", Interval(0, 9), ActivityKind.ONSET),
            ActivityInstance("hug", Interval(12, 39), ActivityKind.MAIN),
        ],
    }
    return Dataset(
        streams=streams,
        labels=labels,
        sets={"s1": ["a"], "s2": ["b"]},
        onset_classes=["waving"],
        main_classes=["hug"],
    )


def test_interval_rejects_reversed_and_negative():
    with pytest.raises(ValueError):
        Interval(5, 4)
    with pytest.raises(ValueError):
        Interval(-1, 3)
    assert Interval(3, 3).duration == 1


def test_round_half_up():
    assert round_half_up(2.5) == 3
    assert round_half_up(0.5) == 1
    assert round_half_up(0.49) == 0
    assert round_half_up(-0.5) == 0


@pytest.mark.parametrize("iv, ratio, expected", [
    (Interval(100, 200), 1.0, Interval(100, 200)),
    (Interval(100, 200), 0.2, Interval(100, 120)),
    (Interval(100, 101), 0.1, Interval(100, 100)),
    (Interval(10, 110), 0.5, Interval(10, 60)),
])
def test_observed_prefix(iv, ratio, expected):
    assert observed_prefix(iv, ratio) == expected


def test_scaled_round_is_exact():
    assert scaled_round(0.7, 45) == 32
    assert scaled_round(0.7, 85) == 60
    assert scaled_round(0.5, 0.3 * 20) == 3
    ratios = [round(0.1 * i, 1) for i in range(1, 11)] + [0.25, 0.75]
    for ratio in ratios:
        for span in range(501):
            want = math.floor(Fraction(str(ratio)) * span + Fraction(1, 2))
            assert scaled_round(ratio, span) == want, (ratio, span)
            iv = observed_prefix(Interval(7, 7 + span), ratio)
            assert iv.t2 == 7 + want


@pytest.mark.parametrize("ratio", [0.0, -0.1, 1.01])
def test_observed_prefix_rejects_bad_ratio(ratio):
    with pytest.raises(ValueError):
        observed_prefix(Interval(0, 10), ratio)


def test_observed_prefix_is_monotone():
    rng = np.random.default_rng(0)
    for _ in range(500):
        t1 = int(rng.integers(0, 100))
        iv = Interval(t1, t1 + int(rng.integers(0, 200)))
        a, b = sorted(rng.uniform(0.01, 1.0, size=2))
        assert observed_prefix(iv, b).contains(observed_prefix(iv, a))


def test_interval_overlap():
    assert interval_overlap(Interval(3, 9), Interval(3, 9)) == 1.0
    assert interval_overlap(Interval(0, 4), Interval(5, 9)) == 0.0
    assert interval_overlap(Interval(0, 9), Interval(5, 14)) == pytest.approx(5 / 15)


def test_interval_overlap_symmetric_and_one_only_when_equal():
    rng = np.random.default_rng(1)
    for _ in range(500):
        a1, b1 = (int(v) for v in rng.integers(0, 30, size=2))
        a = Interval(a1, a1 + int(rng.integers(0, 10)))
        b = Interval(b1, b1 + int(rng.integers(0, 10)))
        assert interval_overlap(a, b) == interval_overlap(b, a)
        assert (interval_overlap(a, b) == 1.0) == (a == b)


def test_validate_well_formed_dataset():
    assert validate_dataset(two_stream_dataset()) == []


def test_validate_out_of_range_label():
    ds = two_stream_dataset()
    ds.labels["a"].append(ActivityInstance("hug", Interval(30, 50), ActivityKind.MAIN))
    violations = validate_dataset(ds)
    assert [v.rule for v in violations] == ["out-of-range"]
    assert violations[0].stream == "a" and violations[0].label_index == 1


def test_validate_dangling_reference():
    ds = two_stream_dataset()
    ds.labels["ghost"] = [ActivityInstance("hug", Interval(0, 5), ActivityKind.MAIN)]
    violations = validate_dataset(ds)
    assert [v.rule for v in violations] == ["dangling-reference"]


def test_validate_class_rules():
    ds = two_stream_dataset()
    ds.labels["a"].append(ActivityInstance("waving", Interval(0, 3), ActivityKind.MAIN))
    ds.labels["a"].append(ActivityInstance("jump", Interval(0, 3), ActivityKind.MAIN))
    rules = sorted(v.rule for v in validate_dataset(ds))
    assert rules == ["kind-mismatch", "unknown-class"]


def test_validate_streams_and_sets():
    ds = two_stream_dataset()
    ds.streams.append(FeatureStream("c", np.zeros((10, 3))))
    ds.sets["s2"].append("a")
    rules = sorted(v.rule for v in validate_dataset(ds))
    assert rules == ["feature-dimension", "set-partition", "set-partition"]


def test_intention_falls_back_to_stream():
    ds = two_stream_dataset()
    hug_b = ds.instances("b", kind=ActivityKind.MAIN)[0]
    assert ds.intention_of("b", hug_b) == "friendly"
    assert ds.intention_of("a", ds.instances("a")[0]) == "friendly"


def test_subset_keeps_only_listed_streams():
    sub = two_stream_dataset().subset(["b"])
    assert [s.id for s in sub.streams] == ["b"]
    assert list(sub.labels) == ["b"]
    assert sub.sets == {"s2": ["b"]}


def test_dataset_save_load(tmp_path):
    ds = two_stream_dataset()
    rng = np.random.default_rng(2)
    ds.streams[0].frames = np.round(rng.normal(size=(50, 2)), 6)
    save_dataset(ds, tmp_path, provenance={"seed": 3})
    loaded = load_dataset(tmp_path)

    assert [s.id for s in loaded.streams] == ["a", "b"]
    np.testing.assert_array_equal(loaded.streams[0].frames, ds.streams[0].frames)
    assert loaded.streams[1].intention == "friendly"
    assert loaded.labels == ds.labels
    assert loaded.sets == ds.sets
    assert validate_dataset(loaded) == []


def test_csv_stream(tmp_path):
    stream = FeatureStream("c", np.round(np.random.default_rng(3).normal(size=(20, 4)), 3), fps=25.0)
    save_stream(stream, tmp_path / "c.csv")
    loaded = load_stream(tmp_path / "c.csv")
    assert loaded.id == "c" and loaded.fps == 25.0
    np.testing.assert_array_equal(loaded.frames, stream.frames)


def test_csv_stream_without_header_keeps_first_frame(tmp_path):
    path = tmp_path / "bare.csv"
    path.write_text("0.5,1.5\n2.5,3.5\n4.5,5.5\n", encoding="utf-8")
    loaded = load_stream(path)
    assert loaded.id == "bare"
    np.testing.assert_array_equal(loaded.frames, [[0.5, 1.5], [2.5, 3.5], [4.5, 5.5]])


def test_csv_stream_non_numeric_body(tmp_path):
    path = tmp_path / "words.csv"
    path.write_text("f0,f1\n1.0,oops\n", encoding="utf-8")
    with pytest.raises(DatasetLoadError):
        load_stream(path)


def test_load_stream_malformed(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"t": 0, "x": [1.0]}\nnot json\n', encoding="utf-8")
    with pytest.raises(DatasetLoadError):
        load_stream(path)


def test_load_stream_out_of_sequence(tmp_path):
    path = tmp_path / "gap.jsonl"
    lines = [json.dumps({"t": 0, "x": [1.0]}), json.dumps({"t": 2, "x": [1.0]})]
    path.write_text("\n".join(lines), encoding="utf-8")
    with pytest.raises(DatasetLoadError, match="out of sequence"):
        load_stream(path)


def test_load_dataset_without_manifest(tmp_path):
    with pytest.raises(DatasetLoadError):
        load_dataset(tmp_path)
