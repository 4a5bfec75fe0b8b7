import random
import time

import pytest

from fusionkit.errors import DeadlineExceeded, EmptyQuestion, NoKeyframes, ProviderUnavailable
from fusionkit.ingest import Catalog, MapEntry, TimestampMap, VideoRecord
from fusionkit.qa import (
    QaCategory,
    QaRequest,
    aggregate_answers,
    answer,
    classify_question,
    sample_frames,
)


def catalog_with_frames(timestamps, video_id="v01"):
    catalog = Catalog()
    catalog.add_video(VideoRecord(video_id, f"/{video_id}.mp4", max(timestamps, default=0) + 1000, 25.0))
    entries = tuple(MapEntry(i, ts, f"{video_id}/f{i}.jpg") for i, ts in enumerate(timestamps))
    catalog.commit_map(TimestampMap(video_id, entries))
    return catalog


class TableQa:
    """Answers by image_uri lookup; counts calls."""

    def __init__(self, by_uri):
        self.by_uri = by_uri
        self.calls = 0

    def answer(self, image_ref, question):
        self.calls += 1
        return self.by_uri[image_ref]


class TestClassifyQuestion:
    def test_counting(self):
        assert classify_question("How many completed shoes in the image?") is QaCategory.COUNTING

    def test_image_info(self):
        assert classify_question("What is on the street?", video_target=False) is QaCategory.IMAGE_INFO

    def test_video_info(self):
        assert (
            classify_question("What color is the phone the woman is using?", video_target=True)
            is QaCategory.VIDEO_INFO
        )

    def test_counting_wins_over_target(self):
        assert classify_question("How many people appear?", video_target=True) is QaCategory.COUNTING

    def test_number_of_pattern(self):
        assert classify_question("What is the number of boats?") is QaCategory.COUNTING

    def test_case_insensitive(self):
        assert classify_question("HOW MANY dogs?") is QaCategory.COUNTING

    def test_empty_question(self):
        with pytest.raises(EmptyQuestion):
            classify_question("   ")

    def test_unicode_total(self):
        assert classify_question("Có bao nhiêu chiếc xe?", video_target=True) is QaCategory.VIDEO_INFO


class TestSampleFrames:
    def test_all_when_n_covers(self):
        catalog = catalog_with_frames(list(range(0, 10000, 1000)))
        assert len(sample_frames("v01", catalog, 10)) == 10

    def test_quantiles_of_ten(self):
        catalog = catalog_with_frames(list(range(0, 10000, 1000)))
        frames = sample_frames("v01", catalog, 3)
        # quantile rule: floor(q*(m-1)+0.5) for q in {0, .5, 1} over m=10
        assert [f.timestamp_ms for f in frames] == [0, 5000, 9000]

    def test_single_is_upper_median(self):
        catalog = catalog_with_frames(list(range(0, 10000, 1000)))
        frames = sample_frames("v01", catalog, 1)
        assert [f.timestamp_ms for f in frames] == [5000]

    def test_odd_count_median(self):
        catalog = catalog_with_frames([0, 100, 200, 300, 400])
        assert [f.timestamp_ms for f in sample_frames("v01", catalog, 1)] == [200]

    def test_no_keyframes(self):
        catalog = Catalog()
        catalog.add_video(VideoRecord("v01", "/v01.mp4", 1000, 25.0))
        with pytest.raises(NoKeyframes):
            sample_frames("v01", catalog, 3)

    def test_deterministic_and_distinct(self):
        catalog = catalog_with_frames(list(range(0, 7000, 250)))
        a = sample_frames("v01", catalog, 5)
        b = sample_frames("v01", catalog, 5)
        assert [f.keyframe_id for f in a] == [f.keyframe_id for f in b]
        assert len({f.keyframe_id for f in a}) == 5


class TestAggregateAnswers:
    def frames(self, n):
        return catalog_with_frames([i * 1000 for i in range(n)]).keyframes_for("v01")

    def test_unanimous(self):
        kfs = self.frames(3)
        text, low = aggregate_answers([(kf, "3") for kf in kfs])
        assert text == "3" and not low

    def test_majority(self):
        kfs = self.frames(3)
        text, low = aggregate_answers(list(zip(kfs, ["red", "red", "blue"])))
        assert text == "red" and not low

    def test_tie_takes_earlier_frame(self):
        kfs = self.frames(2)
        text, low = aggregate_answers(list(zip(kfs, ["red", "blue"])))
        assert text == "red" and low

    def test_case_folded_grouping(self):
        kfs = self.frames(3)
        text, low = aggregate_answers(list(zip(kfs, ["Red", "red", "blue"])))
        assert text == "Red" and not low

    def test_shuffle_invariance(self):
        rng = random.Random(55)
        kfs = self.frames(7)
        answers = list(zip(kfs, ["a", "b", "a", "c", "b", "a", "c"]))
        baseline = aggregate_answers(answers)
        for _ in range(50):
            shuffled = answers[:]
            rng.shuffle(shuffled)
            assert aggregate_answers(shuffled) == baseline


class TestAnswer:
    def test_keyframe_target_single_call(self):
        catalog = catalog_with_frames([0, 1000, 2000])
        kf = catalog.keyframes_for("v01")[1]
        provider = TableQa({kf.image_uri: "a bicycle"})
        result = answer(QaRequest("What is shown?", keyframe_id=kf.keyframe_id), provider, catalog)
        assert result.text == "a bicycle"
        assert result.category is QaCategory.IMAGE_INFO
        assert result.per_frame == [(kf.keyframe_id, "a bicycle")]
        assert provider.calls == 1

    def test_video_unanimous(self):
        catalog = catalog_with_frames([0, 1000, 2000])
        provider = TableQa({kf.image_uri: "3" for kf in catalog.keyframes_for("v01")})
        result = answer(QaRequest("How many boats?", video_id="v01", max_frames=3), provider, catalog)
        assert result.text == "3"
        assert result.category is QaCategory.COUNTING
        assert not result.low_agreement
        assert len(result.per_frame) == 3

    def test_video_majority(self):
        catalog = catalog_with_frames([0, 1000, 2000])
        kfs = catalog.keyframes_for("v01")
        provider = TableQa(dict(zip([kf.image_uri for kf in kfs], ["red", "red", "blue"])))
        result = answer(QaRequest("What color?", video_id="v01", max_frames=3), provider, catalog)
        assert result.text == "red"
        assert result.category is QaCategory.VIDEO_INFO

    def test_video_tie_earlier_frame_wins(self):
        catalog = catalog_with_frames([0, 1000])
        kfs = catalog.keyframes_for("v01")
        provider = TableQa(dict(zip([kf.image_uri for kf in kfs], ["red", "blue"])))
        result = answer(QaRequest("What color?", video_id="v01", max_frames=2), provider, catalog)
        assert result.text == "red"
        assert result.low_agreement

    def test_at_most_max_frames_calls(self):
        catalog = catalog_with_frames([i * 100 for i in range(20)])
        provider = TableQa({kf.image_uri: "x" for kf in catalog.keyframes_for("v01")})
        answer(QaRequest("What?", video_id="v01", max_frames=4), provider, catalog)
        assert provider.calls == 4

    def test_per_frame_in_frame_order(self):
        catalog = catalog_with_frames([0, 1000, 2000, 3000, 4000])
        provider = TableQa({kf.image_uri: kf.image_uri for kf in catalog.keyframes_for("v01")})
        result = answer(QaRequest("What?", video_id="v01", max_frames=5), provider, catalog)
        ids = [kf_id for kf_id, _ in result.per_frame]
        assert ids == [kf.keyframe_id for kf in catalog.keyframes_for("v01")]

    def test_unknown_video_target(self):
        catalog = catalog_with_frames([0])
        provider = TableQa({})
        with pytest.raises(NoKeyframes):
            answer(QaRequest("What?", video_id="ghost", max_frames=2), provider, catalog)

    def test_deadline_with_partial_results(self):
        catalog = catalog_with_frames([0, 1000])
        kfs = catalog.keyframes_for("v01")

        class SlowQa:
            def answer(self, image_ref, question):
                if image_ref == kfs[1].image_uri:
                    time.sleep(2.0)
                return "quick"

        with pytest.raises(DeadlineExceeded) as exc:
            answer(
                QaRequest("What?", video_id="v01", max_frames=2),
                SlowQa(),
                catalog,
                deadline_ms=300,
                concurrency=2,
            )
        assert exc.value.per_frame == [(kfs[0].keyframe_id, "quick")]

    def test_provider_error_propagates(self):
        catalog = catalog_with_frames([0, 1000])

        class DownQa:
            def answer(self, image_ref, question):
                raise ProviderUnavailable("down")

        with pytest.raises(ProviderUnavailable):
            answer(QaRequest("What?", video_id="v01", max_frames=2), DownQa(), catalog)

    def test_latency_recorded(self):
        catalog = catalog_with_frames([0])
        provider = TableQa({kf.image_uri: "x" for kf in catalog.keyframes_for("v01")})
        result = answer(QaRequest("What?", video_id="v01", max_frames=1), provider, catalog)
        assert result.latency_ms >= 0

    def test_request_target_validation(self):
        with pytest.raises(ValueError):
            QaRequest("What?", keyframe_id="kf", video_id="v01")
        with pytest.raises(ValueError):
            QaRequest("What?")
        with pytest.raises(EmptyQuestion):
            QaRequest("", video_id="v01")
