import json
import wave

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mmspeech.data import (AudioClip, Instance, LandmarkTrack, RepetitionSpan,
                           SubjectRecord, dump_manifest, load_annotations,
                           load_audio, load_landmarks, load_manifest,
                           reconcile_instances, slice_spans, write_audio)
from mmspeech.errors import (EmptyDatasetError, UnsupportedFormatError,
                             ValidationError)


def write_manifest(path, subjects):
    path.write_text(json.dumps({"subjects": subjects}))
    return path


MINIMAL_SUBJECT = {
    "id": "S1", "group": "HC",
    "scores": [[1, 1, 1, 1, 1], [1, 1, 1, 1, 1]],
    "recordings": [{"audio_wav": "a.wav", "landmarks_csv": None,
                    "annotations_csv": None, "transcripts_txt": None}],
}


class TestManifest:
    def test_minimal_manifest_all_minimum_scores(self, tmp_path):
        man = load_manifest(write_manifest(tmp_path / "m.json", [MINIMAL_SUBJECT]))
        assert len(man.subjects) == 1
        subject = man.subjects[0]
        assert subject.target == 5.0
        assert subject.recordings[0].audio_wav.name == "a.wav"

    def test_missing_scores_block(self, tmp_path):
        entry = {k: v for k, v in MINIMAL_SUBJECT.items() if k != "scores"}
        with pytest.raises(ValidationError, match="scores"):
            load_manifest(write_manifest(tmp_path / "m.json", [entry]))

    def test_score_out_of_range_names_field(self, tmp_path):
        entry = dict(MINIMAL_SUBJECT, scores=[[1, 1, 1, 1, 6], [1, 1, 1, 1, 1]])
        with pytest.raises(ValidationError, match=r"scores\[0\]\[4\]"):
            load_manifest(write_manifest(tmp_path / "m.json", [entry]))

    def test_malformed_json_reports_line(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text('{"subjects": [\n  {"id":}\n]}')
        with pytest.raises(ValidationError, match="line 2"):
            load_manifest(p)

    def test_round_trip(self, tmp_path):
        entry = dict(MINIMAL_SUBJECT, scores=[[2, 3, 4, 5, 1], [1, 2, 3, 4, 5]])
        p = write_manifest(tmp_path / "m.json", [entry, dict(MINIMAL_SUBJECT, id="S2")])
        man = load_manifest(p)
        text = dump_manifest(man)
        p2 = tmp_path / "m2.json"
        p2.write_text(text)
        man2 = load_manifest(p2)
        assert dump_manifest(man2) == text
        assert [s.subject_id for s in man2.subjects] == ["S1", "S2"]
        assert man2.subjects[0].rater_scores == man.subjects[0].rater_scores

    @given(st.lists(st.integers(1, 5), min_size=5, max_size=5),
           st.lists(st.integers(1, 5), min_size=5, max_size=5))
    def test_target_formula(self, r1, r2):
        rec = SubjectRecord(subject_id="x", group="ALS",
                            rater_scores=(tuple(r1), tuple(r2)))
        assert 5.0 <= rec.target <= 25.0
        assert float(rec.target * 2).is_integer()


class TestAudioIO:
    def test_silence_round_trip(self, tmp_path):
        p = tmp_path / "s.wav"
        write_audio(p, AudioClip(samples=np.zeros(16000), sample_rate=16000))
        clip = load_audio(p)
        assert clip.sample_rate == 16000
        assert len(clip.samples) == 16000
        assert np.all(clip.samples == 0.0)

    def test_full_scale_square_wave_scaling(self, tmp_path):
        p = tmp_path / "sq.wav"
        raw = np.tile(np.array([32767, -32767], dtype="<i2"), 100)
        with wave.open(str(p), "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(8000)
            w.writeframes(raw.tobytes())
        clip = load_audio(p)
        assert np.allclose(np.abs(clip.samples), 32767 / 32768)

    def test_stereo_rejected(self, tmp_path):
        p = tmp_path / "st.wav"
        with wave.open(str(p), "wb") as w:
            w.setnchannels(2)
            w.setsampwidth(2)
            w.setframerate(8000)
            w.writeframes(b"\x00\x00" * 64)
        with pytest.raises(UnsupportedFormatError, match="mono"):
            load_audio(p)

    def test_truncated_data_is_io_error(self, tmp_path):
        p = tmp_path / "t.wav"
        with wave.open(str(p), "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(8000)
            w.writeframes(b"\x00\x00" * 1000)
        data = p.read_bytes()
        p.write_bytes(data[:-500])
        with pytest.raises(OSError):
            load_audio(p)


def landmark_csv(path, n_frames=2, with_z=True, drop_one=False):
    rows = ["frame,idx,x,y" + (",z" if with_z else "")]
    for f in range(n_frames):
        for i in range(68):
            if drop_one and f == 1 and i == 67:
                continue
            cell = f"{f},{i},{i + 0.5},{f + 1.5}"
            rows.append(cell + (",0.25" if with_z else ""))
    path.write_text("\n".join(rows) + "\n")
    return path


class TestLandmarks:
    def test_two_frames(self, tmp_path):
        track = load_landmarks(landmark_csv(tmp_path / "l.csv"), 30.0)
        assert len(track) == 2
        assert track.frames.shape == (2, 68, 3)
        assert track.frames[1, 10, 1] == 2.5

    def test_missing_point_names_frame(self, tmp_path):
        p = landmark_csv(tmp_path / "l.csv", drop_one=True)
        with pytest.raises(ValidationError, match="frame 1"):
            load_landmarks(p, 30.0)

    def test_missing_z_defaults_to_zero(self, tmp_path):
        track = load_landmarks(landmark_csv(tmp_path / "l.csv", with_z=False), 30.0)
        assert np.all(track.frames[:, :, 2] == 0.0)


class TestSpans:
    def test_annotations_parse(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("rep,onset_s,offset_s\n1,0.5,1.0\n2,1.25,2.0\n")
        spans = load_annotations(p)
        assert [s.index for s in spans] == [1, 2]
        assert spans[0].duration_s == 0.5

    def test_slice_index_arithmetic(self):
        clip = AudioClip(samples=np.arange(16000) / 16000.0, sample_rate=16000)
        segs = slice_spans(clip, [RepetitionSpan(index=1, onset_s=0.5, offset_s=1.0)])
        assert len(segs[0].samples) == 8000
        assert segs[0].samples[0] == 8000 / 16000.0
        assert segs[0].samples[-1] == 15999 / 16000.0

    def test_empty_span_list(self):
        clip = AudioClip(samples=np.zeros(100), sample_rate=100)
        assert slice_spans(clip, []) == []

    def test_overlap_rejected(self):
        clip = AudioClip(samples=np.zeros(32000), sample_rate=16000)
        spans = [RepetitionSpan(index=1, onset_s=0.0, offset_s=1.0),
                 RepetitionSpan(index=2, onset_s=0.5, offset_s=1.5)]
        with pytest.raises(ValidationError, match="overlap"):
            slice_spans(clip, spans)

    def test_span_beyond_duration(self):
        clip = AudioClip(samples=np.zeros(8000), sample_rate=16000)
        with pytest.raises(ValidationError, match="exceeds"):
            slice_spans(clip, [RepetitionSpan(index=1, onset_s=0.0, offset_s=1.0)])

    def test_contiguous_spans_partition_signal(self):
        rng = np.random.default_rng(0)
        clip = AudioClip(samples=rng.uniform(-1, 1, 12345), sample_rate=1000)
        cuts = [0.0, 1.234, 4.5, 7.89, 12.345]
        spans = [RepetitionSpan(index=i + 1, onset_s=a, offset_s=b)
                 for i, (a, b) in enumerate(zip(cuts, cuts[1:]))]
        segs = slice_spans(clip, spans)
        glued = np.concatenate([s.samples for s in segs])
        assert np.array_equal(glued, clip.samples)

    def test_landmark_slicing_uses_frame_rate(self):
        track = LandmarkTrack(frames=np.zeros((60, 68, 3)), frame_rate=30.0)
        segs = slice_spans(track, [RepetitionSpan(index=1, onset_s=0.5, offset_s=1.0)])
        assert len(segs[0]) == 15


class TestReconcile:
    def make_tables(self, audio_keys, video_keys):
        audio = {k: np.zeros(18) for k in audio_keys}
        video = {k: np.zeros(15) for k in video_keys}
        return audio, video

    def test_ten_reps_yield_nine_multimodal(self):
        audio, video = self.make_tables(
            [("s", r) for r in range(2, 11)],       # rep 1 never has audio features
            [("s", r) for r in range(1, 11)])
        inst = reconcile_instances(audio, video, {"s": 7.0}, "multimodal")
        assert len(inst) == 9
        assert min(i.rep for i in inst) == 2

    def test_audio_only_subject_absent_from_multimodal(self):
        audio, video = self.make_tables([("a", 2), ("b", 2)], [("b", 2)])
        targets = {"a": 5.0, "b": 6.0}
        audio_insts = reconcile_instances(audio, video, targets, "audio")
        assert {i.subject_id for i in audio_insts} == {"a", "b"}
        multi = reconcile_instances(audio, video, targets, "multimodal")
        assert {i.subject_id for i in multi} == {"b"}

    def test_intersection_by_rep(self):
        audio, video = self.make_tables(
            [("s", r) for r in range(2, 11)],
            [("s", r) for r in range(2, 9)])
        multi = reconcile_instances(audio, video, {"s": 9.0}, "multimodal")
        assert sorted(i.rep for i in multi) == list(range(2, 9))

    def test_multimodal_subset_of_both(self):
        audio, video = self.make_tables(
            [("a", 2), ("a", 3), ("b", 2)], [("a", 3), ("b", 2), ("c", 1)])
        targets = dict.fromkeys("abc", 10.0)
        multi = {(i.subject_id, i.rep)
                 for i in reconcile_instances(audio, video, targets, "multimodal")}
        audio_keys = {(i.subject_id, i.rep)
                      for i in reconcile_instances(audio, video, targets, "audio")}
        video_keys = {(i.subject_id, i.rep)
                      for i in reconcile_instances(audio, video, targets, "video")}
        assert multi <= audio_keys & video_keys

    def test_empty_result_raises(self):
        audio, video = self.make_tables([("a", 2)], [("b", 2)])
        with pytest.raises(EmptyDatasetError):
            reconcile_instances(audio, video, {"a": 5.0, "b": 5.0}, "multimodal")

    def test_instance_needs_a_modality(self):
        with pytest.raises(ValidationError):
            Instance(subject_id="s", rep=2, target=5.0)
