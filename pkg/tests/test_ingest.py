"""Parsing, validation, labelling, and round-trip behaviour of ingest."""

import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from safeset.errors import MalformedRow, MissingColumn, NonMonotoneTime
from safeset.ingest import (
    CANONICAL_FIELDS,
    Dataset,
    RawSample,
    label_collisions,
    parse_trajectory_csv,
    read_collision_csv,
    write_collision_csv,
    write_trajectory_csv,
)


def make_row(**kw):
    base = {
        "recording_id": "rec0",
        "trajectory_id": "t0",
        "frame": 0,
        "time": 0.0,
        "agent_id": "ego",
        "agent_type": "car",
        "x": 0.0,
        "y": 0.0,
        "vx": 10.0,
        "vy": 0.0,
        "length": 4.0,
        "width": 2.0,
        "lane_id": 1,
        "sv_flag": 1,
    }
    base.update(kw)
    return base


def write_csv(path, rows, fields=CANONICAL_FIELDS):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fields))
        writer.writeheader()
        for r in rows:
            writer.writerow({k: r[k] for k in fields})


def two_car_rows(n_frames=6, dt=0.1, lead_x0=20.0, lead_vx=8.0):
    rows = []
    for k in range(n_frames):
        t = k * dt
        rows.append(make_row(frame=k, time=t, x=10.0 * t, sv_flag=1))
        rows.append(
            make_row(
                frame=k,
                time=t,
                agent_id="lead",
                x=lead_x0 + lead_vx * t,
                vx=lead_vx,
                sv_flag=0,
            )
        )
    return rows


def sample(**kw):
    base = dict(
        recording_id="rec0",
        trajectory_id="t0",
        frame=0,
        time=0.0,
        agent_id="ego",
        agent_type="car",
        x=0.0,
        y=0.0,
        vx=10.0,
        vy=0.0,
        length=4.0,
        width=2.0,
        lane_id=1,
        sv_flag=True,
    )
    base.update(kw)
    return RawSample(**base)


class TestParsing:
    def test_basic_parse(self, tmp_path):
        path = tmp_path / "a.csv"
        write_csv(path, two_car_rows())
        d = parse_trajectory_csv(path)
        assert len(d.samples) == 12
        assert d.trajectory_ids == ("t0",)
        assert d.dt == pytest.approx(0.1)
        assert d.sv_track("t0").frames.tolist() == [0, 1, 2, 3, 4, 5]

    def test_missing_required_column(self, tmp_path):
        path = tmp_path / "a.csv"
        fields = [f for f in CANONICAL_FIELDS if f != "vx"]
        write_csv(path, two_car_rows(), fields=fields)
        with pytest.raises(MissingColumn):
            parse_trajectory_csv(path)

    def test_optional_columns_default(self, tmp_path):
        path = tmp_path / "a.csv"
        fields = [f for f in CANONICAL_FIELDS if f not in ("recording_id", "lane_id")]
        write_csv(path, two_car_rows(), fields=fields)
        d = parse_trajectory_csv(path)
        assert d.samples[0].recording_id == ""
        assert d.samples[0].lane_id is None

    def test_remapped_headers(self, tmp_path):
        path = tmp_path / "a.csv"
        rows = two_car_rows()
        with open(path, "w", newline="") as fh:
            fields = ["runId" if f == "trajectory_id" else f for f in CANONICAL_FIELDS]
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for r in rows:
                out = dict(r)
                out["runId"] = out.pop("trajectory_id")
                writer.writerow(out)
        d = parse_trajectory_csv(path, schema_options={"trajectory_id": "runId"})
        assert d.trajectory_ids == ("t0",)

    def test_unknown_remap_key_rejected(self, tmp_path):
        path = tmp_path / "a.csv"
        write_csv(path, two_car_rows())
        with pytest.raises(MissingColumn):
            parse_trajectory_csv(path, schema_options={"bogus": "x"})

    @pytest.mark.parametrize(
        "patch",
        [
            {"x": "abc"},
            {"x": "inf"},
            {"vx": "nan"},
            {"agent_type": "bicycle"},
            {"sv_flag": "maybe"},
            {"frame": "1.5"},
        ],
    )
    def test_malformed_rows(self, tmp_path, patch):
        path = tmp_path / "a.csv"
        rows = two_car_rows()
        bad = dict(make_row(frame=1, time=0.1))
        bad.update(patch)
        rows[2] = bad
        write_csv(path, rows)
        with pytest.raises(MalformedRow) as exc:
            parse_trajectory_csv(path)
        assert exc.value.line is not None

    def test_non_monotone_time(self, tmp_path):
        path = tmp_path / "a.csv"
        rows = two_car_rows()
        rows[4] = make_row(frame=2, time=0.05, x=1.0)
        write_csv(path, rows)
        with pytest.raises(NonMonotoneTime):
            parse_trajectory_csv(path)

    def test_two_subject_vehicles_rejected(self, tmp_path):
        path = tmp_path / "a.csv"
        rows = two_car_rows()
        for r in rows:
            r["sv_flag"] = 1
        write_csv(path, rows)
        with pytest.raises(MalformedRow):
            parse_trajectory_csv(path)

    def test_no_subject_vehicle_rejected(self, tmp_path):
        path = tmp_path / "a.csv"
        rows = two_car_rows()
        for r in rows:
            r["sv_flag"] = 0
        write_csv(path, rows)
        with pytest.raises(MalformedRow):
            parse_trajectory_csv(path)

    def test_dt_is_median_gap(self, tmp_path):
        rows = []
        times = [0.0, 0.1, 0.2, 0.3, 0.5]
        for k, t in enumerate(times):
            rows.append(make_row(frame=k, time=t, x=t))
            rows.append(
                make_row(frame=k, time=t, agent_id="lead", x=20 + t, sv_flag=0)
            )
        path = tmp_path / "a.csv"
        write_csv(path, rows)
        d = parse_trajectory_csv(path)
        assert d.dt == pytest.approx(0.1)


class TestTrackRejection:
    def test_irregular_companion_track_dropped(self, tmp_path):
        rows = []
        for k in range(8):
            rows.append(make_row(frame=k, time=0.1 * k, x=k))
        jittery = [0.0, 0.1, 0.25, 0.3, 0.45, 0.5, 0.65, 0.7]
        for k, t in enumerate(jittery):
            rows.append(
                make_row(frame=k, time=t, agent_id="other", x=30 + k, sv_flag=0)
            )
        path = tmp_path / "a.csv"
        write_csv(path, rows)
        d = parse_trajectory_csv(path)
        assert ("t0", "other") in d.rejected_tracks
        assert {s.agent_id for s in d.samples} == {"ego"}

    def test_irregular_subject_vehicle_drops_trajectory(self, tmp_path):
        rows = []
        jittery = [0.0, 0.1, 0.25, 0.3, 0.45, 0.5, 0.65, 0.7]
        for k, t in enumerate(jittery):
            rows.append(make_row(frame=k, time=t, x=k))
        for k in range(8):
            rows.append(
                make_row(frame=k, time=0.1 * k, agent_id="lead", x=30 + k, sv_flag=0)
            )
        # second, clean trajectory keeps the dataset non-empty
        for k in range(4):
            rows.append(
                make_row(trajectory_id="t1", frame=k, time=0.1 * k, x=k, sv_flag=1)
            )
        path = tmp_path / "a.csv"
        write_csv(path, rows)
        d = parse_trajectory_csv(path)
        assert d.trajectory_ids == ("t1",)
        assert ("t0", "ego") in d.rejected_tracks


class TestLabels:
    def make_overlapping(self, tmp_path, label_frames=(3,)):
        # lead parked 8 m ahead; ego closes in and geometrically overlaps
        # (center distance < 4 m) from frame 6 onward.
        rows = []
        for k in range(10):
            t = 0.1 * k
            rows.append(make_row(frame=k, time=t, x=0.7 * k, vx=7.0))
            rows.append(
                make_row(
                    frame=k, time=t, agent_id="lead", x=8.0, vx=0.0, sv_flag=0
                )
            )
        path = tmp_path / "a.csv"
        write_csv(path, rows)
        labels = tmp_path / "labels.csv"
        with open(labels, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trajectory_id", "frame"])
            for f in label_frames:
                writer.writerow(["t0", f])
        return path, labels

    def test_labels_only_keeps_sidecar(self, tmp_path):
        path, labels = self.make_overlapping(tmp_path)
        d = parse_trajectory_csv(path, labels_path=labels)
        d = label_collisions(d, "labels_only")
        assert d.events_for("t0") == (3,)

    def test_geometric_overlap_replaces(self, tmp_path):
        path, labels = self.make_overlapping(tmp_path)
        d = parse_trajectory_csv(path, labels_path=labels)
        d = label_collisions(d, "geometric_overlap")
        events = d.events_for("t0")
        assert 3 not in events
        assert events == (6, 7, 8, 9)

    def test_either_takes_union(self, tmp_path):
        path, labels = self.make_overlapping(tmp_path)
        d = parse_trajectory_csv(path, labels_path=labels)
        d = label_collisions(d, "either")
        events = d.events_for("t0")
        assert 3 in events and 7 in events

    @pytest.mark.parametrize("rule", ["labels_only", "geometric_overlap", "either"])
    def test_rules_idempotent(self, tmp_path, rule):
        path, labels = self.make_overlapping(tmp_path)
        d = parse_trajectory_csv(path, labels_path=labels)
        once = label_collisions(d, rule)
        twice = label_collisions(once, rule)
        assert once == twice

    def test_unknown_rule(self, tmp_path):
        path, labels = self.make_overlapping(tmp_path)
        d = parse_trajectory_csv(path, labels_path=labels)
        with pytest.raises(ValueError):
            label_collisions(d, "sometimes")

    def test_read_collision_csv(self, tmp_path):
        path = tmp_path / "labels.csv"
        write_collision_csv([("t0", 3), ("t1", 9)], path)
        assert read_collision_csv(path) == [("t0", 3), ("t1", 9)]


class TestRoundTrip:
    def test_write_parse_identity(self, tmp_path):
        path, labels = TestLabels().make_overlapping(tmp_path, label_frames=(3, 5))
        d = parse_trajectory_csv(path, labels_path=labels)
        d = label_collisions(d, "either")
        out = tmp_path / "out.csv"
        out_labels = tmp_path / "out_labels.csv"
        write_trajectory_csv(d, out)
        write_collision_csv(d.collision_events, out_labels)
        d2 = parse_trajectory_csv(out, labels_path=out_labels)
        d2 = label_collisions(d2, "labels_only")
        assert d2 == d

    def test_awkward_floats_round_trip(self, tmp_path):
        rows = two_car_rows()
        rows[0]["x"] = repr(0.1 + 0.2)
        rows[0]["vx"] = repr(1.0 / 3.0)
        path = tmp_path / "a.csv"
        write_csv(path, rows)
        d = parse_trajectory_csv(path)
        out = tmp_path / "b.csv"
        write_trajectory_csv(d, out)
        assert parse_trajectory_csv(out) == d


def straight_line_dataset(gap, length, n=5, dt=0.1):
    samples = []
    for k in range(n):
        t = k * dt
        samples.append(sample(frame=k, time=t, x=1.0 * k, length=length))
        samples.append(
            sample(
                frame=k,
                time=t,
                agent_id="b",
                x=1.0 * k + gap,
                length=length,
                sv_flag=False,
            )
        )
    return Dataset(samples, dt=dt)


class TestGeometricDetection:
    def test_every_overlapping_frame_reported(self):
        d = straight_line_dataset(gap=3.0, length=4.0)
        d = label_collisions(d, "geometric_overlap")
        assert d.events_for("t0") == (0, 1, 2, 3, 4)

    def test_touching_boxes_do_not_overlap(self):
        d = straight_line_dataset(gap=4.0, length=4.0)
        d = label_collisions(d, "geometric_overlap")
        assert d.events_for("t0") == ()

    @settings(max_examples=40, deadline=None)
    @given(
        gap=st.floats(1.0, 12.0),
        length=st.floats(2.0, 6.0),
        inflation=st.floats(0.0, 4.0),
    )
    def test_inflation_monotone(self, gap, length, inflation):
        small = label_collisions(
            straight_line_dataset(gap, length), "geometric_overlap"
        )
        big = label_collisions(
            straight_line_dataset(gap, length + inflation), "geometric_overlap"
        )
        assert set(small.collision_events) <= set(big.collision_events)


class TestDatasetValidation:
    def test_requires_constant_sv_flag(self):
        samples = [
            sample(frame=0, time=0.0),
            sample(frame=1, time=0.1, sv_flag=False),
        ]
        with pytest.raises(MalformedRow):
            Dataset(samples, dt=0.1)

    def test_non_monotone_frames(self):
        samples = [
            sample(frame=1, time=0.1),
            sample(frame=0, time=0.0),
            sample(frame=0, time=0.0, agent_id="b", sv_flag=False),
            sample(frame=1, time=0.1, agent_id="b", sv_flag=False),
        ]
        with pytest.raises(NonMonotoneTime):
            Dataset(samples, dt=0.1)

    def test_events_deduped_and_sorted(self):
        samples = [sample(frame=0, time=0.0), sample(frame=1, time=0.1, x=1.0)]
        d = Dataset(
            samples, dt=0.1, collision_events=[("t0", 1), ("t0", 0), ("t0", 1)]
        )
        assert d.collision_events == (("t0", 0), ("t0", 1))

    def test_sv_distance(self):
        samples = [
            sample(frame=k, time=0.1 * k, x=2.0 * k, y=0.0) for k in range(4)
        ]
        d = Dataset(samples, dt=0.1)
        assert d.sv_distance_m() == pytest.approx(6.0)

    def test_dt_inference_from_samples(self):
        samples = [sample(frame=k, time=0.25 * k, x=1.0 * k) for k in range(3)]
        d = Dataset(samples)
        assert d.dt == pytest.approx(0.25)

    def test_single_sample_needs_explicit_dt(self):
        with pytest.raises(MalformedRow):
            Dataset([sample()])
