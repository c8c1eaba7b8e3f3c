"""Smoke test for the formcheck extension module.

Build and install first:  pip install ./crates/python
"""

import json
import math

import formcheck


def main():
    planks = formcheck.generate("plank", 20, seed=1)
    squats = formcheck.generate("squat", 20, seed=2)
    triples = [(f, label, f"{label}-{i}") for i, (f, label, _) in enumerate(planks + squats)]
    db, skipped = formcheck.PoseDatabase.build(triples, ea_ratio=2.0)
    assert len(db) == 40 and not skipped
    assert dict(db.label_counts()) == {"plank": 20, "squat": 20}

    again = formcheck.PoseDatabase.from_json(db.to_json())
    assert len(again) == 40 and again.ea_ratio == 2.0

    frame, label, truth = formcheck.generate("squat", 1, noise=0.0, seed=99)[0]
    m = db.classify(frame)
    assert m["label"] == "squat", m
    assert math.isclose(m["distance"], (2 * m["d_euclid"] + m["d_angle"]) / 3, abs_tol=1e-12)
    assert db.classify(frame, ea_ratio=0.5)["label"] in ("plank", "squat")

    d = formcheck.diagnose(frame, label)
    assert sorted(d["errors"]) == sorted(truth), (d, truth)

    a = db.analyze(frame)
    assert a["match"]["label"] == "squat" and a["diagnosis"]["label"] == "squat"

    kps = list(frame.keypoints)
    kps[9] = (0.0, 0.0, 0.0)
    holed = formcheck.PoseFrame(kps, frame.width, frame.height, t=5)
    assert holed.missing_parts() == ["left_wrist"], holed.missing_parts()
    filled, report = formcheck.fill_missing(holed)
    assert filled.missing_parts() == [] and [p for p, _ in report] == ["left_wrist"]
    assert report[0][1] in ("mirror_copy", "line_extension", "neighbor_average"), report

    kps[11] = kps[12] = (0.0, 0.0, 0.0)
    try:
        formcheck.fill_missing(formcheck.PoseFrame(kps, frame.width, frame.height))
    except formcheck.FormcheckError as e:
        assert "missing" in str(e)
    else:
        raise AssertionError("unfillable frame accepted")

    refined = formcheck.refine_frame(frame)
    assert len(refined.keypoints) == 17

    roundtrip = formcheck.PoseFrame.from_json(frame.to_json())
    assert json.loads(roundtrip.to_json()) == json.loads(frame.to_json())
    print("formcheck smoke test: ok")


if __name__ == "__main__":
    main()
