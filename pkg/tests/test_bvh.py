import io

import numpy as np
import pytest

from gomkit.bvh import (DescriptorId, MotionClip, extract_descriptor, load_bvh, parse_bvh,
                        save_bvh, write_bvh)
from gomkit.errors import (BindingError, BvhSyntaxError, EmptyMotionError, StructureError,
                           UnknownDescriptorError)
from gomkit.synth import body_skeleton, gesture_clip, random_gesture_params
from oracles import random_bvh


def test_minimal_document(minimal_bvh):
    skel, clip = parse_bvh(minimal_bvh)
    named = [j for j in skel.joints if not j.is_end_site]
    assert len(named) == 1 and named[0].name == "Hips"
    assert clip.frames.shape == (2, 3)
    np.testing.assert_array_equal(clip.frames, [[1.5, -2.25, 3.0], [4.0, 5.5, -6.125]])
    assert clip.frame_time == pytest.approx(0.011111)


def test_accepts_bytes_and_streams(minimal_bvh):
    a = parse_bvh(minimal_bvh.encode())[1].frames
    b = parse_bvh(io.BytesIO(minimal_bvh.encode()))[1].frames
    np.testing.assert_array_equal(a, b)


def test_tabs_and_spaces_are_equivalent(minimal_bvh):
    tabbed = minimal_bvh.replace("  ", "\t")
    np.testing.assert_array_equal(parse_bvh(tabbed)[1].frames, parse_bvh(minimal_bvh)[1].frames)


def test_short_row_names_frame(minimal_bvh):
    broken = minimal_bvh.replace("4.0 5.5 -6.125", "4.0 5.5")
    with pytest.raises(StructureError, match="frame 1"):
        parse_bvh(broken)


def test_zero_frames(minimal_bvh):
    text = minimal_bvh.replace("Frames: 2", "Frames: 0").split("1.5 -2.25")[0]
    with pytest.raises(EmptyMotionError):
        parse_bvh(text)


def test_syntax_error_carries_line(minimal_bvh):
    with pytest.raises(BvhSyntaxError) as info:
        parse_bvh(minimal_bvh.replace("OFFSET 0 0 0", "OFFSET 0 zero 0"))
    assert info.value.line == 4


def test_unknown_channel(minimal_bvh):
    with pytest.raises(BvhSyntaxError):
        parse_bvh(minimal_bvh.replace("Xrotation", "Wrotation"))


def test_multiple_roots(minimal_bvh):
    head, motion = minimal_bvh.split("MOTION")
    with pytest.raises(StructureError):
        parse_bvh(head + head.replace("HIERARCHY\n", "") + "MOTION" + motion)


def test_missing_motion():
    with pytest.raises(BvhSyntaxError):
        parse_bvh("HIERARCHY\nROOT A\n{\nOFFSET 0 0 0\n}\n")


def test_roundtrip_minimal(minimal_bvh):
    skel, clip = parse_bvh(minimal_bvh)
    skel2, clip2 = parse_bvh(write_bvh(skel, clip))
    assert skel2 == skel
    np.testing.assert_allclose(clip2.frames, clip.frames, atol=1e-6)


def test_roundtrip_long_clip(rng):
    skel = body_skeleton()
    clip = gesture_clip(skel, random_gesture_params(rng), 1000, rng)
    _, back = parse_bvh(write_bvh(skel, clip))
    assert back.n_frames == 1000
    np.testing.assert_allclose(back.frames, clip.frames, atol=1e-6)


def test_roundtrip_random_documents(rng):
    for _ in range(10):
        text, joints, frames = random_bvh(rng, max_joints=12, max_frames=40)
        skel, clip = parse_bvh(text)
        assert [(j.name, j.parent, j.channels) for j in skel.joints] == \
            [(n, p, c) for n, p, _, c in joints]
        np.testing.assert_array_equal(clip.frames, frames)
        skel2, clip2 = parse_bvh(write_bvh(skel, clip))
        assert skel2 == skel
        np.testing.assert_allclose(clip2.frames, clip.frames, atol=1e-6)


def test_binding_error(minimal_bvh):
    skel, clip = parse_bvh(minimal_bvh)
    other = body_skeleton()
    with pytest.raises(BindingError):
        write_bvh(other, clip)


def test_clip_rejects_wrong_width(minimal_bvh):
    skel, _ = parse_bvh(minimal_bvh)
    with pytest.raises(BindingError):
        MotionClip(skel, 0.01, np.zeros((3, 4)))


def test_save_and_load(tmp_path, minimal_bvh):
    skel, clip = parse_bvh(minimal_bvh)
    path = tmp_path / "sub" / "take_01.bvh"
    save_bvh(path, skel, clip)
    skel2, clip2 = load_bvh(path)
    assert clip2.name == "take_01"
    np.testing.assert_allclose(clip2.frames, clip.frames)


def test_frames_are_read_only(minimal_bvh):
    _, clip = parse_bvh(minimal_bvh)
    with pytest.raises(ValueError):
        clip.frames[0, 0] = 1.0


def test_extract_descriptor_columns(rng):
    skel = body_skeleton()
    clip = gesture_clip(skel, random_gesture_params(rng), 50, rng)
    hy = extract_descriptor(clip, DescriptorId("H", "Y"))
    np.testing.assert_array_equal(hy, clip.frames[:, skel.column("Hips", "Yrotation")])
    llx = extract_descriptor(clip, DescriptorId.parse("LL.X"))
    np.testing.assert_array_equal(llx, clip.frames[:, skel.column("LeftLeg", "Xrotation")])


def test_extract_unknown_sensor(rng):
    skel = body_skeleton()
    clip = gesture_clip(skel, random_gesture_params(rng), 5, rng)
    with pytest.raises(UnknownDescriptorError):
        extract_descriptor(clip, DescriptorId("ZZ", "X"))


def test_descriptor_id_text():
    d = DescriptorId("RSH1", "y")
    assert str(d) == "RSH1.Y"
    assert DescriptorId.parse("RSH1.Y") == d
    assert DescriptorId.parse("RAy") == DescriptorId("RA", "Y")
    with pytest.raises(UnknownDescriptorError):
        DescriptorId("RA", "W")


def test_axis_resolution_follows_declared_labels():
    text = """HIERARCHY
ROOT Hips
{
  OFFSET 0 0 0
  CHANNELS 3 Yrotation Zrotation Xrotation
}
MOTION
Frames: 1
Frame Time: 0.01
1 2 3
"""
    _, clip = parse_bvh(text)
    assert extract_descriptor(clip, DescriptorId("H", "X"))[0] == 3
    assert extract_descriptor(clip, DescriptorId("H", "Y"))[0] == 1
