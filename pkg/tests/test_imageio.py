import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fdmi.exceptions import (
    MalformedHeaderError,
    ParseError,
    TruncatedPayloadError,
    UnsupportedMagicError,
    ValidationError,
)
from fdmi.flow import FlowField
from fdmi.imageio import (
    PixmapHeader,
    decode_flow,
    decode_image,
    encode_flow,
    encode_image,
    format_for_path,
    parse_header,
    quantize,
    read_flow,
    read_image,
    read_plan,
    write_flow,
    write_image,
    write_plan,
)
from fdmi.masks import MaskSpec
from fdmi.plan import PlanEntry, SidebandPlan, check_plan, plan_sidebands

float32_images = arrays(
    np.float32,
    st.tuples(st.integers(1, 9), st.integers(1, 9)),
    elements=st.floats(-1e6, 1e6, allow_nan=False, width=32),
)


def test_pfm_single_value_bit_exact(tmp_path):
    v = np.float32(0.123456789)
    write_image(tmp_path / "x.pfm", np.array([[v]]))
    back = read_image(tmp_path / "x.pfm")
    assert back.dtype == np.float64 and back[0, 0] == v


@given(float32_images)
def test_pfm_round_trip(img):
    back = decode_image(encode_image(img, "pfm"))
    assert np.array_equal(back.astype(np.float32).view(np.uint32), img.view(np.uint32))


def test_pfm_layout():
    img = np.array([[1.0, 2.0], [3.0, 4.0]])
    data = encode_image(img, "pfm")
    assert data.startswith(b"Pf\n2 2\n-1.0\n")
    # rows are stored bottom-to-top, little-endian
    assert struct.unpack("<4f", data[-16:]) == (3.0, 4.0, 1.0, 2.0)
    big = b"Pf\n2 2\n1.0\n" + struct.pack(">4f", 3.0, 4.0, 1.0, 2.0)
    assert np.array_equal(decode_image(big), img)


def test_p5_8bit_quantization():
    data = encode_image(np.array([[0.0, 0.5], [1.0, 1.0]]), "p5-8")
    assert data == b"P5\n2 2\n255\n\x00\x80\xff\xff"
    assert np.array_equal(quantize([[-1.0, 2.0]], 255), [[0, 255]])


@settings(max_examples=50)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)), elements=st.floats(0, 1)))
def test_p5_16bit_round_trip(img):
    data = encode_image(img, "p5-16")
    assert data.startswith(b"P5\n")
    back = decode_image(data)
    assert np.all(np.abs(back - img) <= 1 / 65535)


def test_p5_16bit_big_endian():
    data = encode_image(np.array([[1 / 65535 * 258]]), "p5-16")
    assert data[-2:] == b"\x01\x02"


def test_p5_header_comments_and_whitespace():
    data = b"P5 # comment\n 2\t1 # another\n255\n\x10\x20"
    img = decode_image(data)
    assert np.allclose(img, [[16 / 255, 32 / 255]])
    header, offset = parse_header(data)
    assert header == PixmapHeader("p5-8", 2, 1, maxval=255)
    assert offset == len(data) - 2


@pytest.mark.parametrize(
    "data,error,offset",
    [
        (b"P6\n1 1\n255\n\x00\x00\x00", UnsupportedMagicError, 0),
        (b"PF\n1 1\n-1.0\n" + bytes(12), UnsupportedMagicError, 0),
        (b"P5\n3 2\n255\n\x00", TruncatedPayloadError, 12),
        (b"P5\n1 1\n255\n\x00\x00", ParseError, 12),
        (b"P5\n1 x\n255\n\x00", MalformedHeaderError, 5),
        (b"P5\n0 1\n255\n", MalformedHeaderError, 3),
        (b"P5\n1 1\n1000\n\x00", MalformedHeaderError, 7),
        (b"Pf\n1 1\n0\n\x00\x00\x00\x00", MalformedHeaderError, 7),
        (b"P5\n1 1", TruncatedPayloadError, 6),
        (b"P", TruncatedPayloadError, 1),
        (b"P5x1 1 255 \x00", MalformedHeaderError, 2),
        (b"Pf\n1 1\n-1.0\n\x00\x00\xc0\x7f", ParseError, 12),
    ],
)
def test_parse_errors(data, error, offset):
    with pytest.raises(error) as err:
        decode_image(data)
    assert err.value.offset == offset
    assert f"(at byte {offset})" in str(err.value)


@settings(max_examples=300)
@given(st.sampled_from([b"", b"P5", b"P5\n", b"Pf\n", b"P5\n4 4\n", b"Pf\n2 2\n"]), st.binary(min_size=64, max_size=64))
def test_fuzzed_headers_raise_structured_errors(prefix, noise):
    try:
        decode_image(prefix + noise)
    except ParseError as exc:
        assert exc.offset >= 0


def test_header_type_validation():
    with pytest.raises(ValidationError):
        PixmapHeader("p5-8", 0, 1, maxval=255)
    with pytest.raises(ValidationError):
        PixmapHeader("p5-16", 1, 1, maxval=100)
    assert PixmapHeader("p5-16", 3, 2, maxval=65535).payload_size == 12


def test_write_rejects_bad_input(tmp_path):
    with pytest.raises(ValidationError):
        encode_image(np.array([[np.inf]]), "pfm")
    with pytest.raises(ValidationError):
        encode_image(np.ones((2, 2)), "png")


def test_suffix_formats(tmp_path):
    assert format_for_path("a.PFM") == "pfm"
    assert format_for_path("a.pgm") == "p5-16"
    write_image(tmp_path / "a.pgm", np.full((2, 3), 0.5))
    assert (tmp_path / "a.pgm").read_bytes().startswith(b"P5\n3 2\n65535\n")
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp")]


def test_plan_round_trips(tmp_path):
    empty = SidebandPlan((), 0.1)
    write_plan(tmp_path / "e.json", empty)
    assert read_plan(tmp_path / "e.json") == empty
    twelve = plan_sidebands(12)
    write_plan(tmp_path / "p.json", twelve)
    again = read_plan(tmp_path / "p.json")
    assert again == twelve and check_plan(again) == []


def test_plan_read_rejects_invalid(tmp_path):
    doc = SidebandPlan((PlanEntry(MaskSpec("cosine", 0.25, 0), 0.1),), 0.1).to_json()
    (tmp_path / "bad.json").write_text(doc.replace('"a": 0.5', '"a": 0.1'))
    with pytest.raises(ValidationError, match="entries\\[0\\].*offset a"):
        read_plan(tmp_path / "bad.json")
    (tmp_path / "broken.json").write_text('{"entries": [')
    with pytest.raises(MalformedHeaderError):
        read_plan(tmp_path / "broken.json")


def test_flow_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    flow = FlowField(rng.normal(size=(5, 7, 2)).astype(np.float32).astype(np.float64))
    write_flow(tmp_path / "f.flo", flow)
    data = (tmp_path / "f.flo").read_bytes()
    assert data[:4] == b"PIEH" and struct.unpack("<ii", data[4:12]) == (7, 5)
    assert struct.unpack("<2f", data[12:20]) == tuple(flow.vectors[0, 0])
    back = read_flow(tmp_path / "f.flo")
    assert np.array_equal(back.vectors, flow.vectors)


@pytest.mark.parametrize(
    "data,error",
    [
        (b"PIE", TruncatedPayloadError),
        (b"XXXX" + bytes(8), UnsupportedMagicError),
        (b"PIEH" + struct.pack("<ii", 0, 1), MalformedHeaderError),
        (b"PIEH" + struct.pack("<ii", 1, 1) + bytes(4), TruncatedPayloadError),
        (b"PIEH" + struct.pack("<ii", 1, 1) + bytes(12), ParseError),
    ],
)
def test_flow_parse_errors(data, error):
    with pytest.raises(error):
        decode_flow(data)


def test_flow_bytes_layout():
    flow = FlowField(np.array([[[1.0, 2.0], [3.0, 4.0]]]))
    assert encode_flow(flow)[12:] == struct.pack("<4f", 1, 2, 3, 4)
