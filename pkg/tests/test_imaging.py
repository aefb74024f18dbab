import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from urdutext.errors import FormatError
from urdutext.imaging import (BoundingBox, Image, decode_image, encode_image, extract_channel,
                              resize_bilinear, to_grayscale)


def test_decode_p5_maps_bytes_directly():
    img = decode_image(b"P5 2 2 255\n" + bytes([0, 255, 128, 7]))
    assert (img.width, img.height, img.channels) == (2, 2, 1)
    assert img.data[:, :, 0].tolist() == [[0, 255], [128, 7]]


def test_decode_p6():
    img = decode_image(b"P6\n2 1\n255\n" + bytes([255, 0, 0, 0, 0, 255]))
    assert (img.width, img.height, img.channels) == (2, 1, 3)
    assert img.data[0, 0].tolist() == [255, 0, 0]
    assert img.data[0, 1].tolist() == [0, 0, 255]


def test_truncated_payload_reports_offset():
    with pytest.raises(FormatError, match="truncated payload") as exc:
        decode_image(b"P5 2 2 255\n" + bytes([1, 2, 3]))
    assert exc.value.offset == 14


@pytest.mark.parametrize("blob", [
    b"P5 2 2 65535\n" + bytes(8),
    b"P3 2 2 255\n0 0 0 0",
    b"P5 2 x 255\n" + bytes(4),
    b"P5 2 2",
    b"",
])
def test_malformed_headers_rejected(blob):
    with pytest.raises(FormatError):
        decode_image(blob)


def test_header_comments_accepted():
    img = decode_image(b"P5\n# made by hand\n2 # width\n1\n255\n" + bytes([9, 10]))
    assert img.data[0, :, 0].tolist() == [9, 10]


def test_encoder_never_writes_comments(rng):
    img = Image(rng.integers(0, 256, (3, 4, 3), dtype=np.uint8))
    out = encode_image(img)
    assert out.startswith(b"P6") and b"#" not in out[:out.index(b"255\n")]
    assert encode_image(Image(img.data[:, :, :1])).startswith(b"P5")


@pytest.mark.parametrize("channels", [1, 3])
def test_random_round_trip_16x16(rng, channels):
    img = Image(rng.integers(0, 256, (16, 16, channels), dtype=np.uint8))
    blob = encode_image(img)
    assert decode_image(blob) == img
    assert encode_image(decode_image(blob)) == blob


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.sampled_from([1, 3]), st.data())
def test_round_trip_property(w, h, c, data):
    raw = data.draw(st.binary(min_size=w * h * c, max_size=w * h * c))
    img = Image(np.frombuffer(raw, np.uint8).reshape(h, w, c))
    assert decode_image(encode_image(img)) == img


def test_grayscale_values():
    img = Image(np.array([[[255, 255, 255], [255, 0, 0], [0, 0, 0]]], dtype=np.uint8))
    assert to_grayscale(img).tolist() == [[255, 76, 0]]


def test_grayscale_identity_and_bounds(rng):
    gray = Image(rng.integers(0, 256, (5, 7, 1), dtype=np.uint8))
    assert np.array_equal(to_grayscale(gray), gray.data[:, :, 0])
    color = Image(rng.integers(0, 256, (20, 20, 3), dtype=np.uint8))
    g = to_grayscale(color)
    assert g.dtype == np.uint8
    ref = np.floor(color.data.astype(float) @ [0.299, 0.587, 0.114] + 0.5)
    assert np.abs(g.astype(int) - ref).max() <= 1


def test_extract_channel():
    red = Image(np.broadcast_to(np.array([255, 0, 0], np.uint8), (4, 4, 3)))
    assert (extract_channel(red, 0) == 255).all()
    assert (extract_channel(red, 1) == 0).all()
    with pytest.raises(ValueError):
        extract_channel(Image(np.zeros((2, 2, 1), np.uint8)), 2)


def test_channels_partition_samples(rng):
    img = Image(rng.integers(0, 256, (6, 5, 3), dtype=np.uint8))
    stacked = np.stack([extract_channel(img, i) for i in range(3)], axis=2)
    assert np.array_equal(stacked, img.data)


def test_image_validation():
    with pytest.raises(ValueError):
        Image(np.zeros((2, 2, 2), np.uint8))
    with pytest.raises(ValueError):
        Image(np.full((2, 2), 300))
    with pytest.raises(ValueError):
        BoundingBox(0, 0, 0, 3)


def test_resize_identity_and_halving(rng):
    a = rng.integers(0, 256, (64, 192)).astype(float)
    assert np.array_equal(resize_bilinear(a, 192, 64), a)
    half = resize_bilinear(a, 96, 32)
    blocks = a.reshape(32, 2, 96, 2).mean(axis=(1, 3))
    assert np.allclose(half, blocks, atol=1e-12)
