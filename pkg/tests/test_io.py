import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from patrecon import io

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
matrices = arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=finite)


@settings(max_examples=40, deadline=None)
@given(values=matrices, h=st.floats(0.0009765625, 1.0, width=32))
def test_field_round_trip_is_bitwise(tmp_path_factory, values, h):
    path = tmp_path_factory.mktemp("io") / "f.patf"
    io.write_field(path, values, h)
    back = io.read_field(path)
    assert back.values.tobytes() == values.astype("<f8").tobytes()
    assert back.h == np.float32(h)


@settings(max_examples=40, deadline=None)
@given(values=matrices, h_t=st.floats(1e-6, 1.0))
def test_sinogram_round_trip_is_bitwise(tmp_path_factory, values, h_t):
    path = tmp_path_factory.mktemp("io") / "g.pats"
    io.write_sinogram(path, values, h_t)
    back = io.read_sinogram(path)
    assert back.values.tobytes() == values.astype("<f8").tobytes()
    assert back.h_t == h_t


def test_field_header_layout(tmp_path):
    path = tmp_path / "f.patf"
    io.write_field(path, np.arange(6.0).reshape(2, 3), 0.5)
    raw = path.read_bytes()
    assert raw[:4] == b"PATF"
    assert struct.unpack_from("<IIf", raw, 4) == (2, 3, 0.5)
    assert len(raw) == 16 + 6 * 8
    assert np.frombuffer(raw[16:], "<f8")[4] == 4.0


def test_sinogram_header_layout(tmp_path):
    path = tmp_path / "g.pats"
    io.write_sinogram(path, np.ones((3, 2)), 0.01)
    raw = path.read_bytes()
    assert raw[:4] == b"PATS"
    assert struct.unpack_from("<IId", raw, 4) == (3, 2, 0.01)
    assert len(raw) == 20 + 6 * 8


@pytest.mark.parametrize("damage", ["magic", "short", "long", "header"])
def test_malformed_files_raise(tmp_path, damage):
    path = tmp_path / "f.patf"
    io.write_field(path, np.ones((2, 2)), 1.0)
    raw = path.read_bytes()
    raw = {"magic": b"PATS" + raw[4:], "short": raw[:-1], "long": raw + b"\0",
           "header": raw[:10]}[damage]
    path.write_bytes(raw)
    with pytest.raises(io.FormatError):
        io.read_field(path)


def test_field_reader_rejects_sinogram(tmp_path):
    path = tmp_path / "g.pats"
    io.write_sinogram(path, np.ones((2, 2)), 1.0)
    with pytest.raises(io.FormatError, match="magic"):
        io.read_field(path)


def test_writers_need_2d(tmp_path):
    with pytest.raises(ValueError):
        io.write_field(tmp_path / "x.patf", np.ones(3), 1.0)


def test_csv_round_trip_is_exact(tmp_path, rng):
    values = rng.standard_normal((4, 7))
    io.write_csv(tmp_path / "g.csv", values)
    assert np.array_equal(io.read_csv(tmp_path / "g.csv"), values)


def test_to_uint8_range():
    img = io.to_uint8(np.array([[-1.0, 0.0, 1.0, 3.0]]), vmin=-1, vmax=1)
    assert img.tolist() == [[0, 128, 255, 255]]
    assert io.to_uint8(np.full((2, 2), 5.0)).max() == 0


def test_pgm_round_trip_with_image_axes(tmp_path):
    values = np.zeros((4, 3))
    values[3, 0] = 1.0  # largest x, smallest y -> bottom right pixel
    io.write_pgm(tmp_path / "a.pgm", values)
    img = io.read_pgm(tmp_path / "a.pgm")
    assert img.shape == (3, 4)
    assert img[-1, -1] == 255 and img.sum() == 255


def test_pgm_raw_rows(tmp_path):
    values = np.arange(12, dtype=float).reshape(3, 4)
    io.write_pgm(tmp_path / "b.pgm", values, 0, 11, image_axes=False)
    img = io.read_pgm(tmp_path / "b.pgm")
    assert np.array_equal(img, io.to_uint8(values, 0, 11))
    assert (tmp_path / "b.pgm").read_bytes().startswith(b"P5\n4 3\n255\n")


def test_pgm_pixels_may_look_like_whitespace(tmp_path):
    values = np.full((2, 2), 32.0)  # 0x20, a space byte
    io.write_pgm(tmp_path / "c.pgm", values, 0, 255, image_axes=False)
    assert np.all(io.read_pgm(tmp_path / "c.pgm") == 32)


def test_read_pgm_rejects_other_formats(tmp_path):
    (tmp_path / "d.pgm").write_bytes(b"P2\n1 1\n255\n0\n")
    with pytest.raises(io.FormatError):
        io.read_pgm(tmp_path / "d.pgm")
