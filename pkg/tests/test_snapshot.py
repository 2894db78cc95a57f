import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lorentzlab.field import Boundary, FieldState, Grid
from lorentzlab.lab.snapshot import (
    MAGIC,
    SnapshotFormatError,
    decode,
    encode,
    read_snapshot,
    write_snapshot,
)


def _state(cells, k, seed=0):
    rng = np.random.default_rng(seed)
    g = Grid(cells, 0.0137, origin=tuple(-0.5 * c * 0.0137 for c in cells))
    return FieldState(g, k, 0.07, 0.123, rng.normal(size=(k, *cells)), rng.normal(size=(k, *cells)))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([(16,), (9, 11), (8, 9, 10)]), st.sampled_from([1, 2]), st.integers(0, 2 ** 31))
def test_round_trip_bit_identical(cells, k, seed):
    s = _state(cells, k, seed)
    back = decode(encode(s))
    assert back.u.tobytes() == s.u.tobytes() and back.ut.tobytes() == s.ut.tobytes()
    assert back.grid.cells == s.grid.cells and back.grid.origin == s.grid.origin
    assert back.grid.spacing == s.grid.spacing
    assert (back.time, back.epsilon, back.k) == (s.time, s.epsilon, s.k)
    assert encode(back) == encode(s)


def test_header_layout():
    s = _state((9, 11), 2)
    buf = encode(s)
    assert buf[:4] == MAGIC
    assert struct.unpack_from("<III", buf, 4) == (1, 2, 2)
    assert struct.unpack_from("<2I", buf, 16) == (9, 11)
    head = 4 + 12 + 8 + 8 + 16 + 16
    assert len(buf) == head + 2 * 2 * 99 * 8
    # payload: u components then ut components, row-major
    u0 = np.frombuffer(buf, "<f8", count=99, offset=head).reshape(9, 11)
    np.testing.assert_array_equal(u0, s.u[0])
    ut1 = np.frombuffer(buf, "<f8", count=99, offset=head + 3 * 99 * 8).reshape(9, 11)
    np.testing.assert_array_equal(ut1, s.ut[1])


def test_file_round_trip(tmp_path):
    s = _state((12, 10), 1)
    p = write_snapshot(s, tmp_path / "a.hglw")
    back = read_snapshot(p, Boundary.NEUMANN)
    assert back.grid.boundary is Boundary.NEUMANN
    assert np.array_equal(back.u, s.u)


def test_version_gate():
    buf = bytearray(encode(_state((16,), 1)))
    struct.pack_into("<I", buf, 4, 2)
    with pytest.raises(SnapshotFormatError, match="version"):
        decode(bytes(buf))


@pytest.mark.parametrize("mangle", [
    lambda b: b"XXXX" + b[4:],
    lambda b: b[:10],
    lambda b: b[:-8],
    lambda b: b + b"\0" * 8,
])
def test_malformed_rejected(mangle):
    with pytest.raises(SnapshotFormatError):
        decode(mangle(encode(_state((16,), 1))))
