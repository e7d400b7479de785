import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from corecode import codec
from corecode.params import CodeParams, UnrecoverableRow, UnsupportedParams
from oracles import encode_reference, generator_rows, is_mds


def _data(k, size, seed=0):
    rnd = __import__("random").Random(seed)
    return [bytes(rnd.randrange(256) for _ in range(size)) for _ in range(k)]


def test_generator_matches_reference(small):
    g = codec.build_generator(small)
    assert [list(r) for r in g.entries] == generator_rows(9, 6)


def test_reference_generator_is_mds():
    assert is_mds(9, 6)
    assert is_mds(8, 5)


def test_encode_matches_reference(small):
    data = _data(6, 32)
    assert codec.rs_encode(data, small) == encode_reference(data, 9)


def test_every_k_subset_decodes(small):
    data = _data(6, 64, seed=1)
    cw = codec.rs_encode(data, small)
    for cols in itertools.combinations(range(9), 6):
        assert codec.rs_decode([(c, cw[c]) for c in cols], small) == data


def test_sampled_subsets_decode_wide(wide):
    data = _data(12, 16, seed=2)
    cw = codec.rs_encode(data, wide)
    rnd = __import__("random").Random(3)
    for _ in range(50):
        cols = rnd.sample(range(14), 12)
        assert codec.rs_decode([(c, cw[c]) for c in cols], wide) == data


def test_too_many_parities_rejected():
    # with points 1..k and four parities some 6-column minors vanish
    assert not is_mds(10, 6)
    with pytest.raises(UnsupportedParams):
        codec.build_generator(CodeParams(10, 6, 2))


def test_decode_reads_only_k_lowest_columns(wide):
    data = _data(12, 8)
    cw = codec.rs_encode(data, wide)
    loaded = []

    def lazy(c):
        def load():
            loaded.append(c)
            return cw[c]
        return load

    avail = [(c, lazy(c)) for c in (13, 0, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12)]
    assert codec.rs_decode(avail, wide) == data
    assert sorted(loaded) == [0] + list(range(2, 13))


def test_decode_errors(small):
    cw = codec.rs_encode(_data(6, 4), small)
    with pytest.raises(UnrecoverableRow):
        codec.rs_decode([(c, cw[c]) for c in range(5)], small)
    with pytest.raises(ValueError):
        codec.rs_decode([(0, cw[0])] * 6, small)
    with pytest.raises(ValueError):
        codec.rs_decode([(c, cw[c % 9]) for c in range(3, 10)], small)


def test_encode_errors(small):
    with pytest.raises(ValueError):
        codec.rs_encode(_data(5, 4), small)
    with pytest.raises(ValueError):
        codec.rs_encode(_data(5, 4) + [b"\0" * 3], small)


def test_reconstruct_missing(small):
    cw = codec.rs_encode(_data(6, 16), small)
    got = codec.rs_reconstruct([(c, cw[c]) for c in (0, 2, 4, 5, 6, 8)], [1, 3, 7], small)
    assert got == {1: cw[1], 3: cw[3], 7: cw[7]}


def test_vertical_repair_checks_count():
    with pytest.raises(ValueError):
        codec.vertical_repair([b"ab"], t=2)
    assert codec.vertical_repair([b"\x01\x02", b"\x03\x00"], t=2) == b"\x02\x02"


@given(st.integers(1, 4), st.integers(1, 32), st.randoms(use_true_random=False))
def test_parity_row_is_a_codeword(t, size, rnd):
    # XOR of codewords is a codeword: encode-then-XOR equals XOR-then-encode
    p = CodeParams(9, 6, t)
    objs = [[rnd.randbytes(size) for _ in range(6)] for _ in range(t)]
    grid = codec.core_encode(objs, p)
    grid.check()
    xored = [codec.xor_blocks([o[i] for o in objs]) for i in range(6)]
    assert codec.rs_encode(xored, p) == grid.rows[t]


def test_grid_check_detects_damage(small):
    grid = codec.core_encode([_data(6, 8, s) for s in range(3)], small)
    grid.rows[1][7] = bytes(8)
    with pytest.raises(ValueError):
        grid.check()


@given(st.lists(st.integers(0, 8), min_size=6, max_size=9, unique=True), st.binary(min_size=1, max_size=40))
def test_decode_any_k_columns(cols, seed):
    p = CodeParams(9, 6, 1)
    data = [bytes((b + i) % 256 for b in seed) for i in range(6)]
    cw = codec.rs_encode(data, p)
    assert codec.rs_decode([(c, cw[c]) for c in cols], p) == data


def test_core_encode_wrong_object_count(small):
    with pytest.raises(ValueError):
        codec.core_encode([_data(6, 4)], small)
