import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskspc.tape import KnotTape, eval_tape, knot_index, sample_tapes, shift_tape

KNOTS = np.arange(12, dtype=float).reshape(6, 2)
TAPE = KnotTape(KNOTS, 0.5)


def test_validation():
    with pytest.raises(ValueError):
        KnotTape(np.zeros((6, 3)), 0.5)
    with pytest.raises(ValueError):
        KnotTape(np.zeros((6, 2)), 0.0)
    with pytest.raises(ValueError):
        KnotTape(np.full((6, 2), np.nan), 0.5)


def test_knots_are_read_only_copies():
    src = KNOTS.copy()
    tape = KnotTape(src, 0.5)
    src[0, 0] = 99.0
    assert tape.knots[0, 0] == 0.0
    with pytest.raises(ValueError):
        tape.knots[0, 0] = 1.0


def test_eval_is_piecewise_constant_with_n_pieces():
    ts = np.linspace(0, 0.5, 5001, endpoint=False)
    cmds = np.array([eval_tape(TAPE, t) for t in ts])
    changes = np.count_nonzero(np.any(np.diff(cmds, axis=0) != 0, axis=1))
    assert changes == 5
    assert eval_tape(TAPE, 0.0) == (0.0, 1.0)
    assert eval_tape(TAPE, 0.49) == (10.0, 11.0)
    assert eval_tape(TAPE, 3.0) == (10.0, 11.0)


def test_knot_index_boundaries():
    assert knot_index(TAPE, 0.5 / 6 - 1e-12) == 0
    assert knot_index(TAPE, 0.25) == 3
    with pytest.raises(ValueError):
        knot_index(TAPE, -0.1)


def test_sample_zero_is_nominal_and_sigma_zero_is_identity():
    rng = np.random.default_rng(0)
    tapes = sample_tapes(TAPE, 0.4, 16, rng)
    assert len(tapes) == 16 and tapes[0] == TAPE
    assert all(t != TAPE for t in tapes[1:])
    assert all(t == TAPE for t in sample_tapes(TAPE, 0.0, 8, rng))


def test_sample_statistics():
    tapes = sample_tapes(KnotTape.zeros(), 0.4, 4001, np.random.default_rng(1))
    noise = np.stack([t.knots for t in tapes[1:]])
    assert abs(noise.std() - 0.4) < 0.01
    assert abs(noise.mean()) < 0.01


def test_sampling_is_deterministic():
    a = sample_tapes(TAPE, 0.4, 8, np.random.default_rng(5))
    b = sample_tapes(TAPE, 0.4, 8, np.random.default_rng(5))
    assert a == b


def test_shift_examples():
    assert shift_tape(TAPE, 0.0) == TAPE
    assert np.all(shift_tape(TAPE, 0.5).knots == KNOTS[-1])
    one = shift_tape(TAPE, 0.5 / 6)
    assert np.array_equal(one.knots, np.vstack([KNOTS[1:], KNOTS[-1:]]))
    with pytest.raises(ValueError):
        shift_tape(TAPE, 0.6)


@settings(max_examples=50)
@given(a=st.integers(0, 6), b=st.integers(0, 6))
def test_shift_composes(a, b):
    if a + b > 6:
        return
    h = 0.5 / 6
    assert shift_tape(shift_tape(TAPE, a * h), b * h) == shift_tape(TAPE, (a + b) * h)
