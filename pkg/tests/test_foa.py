import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from avseld.core import Doa, doa_to_unit_vec
from avseld.errors import EmptyClip, NotFoa, SampleRateMismatch, SilentClip
from avseld.foa import (
    FoaClip,
    MonoClip,
    Rir,
    convolve,
    convolve_rir,
    delta_rir,
    encode_foa_anechoic,
    mix_events,
    peak_normalize,
    sn3d_gains,
)

# [W, Y, Z, X] at (30, 10) degrees from mpmath
GAINS_30_10 = (1.0, 0.492403876506104, 0.173648177666930, 0.852868531952443)


def test_foa_clip_shape_checked():
    with pytest.raises(NotFoa):
        FoaClip(np.zeros((3, 10)))
    assert len(FoaClip(np.zeros((4, 10)))) == 10


def test_sn3d_gains_reference_values():
    np.testing.assert_allclose(sn3d_gains(Doa(30, 10)), GAINS_30_10, atol=1e-12)
    np.testing.assert_allclose(sn3d_gains(Doa(0, 0)), [1, 0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(sn3d_gains(Doa(90, 0)), [1, 1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(sn3d_gains(Doa(0, 90)), [1, 0, 1, 0], atol=1e-15)


@given(st.floats(-180, 180), st.floats(-90, 90))
def test_dipoles_match_unit_vector(a, e):
    d = Doa(a, e)
    g = sn3d_gains(d)
    x, y, z = doa_to_unit_vec(d)
    np.testing.assert_allclose(g[[3, 1, 2]], [x, y, z], atol=1e-12)
    assert g[0] == 1.0


def test_encode_anechoic():
    m = MonoClip(np.array([1.0, -2.0, 0.5]))
    c = encode_foa_anechoic(m, Doa(30, 10))
    np.testing.assert_allclose(c.samples, np.outer(GAINS_30_10, m.samples), atol=1e-12)
    with pytest.raises(EmptyClip):
        encode_foa_anechoic(MonoClip(np.zeros(0)), Doa(0, 0))


@given(st.integers(1, 300), st.integers(1, 40), st.integers(0, 2**32 - 1))
@settings(max_examples=60)
def test_fft_matches_direct(n, m, seed):
    rng = np.random.default_rng(seed)
    x, h = rng.standard_normal(n), rng.standard_normal(m)
    ref = np.convolve(x, h)
    for method in ("direct", "fft", "auto"):
        out = convolve(x, h, method)
        assert out.shape == (n + m - 1,)
        np.testing.assert_allclose(out, ref, atol=1e-9)


def test_long_kernel_auto_path():
    rng = np.random.default_rng(1)
    x, h = rng.standard_normal(5000), rng.standard_normal(2000)
    np.testing.assert_allclose(convolve(x, h), np.convolve(x, h), atol=1e-9)


def test_unknown_method():
    with pytest.raises(ValueError):
        convolve([1.0], [1.0], "magic")


def test_delta_rir_identity_bit_exact():
    rng = np.random.default_rng(2)
    m = MonoClip(rng.standard_normal(1000))
    d = Doa(-40, 20)
    out = convolve_rir(m, delta_rir(d))
    assert np.array_equal(out.samples, encode_foa_anechoic(m, d).samples)


def test_delayed_delta_shifts():
    x = np.arange(1.0, 6.0)
    h = np.zeros(4)
    h[3] = 1.0
    assert np.array_equal(convolve(x, h), np.r_[np.zeros(3), x])


def test_convolve_rir_checks():
    r = delta_rir(Doa(0, 0), sample_rate=16000)
    with pytest.raises(SampleRateMismatch):
        convolve_rir(MonoClip(np.ones(4), 24000), r)
    with pytest.raises(EmptyClip):
        convolve_rir(MonoClip(np.zeros(0), 16000), r)
    with pytest.raises(ValueError):
        Rir(np.zeros((4, 0)), Doa(0, 0))


def test_mix_events_places_and_truncates():
    a = FoaClip(np.ones((4, 5)), 10)
    b = FoaClip(2 * np.ones((4, 5)), 10)
    mix = mix_events([(a, 0.0), (b, 0.8)], 1.0, 10)
    assert len(mix) == 10
    assert np.array_equal(mix.samples[0], [1, 1, 1, 1, 1, 0, 0, 0, 2, 2])
    with pytest.raises(SampleRateMismatch):
        mix_events([(a, 0.0)], 1.0, 20)
    with pytest.raises(ValueError):
        mix_events([(a, -0.1)], 1.0, 10)


def test_peak_normalize():
    c = FoaClip(np.array([[0.5, -2.0]] * 4))
    out = peak_normalize(c, 0.95)
    assert np.max(np.abs(out.samples)) == pytest.approx(0.95)
    np.testing.assert_allclose(out.samples / c.samples, 0.475)
    with pytest.raises(SilentClip):
        peak_normalize(FoaClip(np.zeros((4, 3))))
