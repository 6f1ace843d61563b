import numpy as np
import pytest

from aoil.autoencoder import (
    DecoderParams,
    EncoderParams,
    decode,
    decode_backward,
    encode,
    encode_backward,
    reconstruction_error,
)
from aoil.linalg import DimensionError


def zeroed(params):
    for a in params.W + params.b + [params.Wm]:
        a[...] = 0.0
    return params


def test_zero_encoder_gives_zero_activations():
    enc = zeroed(EncoderParams.init(4, 6, np.random.default_rng(0)))
    tr = encode(np.array([1.0, -2.0, 3.0, 0.5]), enc)
    assert all((h == 0).all() for h in tr.h)


def test_encoder_shapes_default_width():
    enc = EncoderParams.init(3, 30, np.random.default_rng(0))
    tr = encode(np.ones(3), enc)
    assert [h.shape for h in tr.h] == [(30,)] * 6


def test_skip_path_reproduces_input():
    d_x, d_h = 3, 5
    enc = EncoderParams.init(d_x, d_h, np.random.default_rng(0))
    enc.W[1][...] = 0.0
    enc.b[1][...] = 0.0
    enc.Wm[...] = np.eye(d_h, d_x)  # embeds x into the first d_x units
    x = np.array([0.3, 2.0, 0.0])
    h1 = encode(x, enc).h[1]
    np.testing.assert_array_equal(h1, [0.3, 2.0, 0.0, 0.0, 0.0])


def test_encoder_dimension_error():
    enc = EncoderParams.init(3, 4, np.random.default_rng(0))
    with pytest.raises(DimensionError):
        encode(np.ones(2), enc)


def test_zero_decoder_gives_zero_output():
    dec = zeroed(DecoderParams.init(4, 6, np.random.default_rng(0)))
    np.testing.assert_array_equal(decode(np.ones(6), dec).x_hat, np.zeros(4))


def test_decoder_output_shape():
    dec = DecoderParams.init(14, 30, np.random.default_rng(0))
    assert decode(np.ones(30), dec).x_hat.shape == (14,)


def test_decoder_jacobian_vector_product_matches_finite_differences():
    rng = np.random.default_rng(3)
    dec = DecoderParams.init(5, 8, rng)
    for b in dec.b:
        b[...] = rng.normal(0, 0.1, b.shape)
    z = rng.uniform(0.2, 1.0, 8)
    v = rng.normal(size=8)
    u = rng.normal(size=5)
    # u . J v via backprop of the linear functional u . x_hat
    tr = decode(z, dec)
    _, dz = decode_backward(z, tr, dec, u)
    analytic = dz @ v
    h = 1e-5
    numeric = (u @ decode(z + h * v, dec).x_hat - u @ decode(z - h * v, dec).x_hat) / (2 * h)
    assert abs(analytic - numeric) / abs(numeric) < 1e-4


def test_reconstruction_error_examples():
    assert reconstruction_error(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0
    assert reconstruction_error(np.array([1.0, 0.0]), np.zeros(2)) == 1.0
    assert reconstruction_error(np.array([1.0, 2.0]), np.array([3.0, 5.0])) == 13.0
    with pytest.raises(DimensionError):
        reconstruction_error(np.ones(2), np.ones(3))


def _autoencoder_loss(x, enc, dec):
    return reconstruction_error(x, decode(encode(x, enc).h[5], dec).x_hat)


@pytest.mark.parametrize("seed", range(3))
def test_reconstruction_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    enc = EncoderParams.init(5, 8, rng)
    dec = DecoderParams.init(5, 8, rng)
    for p in (enc, dec):
        for b in p.b:
            b[...] = rng.normal(0, 0.1, b.shape)
    x = rng.normal(size=5)
    et = encode(x, enc)
    dt = decode(et.h[5], dec)
    dgrads, dz = decode_backward(et.h[5], dt, dec, 2 * (dt.x_hat - x))
    dh = [np.zeros(8) for _ in range(6)]
    dh[5] = dz
    grads = {**dgrads, **encode_backward(x, et, enc, dh)}
    live = {**enc.named(), **dec.named()}
    h = 1e-5
    for name, p in live.items():
        num = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            o = p[idx]
            p[idx] = o + h
            lp = _autoencoder_loss(x, enc, dec)
            p[idx] = o - h
            lm = _autoencoder_loss(x, enc, dec)
            p[idx] = o
            num[idx] = (lp - lm) / (2 * h)
        # tensor-level relative error (float64 differences)
        err = np.linalg.norm(grads[name] - num) / max(np.linalg.norm(num), 1e-8)
        assert err < 1e-4, name


def test_activations_nonnegative():
    rng = np.random.default_rng(5)
    enc = EncoderParams.init(4, 10, rng)
    dec = DecoderParams.init(4, 10, rng)
    et = encode(rng.normal(size=4), enc)
    dt = decode(et.h[5], dec)
    assert all((h >= 0).all() for h in et.h)
    assert all((g >= 0).all() for g in dt.g)
