"""
Tests for the lossy waveguide amplifier model
"""
import numpy as np
import pytest

from squeezing_gate_sim.core.errors import InvalidArgumentError
from squeezing_gate_sim.core.gaussian import (
    VACUUM_VARIANCE,
    apply,
    ideal_opa_channel,
    loss_channel,
    to_db,
    vacuum,
)
from squeezing_gate_sim.core.opa import (
    SERIES_THRESHOLD,
    OpaGainLoss,
    OpaSpec,
    decompose_loss_then_amp,
    efficiency,
    lossy_opa_channel,
    lumped_loss,
    opa_channel_from_gain_loss,
    slice_oracle,
    spec_from_gain_loss,
)

REFERENCE = OpaSpec(g=2.0, alpha=0.5, L=1.0)


def _noise_deviation(spec, N):
    closed = lossy_opa_channel(spec, 0)
    sliced = slice_oracle(spec, N, 0)
    return np.abs(np.diag(sliced.noise) - np.diag(closed.noise)) / np.diag(closed.noise)


def test_spec_validation():
    with pytest.raises(InvalidArgumentError):
        OpaSpec(g=-1.0, alpha=0.0, L=1.0)
    with pytest.raises(InvalidArgumentError):
        OpaSpec(g=1.0, alpha=0.0, L=0.0)
    with pytest.raises(InvalidArgumentError):
        OpaSpec(g=np.nan, alpha=0.0, L=1.0)
    with pytest.raises(InvalidArgumentError):
        OpaGainLoss(28.4, 1.0)

    assert REFERENCE.gain == pytest.approx(np.exp(3.0))
    assert REFERENCE.gain_db == pytest.approx(to_db(np.exp(3.0)))


def test_lossless_waveguide_is_ideal_amplifier():
    spec = OpaSpec(g=1.3, alpha=0.0, L=0.8)
    channel = lossy_opa_channel(spec, 0)
    ideal = ideal_opa_channel(np.exp(2 * 1.3 * 0.8), 0)
    np.testing.assert_allclose(channel.scale, ideal.scale, rtol=1e-14)
    np.testing.assert_array_equal(channel.noise, np.zeros((2, 2)))


def test_gainless_waveguide_is_loss():
    spec = OpaSpec(g=0.0, alpha=0.5, L=1.0)
    channel = lossy_opa_channel(spec, 0)
    reference = loss_channel(np.exp(-1.0), 0)
    np.testing.assert_allclose(channel.scale, reference.scale, rtol=1e-14)
    np.testing.assert_allclose(channel.noise, reference.noise, rtol=1e-14)


def test_balanced_gain_and_loss():
    out = apply(lossy_opa_channel(OpaSpec(g=1.0, alpha=1.0, L=1.0), 0), vacuum(1))
    sx, sp = out.shot_normalized_variances(0)
    assert sp == pytest.approx(3.0, rel=1e-14)
    assert sx == pytest.approx(np.exp(-4) + (1 - np.exp(-4)) / 2, rel=1e-14)
    assert sx == pytest.approx(0.5092, abs=1e-4)


@pytest.mark.parametrize("scale", [0.5, 0.999, 1.001, 2.0, 10.0])
def test_p_noise_near_balance(scale):
    spec = OpaSpec(g=0.5 + scale * SERIES_THRESHOLD, alpha=0.5, L=1.0)
    d = spec.g - spec.alpha
    expected = VACUUM_VARIANCE * spec.alpha * np.expm1(2 * d * spec.L) / d
    assert lossy_opa_channel(spec, 0).noise[1, 1] == pytest.approx(expected, rel=1e-12)


def test_channel_is_physical_on_grid():
    for g in np.linspace(0, 3, 7):
        for alpha in np.linspace(0, 3, 7):
            for L in (0.1, 1.0, 2.5):
                channel = lossy_opa_channel(OpaSpec(g=g, alpha=alpha, L=L), 0)
                assert channel.is_completely_positive()
                out = apply(channel, vacuum(1))
                assert out.cov[0, 0] * out.cov[1, 1] >= 0.25 - 1e-12


def test_slice_oracle_single_slice_without_gain():
    spec = OpaSpec(g=0.0, alpha=0.7, L=1.0)
    sliced = slice_oracle(spec, 1, 0)
    reference = loss_channel(np.exp(-1.4), 0)
    np.testing.assert_allclose(sliced.scale, reference.scale, rtol=1e-14)
    np.testing.assert_allclose(sliced.noise, reference.noise, rtol=1e-14)


def test_slice_oracle_convergence():
    np.testing.assert_allclose(
        slice_oracle(REFERENCE, 10_000, 0).scale, lossy_opa_channel(REFERENCE, 0).scale, rtol=1e-10
    )
    assert np.all(_noise_deviation(REFERENCE, 10_000) <= 1e-3)

    for N in (100, 1_000, 10_000):
        ratio = _noise_deviation(REFERENCE, 2 * N) / _noise_deviation(REFERENCE, N)
        assert np.all((ratio >= 0.4) & (ratio <= 0.6)), (N, ratio)


def test_slice_oracle_embedding():
    channel = slice_oracle(REFERENCE, 7, 1, 2)
    assert channel.num_modes == 2
    np.testing.assert_array_equal(channel.scale[0:2, 0:2], np.eye(2))
    with pytest.raises(InvalidArgumentError):
        slice_oracle(REFERENCE, 0, 0)


def test_efficiency():
    assert efficiency(OpaSpec(g=1.0, alpha=0.0, L=1.0)) == pytest.approx(1.0)
    assert efficiency(OpaSpec(g=0.0, alpha=0.5, L=1.0)) == pytest.approx(np.exp(-1.0))
    assert efficiency(OpaSpec(g=0.0, alpha=0.0, L=1.0)) == 1.0

    expected = 1.5 * np.exp(3) / (2 * np.exp(3) - 0.5)
    assert efficiency(REFERENCE) == pytest.approx(expected, rel=1e-12)
    assert efficiency(REFERENCE) == pytest.approx(0.7594, abs=1e-4)


def test_efficiency_monotonicity():
    alphas = np.linspace(0.0, 2.0, 9)
    gains = np.linspace(0.25, 3.0, 9)
    lengths = np.linspace(0.25, 2.0, 8)

    for g in (0.5, 1.0, 2.0):
        values = [efficiency(OpaSpec(g=g, alpha=a, L=1.0)) for a in alphas]
        assert np.all(np.diff(values) < 0)
    for alpha in (0.2, 0.5, 1.5):
        values = [efficiency(OpaSpec(g=g, alpha=alpha, L=1.0)) for g in gains]
        assert np.all(np.diff(values) > 0)
        values = [efficiency(OpaSpec(g=1.0, alpha=alpha, L=L)) for L in lengths]
        assert np.all(np.diff(values) < 0)


def test_decompose_loss_then_amp():
    eta, G_hat = decompose_loss_then_amp(OpaSpec(g=1.2, alpha=0.0, L=1.0))
    assert eta == pytest.approx(1.0)
    assert G_hat == pytest.approx(np.exp(2.4))

    eta, G_hat = decompose_loss_then_amp(REFERENCE)
    assert eta == pytest.approx(efficiency(REFERENCE), rel=1e-15)
    assert eta * G_hat == pytest.approx(np.exp(3.0), rel=1e-14)
    assert G_hat == pytest.approx(26.45, abs=0.01)

    closed = lossy_opa_channel(REFERENCE, 0)
    factored = loss_channel(eta, 0).then(ideal_opa_channel(G_hat, 0))
    np.testing.assert_allclose(factored.scale[1], closed.scale[1], rtol=1e-12)
    np.testing.assert_allclose(factored.noise[1], closed.noise[1], rtol=1e-12)
    # the x row is phase sensitive and does not factor the same way
    assert not np.isclose(factored.noise[0, 0], closed.noise[0, 0], rtol=1e-6)
    assert not np.isclose(factored.scale[0, 0], closed.scale[0, 0], rtol=1e-6)


def test_decompose_at_balance():
    spec = OpaSpec(g=0.8, alpha=0.8, L=1.5)
    eta, G_hat = decompose_loss_then_amp(spec)
    assert eta == pytest.approx(1 / (1 + 2 * 0.8 * 1.5), rel=1e-14)
    assert G_hat == pytest.approx(1 + 2 * 0.8 * 1.5, rel=1e-14)

    p_noise = slice_oracle(spec, 1_000_000, 0).noise[1, 1]
    assert p_noise == pytest.approx(lossy_opa_channel(spec, 0).noise[1, 1], rel=1e-5)


@pytest.mark.parametrize("gain_db, loss", [(28.4, 0.05), (20.7, 0.07), (3.0, 0.5)])
def test_spec_from_gain_loss_round_trip(gain_db, loss):
    spec = spec_from_gain_loss(OpaGainLoss(gain_db, loss), 1.0)
    assert spec.L == 1.0
    assert efficiency(spec) == pytest.approx(1 - loss, rel=1e-9)
    assert spec.gain_db == pytest.approx(gain_db, rel=1e-9)


def test_spec_from_gain_loss_lossless():
    spec = spec_from_gain_loss(OpaGainLoss(6.02, 0.0), 2.0)
    assert spec.alpha == 0.0
    assert spec.g == pytest.approx(np.log(2) / 2.0, rel=1e-3)


def test_spec_from_gain_loss_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        spec_from_gain_loss(OpaGainLoss(0.0, 0.1))
    with pytest.raises(InvalidArgumentError):
        spec_from_gain_loss(OpaGainLoss(10.0, 0.1), L_assumed=-1.0)


def test_gauge_freedom_in_length():
    short = spec_from_gain_loss(OpaGainLoss(28.4, 0.05), 0.5)
    long = spec_from_gain_loss(OpaGainLoss(28.4, 0.05), 2.0)
    assert short.g * short.L == pytest.approx(long.g * long.L, rel=1e-9)
    assert short.alpha * short.L == pytest.approx(long.alpha * long.L, rel=1e-9)


def test_opa_channel_from_gain_loss():
    channel = opa_channel_from_gain_loss(OpaGainLoss(28.4, 0.05), 1.0, 1, 2)
    assert channel.num_modes == 2
    assert channel.scale[3, 3] ** 2 == pytest.approx(10 ** 2.84, rel=1e-9)


def test_lumped_loss():
    assert lumped_loss(0.11, 0.05) == pytest.approx(0.1545)
    assert round(lumped_loss(0.11, 0.05), 2) == 0.15
    assert lumped_loss(0.15, 0.07) == pytest.approx(0.21, abs=1e-3)
    with pytest.raises(InvalidArgumentError):
        lumped_loss(1.0, 0.0)
