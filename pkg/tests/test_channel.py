import numpy as np
import pytest

from beamfocus.channel import (
    ChannelMatrix,
    SystemConfig,
    channel_from_text,
    channel_to_text,
    flat_amplitude_rho,
    load_channel,
    near_field_channel,
    save_channel,
    subcarrier_frequencies,
)
from beamfocus.geometry import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    DegeneratePositionError,
    UePosition,
    distances,
    random_geometry,
)


def make_cfg(M=4, N=2, K=8, fc=100e9, B=10e9, **kw):
    return SystemConfig(
        num_antennas=M,
        num_td_units=N,
        ps_per_td=M // N,
        num_subcarriers=K,
        center_freq_hz=fc,
        bandwidth_hz=B,
        ps_bits=3,
        tau_max_s=1e-9,
        **kw,
    )


def test_system_config_mnp_constraint():
    with pytest.raises(ValueError, match="M = N\\*P"):
        SystemConfig(
            num_antennas=255,
            num_td_units=8,
            ps_per_td=32,
            num_subcarriers=4,
            center_freq_hz=1e9,
            bandwidth_hz=1e8,
            ps_bits=3,
            tau_max_s=0.0,
        )


def test_system_config_rejects_bad_band():
    with pytest.raises(ValueError):
        make_cfg(fc=4e9, B=10e9)  # center must exceed half bandwidth
    with pytest.raises(ValueError):
        make_cfg(K=2, B=0.0)  # zero bandwidth needs a single bin


def test_subcarriers_single_bin():
    cfg = make_cfg(K=1, B=0.0)
    assert np.allclose(subcarrier_frequencies(cfg), [100e9])


def test_subcarriers_two_bins():
    cfg = make_cfg(K=2)
    assert np.allclose(subcarrier_frequencies(cfg), [97.5e9, 102.5e9])


def test_subcarriers_ten_bins_tile_band():
    cfg = make_cfg(K=10)
    f = subcarrier_frequencies(cfg)
    assert f[0] == pytest.approx(95.5e9)
    assert f[-1] == pytest.approx(104.5e9)
    width = cfg.bandwidth_hz / cfg.num_subcarriers
    assert f[0] - width / 2 == pytest.approx(95e9)
    assert f[-1] + width / 2 == pytest.approx(105e9)
    assert np.allclose(np.diff(f), width)


def test_channel_single_antenna_hand_value():
    # lambda = 4 pi and d = 1 gives coefficient 1 * exp(-j/2)
    fc = SPEED_OF_LIGHT / (4 * np.pi)
    cfg = SystemConfig(
        num_antennas=1,
        num_td_units=1,
        ps_per_td=1,
        num_subcarriers=1,
        center_freq_hz=fc,
        bandwidth_hz=0.0,
        ps_bits=1,
        tau_max_s=0.0,
    )
    g = ArrayGeometry(alphas=[0.0], aperture=1.0)
    H = near_field_channel(g, UePosition(1.0, 0.0), cfg)
    assert H.coeffs[0, 0] == pytest.approx(np.exp(-0.5j), abs=1e-12)


def test_channel_magnitude_formula():
    # |h| = lambda / (4 pi d) for rho = 1: 0.003 m at 1 m distance
    fc = SPEED_OF_LIGHT / 0.003
    cfg = SystemConfig(
        num_antennas=1,
        num_td_units=1,
        ps_per_td=1,
        num_subcarriers=1,
        center_freq_hz=fc,
        bandwidth_hz=0.0,
        ps_bits=1,
        tau_max_s=0.0,
    )
    g = ArrayGeometry(alphas=[0.0], aperture=1.0)
    H = near_field_channel(g, UePosition(1.0, 0.0), cfg)
    assert abs(H.coeffs[0, 0]) == pytest.approx(2.38732e-4, rel=1e-5)


def test_channel_magnitude_and_phase_structure():
    cfg = make_cfg(M=6, N=2, K=5)
    g = random_geometry(6, 0.5, seed=1)
    ue = UePosition(2.0, -1.0)
    H = near_field_channel(g, ue, cfg)
    d = distances(g, ue)
    lam = SPEED_OF_LIGHT / H.freqs_hz
    # magnitude profile is exactly rho * lambda / (4 pi d)
    expected_mag = lam[None, :] / (4 * np.pi * d[:, None])
    assert np.allclose(np.abs(H.coeffs), expected_mag, rtol=1e-12)
    ratio = np.abs(H.coeffs) * d[:, None] * 4 * np.pi / lam[None, :]
    assert np.allclose(ratio, 1.0, rtol=1e-12)
    # phase is -2 pi f d / c modulo 2 pi
    expected_phase = np.exp(-2j * np.pi * H.freqs_hz[None, :] * d[:, None] / SPEED_OF_LIGHT)
    assert np.allclose(H.coeffs / np.abs(H.coeffs), expected_phase, atol=1e-12)


def test_channel_rho_override():
    cfg = make_cfg(M=2, N=1, K=4)
    g = ArrayGeometry(alphas=[1.0, -1.0], aperture=0.01)
    rho = np.array([1.0, 2.0, 3.0, 4.0])
    H1 = near_field_channel(g, UePosition(1.0, 0.0), cfg)
    H2 = near_field_channel(g, UePosition(1.0, 0.0), cfg, rho=rho)
    assert np.allclose(H2.coeffs, H1.coeffs * rho[None, :], rtol=1e-14)
    with pytest.raises(ValueError):
        near_field_channel(g, UePosition(1.0, 0.0), cfg, rho=np.zeros(4))


def test_flat_amplitude_rho_flattens_magnitude():
    cfg = make_cfg(M=2, N=1, K=16)
    g = ArrayGeometry(alphas=[1.0, -1.0], aperture=0.01)
    H = near_field_channel(g, UePosition(1.0, 0.0), cfg, rho=flat_amplitude_rho(cfg))
    mags = np.abs(H.coeffs)
    assert np.allclose(mags, mags[:, :1], rtol=1e-12)


def test_channel_mirror_symmetry():
    cfg = make_cfg(M=6, N=2, K=3)
    g = random_geometry(6, 0.4, seed=9)
    mirrored = ArrayGeometry(alphas=-g.alphas[::-1], aperture=g.aperture)
    H1 = near_field_channel(g, UePosition(1.5, 0.7), cfg)
    H2 = near_field_channel(mirrored, UePosition(1.5, -0.7), cfg)
    assert np.allclose(H2.coeffs, H1.coeffs[::-1, :], rtol=1e-13)


def test_channel_degenerate_position_propagates():
    cfg = make_cfg(M=2, N=1, K=1, B=0.0)
    g = ArrayGeometry(alphas=[1.0, -1.0], aperture=2.0)
    with pytest.raises(DegeneratePositionError):
        near_field_channel(g, UePosition(1e-300, 1.0), cfg)


def test_channel_text_roundtrip_bit_exact(tmp_path):
    cfg = make_cfg(M=3, N=3, K=4)
    g = random_geometry(3, 0.2, seed=3)
    H = near_field_channel(g, UePosition(1.0, 0.3), cfg)
    text = channel_to_text(H)
    header = text.splitlines()[0]
    assert header == "3 4"
    H2 = channel_from_text(text)
    assert np.array_equal(H2.coeffs, H.coeffs)
    assert np.array_equal(H2.freqs_hz, H.freqs_hz)
    path = tmp_path / "chan.txt"
    save_channel(H, path)
    H3 = load_channel(path)
    assert np.array_equal(H3.coeffs, H.coeffs)


def test_channel_text_rejects_malformed():
    with pytest.raises(ValueError):
        channel_from_text("not a header\n")
    with pytest.raises(ValueError):
        channel_from_text("1 2\n0.0:0.0\n1.0 2.0\n")  # wrong row width


def test_channel_matrix_requires_increasing_freqs():
    with pytest.raises(ValueError):
        ChannelMatrix(coeffs=np.ones((1, 2), complex), freqs_hz=[2.0, 1.0])
