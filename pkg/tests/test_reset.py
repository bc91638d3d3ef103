import numpy as np
import pytest

from conftest import random_stable_tf
from resetloop.lti import StateSpace, freq_response, hz, log_grid, tf_to_ss
from resetloop.reset import (
    HarmonicResponse,
    ResetSystem,
    clegg,
    describing_function,
    describing_function_gamma_batch,
    fore,
    harmonic_spectrum,
    hosidf,
    lag_chain,
    sore,
    theta_d,
)

CLEGG_MAG = np.sqrt(1 + 16 / np.pi**2)      # |1 + 4j/pi|
CLEGG_PHASE = -np.degrees(np.arctan(np.pi / 4))   # -38.146 deg
CLEGG_H3 = 4 / (3 * np.pi)


def test_theta_d_clegg_closed_form():
    for w in (0.1, 1.0, 42.0):
        th = theta_d(clegg(), w)
        assert th.shape == (1, 1)
        assert th[0, 0] == pytest.approx(4 / np.pi, rel=1e-12)


def test_theta_d_vanishes_without_reset():
    rs = fore(hz(5.0), 1.0)
    th = theta_d(rs, hz(2.0))
    assert abs(th[0, 0]) < 1e-12


def test_theta_d_is_real():
    rs = sore(hz(10.0), 0.8, [-0.3, 0.4])
    th = theta_d(rs, hz(7.0))
    assert np.isrealobj(th)
    assert np.all(np.isfinite(th))


def test_clegg_describing_function_closed_form():
    grid = log_grid(0.01, 100.0)
    df = describing_function(clegg(), grid)
    mag = np.abs(df.values) * grid
    ph = np.degrees(np.angle(df.values))
    assert np.max(np.abs(mag / CLEGG_MAG - 1)) < 1e-3
    assert np.max(np.abs(ph - CLEGG_PHASE)) < 0.05


def test_fore_high_frequency_phase_lag():
    rs = fore(hz(1.0), 0.0)
    df = describing_function(rs, np.array([hz(2000.0)]))
    assert np.degrees(np.angle(df.values[0])) == pytest.approx(-38.15, abs=0.1)


def test_sore_high_frequency_phase_lag():
    rs = sore(hz(1.0), 1.0, 0.0)
    df = describing_function(rs, np.array([hz(2000.0)]))
    assert np.degrees(np.angle(df.values[0])) == pytest.approx(-51.85, abs=0.1)


def test_even_harmonics_are_exact_zeros():
    grid = log_grid(0.1, 10.0, 10)
    for rs in (clegg(), fore(hz(2.0), 0.3), sore(hz(2.0), 1.0, -0.5)):
        h4 = hosidf(rs, grid, 4)
        assert np.all(h4.values == 0)


def test_clegg_third_harmonic_closed_form():
    grid = log_grid(0.05, 50.0, 20)
    h3 = hosidf(clegg(), grid, 3)
    mag = np.abs(h3.values) * grid
    ph = np.degrees(np.angle(h3.values))
    assert np.max(np.abs(mag / CLEGG_H3 - 1)) < 1e-9
    assert np.max(np.abs(ph)) < 1e-6


def test_no_reset_limit_kills_harmonics():
    grid = log_grid(0.1, 10.0, 10)
    rs = sore(hz(3.0), 1.0, 1.0)
    h3 = hosidf(rs, grid, 3)
    assert np.all(h3.values == 0)


def test_clegg_spectrum_monotone_in_order():
    grid = np.array([hz(1.0), hz(10.0)])
    spectrum = harmonic_spectrum(clegg(), grid, 11)
    assert len(spectrum) == 6
    assert [hr.order for hr in spectrum] == [1, 3, 5, 7, 9, 11]
    mags = np.array([np.abs(hr.values) for hr in spectrum])
    assert np.all(np.diff(mags, axis=0) < 0)


def test_clegg_third_to_first_ratio_is_frequency_independent():
    grid = log_grid(0.1, 100.0, 10)
    first = describing_function(clegg(), grid)
    third = hosidf(clegg(), grid, 3)
    ratio = np.abs(third.values) / np.abs(first.values)
    expected = CLEGG_H3 / CLEGG_MAG    # ~0.2621 from the two closed forms
    assert np.max(np.abs(ratio - expected)) < 1e-9
    assert np.max(ratio) - np.min(ratio) < 1e-12


def test_linear_limit_matches_linear_response_randomized():
    rng = np.random.default_rng(23)
    grid = log_grid(0.1, 100.0, 10)
    for _ in range(20):
        tf = random_stable_tf(rng, 6, strictly_proper=True)
        ss = tf_to_ss(tf)
        n_r = int(rng.integers(1, ss.order + 1))
        rs = ResetSystem(ss, n_r, np.ones(n_r))
        df = describing_function(rs, grid)
        ref = freq_response(ss, grid).values
        assert np.max(np.abs(df.values - ref) / np.abs(ref)) < 1e-9
        for n in (3, 5):
            assert np.all(hosidf(rs, grid, n).values == 0)


def test_gamma_bounds_enforced():
    base = StateSpace([[-1.0]], [[1.0]], [[1.0]], 0.0)
    with pytest.raises(ValueError, match="gamma"):
        ResetSystem(base, 1, [1.5])
    with pytest.raises(ValueError, match="length"):
        ResetSystem(base, 1, [0.1, 0.2])


def test_marginal_base_needs_flag():
    base = StateSpace([[0.0]], [[1.0]], [[1.0]], 0.0)
    with pytest.raises(ValueError, match="marginal"):
        ResetSystem(base, 1, [0.0])
    ResetSystem(base, 1, [0.0], allow_marginal=True)


def test_unstable_base_rejected():
    base = StateSpace([[0.5]], [[1.0]], [[1.0]], 0.0)
    with pytest.raises(ValueError, match="right half plane"):
        ResetSystem(base, 1, [0.0], allow_marginal=True)


def test_reset_matrix_structure():
    rs = lag_chain([1.0, 2.0, 3.0], [0.21, -0.22, 0.1])
    ar = rs.reset_matrix()
    assert np.allclose(np.diag(ar), [0.21, -0.22, 0.1])
    assert np.count_nonzero(ar - np.diag(np.diag(ar))) == 0


def test_lag_chain_linear_limit_is_product_of_lags():
    poles = hz(np.array([5.0, 20.0]))
    rs = lag_chain(poles, [1.0, 1.0])
    grid = log_grid(0.5, 200.0, 15)
    got = describing_function(rs, grid).values
    ref = 1.0 / ((1j * grid / poles[0] + 1) * (1j * grid / poles[1] + 1))
    assert np.max(np.abs(got - ref) / np.abs(ref)) < 1e-9


def test_gamma_batch_matches_scalar_path():
    rs = lag_chain(hz(np.array([5.0, 50.0])), [0.0, 0.0])
    grid = log_grid(1.0, 100.0, 8)
    gammas = np.array([[0.3, -0.4], [1.0, 1.0], [-1.0, 1.0]])
    batch = describing_function_gamma_batch(rs.base, 2, gammas, grid)
    for row, g in zip(batch, gammas):
        ref = describing_function(rs.with_gamma(g), grid).values
        assert np.max(np.abs(row - ref)) < 1e-12


def test_even_harmonic_response_type_rejects_nonzero():
    with pytest.raises(ValueError, match="even"):
        HarmonicResponse(np.array([1.0]), 2, np.array([1 + 0j]))


def test_hosidf_rejects_first_order():
    with pytest.raises(ValueError, match="n >= 2"):
        hosidf(clegg(), np.array([1.0]), 1)


def test_spectrum_rejects_even_n_max():
    with pytest.raises(ValueError, match="odd"):
        harmonic_spectrum(clegg(), np.array([1.0]), 4)


def test_save_harmonics_csv(tmp_path):
    from resetloop.reset import save_harmonics

    grid = np.array([hz(1.0), hz(10.0)])
    spectrum = harmonic_spectrum(clegg(), grid, 5)
    path = tmp_path / "harmonics.csv"
    save_harmonics(path, spectrum)
    lines = path.read_text().splitlines()
    assert lines[0] == "freq_hz,order,mag_db,phase_deg"
    orders = {int(ln.split(",")[1]) for ln in lines[1:]}
    assert orders == {1, 3, 5}
