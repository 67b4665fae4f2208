import numpy as np
import pytest
from hypothesis import given, strategies as st

from tapscan.bocda import ConfigError, DomainError
from tapscan.bocda import bocda_fiber, bocda_forward


V_G = bocda_fiber.C_VACUUM / 1.468


def _scan(channel, positions, sweep=(10.75e9, 10.95e9, 2e6), **options):
	return bocda_forward.makeScan(channel, positions=positions, probe_sweep=sweep, **options)
#_scan()


##################################################
# correlation geometry


def test_correlation_spacing():
	assert bocda_forward.correlationSpacing(699e3, V_G) == pytest.approx(146.0, rel=0.02)


def test_resolution_near_three_centimeters():
	res = bocda_forward.resolution(27e6, V_G, 699e3, 47e9)
	assert 0.0255 <= res <= 0.0345


def test_resolution_domain():
	with pytest.raises(DomainError):
		bocda_forward.resolution(27e6, V_G, 699e3, 0.0)


def test_single_correlation_point_inside_short_channel():
	spacing = bocda_forward.correlationSpacing(699e3, V_G)
	offset = spacing - 1.5
	points = bocda_forward.correlationPositions(699e3, V_G, 3.0, offset)
	assert len(points) == 1
	assert points[0] == pytest.approx(1.5)
	assert bocda_forward.correlationPositions(699e3, V_G, 3.0, 0.0) == []


def test_beat_amplitude_vanishes_at_correlation_point():
	spacing = bocda_forward.correlationSpacing(699e3, V_G)
	assert bocda_forward.beatAmplitude(spacing, 699e3, 47e9, V_G) < 1e-6 * 47e9
	assert bocda_forward.beatAmplitude(spacing / 2.0, 699e3, 47e9, V_G) == pytest.approx(47e9)


@given(z=st.floats(min_value=0.0, max_value=300.0), order=st.integers(min_value=1, max_value=3))
def test_beat_amplitude_repeats_with_correlation_spacing(z, order):
	spacing = bocda_forward.correlationSpacing(699e3, V_G)
	a = bocda_forward.beatAmplitude(z, 699e3, 47e9, V_G)
	b = bocda_forward.beatAmplitude(z + order * spacing, 699e3, 47e9, V_G)
	assert b == pytest.approx(a, abs=1e-6 * 47e9)


def test_beat_amplitude_one_centimeter_off_peak():
	v_g = 2.0419e8
	spacing = bocda_forward.correlationSpacing(699e3, v_g)
	assert bocda_forward.beatAmplitude(spacing + 0.01, 699e3, 47e9, v_g) == pytest.approx(10.11e6, rel=1e-3)


def test_scan_addresses_requested_positions(cleanChannel):
	positions = np.array([0.25, 1.0, 2.25])
	cfg = _scan(cleanChannel, positions)
	assert np.allclose(cfg.positions(), positions, atol=1e-9)
	assert cfg.resolution() == pytest.approx(bocda_forward.resolution(27e6, V_G, 699e3, 47e9))


##################################################
# detuning statistics and local spectra


@given(A=st.floats(min_value=1e3, max_value=1e10))
def test_arcsine_density_is_normalized(A):
	density = bocda_forward.detuningDensity(A)
	edges = np.linspace(-1.5 * A, 1.5 * A, 41)
	assert np.sum(density.binProbabilities(edges)) == pytest.approx(1.0)
	assert density.total() == pytest.approx(1.0, rel=1e-6)


def test_arcsine_density_point_mass():
	density = bocda_forward.detuningDensity(0.0)
	assert np.all(density.binProbabilities(np.array([-1.0, -0.5, 0.5, 1.0])) == [0.0, 1.0, 0.0])
	with pytest.raises(DomainError):
		bocda_forward.detuningDensity(-1.0)


@pytest.mark.parametrize("ratio", [0.1, 1.0, 10.0])
def test_local_spectrum_methods_agree(ratio):
	params = bocda_fiber.LocalParams(bfs=10.85e9, linewidth=27e6, coupling=0.8, transmission_to_z=1.0)
	A = ratio * params.linewidth
	nu = params.bfs + np.linspace(-2.0 * A - 3.0 * params.linewidth, 2.0 * A + 3.0 * params.linewidth, 61)
	analytic = bocda_forward.localGainSpectrum(params, A, nu)
	quadrature = bocda_forward.localGainSpectrum(params, A, nu, method='quadrature')
	sampled = bocda_forward.monteCarloSpectrum(params, A, nu, samples=1000000, seed=11)
	peak = np.max(analytic)
	assert np.max(np.abs(analytic - quadrature)) <= 0.02 * peak
	assert np.max(np.abs(analytic - sampled)) <= 0.02 * peak
	assert np.all(analytic <= params.coupling + 1e-12)


def test_local_spectrum_unsmeared_is_lorentzian():
	params = bocda_fiber.LocalParams(bfs=10.85e9, linewidth=27e6, coupling=1.0, transmission_to_z=1.0)
	nu = params.bfs + np.linspace(-100e6, 100e6, 21)
	assert np.allclose(bocda_forward.localGainSpectrum(params, 0.0, nu), bocda_forward.lorentzian(nu - params.bfs, 27e6), atol=1e-9)


def test_local_spectrum_rejects_unknown_method():
	params = bocda_fiber.LocalParams(bfs=10.85e9, linewidth=27e6, coupling=1.0, transmission_to_z=1.0)
	with pytest.raises(ValueError):
		bocda_forward.localGainSpectrum(params, 1e6, params.bfs, method='simpson')


##################################################
# scan validation and files


def test_validate_scan_sweep_bracket(cleanChannel):
	cfg = _scan(cleanChannel, [1.0], sweep=(10.9e9, 11.0e9, 1e6))
	assert [v.rule for v in bocda_forward.validateScan(cleanChannel, cfg)] == ['probe-bracket']


def test_validate_scan_point_outside_channel(cleanChannel):
	cfg = _scan(cleanChannel, [1.0, 5.0])
	violations = bocda_forward.validateScan(cleanChannel, cfg)
	assert [v.rule for v in violations] == ['correlation-point']
	assert 'f_m=' in violations[0].detail


def test_validate_scan_settings(cleanChannel):
	cfg = _scan(cleanChannel, [1.0], delta_f=0.0, correlation_order=0, seed=-1)
	rules = [v.rule for v in bocda_forward.validateScan(cleanChannel, cfg)]
	assert rules == ['delta_f', 'correlation_order', 'seed']


SCAN_TEXT = """
POSITIONS 0.5 2.0 0.5
PROBE_SWEEP 10.75G 10.95G 2M
DELTA_F 47G
NOMINAL_F_M 699k
POSITION_OFFSET auto
NOISE_REL_SIGMA 0.02
NOISE_FLOOR 0.005
SEED 1
"""


def test_load_scan(writeConf, cleanChannel):
	cfg = bocda_forward.loadScan(writeConf('scan.conf', SCAN_TEXT), cleanChannel)
	assert np.allclose(cfg.positions(), [0.5, 1.0, 1.5, 2.0])
	assert cfg.seed == 1
	assert cfg.noise == bocda_forward.NoiseModel(0.02, 0.005)
	assert len(cfg.detunings()) == 101


def test_load_scan_overrides(writeConf, cleanChannel):
	cfg = bocda_forward.loadScan(writeConf('scan.conf', SCAN_TEXT), cleanChannel, {'seed': '9', 'noise_floor': '0'})
	assert cfg.seed == 9
	assert cfg.noise.floor == 0.0
	with pytest.raises(ConfigError) as info:
		bocda_forward.loadScan(writeConf('scan.conf', SCAN_TEXT), cleanChannel, {'colour': 'blue'})
	assert info.value.violations[0].rule == 'unknown-key'


def test_load_scan_rejects_both_sweeps(writeConf, cleanChannel):
	with pytest.raises(ConfigError) as info:
		bocda_forward.loadScan(writeConf('scan.conf', SCAN_TEXT + "F_M_SWEEP 699k\n"), cleanChannel)
	assert [v.rule for v in info.value.violations] == ['sweep']


##################################################
# synthesis


@pytest.fixture
def insertScan(insertChannel):
	return _scan(insertChannel, [0.5, 1.6, 2.6], sweep=(10.75e9, 11.10e9, 2e6), seed=5)
#insertScan()


def test_sonogram_peaks_follow_segment_shift(insertChannel, insertScan):
	sonogram = bocda_forward.synthesizeSonogram(insertChannel, insertScan, noisy=False)
	assert sonogram.intensity.shape == (3, len(insertScan.detunings()))
	assert np.all(sonogram.intensity >= 0.0)
	peaks = sonogram.detunings[np.argmax(sonogram.intensity, axis=1)]
	smf = insertChannel.segments[0].bfs()
	hi = insertChannel.segments[1].bfs()
	assert list(peaks) == pytest.approx([smf, hi, smf], abs=4e6)
	assert sonogram.meta['channel_digest'] == bocda_fiber.digest(insertChannel)
	assert sonogram.meta['noise_applied'] is False


def test_gain_scales_with_gain_coeff():
	sonograms = list()
	for coeff in (1.0, 2.0):
		channel = bocda_fiber.Channel([bocda_fiber.FiberSegment(length=2.5, gain_coeff=coeff)])
		cfg = _scan(channel, np.array([0.5, 1.25, 2.0]))
		sonograms.append(bocda_forward.synthesizeSonogram(channel, cfg, noisy=False))
	assert np.allclose(sonograms[1].intensity, 2.0 * sonograms[0].intensity, rtol=1e-12, atol=0.0)


def test_bend_response_grows_with_loss():
	def peakAt(loss):
		features = [bocda_fiber.bendTap(1.5, loss_fraction=loss)] if loss else []
		channel = bocda_fiber.Channel([bocda_fiber.FiberSegment(length=2.5)], features)
		cfg = _scan(channel, np.array([1.0, 1.5]))
		return np.max(bocda_forward.synthesizeSonogram(channel, cfg, noisy=False).intensity, axis=1)
	#peakAt()
	depths = [1.0 - (p[1] / p[0]) / (c[1] / c[0]) for p,c in ((peakAt(loss), peakAt(0.0)) for loss in (0.01, 0.05, 0.10))]
	assert 0.0 < depths[0] < depths[1] < depths[2]


def test_sonogram_is_deterministic(insertChannel, insertScan):
	a = bocda_forward.synthesizeSonogram(insertChannel, insertScan)
	b = bocda_forward.synthesizeSonogram(insertChannel, insertScan)
	assert np.array_equal(a.intensity, b.intensity)
	assert a.meta['noise_applied'] is True
	clean = bocda_forward.synthesizeSonogram(insertChannel, insertScan, noisy=False)
	other = bocda_forward.addNoise(clean, insertScan.noise, insertScan.seed + 1)
	assert not np.array_equal(a.intensity, other.intensity)
	assert np.array_equal(a.intensity, bocda_forward.addNoise(clean, insertScan.noise, insertScan.seed).intensity)


def test_synthesis_rejects_invalid_scan(cleanChannel):
	cfg = _scan(cleanChannel, [1.0], sweep=(10.9e9, 11.0e9, 1e6))
	with pytest.raises(ConfigError):
		bocda_forward.synthesizeSonogram(cleanChannel, cfg)


def test_sonogram_file_reads_back_exactly(tmp_path, insertChannel, insertScan):
	sonogram = bocda_forward.synthesizeSonogram(insertChannel, insertScan)
	path = str(tmp_path / "insert.sonogram")
	assert bocda_forward.writeSonogram(sonogram, path) == [path, path + ".json"]
	again = bocda_forward.readSonogram(path)
	assert np.array_equal(again.positions, sonogram.positions)
	assert np.array_equal(again.detunings, sonogram.detunings)
	assert np.array_equal(again.intensity, sonogram.intensity)
	assert again.meta['scan_digest'] == sonogram.meta['scan_digest']
	assert bocda_forward.scanFromDict(again.meta['scan']) == insertScan


def test_read_sonogram_errors(tmp_path):
	path = tmp_path / "broken.sonogram"
	path.write_text("# not a sonogram\n")
	with pytest.raises(ConfigError) as info:
		bocda_forward.readSonogram(str(path))
	assert info.value.violations[0].rule == 'unreadable'
	(tmp_path / "broken.sonogram.json").write_text("{}\n")
	with pytest.raises(ConfigError) as info:
		bocda_forward.readSonogram(str(path))
	assert info.value.violations[0].rule == 'malformed-sonogram'
