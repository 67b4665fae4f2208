#!/usr/bin/env python

"""
Frequency-domain forward model of a direct-frequency-modulated BOCDA scan.

Each modulation frequency f_m places a correlation point of a fixed order at one
fiber position. Away from that point the pump-probe detuning oscillates with an
amplitude A(z) and its time statistics follow the arcsine law, so the local
Lorentzian gain is smeared over bfs ± A(z). Integrating the smeared local spectra
along the fiber yields the sonogram, correlation peak plus asymmetric background.
"""

import dataclasses
import hashlib
import json
import math

import numpy as np
import scipy.integrate

from tapscan.bocda import ConfigError, DomainError, Violation
from tapscan.bocda import bocda_fiber, bocda_log
from tapscan.bocda.util import conf, rng


DEFAULT_F_M = 699e3
DEFAULT_DELTA_F = 47e9
QUADRATURE_NODES = 512
CHUNK_ELEMENTS = 4000000
SONOGRAM_FORMAT = 'tapscan-sonogram'


@dataclasses.dataclass(frozen=True)
class NoiseModel:
	rel_sigma: float = 0.02  # multiplicative, per pixel
	floor: float = 0.005     # additive, fraction of the sonogram maximum

	@property
	def enabled(self):
		return (self.rel_sigma > 0) or (self.floor > 0)
	#enabled

#NoiseModel


@dataclasses.dataclass(frozen=True)
class ProbeSweep:
	start: float
	stop: float
	step: float

	def grid(self):
		n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
		return self.start + self.step * np.arange(n)
	#grid()

#ProbeSweep


@dataclasses.dataclass(frozen=True)
class ScanConfig:
	"""
	One BOCDA scan.

	`group_velocity` and `position_offset` are resolved against the channel when the
	configuration is built (see makeScan), so everything downstream depends on the
	configuration alone. The fiber coordinate addressed by f_m is
	order·v_g/(2·f_m) - position_offset.
	"""
	f_m_sweep: tuple
	probe_sweep: ProbeSweep
	group_velocity: float
	position_offset: float
	delta_f: float = DEFAULT_DELTA_F
	nominal_f_m: float = DEFAULT_F_M
	correlation_order: int = 1
	pump_power: float = 1.0
	probe_power: float = 1.0
	pump_frequency: float = bocda_fiber.C_VACUUM / bocda_fiber.DEFAULT_WAVELENGTH
	noise: NoiseModel = NoiseModel()
	seed: int = 0

	def __post_init__(self):
		object.__setattr__(self, 'f_m_sweep', tuple(float(f) for f in self.f_m_sweep))
	#__post_init__()


	def positions(self):
		f_m = np.asarray(self.f_m_sweep, dtype=float)
		return self.correlation_order * self.group_velocity / (2.0 * f_m) - self.position_offset
	#positions()


	def detunings(self):
		return self.probe_sweep.grid()
	#detunings()


	def resolution(self, linewidth=27e6):
		return resolution(linewidth, self.group_velocity, self.nominal_f_m, self.delta_f)
	#resolution()

#ScanConfig


@dataclasses.dataclass(frozen=True, eq=False)
class Sonogram:
	positions: np.ndarray
	detunings: np.ndarray
	intensity: np.ndarray
	meta: dict

#Sonogram


##################################################
# correlation geometry


def correlationPositions(f_m, v_g, L, offset=0.0):
	"""
	Correlation points n·v_g/(2·f_m), n = 1, 2, ..., falling inside [0, L].

	Args:
		f_m (float): modulation frequency in Hz
		v_g (float): group velocity in m/s
		L (float): channel length in meters
		offset (float): absolute coordinate of the channel start

	Returns:
		(list): fiber positions in meters, ascending (possibly empty)
	"""
	if not (f_m > 0 and v_g > 0):
		raise DomainError("modulation frequency and group velocity must be positive")
	spacing = v_g / (2.0 * f_m)
	nLo = max(1, int(math.ceil(offset / spacing)))
	nHi = int(math.floor((L + offset) / spacing))
	return [n * spacing - offset for n in range(nLo, nHi + 1)]
#correlationPositions()


def correlationSpacing(f_m, v_g):
	return v_g / (2.0 * f_m)
#correlationSpacing()


def resolution(linewidth, v_g, f_m, delta_f):
	"""Width of the correlation peak, Δν_B·v_g/(2π·f_m·Δf), in meters."""
	if not (linewidth > 0 and v_g > 0 and f_m > 0 and delta_f > 0):
		raise DomainError("resolution needs positive linewidth, group velocity, f_m and Δf")
	return linewidth * v_g / (2.0 * math.pi * f_m * delta_f)
#resolution()


def beatAmplitude(z, f_m, delta_f, v_g):
	"""
	Amplitude of the pump-probe detuning excursion at absolute coordinate z, Δf·|sin(2π·f_m·z/v_g)|.

	Vectorized over z.
	"""
	return delta_f * np.abs(np.sin(2.0 * np.pi * f_m * np.asarray(z, dtype=float) / v_g))
#beatAmplitude()


def positionSweep(positions, v_g, offset, order=1):
	"""Modulation frequencies placing the order-n correlation point at each fiber position."""
	return tuple(order * v_g / (2.0 * (np.asarray(positions, dtype=float) + offset)))
#positionSweep()


##################################################
# detuning statistics and local spectra


class ArcsineDensity(object):
	"""
	Time-averaged density of A·sin(2πt) for uniform t.

	For A > 0 this is 1/(π·sqrt(A² - δ²)) on |δ| < A; for A = 0 it is a point
	mass at zero (the density evaluates to inf there, the cdf is a step).
	"""

	def __init__(self, A):
		if not (A >= 0):
			raise DomainError("beat amplitude must not be negative, got %r" % (A,))
		self.A = float(A)
	#__init__()


	def __call__(self, delta):
		delta = np.asarray(delta, dtype=float)
		if self.A == 0:
			return np.where(delta == 0, np.inf, 0.0)
		inside = np.abs(delta) < self.A
		safe = np.where(inside, delta, 0.0)
		return np.where(inside, 1.0 / (np.pi * np.sqrt(self.A * self.A - safe * safe)), 0.0)
	#__call__()


	def cdf(self, x):
		x = np.asarray(x, dtype=float)
		if self.A == 0:
			return np.where(x >= 0, 1.0, 0.0)
		return 0.5 + np.arcsin(np.clip(x / self.A, -1.0, 1.0)) / np.pi
	#cdf()


	def binProbabilities(self, edges):
		"""Probability mass between consecutive bin edges."""
		return np.diff(self.cdf(edges))
	#binProbabilities()


	def total(self):
		"""Numerical integral of the density with the endpoint singularities weighted out."""
		if self.A == 0:
			return 1.0
		# p(δ) = (δ+A)^(-1/2)·(A-δ)^(-1/2)/π, which quad's algebraic weight handles exactly
		val,_ = scipy.integrate.quad(lambda d: 1.0 / np.pi, -self.A, self.A, weight='alg', wvar=(-0.5, -0.5))
		return val
	#total()

#ArcsineDensity


def detuningDensity(A):
	return ArcsineDensity(A)
#detuningDensity()


def lorentzian(x, linewidth):
	"""Unit-peak Lorentzian of full width `linewidth` at offset x."""
	g = 0.5 * linewidth
	return g * g / (np.asarray(x, dtype=float) ** 2 + g * g)
#lorentzian()


def smearedLorentzian(x, gamma, A):
	# closed form of (arcsine ⊗ unit-peak Lorentzian): γ·Im[1/(sqrt(w-A)·sqrt(w+A))], w = x - iγ
	w = x - 1j * gamma
	return gamma * np.imag(1.0 / (np.sqrt(w - A) * np.sqrt(w + A)))
#smearedLorentzian()


def localGainSpectrum(params, A, nu, method='analytic', nodes=QUADRATURE_NODES):
	"""
	Local gain density: the arcsine detuning density convolved with the unit-peak
	Lorentzian of the local resonance, scaled by the local coupling.

	Args:
		params (LocalParams): local channel state (bfs + bfs_offset is the resonance center)
		A (float): beat amplitude in Hz, >= 0
		nu (float or array): probe detuning(s) in Hz
		method (str): 'analytic' (closed form) or 'quadrature' (θ-substituted trapezoid)
		nodes (int): quadrature nodes over one period of θ

	Returns:
		(float or array): gain density in [0, coupling]
	"""
	if not (np.all(np.asarray(A) >= 0)):
		raise DomainError("beat amplitude must not be negative")
	x = np.asarray(np.asarray(nu, dtype=float) - params.effectiveBfs())
	if method == 'analytic':
		g = smearedLorentzian(x, 0.5 * params.linewidth, A)
	elif method == 'quadrature':
		# δ = A·sinθ turns the arcsine weight into dθ/π; over a full period the trapezoid is spectrally accurate
		theta = 2.0 * np.pi * np.arange(max(int(nodes), QUADRATURE_NODES)) / max(int(nodes), QUADRATURE_NODES)
		g = np.mean(lorentzian(x[..., None] - A * np.sin(theta), params.linewidth), axis=-1)
	else:
		raise ValueError("unknown method '%s'" % (method,))
	return params.coupling * g
#localGainSpectrum()


def monteCarloSpectrum(params, A, nu, samples=1000000, seed=0):
	"""
	Time-domain oracle: samples t uniformly, evaluates the Lorentzian at the instantaneous
	detuning A·sin(2πt) and averages.
	"""
	t = rng.generator(seed, 'monte-carlo').random(int(samples))
	delta = A * np.sin(2.0 * np.pi * t)
	nu = np.atleast_1d(np.asarray(nu, dtype=float))
	out = np.empty(nu.shape)
	center = params.effectiveBfs()
	for i,v in enumerate(nu):
		out[i] = np.mean(lorentzian(v - center - delta, params.linewidth))
	return params.coupling * out
#monteCarloSpectrum()


##################################################
# scan configuration


def makeScan(channel, positions=None, f_m_sweep=None, probe_sweep=None, position_offset='auto', group_velocity='auto', **options):
	"""
	Builds a ScanConfig for a channel, resolving the group velocity and the
	position offset (by default the nominal f_m addresses mid-channel).

	Exactly one of `positions` (fiber coordinates) and `f_m_sweep` must be given.
	"""
	order = int(options.get('correlation_order', 1))
	nominal = float(options.get('nominal_f_m', DEFAULT_F_M))
	v_g = bocda_fiber.groupVelocity(channel) if group_velocity == 'auto' else float(group_velocity)
	if position_offset == 'auto':
		position_offset = order * v_g / (2.0 * nominal) - 0.5 * channel.totalLength
	if (positions is None) == (f_m_sweep is None):
		raise ValueError("give either positions or f_m_sweep")
	if positions is not None:
		f_m_sweep = positionSweep(positions, v_g, position_offset, order)
	if probe_sweep is None:
		lo,hi = channel.bfsRange()
		probe_sweep = ProbeSweep(lo - 150e6, hi + 150e6, 1e6)
	elif not isinstance(probe_sweep, ProbeSweep):
		probe_sweep = ProbeSweep(*probe_sweep)
	return ScanConfig(f_m_sweep=f_m_sweep, probe_sweep=probe_sweep, group_velocity=v_g, position_offset=float(position_offset), **options)
#makeScan()


def validateScan(channel, cfg):
	"""
	Checks a scan against its channel.

	Returns:
		(list): Violation records, empty iff the scan can be simulated
	"""
	violations = list()
	if not cfg.f_m_sweep:
		violations.append(Violation('scan', 'empty-sweep'))
	if not (cfg.delta_f > 0):
		violations.append(Violation('scan', 'delta_f', "%r" % (cfg.delta_f,)))
	if not (cfg.probe_sweep.step > 0):
		violations.append(Violation('scan', 'probe-step', "%r" % (cfg.probe_sweep.step,)))
	if not (cfg.probe_sweep.stop > cfg.probe_sweep.start):
		violations.append(Violation('scan', 'probe-range', "%r..%r" % (cfg.probe_sweep.start, cfg.probe_sweep.stop)))
	for key in ('pump_power', 'probe_power', 'group_velocity', 'nominal_f_m'):
		if not (getattr(cfg, key) > 0):
			violations.append(Violation('scan', key, "%r" % (getattr(cfg, key),)))
	if not (isinstance(cfg.correlation_order, int) and cfg.correlation_order >= 1):
		violations.append(Violation('scan', 'correlation_order', "%r" % (cfg.correlation_order,)))
	if not (cfg.noise.rel_sigma >= 0 and cfg.noise.floor >= 0):
		violations.append(Violation('scan', 'noise'))
	if not (0 <= cfg.seed < 2**64):
		violations.append(Violation('scan', 'seed', "%r" % (cfg.seed,)))
	if violations:
		return violations

	lo,hi = channel.bfsRange()
	if not (cfg.probe_sweep.start < lo and hi < cfg.probe_sweep.stop):
		violations.append(Violation('scan', 'probe-bracket', "sweep %r..%r Hz does not bracket segment BFS %r..%r Hz" % (cfg.probe_sweep.start, cfg.probe_sweep.stop, lo, hi)))

	L = channel.totalLength
	n = cfg.correlation_order
	for f_m in cfg.f_m_sweep:
		if not (f_m > 0):
			violations.append(Violation('scan', 'f_m', "%r" % (f_m,)))
			continue
		points = correlationPositions(f_m, cfg.group_velocity, L, cfg.position_offset)
		spacing = correlationSpacing(f_m, cfg.group_velocity)
		z = n * spacing - cfg.position_offset
		if not (0.0 <= z <= L) or len(points) != 1:
			violations.append(Violation('scan', 'correlation-point', "f_m=%r Hz: order %d point at %r m, %d point(s) inside [0, %r] m" % (f_m, n, z, len(points), L)))
	return violations
#validateScan()


_scanKeys = ('POSITIONS', 'F_M_SWEEP', 'DELTA_F', 'PROBE_SWEEP', 'NOMINAL_F_M', 'CORRELATION_ORDER', 'POSITION_OFFSET',
	'GROUP_VELOCITY', 'PUMP_POWER', 'PROBE_POWER', 'PUMP_FREQUENCY', 'NOISE_REL_SIGMA', 'NOISE_FLOOR', 'SEED')


def scanKeys():
	return tuple(k.lower() for k in _scanKeys)
#scanKeys()


def parseScan(records, channel, overrides=None, source=None):
	"""
	Builds a ScanConfig from scan-file records plus `--set` style overrides.

	Args:
		records (list): conf.Record objects
		channel (Channel): the channel being scanned (resolves 'auto' values)
		overrides (dict): lower-case scan keyword -> value text; replaces the file's record

	Raises:
		ConfigError: unknown keywords, bad values, or a scan that fails validateScan
	"""
	violations = list()
	settings = dict()
	for rec in records:
		if rec.keyword not in _scanKeys:
			violations.append(Violation(rec.where(), 'unknown-keyword', rec.keyword))
		else:
			settings[rec.keyword] = (rec.args, rec.where())
	for key,value in (overrides or {}).items():
		if key.upper() not in _scanKeys:
			violations.append(Violation('--set', 'unknown-key', key))
		else:
			settings[key.upper()] = (value.replace(',', ' ').split(), '--set %s' % key)
	if violations:
		raise ConfigError(violations, source)

	def numbers(key, count=None):
		args,where = settings[key]
		if count is not None and len(args) != count:
			violations.append(Violation(where, 'argument-count', "%s expects %d value(s)" % (key, count)))
			return None
		try:
			return [conf.quantity(a) for a in args]
		except ValueError:
			violations.append(Violation(where, 'bad-value', ' '.join(args)))
			return None
	#numbers()

	options = dict()
	for key,name in (('DELTA_F','delta_f'), ('NOMINAL_F_M','nominal_f_m'), ('PUMP_POWER','pump_power'), ('PROBE_POWER','probe_power'), ('PUMP_FREQUENCY','pump_frequency')):
		if key in settings:
			vals = numbers(key, 1)
			if vals:
				options[name] = vals[0]
	if 'CORRELATION_ORDER' in settings:
		vals = numbers('CORRELATION_ORDER', 1)
		if vals:
			options['correlation_order'] = int(vals[0])
	if 'SEED' in settings:
		args,where = settings['SEED']
		try:
			options['seed'] = int(args[0])
		except (ValueError, IndexError):
			violations.append(Violation(where, 'bad-value', ' '.join(args)))
	noise = dict()
	for key,name in (('NOISE_REL_SIGMA','rel_sigma'), ('NOISE_FLOOR','floor')):
		if key in settings:
			vals = numbers(key, 1)
			if vals:
				noise[name] = vals[0]
	options['noise'] = NoiseModel(**noise)
	for key,name in (('POSITION_OFFSET','position_offset'), ('GROUP_VELOCITY','group_velocity')):
		if key in settings:
			args,_ = settings[key]
			if args and args[0].lower() == 'auto':
				options[name] = 'auto'
			else:
				vals = numbers(key, 1)
				if vals:
					options[name] = vals[0]
	if 'PROBE_SWEEP' in settings:
		vals = numbers('PROBE_SWEEP', 3)
		if vals:
			options['probe_sweep'] = ProbeSweep(*vals)
	if ('POSITIONS' in settings) == ('F_M_SWEEP' in settings):
		violations.append(Violation(source or 'scan', 'sweep', "exactly one of POSITIONS and F_M_SWEEP is required"))
	elif 'POSITIONS' in settings:
		vals = numbers('POSITIONS', 3)
		if vals:
			start,stop,step = vals
			if step > 0 and stop >= start:
				options['positions'] = ProbeSweep(start, stop, step).grid()
			else:
				violations.append(Violation(settings['POSITIONS'][1], 'bad-value', "POSITIONS %r %r %r" % tuple(vals)))
	else:
		vals = numbers('F_M_SWEEP')
		if vals:
			options['f_m_sweep'] = vals
	if violations:
		raise ConfigError(violations, source)

	cfg = makeScan(channel, **options)
	violations = validateScan(channel, cfg)
	if violations:
		raise ConfigError(violations, source)
	return cfg
#parseScan()


def loadScan(path, channel, overrides=None):
	return parseScan(conf.readRecords(path), channel, overrides, path)
#loadScan()


def scanText(cfg):
	"""The effective scan configuration in the scan-file dialect (every value explicit)."""
	fmt = conf.formatNumber
	p = cfg.probe_sweep
	return "".join([
		conf.formatRecord('F_M_SWEEP', [fmt(f) for f in cfg.f_m_sweep]),
		conf.formatRecord('DELTA_F', [fmt(cfg.delta_f)]),
		conf.formatRecord('PROBE_SWEEP', [fmt(p.start), fmt(p.stop), fmt(p.step)]),
		conf.formatRecord('NOMINAL_F_M', [fmt(cfg.nominal_f_m)]),
		conf.formatRecord('CORRELATION_ORDER', [cfg.correlation_order]),
		conf.formatRecord('POSITION_OFFSET', [fmt(cfg.position_offset)]),
		conf.formatRecord('GROUP_VELOCITY', [fmt(cfg.group_velocity)]),
		conf.formatRecord('PUMP_POWER', [fmt(cfg.pump_power)]),
		conf.formatRecord('PROBE_POWER', [fmt(cfg.probe_power)]),
		conf.formatRecord('PUMP_FREQUENCY', [fmt(cfg.pump_frequency)]),
		conf.formatRecord('NOISE_REL_SIGMA', [fmt(cfg.noise.rel_sigma)]),
		conf.formatRecord('NOISE_FLOOR', [fmt(cfg.noise.floor)]),
		conf.formatRecord('SEED', [cfg.seed]),
	])
#scanText()


def scanDict(cfg):
	d = dataclasses.asdict(cfg)
	d['f_m_sweep'] = list(cfg.f_m_sweep)
	return d
#scanDict()


def scanFromDict(d):
	d = dict(d)
	d['probe_sweep'] = ProbeSweep(**d['probe_sweep'])
	d['noise'] = NoiseModel(**d['noise'])
	return ScanConfig(**d)
#scanFromDict()


def scanDigest(cfg):
	return hashlib.sha256(scanText(cfg).encode('utf-8')).hexdigest()
#scanDigest()


##################################################
# synthesis


def integrationGrid(channel, cfg):
	"""
	Uniform z nodes for the along-fiber integral: step at most one eighth of the finest
	correlation peak and a quarter of the narrowest feature.
	"""
	lw = min(s.gain_linewidth for s in channel.segments)
	res = resolution(lw, cfg.group_velocity, max(cfg.f_m_sweep), cfg.delta_f)
	dz = res / 8.0
	for f in channel.features:
		if f.kind == bocda_fiber.BEND:
			dz = min(dz, f.extent / 4.0)
		elif f.bfs_offset and f.width:
			dz = min(dz, f.width / 4.0)
	L = channel.totalLength
	n = int(math.ceil(L / dz)) + 1
	return np.linspace(0.0, L, n)
#integrationGrid()


def synthesizeSonogram(channel, cfg, noisy=True, validate=True):
	"""
	Simulates the sonogram of a channel.

	intensity(f_m, ν) = ∫ w(z)·coupling(z)·G(ν; bfs(z), Δν_B(z), A(z + offset)) dz,
	w(z) = pump·probe·T(0,L)·T(0,z), then per-pixel seeded noise (see addNoise).

	Args:
		channel (Channel): ground truth
		cfg (ScanConfig): scan
		noisy (bool): apply cfg.noise with cfg.seed
		validate (bool): reject invalid channel or scan before simulating

	Returns:
		(Sonogram): positions x detunings

	Raises:
		ConfigError: channel or scan violations
	"""
	if validate:
		violations = bocda_fiber.validateChannel(channel) + validateScan(channel, cfg)
		if violations:
			raise ConfigError(violations, channel.name or None)

	logger = bocda_log.getLogger()
	positions = cfg.positions()
	nu = cfg.detunings()
	z = integrationGrid(channel, cfg)
	logger.log("synthesizing sonogram (%d positions x %d detunings, %d nodes) ..." % (len(positions), len(nu), len(z)))

	prof = bocda_fiber.sampleProfile(channel, z)
	tEnd = bocda_fiber.localProfile(channel, channel.totalLength).transmission_to_z
	weight = cfg.pump_power * cfg.probe_power * tEnd * prof.transmission_to_z * prof.coupling
	# trapezoid weights
	tw = np.empty_like(z)
	dz = np.diff(z)
	tw[0] = 0.5 * dz[0]
	tw[-1] = 0.5 * dz[-1]
	tw[1:-1] = 0.5 * (dz[:-1] + dz[1:])
	weight = weight * tw

	x = nu[None, None, :] - prof.effectiveBfs()[None, :, None]
	gamma = 0.5 * prof.linewidth[None, :, None]
	absolute = z + cfg.position_offset
	intensity = np.empty((len(positions), len(nu)))
	chunk = max(1, CHUNK_ELEMENTS // (len(z) * len(nu)))
	for i0 in range(0, len(positions), chunk):
		f_m = np.asarray(cfg.f_m_sweep[i0:i0 + chunk])
		A = beatAmplitude(absolute[None, :], f_m[:, None], cfg.delta_f, cfg.group_velocity)
		G = smearedLorentzian(x, gamma, A[:, :, None])
		intensity[i0:i0 + chunk] = np.einsum('pzn,z->pn', G, weight)
	np.maximum(intensity, 0.0, out=intensity)

	meta = {
		'format': SONOGRAM_FORMAT,
		'channel_digest': bocda_fiber.digest(channel),
		'channel_length': channel.totalLength,
		'scan': scanDict(cfg),
		'scan_digest': scanDigest(cfg),
		'noise_applied': False,
		'noise_stream': None,
	}
	sonogram = Sonogram(positions, nu, intensity, meta)
	logger.log(" OK\n")
	if noisy and cfg.noise.enabled:
		sonogram = addNoise(sonogram, cfg.noise, cfg.seed)
	return sonogram
#synthesizeSonogram()


def addNoise(sonogram, noise, seed, stream=rng.SONOGRAM_NOISE):
	"""
	Applies the noise model to a noiseless sonogram.

	Row i draws from the sub-stream (seed, stream, i), so the result depends on the
	seed and the pixel, never on evaluation order. Pixel value becomes
	I·(1 + rel_sigma·n1) + floor·max(I)·n2, clipped at zero.
	"""
	base = sonogram.intensity
	peak = float(np.max(base)) if base.size else 0.0
	out = np.empty_like(base)
	for i in range(base.shape[0]):
		n = rng.generator(seed, stream, i).standard_normal((2, base.shape[1]))
		out[i] = base[i] * (1.0 + noise.rel_sigma * n[0]) + noise.floor * peak * n[1]
	np.maximum(out, 0.0, out=out)
	meta = dict(sonogram.meta, noise_applied=True, noise_stream=stream, noise_seed=int(seed))
	return Sonogram(sonogram.positions, sonogram.detunings, out, meta)
#addNoise()


##################################################
# serialization


def _row(values):
	return " ".join("%.17g" % v for v in values) + "\n"
#_row()


def sidecarPath(path):
	return path + ".json"
#sidecarPath()


def writeSonogram(sonogram, path):
	"""
	Writes the text matrix and its JSON metadata sidecar; returns both paths.

	Values use 17 significant digits, which read back bit-identical.
	"""
	with open(path, 'w') as f:
		f.write("# %s\n" % SONOGRAM_FORMAT)
		f.write("# positions_m %d\n" % len(sonogram.positions))
		f.write(_row(sonogram.positions))
		f.write("# detunings_hz %d\n" % len(sonogram.detunings))
		f.write(_row(sonogram.detunings))
		f.write("# intensity %d %d (rows: positions, columns: detunings)\n" % sonogram.intensity.shape)
		for row in sonogram.intensity:
			f.write(_row(row))
	with open(sidecarPath(path), 'w') as f:
		json.dump(sonogram.meta, f, indent=1, sort_keys=True)
		f.write("\n")
	return [path, sidecarPath(path)]
#writeSonogram()


def readSonogram(path):
	"""
	Reads a sonogram written by writeSonogram.

	Raises:
		ConfigError: missing sidecar or malformed matrix
	"""
	def bad(detail):
		return ConfigError([Violation(path, 'malformed-sonogram', detail)], path)
	try:
		with open(path, 'r') as f:
			lines = f.read().splitlines()
		with open(sidecarPath(path), 'r') as f:
			meta = json.load(f)
	except (IOError, OSError, ValueError) as e:
		raise ConfigError([Violation(path, 'unreadable', str(e))], path)
	if len(lines) < 5 or lines[0].strip() != "# %s" % SONOGRAM_FORMAT:
		raise bad("header")
	try:
		nPos = int(lines[1].split()[2])
		positions = np.array([float(v) for v in lines[2].split()])
		nNu = int(lines[3].split()[2])
		detunings = np.array([float(v) for v in lines[4].split()])
		rows = [[float(v) for v in line.split()] for line in lines[6:6 + nPos]]
		intensity = np.array(rows, dtype=float).reshape(nPos, nNu)
	except (ValueError, IndexError):
		raise bad("body")
	if len(positions) != nPos or len(detunings) != nNu:
		raise bad("grid sizes")
	return Sonogram(positions, detunings, intensity, meta)
#readSonogram()
