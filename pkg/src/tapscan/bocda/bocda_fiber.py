#!/usr/bin/env python

"""
Ground-truth model of an optical fiber channel: ordered segments carrying Brillouin
parameters, plus point and extended features (connectors, splices, tap couplers,
evanescent bend taps, breaks) that modify coupling, transmission and the local
Brillouin shift seen by a correlation-domain measurement.
"""

import dataclasses
import hashlib
import math

import numpy as np

from tapscan.bocda import ConfigError, DomainError, Violation
from tapscan.bocda.util import conf


C_VACUUM = 299792458.0
DEFAULT_WAVELENGTH = 1550e-9
LENGTH_TOLERANCE = 1e-6
MAX_RAYLEIGH_OFFSET_DB = 0.02

CONNECTOR = 'Connector'
SPLICE = 'SpliceJoint'
TAP = 'TapCoupler'
BEND = 'BendTap'
BREAK = 'Break'
FEATURE_KINDS = (CONNECTOR, SPLICE, TAP, BEND, BREAK)
POINT_KINDS = (CONNECTOR, SPLICE, TAP, BREAK)

# segment parameter presets; the 980A acoustic velocity puts its BFS ~150 MHz above SMF28 at 1550 nm
PRESETS = {
	'SMF28': {'n_eff': 1.447, 'n_g': 1.468, 'v_ac': 5811.15, 'gain_linewidth': 27e6, 'gain_coeff': 1.0, 'attenuation': 2e-4},
	'980A':  {'n_eff': 1.447, 'n_g': 1.468, 'v_ac': 5891.50, 'gain_linewidth': 27e6, 'gain_coeff': 1.0, 'attenuation': 2e-4},
}


@dataclasses.dataclass(frozen=True)
class FiberSegment:
	length: float
	n_eff: float = 1.447
	n_g: float = 1.468
	v_ac: float = 5811.15
	gain_linewidth: float = 27e6
	gain_coeff: float = 1.0
	attenuation: float = 2e-4
	label: str = 'SMF28'
	rayleigh_offset_db: float = 0.0
	start: float = None  # optional declared start; None means "where the previous segment ends"

	def bfs(self, wavelength=DEFAULT_WAVELENGTH):
		return brillouinShift(self.n_eff, self.v_ac, wavelength)
	#bfs()

#FiberSegment


@dataclasses.dataclass(frozen=True)
class Feature:
	"""
	A localized modifier of the channel.

	Which optional fields apply depends on `kind`: TapCoupler uses split_fraction,
	bfs_offset and width; BendTap uses loss_fraction and extent; Connector uses
	loss_fraction, bfs_offset, width and reflectance_db; SpliceJoint uses
	loss_fraction; Break drops transmission to zero.
	"""
	kind: str
	position: float
	split_fraction: float = None
	loss_fraction: float = None
	extent: float = None
	bfs_offset: float = 0.0
	width: float = None
	reflectance_db: float = None

	def isPoint(self):
		return self.kind in POINT_KINDS
	#isPoint()


	def throughLoss(self):
		"""Fraction of the power lost by light passing the feature."""
		if self.kind == TAP:
			return self.split_fraction
		if self.kind == BREAK:
			return 1.0
		return self.loss_fraction or 0.0
	#throughLoss()

#Feature


def connector(position, loss_fraction=0.03, bfs_offset=8e6, width=0.01, reflectance_db=None):
	return Feature(CONNECTOR, position, loss_fraction=loss_fraction, bfs_offset=bfs_offset, width=width, reflectance_db=reflectance_db)
#connector()


def splice(position, loss_fraction=0.005):
	return Feature(SPLICE, position, loss_fraction=loss_fraction)
#splice()


def tapCoupler(position, split_fraction=0.01, bfs_offset=5e6, width=0.01):
	return Feature(TAP, position, split_fraction=split_fraction, bfs_offset=bfs_offset, width=width)
#tapCoupler()


def bendTap(position, loss_fraction=0.01, extent=0.10):
	return Feature(BEND, position, loss_fraction=loss_fraction, extent=extent)
#bendTap()


def fiberBreak(position):
	return Feature(BREAK, position)
#fiberBreak()


@dataclasses.dataclass(frozen=True)
class LocalParams:
	"""
	Channel state at one position (or, from sampleProfile, at an array of positions).

	`bfs` is the owning segment's shift 2·n_eff·v_ac/λ, never altered by features;
	`bfs_offset` carries the localized excursion of connectors and tap couplers.
	"""
	bfs: object
	linewidth: object
	coupling: object
	transmission_to_z: object
	bfs_offset: object = 0.0

	def effectiveBfs(self):
		return self.bfs + self.bfs_offset
	#effectiveBfs()

#LocalParams


@dataclasses.dataclass(frozen=True)
class Channel:
	segments: tuple
	features: tuple = ()
	wavelength: float = DEFAULT_WAVELENGTH
	bend_k: float = 3.0
	length: float = None  # optional declared total length
	name: str = ''

	def __post_init__(self):
		object.__setattr__(self, 'segments', tuple(self.segments))
		object.__setattr__(self, 'features', tuple(self.features))
	#__post_init__()


	@property
	def totalLength(self):
		return math.fsum(s.length for s in self.segments)
	#totalLength


	@property
	def boundaries(self):
		return np.concatenate(([0.0], np.cumsum([s.length for s in self.segments])))
	#boundaries


	def bfsRange(self):
		values = [s.bfs(self.wavelength) for s in self.segments]
		return min(values), max(values)
	#bfsRange()

#Channel


##################################################
# physics


def brillouinShift(n_eff, v_ac, wavelength):
	"""
	Brillouin frequency shift 2·n_eff·v_ac/λ.

	Args:
		n_eff (float): effective refractive index
		v_ac (float): acoustic velocity in m/s (zero is allowed and yields zero)
		wavelength (float): pump vacuum wavelength in meters

	Returns:
		(float): shift in Hz

	Raises:
		DomainError: for a non-positive index or wavelength, or a negative acoustic velocity
	"""
	if not (n_eff > 0):
		raise DomainError("effective index must be positive, got %r" % (n_eff,))
	if not (wavelength > 0):
		raise DomainError("wavelength must be positive, got %r" % (wavelength,))
	if not (v_ac >= 0):
		raise DomainError("acoustic velocity must not be negative, got %r" % (v_ac,))
	return (2.0 / wavelength) * n_eff * v_ac
#brillouinShift()


def groupVelocity(channel):
	"""Length-weighted group velocity c·L/Σ(n_g·length) of the whole channel."""
	return C_VACUUM * channel.totalLength / math.fsum(s.n_g * s.length for s in channel.segments)
#groupVelocity()


def _bendWindow(z, feature):
	ext = feature.extent
	u = np.clip((z - (feature.position - 0.5 * ext)) / ext, 0.0, 1.0)
	rc = 0.5 * (1.0 - np.cos(2.0 * np.pi * u))
	cumulative = u - np.sin(2.0 * np.pi * u) / (2.0 * np.pi)
	return rc, cumulative
#_bendWindow()


def sampleProfile(channel, z):
	"""
	Vectorized localProfile over an array of positions.

	Returns:
		(LocalParams): each field an array shaped like `z`
	"""
	z = np.asarray(z, dtype=float)
	L = channel.totalLength
	if z.size and ((np.min(z) < 0.0) or (np.max(z) > L)):
		raise DomainError("position outside channel [0, %r] m" % (L,))

	segs = channel.segments
	b = channel.boundaries
	idx = np.clip(np.searchsorted(b, z, side='right') - 1, 0, len(segs) - 1)

	bfs = np.array([s.bfs(channel.wavelength) for s in segs])[idx]
	linewidth = np.array([s.gain_linewidth for s in segs])[idx]
	coupling = np.array([s.gain_coeff for s in segs], dtype=float)[idx]

	attDb = np.array([s.attenuation for s in segs])
	cumDb = np.concatenate(([0.0], np.cumsum(attDb * np.diff(b))))
	transmission = 10.0 ** (-(cumDb[idx] + attDb[idx] * (z - b[idx])) / 10.0)
	bfsOffset = np.zeros_like(z)

	for f in channel.features:
		if f.kind == BEND:
			rc, cumulative = _bendWindow(z, f)
			coupling = coupling * np.maximum(0.0, 1.0 - channel.bend_k * f.loss_fraction * rc)
			transmission = transmission * (1.0 - f.loss_fraction) ** cumulative
		else:
			transmission = transmission * np.where(z > f.position, 1.0 - f.throughLoss(), 1.0)
			if f.bfs_offset and f.width:
				bfsOffset = bfsOffset + f.bfs_offset * np.exp(-4.0 * math.log(2.0) * ((z - f.position) / f.width) ** 2)
	#foreach feature

	return LocalParams(bfs, linewidth, coupling, transmission, bfsOffset)
#sampleProfile()


def localProfile(channel, z):
	"""
	Channel state at one position.

	Args:
		channel (Channel): the channel
		z (float): position in meters, 0 <= z <= L

	Returns:
		(LocalParams): bfs and linewidth of the owning segment, coupling after bend
			suppression, transmission from the channel start to z, localized BFS excursion

	Raises:
		DomainError: z outside the channel
	"""
	p = sampleProfile(channel, np.array([float(z)]))
	return LocalParams(float(p.bfs[0]), float(p.linewidth[0]), float(p.coupling[0]), float(p.transmission_to_z[0]), float(p.bfs_offset[0]))
#localProfile()


##################################################
# validation


def validateChannel(channel):
	"""
	Checks every channel invariant.

	Returns:
		(list): Violation records, empty iff the channel is well formed
	"""
	violations = list()
	if not (channel.wavelength > 0):
		violations.append(Violation('channel', 'wavelength', "%r" % (channel.wavelength,)))
	if not (channel.bend_k >= 0):
		violations.append(Violation('channel', 'bend_k', "%r" % (channel.bend_k,)))
	if not channel.segments:
		violations.append(Violation('channel', 'no-segments'))
		return violations

	end = 0.0
	for n,s in enumerate(channel.segments):
		subject = "segment[%d] (%s)" % (n, s.label)
		checks = (
			('length', s.length > 0),
			('n_eff-range', 1.0 <= s.n_eff <= 2.0),
			('n_g-range', 1.0 <= s.n_g <= 2.0),
			('v_ac', s.v_ac > 0),
			('gain_linewidth', s.gain_linewidth > 0),
			('gain_coeff', s.gain_coeff >= 0),
			('attenuation', s.attenuation >= 0),
			('rayleigh-offset', abs(s.rayleigh_offset_db) <= MAX_RAYLEIGH_OFFSET_DB),
		)
		for rule,ok in checks:
			if not ok:
				violations.append(Violation(subject, rule))
		if (s.start is not None) and abs(s.start - end) > LENGTH_TOLERANCE:
			kind = "gap" if s.start > end else "overlap"
			violations.append(Violation(subject, 'partition', "%s: starts at %r m, previous segment ends at %r m" % (kind, s.start, end)))
		end += s.length
	#foreach segment

	L = channel.totalLength
	if (channel.length is not None) and abs(channel.length - L) > LENGTH_TOLERANCE:
		violations.append(Violation('channel', 'partition', "segments sum to %r m, declared length is %r m" % (L, channel.length)))

	prev = None
	for n,f in enumerate(channel.features):
		subject = "feature[%d] (%s)" % (n, f.kind)
		if f.kind not in FEATURE_KINDS:
			violations.append(Violation(subject, 'kind', f.kind))
			continue
		if not (0.0 <= f.position <= L):
			violations.append(Violation(subject, 'position-range', "%r m not in [0, %r] m" % (f.position, L)))
		if f.kind == TAP and not (f.split_fraction is not None and 0.0 < f.split_fraction <= 0.5):
			violations.append(Violation(subject, 'split_fraction-range', "%r" % (f.split_fraction,)))
		if f.kind == BEND:
			if not (f.loss_fraction is not None and 0.0 < f.loss_fraction <= 0.5):
				violations.append(Violation(subject, 'loss_fraction-range', "%r" % (f.loss_fraction,)))
			if not (f.extent is not None and f.extent > 0):
				violations.append(Violation(subject, 'extent', "%r" % (f.extent,)))
		if f.kind in (CONNECTOR, SPLICE) and not (0.0 <= (f.loss_fraction or 0.0) < 1.0):
			violations.append(Violation(subject, 'loss_fraction-range', "%r" % (f.loss_fraction,)))
		if f.bfs_offset and not (f.width is not None and f.width > 0):
			violations.append(Violation(subject, 'width', "%r" % (f.width,)))
		if prev is not None:
			if f.position < prev.position:
				violations.append(Violation(subject, 'order', "%r m follows %r m" % (f.position, prev.position)))
			elif f.position == prev.position and f.isPoint() and prev.isPoint():
				violations.append(Violation(subject, 'shared-position', "%r m" % (f.position,)))
		prev = f
	#foreach feature

	return violations
#validateChannel()


##################################################
# channel files


_kindNames = {
	'connector': CONNECTOR, 'splice': SPLICE, 'splicejoint': SPLICE, 'tap': TAP, 'tapcoupler': TAP,
	'bend': BEND, 'bendtap': BEND, 'break': BREAK,
}
_segmentKeys = {
	'length': conf.quantity, 'n_eff': float, 'n_g': float, 'v_ac': float, 'linewidth': conf.quantity,
	'gain_coeff': float, 'atten_db_per_m': float, 'label': str, 'rayleigh_offset_db': float,
	'start': conf.quantity, 'preset': str,
}
_featureKeys = {
	'kind': str, 'position': conf.quantity, 'split_fraction': float, 'loss_fraction': float,
	'extent': conf.quantity, 'bfs_offset': conf.quantity, 'width': conf.quantity, 'reflectance_db': float,
}
_featureFactories = {CONNECTOR: connector, SPLICE: splice, TAP: tapCoupler, BEND: bendTap}
_featureFields = {
	CONNECTOR: ('loss_fraction', 'bfs_offset', 'width', 'reflectance_db'),
	SPLICE: ('loss_fraction',),
	TAP: ('split_fraction', 'bfs_offset', 'width'),
	BEND: ('loss_fraction', 'extent'),
}


def _parseSegment(record, violations):
	params = conf.parseParams(record, _segmentKeys, violations)
	preset = params.pop('preset', 'SMF28')
	if preset.upper() not in PRESETS:
		violations.append(Violation(record.where(), 'unknown-preset', preset))
		return None
	values = dict(PRESETS[preset.upper()], label=preset.upper())
	rename = {'linewidth': 'gain_linewidth', 'atten_db_per_m': 'attenuation'}
	for key,val in params.items():
		values[rename.get(key, key)] = val
	if 'length' not in values:
		violations.append(Violation(record.where(), 'missing-key', 'length'))
		return None
	return FiberSegment(**values)
#_parseSegment()


def _parseFeature(record, violations):
	params = conf.parseParams(record, _featureKeys, violations)
	kindName = params.pop('kind', None)
	kind = _kindNames.get((kindName or '').lower().replace('_',''))
	if kind is None:
		violations.append(Violation(record.where(), 'unknown-kind', kindName or ''))
		return None
	if 'position' not in params:
		violations.append(Violation(record.where(), 'missing-key', 'position'))
		return None
	if kind == BREAK:
		extra = set(params) - {'position'}
		if extra:
			violations.append(Violation(record.where(), 'unknown-key', ','.join(sorted(extra))))
		return fiberBreak(params['position'])
	factory = _featureFactories[kind]
	try:
		return factory(**params)
	except TypeError:
		violations.append(Violation(record.where(), 'unknown-key', "for %s: %s" % (kind, ','.join(sorted(params)))))
		return None
#_parseFeature()


def parseChannel(records, source=None):
	"""
	Builds a Channel from configuration records.

	Raises:
		ConfigError: unknown keywords or keys, malformed values
	"""
	violations = list()
	segments = list()
	features = list()
	options = {}
	for rec in records:
		if rec.keyword == 'SEGMENT':
			seg = _parseSegment(rec, violations)
			if seg:
				segments.append(seg)
		elif rec.keyword == 'FEATURE':
			feat = _parseFeature(rec, violations)
			if feat:
				features.append(feat)
		elif rec.keyword in ('WAVELENGTH', 'BEND_K', 'LENGTH', 'NAME'):
			if len(rec.args) != 1:
				violations.append(Violation(rec.where(), 'argument-count', rec.keyword))
				continue
			try:
				options[rec.keyword.lower()] = rec.args[0] if rec.keyword == 'NAME' else conf.quantity(rec.args[0])
			except ValueError:
				violations.append(Violation(rec.where(), 'bad-value', rec.args[0]))
		else:
			violations.append(Violation(rec.where(), 'unknown-keyword', rec.keyword))
	#foreach record
	if violations:
		raise ConfigError(violations, source)
	return Channel(segments, features, **options)
#parseChannel()


def loadChannel(path, validate=True):
	"""
	Reads a channel description file.

	Args:
		path (str): channel file
		validate (bool): also apply validateChannel and reject any violation

	Returns:
		(Channel): the parsed channel

	Raises:
		ConfigError: on parse errors, or invariant violations when validating
	"""
	channel = parseChannel(conf.readRecords(path), path)
	if validate:
		violations = validateChannel(channel)
		if violations:
			raise ConfigError(violations, path)
	return channel
#loadChannel()


def channelText(channel):
	"""Canonical text of a channel in the channel-file dialect."""
	lines = list()
	if channel.name:
		lines.append(conf.formatRecord('NAME', [channel.name]))
	lines.append(conf.formatRecord('WAVELENGTH', [conf.formatNumber(channel.wavelength)]))
	lines.append(conf.formatRecord('BEND_K', [conf.formatNumber(channel.bend_k)]))
	if channel.length is not None:
		lines.append(conf.formatRecord('LENGTH', [conf.formatNumber(channel.length)]))
	for s in channel.segments:
		args = [
			"length=%s" % conf.formatNumber(s.length), "n_eff=%s" % conf.formatNumber(s.n_eff),
			"n_g=%s" % conf.formatNumber(s.n_g), "v_ac=%s" % conf.formatNumber(s.v_ac),
			"linewidth=%s" % conf.formatNumber(s.gain_linewidth), "gain_coeff=%s" % conf.formatNumber(s.gain_coeff),
			"atten_db_per_m=%s" % conf.formatNumber(s.attenuation), "label=%s" % s.label,
			"rayleigh_offset_db=%s" % conf.formatNumber(s.rayleigh_offset_db),
		]
		if s.start is not None:
			args.append("start=%s" % conf.formatNumber(s.start))
		lines.append(conf.formatRecord('SEGMENT', args))
	for f in channel.features:
		args = ["kind=%s" % f.kind, "position=%s" % conf.formatNumber(f.position)]
		for key in _featureFields.get(f.kind, ()):
			val = getattr(f, key)
			if val is not None:
				args.append("%s=%s" % (key, conf.formatNumber(val)))
		lines.append(conf.formatRecord('FEATURE', args))
	return "".join(lines)
#channelText()


def digest(channel):
	"""sha256 of the canonical channel text; stamped on every artifact."""
	return hashlib.sha256(channelText(channel).encode('utf-8')).hexdigest()
#digest()
