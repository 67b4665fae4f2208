#!/usr/bin/env python

"""
Eavesdropping detectors working on peak traces: intensity dips from evanescent
bend taps, BFS change-points from foreign fiber inserts, isolated BFS excursions
from connectors and tap couplers; plus fingerprint classification and the
deduplicated analysis report.
"""

import dataclasses
import json
import math

import numpy as np
import scipy.integrate
import scipy.ndimage
import scipy.stats

from tapscan.bocda import GridMismatchError
from tapscan.bocda import bocda_forward, bocda_log


BEND_TAP = 'BendTap'
POINT_FEATURE = 'PointFeature'
FOREIGN_SEGMENT = 'ForeignSegment'
OTDR_STEP = 'OtdrStep'

DEFAULTS = {
	'theta_dip': 4.0,
	'bend_extent': 0.10,
	'bend_k': 3.0,
	'min_step': 5e6,
	'min_extent': 0.03,
	'point_z': 4.5,
}
UNKNOWN = 'unknown'
REPORT_FORMAT = 'tapscan-report'


@dataclasses.dataclass(frozen=True)
class Event:
	kind: str
	position: float
	extent: float
	magnitude: float
	confidence: float
	source: str = 'bocda'
	label: str = None
	detail: dict = dataclasses.field(default_factory=dict, compare=False, hash=False)

	def asDict(self):
		return {
			'kind': self.kind, 'position_m': self.position, 'extent_m': self.extent,
			'magnitude': self.magnitude, 'confidence': self.confidence,
			'source': self.source, 'label': self.label, 'detail': dict(self.detail),
		}
	#asDict()

#Event


@dataclasses.dataclass(frozen=True, eq=False)
class AnalysisReport:
	events: tuple
	meta: dict

	def asDict(self):
		return {'format': REPORT_FORMAT, 'events': [e.asDict() for e in self.events], 'meta': self.meta}
	#asDict()


	def toJson(self):
		return json.dumps(self.asDict(), indent=1, sort_keys=True) + "\n"
	#toJson()

#AnalysisReport


##################################################
# helpers


def _spacing(positions):
	if len(positions) < 2:
		return 0.0
	return float(np.median(np.diff(positions)))
#_spacing()


def _robustSigma(values, floor):
	if len(values) == 0:
		return floor
	return max(float(scipy.stats.median_abs_deviation(values, scale='normal')), floor)
#_robustSigma()


def _parabolic(y, k):
	"""Sub-sample offset of a local extremum of y at index k."""
	if 0 < k < len(y) - 1:
		denom = y[k-1] - 2.0 * y[k] + y[k+1]
		if denom != 0:
			return min(0.5, max(-0.5, 0.5 * (y[k-1] - y[k+1]) / denom))
	return 0.0
#_parabolic()


def checkGrids(trace, reference):
	if len(trace.positions) != len(reference.positions) or not np.allclose(trace.positions, reference.positions, rtol=0, atol=1e-9):
		raise GridMismatchError("trace and reference are on different position grids")
#checkGrids()


##################################################
# bend taps


def bendDilution(scan, channel_length, center, extent=0.10, linewidth=27e6):
	"""
	Fraction of the peak-band intensity at `center` contributed through a bend of
	`extent` there, weighting each position by the raised-cosine bend profile and by
	the peak gain γ/sqrt(γ² + A²) it reaches under the local beat amplitude.
	"""
	gamma = 0.5 * linewidth
	z = np.linspace(0.0, channel_length, max(2001, int(channel_length / (scan.resolution(linewidth) / 16.0)) + 1))
	A = bocda_forward.beatAmplitude(z - center, scan.nominal_f_m, scan.delta_f, scan.group_velocity)
	g0 = gamma / np.sqrt(gamma * gamma + A * A)
	u = np.clip((z - (center - 0.5 * extent)) / extent, 0.0, 1.0)
	rc = 0.5 * (1.0 - np.cos(2.0 * np.pi * u))
	total = scipy.integrate.trapezoid(g0, z)
	return float(scipy.integrate.trapezoid(rc * g0, z) / total) if total > 0 else 0.0
#bendDilution()


def _bendKernels(bend_extent, h):
	"""
	Correlation kernels over a window three bend extents wide: the raised-cosine
	dip made zero-mean, and the left and right flank means (one extent each) minus
	the raised-cosine weighted inner mean.
	"""
	half = int(round(1.5 * bend_extent / h))
	x = np.arange(-half, half + 1) * h
	u = np.clip(x / bend_extent + 0.5, 0.0, 1.0)
	rc = 0.5 * (1.0 - np.cos(2.0 * np.pi * u))
	inner = rc / rc.sum()
	left = x < -0.5 * bend_extent
	right = x > 0.5 * bend_extent
	return rc - rc.mean(), left / max(1, left.sum()) - inner, right / max(1, right.sum()) - inner
#_bendKernels()


def detectIntensityDip(trace, reference=None, theta_dip=DEFAULTS['theta_dip'], bend_extent=DEFAULTS['bend_extent'], bend_k=DEFAULTS['bend_k'], scan=None, channel_length=None):
	"""
	Finds localized intensity dips (evanescent bend taps).

	The ratio trace/reference is matched against a raised cosine of the bend
	extent, made zero-mean over a window three extents wide; the projection is the
	dip depth at the window center. Candidates are taken in decreasing depth with
	non-maximum suppression over three extents and become events when the depth
	exceeds θ_dip·σ_depth and the inner level also lies significantly below each
	flank on its own. A bend's dip is deeper than the transmission step it leaves
	downstream, so it passes on both sides; a plain loss step never does. σ_depth
	is the robust sample-to-sample noise of the ratio propagated through the
	template. Without a reference the intensity is first detrended by a running
	median five bend extents wide.

	Args:
		trace (BfsTrace): trace under test
		reference (BfsTrace): clean-channel trace on the same grid, or None
		theta_dip (float): threshold in standard deviations of the matched depth
		bend_extent (float): matched template width in meters
		bend_k (float): coupling suppression factor of the forward bend model
		scan (ScanConfig): optional, with channel_length turns depth into a loss estimate

	Returns:
		(list): BendTap events

	Raises:
		GridMismatchError: trace and reference on different grids
	"""
	pos = np.asarray(trace.positions, dtype=float)
	level = np.asarray(trace.peak_intensity, dtype=float)
	h = _spacing(pos)
	if reference is not None:
		checkGrids(trace, reference)
		ref = np.asarray(reference.peak_intensity, dtype=float)
		ratio = np.where(ref > 0, level / np.where(ref > 0, ref, 1.0), 1.0)
	else:
		ratio = level.copy()
	if h <= 0 or not (bend_extent > 0) or int(round(1.5 * bend_extent / h)) < 1:
		return []
	n = max(1, int(round(bend_extent / h)))
	dip,left,right = _bendKernels(bend_extent, h)
	if len(ratio) < len(dip):
		return []
	if reference is None:
		trend = scipy.ndimage.median_filter(ratio, size=5 * n + 1, mode='nearest')
		ratio = ratio / np.where(trend > 0, trend, 1.0)

	norm = float(np.dot(dip, dip))
	sigma = _robustSigma(np.diff(ratio), 1e-6 * math.sqrt(2.0)) / math.sqrt(2.0)
	sigmaDepth = sigma / math.sqrt(norm)
	sigmaSide = sigma * math.sqrt(max(float(np.dot(left, left)), float(np.dot(right, right))))
	depth = -np.correlate(ratio, dip, mode='valid') / norm
	leftDepth = np.correlate(ratio, left, mode='valid')
	rightDepth = np.correlate(ratio, right, mode='valid')
	offset = len(dip) // 2
	centers = pos[offset:offset + len(depth)]

	threshold = theta_dip * sigmaDepth
	events = list()
	order = np.argsort(-depth, kind='stable')
	taken = np.zeros(len(depth), dtype=bool)
	for k in order:
		if depth[k] <= threshold:
			break
		if taken[k]:
			continue
		lo,hi = max(0, k - 3 * n), min(len(depth), k + 3 * n + 1)
		taken[lo:hi] = True
		if min(leftDepth[k], rightDepth[k]) <= 3.0 * sigmaSide:
			continue
		center = centers[k] + _parabolic(depth, k) * h
		eta = 1.0
		if scan is not None and channel_length:
			eta = bendDilution(scan, channel_length, center, bend_extent) or 1.0
		confidence = float(scipy.stats.norm.cdf(depth[k] / sigmaDepth - theta_dip))
		events.append(Event(BEND_TAP, float(center), float(bend_extent), float(depth[k] / (bend_k * eta)), confidence,
			detail={'depth': float(depth[k]), 'sigma_depth': float(sigmaDepth), 'dilution': float(eta),
				'flank_depths': [float(leftDepth[k]), float(rightDepth[k])]}))
	#foreach candidate
	events.sort(key=lambda e: e.position)
	return events
#detectIntensityDip()


##################################################
# foreign segments


def changePoints(x, penalty, min_len=2):
	"""
	Binary segmentation of a piecewise-constant signal.

	A segment is split at the index giving the largest drop in squared error when
	that drop exceeds `penalty` and both parts keep at least `min_len` samples.

	Returns:
		(list): sorted split indices (each the first sample of a new segment)
	"""
	x = np.asarray(x, dtype=float)
	min_len = max(1, int(min_len))
	c1 = np.concatenate(([0.0], np.cumsum(x)))
	points = list()
	stack = [(0, len(x))]
	while stack:
		a,b = stack.pop()
		if b - a < 2 * min_len:
			continue
		k = np.arange(a + min_len, b - min_len + 1)
		n1 = (k - a).astype(float)
		n2 = (b - k).astype(float)
		s1 = c1[k] - c1[a]
		s2 = c1[b] - c1[k]
		# drop in squared error: n1·n2/n·(mean1 - mean2)²
		gain = (n1 * n2 / (b - a)) * (s1 / n1 - s2 / n2) ** 2
		j = int(np.argmax(gain))
		if gain[j] > penalty:
			split = int(k[j])
			points.append(split)
			stack.append((a, split))
			stack.append((split, b))
	return sorted(points)
#changePoints()


def _segments(x, points):
	bounds = [0] + list(points) + [len(x)]
	return [(a, b, float(np.mean(x[a:b]))) for a,b in zip(bounds[:-1], bounds[1:])]
#_segments()


def _segmentation(trace, min_step, min_extent):
	"""
	Shared piecewise-constant segmentation of the peak-BFS trace.

	The penalty is the BIC-style 3·σ²·ln(n), σ the robust sample-to-sample noise
	floored at a tenth of the detuning step, raised to m·min_step²/2 with m the
	samples in min_extent: a step of min_step held over min_extent always splits,
	slow drifts of the background pull do not.
	"""
	x = np.asarray(trace.peak_bfs, dtype=float)
	pos = np.asarray(trace.positions, dtype=float)
	h = _spacing(pos)
	sigma = _robustSigma(np.diff(x), max(trace.step / 10.0, 1.0) * math.sqrt(2.0)) / math.sqrt(2.0)
	m = max(2, int(round(min_extent / h))) if h > 0 else 2
	minLen = max(2, int(round(0.5 * min_extent / h))) if h > 0 else 2
	penalty = max(3.0 * sigma * sigma * math.log(len(x)), 0.5 * m * min_step * min_step)
	return x, pos, h, sigma, changePoints(x, penalty, minLen)
#_segmentation()


def segmentBfs(trace, min_step=DEFAULTS['min_step'], min_extent=DEFAULTS['min_extent']):
	"""
	Finds fiber sections whose BFS departs from the channel's dominant level.

	Segments of the shared segmentation at least `min_step` from the trace median
	qualify; qualifying segments of one sign closer than min_extent are merged.
	A section's level is the mean of its longest segment. Its extent is the
	equivalent width, the area of the excursion from the median over the section
	plus min_extent on either side divided by that level, and it is centered on
	the excursion's centroid; both average the noise of every sample instead of
	trusting a single crossing.

	Returns:
		(list): ForeignSegment events, magnitude = section mean - median (Hz)
	"""
	if not (min_step > 0):
		raise ValueError("min_step must be positive")
	if len(trace.peak_bfs) < 3:
		return []
	x, pos, h, sigma, points = _segmentation(trace, min_step, min_extent)
	mode = float(np.median(x))
	gap = max(1, int(round(min_extent / h))) if h > 0 else 1

	groups = list()
	for a,b,mean in _segments(x, points):
		if abs(mean - mode) >= min_step:
			if groups and a - groups[-1][-1][1] <= gap and (groups[-1][-1][2] - mode) * (mean - mode) > 0:
				groups[-1].append((a, b, mean))
			else:
				groups.append([(a, b, mean)])
	#foreach segment

	events = list()
	for g,group in enumerate(groups):
		a,b,mean = max(group, key=lambda s: (s[1] - s[0], abs(s[2] - mode)))
		lo = max(group[0][0] - gap, groups[g - 1][-1][1] if g > 0 else 0)
		hi = min(group[-1][1] + gap, groups[g + 1][0][0] if g + 1 < len(groups) else len(x))
		excess = x[lo:hi] - mode
		area = float(np.sum(excess))
		if area * (mean - mode) > 0:
			center = float(np.sum(excess * pos[lo:hi]) / area)
			extent = area * h / (mean - mode)
		else:
			center = 0.5 * float(pos[group[0][0]] + pos[group[-1][1] - 1])
			extent = float(pos[group[-1][1] - 1] - pos[group[0][0]]) + h
		count = b - a
		confidence = float(scipy.stats.norm.cdf(abs(mean - mode) / (sigma / math.sqrt(count)) - 3.0))
		events.append(Event(FOREIGN_SEGMENT, center, float(extent), float(mean - mode), confidence,
			detail={'mean_bfs': mean, 'channel_mode_bfs': mode, 'start_m': center - 0.5 * extent, 'stop_m': center + 0.5 * extent}))
	#foreach group
	return events
#segmentBfs()


def segmentMeans(trace, resolution, min_extent=DEFAULTS['min_extent'], min_step=DEFAULTS['min_step']):
	"""
	Splits the peak-BFS trace into piecewise-constant sections and measures each.

	The segmentation is the one segmentBfs uses. Each mean leaves out the samples
	within one resolution cell of an interior boundary, where the correlation peak
	still straddles two fibers, unless that would leave fewer than three samples.

	Returns:
		(list): dicts with start_m, stop_m, mean_bfs, sigma_bfs and samples
	"""
	if len(trace.peak_bfs) < 3:
		return []
	x, pos, h, sigma, points = _segmentation(trace, min_step, min_extent)
	trim = int(math.ceil(resolution / h)) if h > 0 else 0
	table = list()
	for a,b,mean in _segments(x, points):
		lo = a + (trim if a > 0 else 0)
		hi = b - (trim if b < len(x) else 0)
		if hi - lo < 3:
			lo,hi = a,b
		core = x[lo:hi]
		table.append({
			'start_m': float(pos[a]), 'stop_m': float(pos[b - 1]),
			'mean_bfs': float(np.mean(core)), 'sigma_bfs': float(np.std(core)), 'samples': int(hi - lo),
		})
	return table
#segmentMeans()


##################################################
# point features


def _sideMedians(x, guard, width):
	# medians of x[i-guard-width:i-guard] and x[i+guard+1:i+guard+width+1], edge-padded
	pad = guard + width
	xp = np.pad(x, pad, mode='edge')
	med = np.median(np.lib.stride_tricks.sliding_window_view(xp, width), axis=-1)
	i = np.arange(len(x)) + pad
	return med[i - guard - width], med[i + guard + 1]
#_sideMedians()


def _excursionWidth(x, k, level, sign):
	# samples around k on the excursion side of level
	lo,hi = k,k
	while lo > 0 and sign * (x[lo - 1] - level) > 0:
		lo -= 1
	while hi < len(x) - 1 and sign * (x[hi + 1] - level) > 0:
		hi += 1
	return hi - lo + 1
#_excursionWidth()


def detectPointFeature(trace, resolution, point_z=DEFAULTS['point_z'], use_intensity=False):
	"""
	Finds isolated excursions (connectors, tap couplers) in the peak-BFS trace, or in
	the peak intensity when `use_intensity` is set.

	Each sample is compared with the medians of 1.5 resolution cells on either
	side, beyond a guard of one cell; the residual is the smaller departure when
	both have the same sign and zero otherwise, so a BFS step or a ramp never
	scores while a spike on top of a step does. Residuals are scored against the
	robust sample-to-sample noise. Within each run above `point_z` the strongest
	sample is kept when the excursion, measured at half its height above the nearer
	side, is narrower than two resolution cells.
	"""
	pos = np.asarray(trace.positions, dtype=float)
	h = _spacing(pos)
	if h <= 0 or len(pos) < 5:
		return []
	guard = max(1, int(math.ceil(resolution / h)))
	width = max(3, int(round(1.5 * resolution / h)))
	if use_intensity:
		x = np.asarray(trace.peak_intensity, dtype=float)
		left,right = _sideMedians(x, guard, width)
		dl = x / np.where(left > 0, left, 1.0) - 1.0
		dr = x / np.where(right > 0, right, 1.0) - 1.0
		sigma = _robustSigma(np.diff(x / np.where(x.mean() > 0, x.mean(), 1.0)), 1e-6 * math.sqrt(2.0)) / math.sqrt(2.0)
	else:
		x = np.asarray(trace.peak_bfs, dtype=float)
		left,right = _sideMedians(x, guard, width)
		dl = x - left
		dr = x - right
		sigma = _robustSigma(np.diff(x), max(trace.step / 10.0, 1.0) * math.sqrt(2.0)) / math.sqrt(2.0)
	r = np.where(np.sign(dl) == np.sign(dr), np.sign(dl) * np.minimum(np.abs(dl), np.abs(dr)), 0.0)
	z = np.abs(r) / sigma
	hot = z > point_z

	events = list()
	i = 0
	while i < len(hot):
		if not hot[i]:
			i += 1
			continue
		j = i
		while j < len(hot) and hot[j]:
			j += 1
		k = i + int(np.argmax(z[i:j]))
		if use_intensity:
			base = x[k] / (1.0 + r[k])
			wide = _excursionWidth(x, k, base * (1.0 + 0.5 * r[k]), np.sign(r[k])) * h
		else:
			wide = _excursionWidth(x, k, x[k] - 0.5 * r[k], np.sign(r[k])) * h
		if wide < 2.0 * resolution:
			center = pos[k] + _parabolic(z, k) * h
			confidence = float(scipy.stats.norm.cdf(z[k] - point_z))
			events.append(Event(POINT_FEATURE, float(center), float(wide), float(r[k]), confidence,
				detail={'z_score': float(z[k]), 'signal': 'intensity' if use_intensity else 'bfs'}))
		i = j
	#while runs
	return events
#detectPointFeature()


##################################################
# fingerprints and report


def classifyFingerprint(query, db):
	"""
	Labels a segment mean BFS with the nearest fingerprint entry within its tolerance.

	Args:
		query (Event or float): ForeignSegment event (its detail['mean_bfs']) or a mean BFS in Hz
		db (FingerprintDb): validated fingerprint database

	Returns:
		(str): entry label, or "unknown"
	"""
	value = query.detail['mean_bfs'] if isinstance(query, Event) else float(query)
	best = None
	for label,(mean,tol) in sorted(db.entries().items()):
		d = abs(value - mean)
		if d <= tol and (best is None or d < best[0]):
			best = (d, label)
	return best[1] if best else UNKNOWN
#classifyFingerprint()


def _merge(cluster):
	if len(cluster) == 1:
		return cluster[0]
	weights = np.array([e.confidence for e in cluster])
	positions = np.array([e.position for e in cluster])
	position = float(np.average(positions, weights=weights)) if weights.sum() > 0 else float(positions.mean())
	lo = min(e.position - 0.5 * e.extent for e in cluster)
	hi = max(e.position + 0.5 * e.extent for e in cluster)
	best = max(cluster, key=lambda e: e.confidence)
	confidence = 1.0 - float(np.prod([1.0 - e.confidence for e in cluster]))
	return dataclasses.replace(best, position=position, extent=float(hi - lo), confidence=confidence,
		detail=dict(best.detail, merged=len(cluster)))
#_merge()


def compileReport(events, channel_meta, resolution, thresholds=None):
	"""
	Deduplicates and orders detected events.

	Events of one kind within one resolution cell of each other are merged (confidence
	1 - Π(1 - c)); kinds are never merged with each other. The report carries the
	channel/scan metadata and the thresholds used.
	"""
	byKind = dict()
	for e in events:
		byKind.setdefault((e.kind, e.source), list()).append(e)
	merged = list()
	for key in sorted(byKind):
		cluster = list()
		for e in sorted(byKind[key], key=lambda e: e.position):
			if cluster and e.position - cluster[-1].position > resolution:
				merged.append(_merge(cluster))
				cluster = list()
			cluster.append(e)
		if cluster:
			merged.append(_merge(cluster))
	merged.sort(key=lambda e: (e.position, e.kind))
	meta = dict(channel_meta)
	meta['resolution_m'] = resolution
	meta['thresholds'] = dict(thresholds or {})
	bocda_log.getLogger().log("report: %d event(s)\n" % len(merged))
	return AnalysisReport(tuple(merged), meta)
#compileReport()


def writeReport(report, path):
	with open(path, 'w') as f:
		f.write(report.toJson())
	return [path]
#writeReport()
