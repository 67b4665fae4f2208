#!/usr/bin/env python

"""
Conventional Rayleigh OTDR over the same channel model, for contrast with BOCDA:
sharp losses, breaks and reflective connectors show up, gradual sub-0.1 dB losses
from evanescent bend taps drown in the per-sample noise.
"""

import dataclasses
import math

import numpy as np
import scipy.ndimage
import scipy.stats

from tapscan.bocda import DomainError
from tapscan.bocda import bocda_detect, bocda_fiber, bocda_log
from tapscan.bocda.util import rng


DEFAULTS = {
	'pulse_width': 2e-9,
	'sampling': 0.025,
	'noise_sigma_db': 0.05,
	'averages': 10,
	'threshold_db': 0.15,
}
DYNAMIC_RANGE_DB = 40.0
# Rayleigh backscatter of a 1 ns pulse relative to a perfect reflector, SMF at 1550 nm
BACKSCATTER_DB_1NS = -82.0


@dataclasses.dataclass(frozen=True, eq=False)
class OtdrTrace:
	positions: np.ndarray
	power_db: np.ndarray
	pulse_width: float
	n_averages: int = 1
	pulse_extent: float = 0.0  # v_g·τ/2 in meters

	@property
	def sampling(self):
		return float(self.positions[1] - self.positions[0]) if len(self.positions) > 1 else 0.0
	#sampling

#OtdrTrace


def pulseExtent(pulse_width, v_g):
	return v_g * pulse_width / 2.0
#pulseExtent()


def backscatterDb(pulse_width):
	"""Backscattered fraction of a pulse of width τ, in dB; grows 10·log10(τ/1 ns) above BACKSCATTER_DB_1NS."""
	return BACKSCATTER_DB_1NS + 10.0 * math.log10(pulse_width / 1e-9)
#backscatterDb()


def backscatterProfile(channel, z):
	"""Two-way linear backscatter density T(0,z)²·β(z), β carrying each segment's Rayleigh offset."""
	prof = bocda_fiber.sampleProfile(channel, z)
	idx = np.clip(np.searchsorted(channel.boundaries, z, side='right') - 1, 0, len(channel.segments) - 1)
	beta = np.array([10.0 ** (s.rayleigh_offset_db / 10.0) for s in channel.segments])[idx]
	return prof.transmission_to_z ** 2 * beta
#backscatterProfile()


def simulateOtdrTrace(channel, pulse_width=DEFAULTS['pulse_width'], sampling=DEFAULTS['sampling'], noise_sigma_db=DEFAULTS['noise_sigma_db'], n=DEFAULTS['averages'], seed=0):
	"""
	Simulates `n` independent OTDR traces.

	The linear backscatter density is integrated over a rectangular window of the
	pulse's spatial extent v_g·τ/2 centered on each sample; connectors with a
	reflectance add a spike that stands reflectance_db - backscatterDb(τ) above the
	backscatter level.
	Power is converted to dB with a floor DYNAMIC_RANGE_DB below the launch level,
	then each trace gets Gaussian dB noise from its own sub-stream (seed, i).

	Returns:
		(list): OtdrTrace objects, one per acquisition
	"""
	if not (pulse_width > 0 and sampling > 0):
		raise DomainError("pulse width and sampling must be positive")
	L = channel.totalLength
	v_g = bocda_fiber.groupVelocity(channel)
	W = pulseExtent(pulse_width, v_g)
	positions = sampling * np.arange(int(math.floor(L / sampling + 1e-9)) + 1)

	dz = min(sampling, W) / 20.0
	fine = np.linspace(0.0, L, int(math.ceil(L / dz)) + 1)
	density = backscatterProfile(channel, fine)
	cum = np.concatenate(([0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(fine))))
	hi = np.interp(np.clip(positions + 0.5 * W, 0.0, L), fine, cum)
	lo = np.interp(np.clip(positions - 0.5 * W, 0.0, L), fine, cum)
	power = hi - lo
	for f in channel.features:
		if f.kind == bocda_fiber.CONNECTOR and f.reflectance_db is not None:
			t = bocda_fiber.localProfile(channel, f.position).transmission_to_z
			inside = np.abs(positions - f.position) <= 0.5 * W
			power = power + inside * (t * t * W * 10.0 ** ((f.reflectance_db - backscatterDb(pulse_width)) / 10.0))
	floor = W * 10.0 ** (-DYNAMIC_RANGE_DB / 10.0)
	clean = 10.0 * np.log10(np.maximum(power, floor) / W)

	bocda_log.getLogger().log("simulating %d OTDR trace(s) (pulse %g s, sampling %g m) ..." % (n, pulse_width, sampling))
	traces = list()
	for i in range(int(n)):
		noise = rng.generator(seed, rng.OTDR_TRACES, i).standard_normal(len(positions))
		traces.append(OtdrTrace(positions, clean + noise_sigma_db * noise, pulse_width, 1, W))
	bocda_log.getLogger().log(" OK\n")
	return traces
#simulateOtdrTrace()


def averageTraces(traces):
	if not traces:
		raise ValueError("no OTDR traces to average")
	first = traces[0]
	power = np.mean([t.power_db for t in traces], axis=0)
	return OtdrTrace(first.positions, power, first.pulse_width, sum(t.n_averages for t in traces), first.pulse_extent)
#averageTraces()


def _reflections(x, m, limit):
	# runs standing above a running median 4 pulse widths wide, at most two pulse widths long
	med = scipy.ndimage.median_filter(x, size=4 * m + 1, mode='nearest')
	resid = x - med
	hot = resid > limit
	runs = list()
	i = 0
	while i < len(hot):
		if not hot[i]:
			i += 1
			continue
		j = i
		while j < len(hot) and hot[j]:
			j += 1
		if j - i <= 2 * m + 1:
			runs.append((i, j))
		i = j
	#while runs
	return runs, resid, med
#_reflections()


def otdrDetect(traces, threshold_db=DEFAULTS['threshold_db']):
	"""
	Averages the traces and reports reflections and steps larger than `threshold_db`.

	Reflective spikes (connector facets) are found first as short runs above a
	running median and replaced by it. Then at each sample the mean of a pulse-wide
	window after the sample is compared with one before it, both kept a pulse width
	away so the smeared edge of a step falls between them. A step must also clear
	three standard deviations of the local window-difference noise. Windows never
	run past the trace ends, so the launch edge and the far-end facet are not reported.

	Returns:
		(list): OtdrStep events, magnitude = step in dB (negative for a loss) or the
			height of a reflection (detail['reflection'] set)
	"""
	avg = averageTraces(traces)
	x = np.array(avg.power_db, dtype=float)
	h = avg.sampling
	if h <= 0:
		return []
	m = max(1, int(round(avg.pulse_extent / h)))
	g = m
	e = m // 2 + 1  # samples whose pulse window overhangs a trace end
	if len(x) < 2 * (m + g + e) + 1:
		return []
	sigma = float(scipy.stats.median_abs_deviation(np.diff(x), scale='normal')) / math.sqrt(2.0)
	sigmaStep = max(sigma * math.sqrt(2.0 / m), 1e-12)
	limit = max(threshold_db, 3.0 * sigmaStep)

	events = list()
	runs,resid,med = _reflections(x, m, max(threshold_db, 5.0 * sigma))
	for i,j in runs:
		k = i + int(np.argmax(resid[i:j]))
		confidence = float(scipy.stats.norm.cdf(resid[k] / max(sigma, 1e-12) - 5.0))
		events.append(bocda_detect.Event(bocda_detect.OTDR_STEP, float(avg.positions[k]), float((j - i) * h), float(resid[k]), confidence,
			source='otdr', detail={'reflection': True, 'threshold_db': float(threshold_db)}))
		x[i:j] = med[i:j]
	#foreach reflection

	c = np.concatenate(([0.0], np.cumsum(x)))
	idx = np.arange(m + g + e, len(x) - m - g - e)
	left = (c[idx - g] - c[idx - g - m]) / m
	right = (c[idx + g + 1 + m] - c[idx + g + 1]) / m
	step = right - left
	taken = np.zeros(len(step), dtype=bool)
	for k in np.argsort(-np.abs(step), kind='stable'):
		if abs(step[k]) <= limit:
			break
		if taken[k]:
			continue
		taken[max(0, k - 2 * (m + g)):k + 2 * (m + g) + 1] = True
		confidence = float(scipy.stats.norm.cdf(abs(step[k]) / sigmaStep - 3.0))
		events.append(bocda_detect.Event(bocda_detect.OTDR_STEP, float(avg.positions[idx[k]]), float(avg.pulse_extent), float(step[k]), confidence,
			source='otdr', detail={'sigma_step_db': sigmaStep, 'threshold_db': float(threshold_db)}))
	#foreach candidate
	events.sort(key=lambda e: e.position)
	return events
#otdrDetect()


def writeOtdrTrace(trace, path, meta=None):
	with open(path, 'w') as f:
		header = dict(meta or {}, pulse_width_s=trace.pulse_width, n_averages=trace.n_averages, pulse_extent_m=trace.pulse_extent)
		for key in sorted(header):
			f.write("# %s: %s\n" % (key, header[key]))
		f.write("position_m,power_db\n")
		for z,p in zip(trace.positions, trace.power_db):
			f.write("%.17g,%.17g\n" % (z, p))
	return [path]
#writeOtdrTrace()
