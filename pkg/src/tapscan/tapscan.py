#!/usr/bin/env python

import argparse
import collections
import dataclasses
import json
import math
import os
import sys

import numpy as np

from tapscan.bocda import ConfigError, ConvergenceError, KernelSizeError, Violation
from tapscan.bocda import bocda_detect, bocda_fiber, bocda_fingerprint, bocda_forward, bocda_log, bocda_otdr, bocda_retrieval
from tapscan.bocda.util import conf, rng


COMMANDS = ('simulate', 'analyze', 'fingerprint', 'compare-otdr', 'reproduce-figure')


def _auto(converter):
	def convert(val):
		return None if str(val).strip().lower() == 'auto' else converter(val)
	return convert
#_auto()


class TapScan(object):
	"""
	Runs the tapscan workflows: simulate a channel, analyze a sonogram, tabulate
	fiber fingerprints, contrast BOCDA with an OTDR, and replay the canned
	scenarios.

	Every artifact is claimed before it is written; if a run fails, run() removes
	all claimed artifacts so the output directory never holds a partial result.
	"""

	##################################################
	# class interrogation


	@classmethod
	def getVersionTuple(cls):
		# tuple = (major,minor,revision,dev,build,date)
		# dev must be in ('a','b','rc','release') for lexicographic comparison
		return (1,0,0,'release','','2026-10-01')
	#getVersionTuple()


	@classmethod
	def getVersionString(cls):
		v = list(cls.getVersionTuple())
		v[3] = '' if v[3] > 'rc' else v[3]
		return "%d.%d.%d%s%s (%s)" % tuple(v)
	#getVersionString()


	##################################################
	# private class data


	# analysis settings addressable with --set; scan keywords are handled by bocda_forward
	_settings = collections.OrderedDict([
		('detect.theta_dip',      (float, bocda_detect.DEFAULTS['theta_dip'])),
		('detect.bend_extent',    (conf.quantity, bocda_detect.DEFAULTS['bend_extent'])),
		('detect.bend_k',         (float, bocda_detect.DEFAULTS['bend_k'])),
		('detect.min_step',       (conf.quantity, bocda_detect.DEFAULTS['min_step'])),
		('detect.min_extent',     (conf.quantity, bocda_detect.DEFAULTS['min_extent'])),
		('detect.point_z',        (float, bocda_detect.DEFAULTS['point_z'])),
		('retrieval.lambda',      (_auto(float), bocda_retrieval.DEFAULT_LAMBDA)),
		('retrieval.cell_width',  (_auto(conf.quantity), None)),
		('retrieval.pad',         (_auto(int), None)),
		('retrieval.budget_mb',   (float, bocda_retrieval.MEMORY_BUDGET / float(1 << 20))),
		('otdr.pulse_width',      (conf.quantity, bocda_otdr.DEFAULTS['pulse_width'])),
		('otdr.sampling',         (conf.quantity, bocda_otdr.DEFAULTS['sampling'])),
		('otdr.noise_sigma_db',   (float, bocda_otdr.DEFAULTS['noise_sigma_db'])),
		('otdr.averages',         (int, bocda_otdr.DEFAULTS['averages'])),
		('otdr.threshold_db',     (float, bocda_otdr.DEFAULTS['threshold_db'])),
	])

	_scenarioKeys = ('ALIAS', 'DESCRIPTION', 'CHANNEL', 'REFERENCE', 'SCAN', 'FINGERPRINTS', 'COMPARE_OTDR', 'USE_DECONVOLUTION', 'SET')


	##################################################
	# constructor


	def __init__(self, options):
		self._options = options
		self._outDir = options.out
		self._prefix = options.prefix
		self._overwrite = bool(options.overwrite)
		self._claimed = list()
		self._logger = bocda_log.getLogger()
		self._logFile = None
		self._scanOverrides = dict()
		self._values = collections.OrderedDict((key, default) for key,(conv,default) in self._settings.items())
		self._useDeconvolution = bool(options.use_deconvolution)
		self.applyOverrides(options.set or [], 'command line')
		if options.seed is not None:
			self._scanOverrides['seed'] = str(options.seed)
	#__init__()


	##################################################
	# logging


	def openLog(self):
		self._logFile = open(os.path.join(self._outDir, 'tapscan.log'), 'w')
		self._logger.configure(self._logFile, verbose=self._options.verbose, quiet=self._options.quiet)
	#openLog()


	def closeLog(self):
		self._logger.configure(None, verbose=False, quiet=True)
		if self._logFile:
			self._logFile.close()
			self._logFile = None
	#closeLog()


	def log(self, message=""):
		return self._logger.log(message)
	#log()


	def logPush(self, message=None):
		return self._logger.logPush(message)
	#logPush()


	def logPop(self, message=None):
		return self._logger.logPop(message)
	#logPop()


	def warn(self, message=""):
		return self._logger.warn(message)
	#warn()


	##################################################
	# settings


	def applyOverrides(self, pairs, where):
		"""
		Applies `key=value` overrides: scan keywords go to the scan, dotted keys to
		the analysis settings.

		Raises:
			ConfigError: unknown keys or unparseable values
		"""
		scanKeys = bocda_forward.scanKeys()
		violations = list()
		for key,value in pairs:
			key = key.strip().lower()
			if key in self._settings:
				try:
					self._values[key] = self._settings[key][0](value)
				except ValueError:
					violations.append(Violation(where, 'bad-value', "%s=%s" % (key, value)))
			elif key in scanKeys:
				self._scanOverrides[key] = value
			else:
				violations.append(Violation(where, 'unknown-key', key))
		#foreach override
		if violations:
			raise ConfigError(violations, where)
	#applyOverrides()


	def getSetting(self, key):
		return self._values[key]
	#getSetting()


	def thresholds(self):
		return dict((key, value) for key,value in self._values.items() if key.startswith('detect.'))
	#thresholds()


	##################################################
	# output management


	def outputPath(self, name, prefix=None):
		return os.path.join(self._outDir, "%s.%s" % (prefix or self._prefix, name))
	#outputPath()


	def claim(self, *paths):
		for path in paths:
			if path in self._claimed:
				sys.exit("ERROR: output file '%s' would be written twice" % (path,))
			if os.path.exists(path) and not self._overwrite:
				sys.exit("ERROR: output file '%s' already exists; use --overwrite to replace it" % (path,))
			self._claimed.append(path)
		return paths[0] if len(paths) == 1 else paths
	#claim()


	def removeOutputs(self):
		for path in reversed(self._claimed):
			if os.path.exists(path):
				os.remove(path)
		self._claimed = list()
	#removeOutputs()


	def writeJson(self, data, path):
		with open(self.claim(path), 'w') as f:
			json.dump(data, f, indent=1, sort_keys=True)
			f.write("\n")
		return [path]
	#writeJson()


	##################################################
	# inputs


	def loadChannel(self, path):
		if not os.path.exists(path):
			sys.exit("ERROR: channel file '%s' not found" % (path,))
		self.log("reading channel '%s' ..." % (os.path.basename(path),))
		channel = bocda_fiber.loadChannel(path)
		self.log(" OK (%d segment(s), %d feature(s), %g m)\n" % (len(channel.segments), len(channel.features), channel.totalLength))
		return channel
	#loadChannel()


	def loadScan(self, path, channel):
		if path is None:
			raise ConfigError([Violation('scan', 'missing-file', "--scan is required")])
		if not os.path.exists(path):
			sys.exit("ERROR: scan file '%s' not found" % (path,))
		self.log("reading scan '%s' ..." % (os.path.basename(path),))
		cfg = bocda_forward.loadScan(path, channel, self._scanOverrides)
		self.log(" OK (%d positions x %d detunings, resolution %.4g m)\n" % (len(cfg.f_m_sweep), len(cfg.detunings()), cfg.resolution(self._linewidth(channel))))
		return cfg
	#loadScan()


	def loadSonogram(self, path):
		if not os.path.exists(path):
			sys.exit("ERROR: sonogram file '%s' not found" % (path,))
		self.log("reading sonogram '%s' ..." % (os.path.basename(path),))
		s = bocda_forward.readSonogram(path)
		self.log(" OK\n")
		return s
	#loadSonogram()


	def loadFingerprints(self, path):
		if not os.path.exists(path):
			sys.exit("ERROR: fingerprint file '%s' not found" % (path,))
		self.log("reading fingerprints '%s' ..." % (os.path.basename(path),))
		db = bocda_fingerprint.FingerprintDb.load(path)
		self.log(" OK (%d entries)\n" % (len(db.entries()),))
		return db
	#loadFingerprints()


	def checkDigest(self, sonogram, channel, label='sonogram'):
		if channel is None:
			return
		expected = bocda_fiber.digest(channel)
		found = sonogram.meta.get('channel_digest')
		if found != expected:
			if self._options.allow_digest_mismatch:
				self.warn("WARNING: %s was simulated for channel %s, not the supplied channel %s\n" % (label, found, expected))
			else:
				raise ConfigError([Violation(label, 'digest-mismatch', "sonogram channel %s, supplied channel %s (use --allow-digest-mismatch to proceed)" % (found, expected))])
	#checkDigest()


	@staticmethod
	def _gridDigest(sonogram):
		# the scan with its noise draw left out
		cfg = bocda_forward.scanFromDict(sonogram.meta['scan'])
		return bocda_forward.scanDigest(dataclasses.replace(cfg, noise=bocda_forward.NoiseModel(), seed=0))
	#_gridDigest()


	def checkReference(self, sonogram, reference, refChannel=None):
		"""
		Verifies that a reference sonogram shares the scan (up to its noise model and
		seed) and channel length of the sonogram under analysis and, when its channel
		is supplied, that it was simulated for that channel.

		Raises:
			ConfigError: digest, scan or length mismatch
		"""
		if reference is None:
			return
		self.checkDigest(reference, refChannel, 'reference')
		violations = list()
		found,expected = self._gridDigest(reference), self._gridDigest(sonogram)
		if found != expected:
			violations.append(Violation('reference', 'reference-scan', "reference scan %s, sonogram scan %s" % (found, expected)))
		found,expected = reference.meta.get('channel_length'), sonogram.meta.get('channel_length')
		if found is None or expected is None or not math.isclose(found, expected, rel_tol=1e-9):
			violations.append(Violation('reference', 'reference-length', "reference channel %s m, sonogram channel %s m" % (found, expected)))
		if violations:
			raise ConfigError(violations)
	#checkReference()


	@staticmethod
	def _linewidth(channel):
		return min(s.gain_linewidth for s in channel.segments) if channel else 27e6
	#_linewidth()


	##################################################
	# stages


	def simulate(self, channel, cfg, prefix=None, stream=rng.SONOGRAM_NOISE):
		"""Synthesizes and writes one sonogram; noise is drawn from `stream` of the scan seed."""
		s = bocda_forward.synthesizeSonogram(channel, cfg, noisy=False)
		if cfg.noise.enabled:
			s = bocda_forward.addNoise(s, cfg.noise, cfg.seed, stream)
		path = self.outputPath('sonogram', prefix)
		self.claim(path, bocda_forward.sidecarPath(path))
		self.log("writing sonogram to '%s' ..." % (os.path.basename(path),))
		bocda_forward.writeSonogram(s, path)
		self.log(" OK\n")
		return s
	#simulate()


	def _cropToScan(self, gm, sonogram):
		# cells outside the scanned stretch are unconstrained by the data
		pos = np.asarray(sonogram.positions, dtype=float)
		half = 0.5 * (gm.positions[1] - gm.positions[0]) if len(gm.positions) > 1 else 0.0
		keep = (gm.positions >= pos.min() - half) & (gm.positions <= pos.max() + half)
		return dataclasses.replace(gm, positions=gm.positions[keep], gain=gm.gain[keep])
	#_cropToScan()


	def deconvolve(self, sonogram, cfg, length, linewidth, prefix=None, name='gain-map'):
		kernel = bocda_retrieval.BackgroundKernel(length, cfg,
			cell_width=self.getSetting('retrieval.cell_width'),
			pad=self.getSetting('retrieval.pad'),
			budget=int(self.getSetting('retrieval.budget_mb') * (1 << 20)),
			linewidth=linewidth,
		)
		lam = self.getSetting('retrieval.lambda')
		if lam is None:
			lam = bocda_retrieval.lCurveLambda(sonogram, kernel)
		gm = self._cropToScan(bocda_retrieval.deconvolveGain(sonogram, kernel, lam), sonogram)
		if name:
			path = self.claim(self.outputPath(name, prefix))
			bocda_retrieval.writeGainMap(gm, path, {'scan_digest': sonogram.meta.get('scan_digest')})
		return gm
	#deconvolve()


	def analyze(self, sonogram, channel=None, reference=None, db=None, prefix=None, source=None):
		"""
		Extracts the peak trace of a sonogram (optionally after deconvolution), runs
		every detector on it and writes the trace and the analysis report.

		Returns:
			(tuple): (BfsTrace, AnalysisReport)
		"""
		cfg = bocda_forward.scanFromDict(sonogram.meta['scan'])
		length = channel.totalLength if channel else sonogram.meta.get('channel_length')
		if not length:
			raise ConfigError([Violation('sonogram', 'channel-length', "sonogram metadata has no channel length; supply --channel")])
		linewidth = self._linewidth(channel)
		resolution = cfg.resolution(linewidth)

		self.checkReference(sonogram, reference)
		self.logPush("analyzing %s ...\n" % (source or 'sonogram',))
		data,refData = sonogram,reference
		if self._useDeconvolution:
			data = self.deconvolve(sonogram, cfg, length, linewidth, prefix).asSonogram()
			if reference is not None:
				refData = self.deconvolve(reference, bocda_forward.scanFromDict(reference.meta['scan']), length, linewidth, prefix, name=None).asSonogram()
		trace = bocda_retrieval.peakBfsTrace(data, linewidth)
		refTrace = bocda_retrieval.peakBfsTrace(refData, linewidth) if refData is not None else None
		path = self.claim(self.outputPath('bfs-trace', prefix))
		bocda_retrieval.writeBfsTrace(trace, path, {'scan_digest': sonogram.meta.get('scan_digest')})

		events = list()
		events.extend(bocda_detect.detectIntensityDip(trace, refTrace,
			theta_dip=self.getSetting('detect.theta_dip'), bend_extent=self.getSetting('detect.bend_extent'),
			bend_k=self.getSetting('detect.bend_k'), scan=cfg, channel_length=length))
		segments = bocda_detect.segmentBfs(trace, self.getSetting('detect.min_step'), self.getSetting('detect.min_extent'))
		if db is not None:
			segments = [dataclasses.replace(e, label=bocda_detect.classifyFingerprint(e, db)) for e in segments]
		events.extend(segments)
		events.extend(bocda_detect.detectPointFeature(trace, resolution, self.getSetting('detect.point_z')))

		meta = {
			'channel_digest': sonogram.meta.get('channel_digest'),
			'scan_digest': sonogram.meta.get('scan_digest'),
			'channel_length_m': length,
			'deconvolved': self._useDeconvolution,
			'reference': bool(reference is not None),
			'tapscan_version': TapScan.getVersionString(),
		}
		report = bocda_detect.compileReport(events, meta, resolution, self.thresholds())
		path = self.claim(self.outputPath('report.json', prefix))
		bocda_detect.writeReport(report, path)
		self.logPop("... OK (%d event(s))\n" % (len(report.events),))
		return trace,report
	#analyze()


	def fingerprintTable(self, sonogram, db, channel=None, prefix=None):
		"""Writes the per-section mean-BFS table with a fingerprint label per section."""
		cfg = bocda_forward.scanFromDict(sonogram.meta['scan'])
		linewidth = self._linewidth(channel)
		trace = bocda_retrieval.peakBfsTrace(sonogram, linewidth)
		table = bocda_detect.segmentMeans(trace, cfg.resolution(linewidth), self.getSetting('detect.min_extent'), self.getSetting('detect.min_step'))
		path = self.claim(self.outputPath('fingerprint.csv', prefix))
		self.log("writing fingerprint table to '%s' ..." % (os.path.basename(path),))
		with open(path, 'w') as f:
			f.write("# channel_digest: %s\n" % (sonogram.meta.get('channel_digest'),))
			f.write("# scan_digest: %s\n" % (sonogram.meta.get('scan_digest'),))
			f.write("start_m,stop_m,mean_bfs_hz,sigma_bfs_hz,samples,label\n")
			for row in table:
				row['label'] = bocda_detect.classifyFingerprint(row['mean_bfs'], db) if db is not None else bocda_detect.UNKNOWN
				f.write("%.17g,%.17g,%.17g,%.17g,%d,%s\n" % (row['start_m'], row['stop_m'], row['mean_bfs'], row['sigma_bfs'], row['samples'], row['label']))
		self.log(" OK (%d section(s))\n" % (len(table),))
		return table
	#fingerprintTable()


	def otdrFloor(self, channel):
		"""Smallest step the OTDR detector can report: the threshold or three step deviations, whichever is larger."""
		v_g = bocda_fiber.groupVelocity(channel)
		extent = bocda_otdr.pulseExtent(self.getSetting('otdr.pulse_width'), v_g)
		m = max(1, int(round(extent / self.getSetting('otdr.sampling'))))
		sigmaStep = self.getSetting('otdr.noise_sigma_db') / math.sqrt(self.getSetting('otdr.averages')) * math.sqrt(2.0 / m)
		return max(self.getSetting('otdr.threshold_db'), 3.0 * sigmaStep)
	#otdrFloor()


	def compareOtdr(self, channel, cfg, report, prefix=None):
		"""
		Runs the OTDR baseline on the channel of a BOCDA report and writes the OTDR
		trace, its report and a per-feature comparison summary.
		"""
		seed = cfg.seed
		traces = bocda_otdr.simulateOtdrTrace(channel,
			pulse_width=self.getSetting('otdr.pulse_width'), sampling=self.getSetting('otdr.sampling'),
			noise_sigma_db=self.getSetting('otdr.noise_sigma_db'), n=self.getSetting('otdr.averages'), seed=seed)
		average = bocda_otdr.averageTraces(traces)
		meta = {'channel_digest': bocda_fiber.digest(channel), 'seed': seed}
		bocda_otdr.writeOtdrTrace(average, self.claim(self.outputPath('otdr-trace.csv', prefix)), meta)
		events = bocda_otdr.otdrDetect(traces, self.getSetting('otdr.threshold_db'))
		otdrReport = bocda_detect.compileReport(events, dict(meta, source='otdr'), average.pulse_extent,
			dict((k, v) for k,v in self._values.items() if k.startswith('otdr.')))
		bocda_detect.writeReport(otdrReport, self.claim(self.outputPath('otdr-report.json', prefix)))

		resolution = report.meta['resolution_m']
		floor = self.otdrFloor(channel)
		features = list()
		for f in channel.features:
			loss = f.throughLoss()
			step = 20.0 * math.log10(1.0 - loss) if loss < 1.0 else None
			near = max(3.0 * resolution, 0.5 * (f.extent or 0.0))
			features.append({
				'kind': f.kind,
				'position_m': f.position,
				'otdr_step_db': step,
				'otdr_below_floor': bool(step is not None and abs(step) < floor),
				'bocda_detected': any(abs(e.position - f.position) <= near for e in report.events),
				'otdr_detected': any(abs(e.position - f.position) <= max(near, average.pulse_extent) for e in otdrReport.events),
			})
		summary = {
			'channel_digest': meta['channel_digest'],
			'bocda_events': len(report.events),
			'otdr_events': len(otdrReport.events),
			'otdr_floor_db': floor,
			'features': features,
		}
		self.writeJson(summary, self.outputPath('summary.json', prefix))
		return otdrReport,summary
	#compareOtdr()


	def reportConfiguration(self, channel=None, cfg=None, prefix=None):
		"""Writes the effective configuration in re-readable form (no timestamps)."""
		if channel is not None:
			with open(self.claim(self.outputPath('channel', prefix)), 'w') as f:
				f.write("# tapscan channel, version %s\n" % (TapScan.getVersionString(),))
				f.write(bocda_fiber.channelText(channel))
		if cfg is not None:
			with open(self.claim(self.outputPath('scan', prefix)), 'w') as f:
				f.write("# tapscan scan, version %s\n" % (TapScan.getVersionString(),))
				f.write(bocda_forward.scanText(cfg))
		with open(self.claim(self.outputPath('settings', prefix)), 'w') as f:
			f.write("# tapscan analysis settings, version %s; each line is a --set key=value\n" % (TapScan.getVersionString(),))
			for key,value in self._values.items():
				f.write("%s=%s\n" % (key, 'auto' if value is None else value))
			f.write("use_deconvolution=%s\n" % ('yes' if self._useDeconvolution else 'no'))
	#reportConfiguration()


	##################################################
	# scenarios


	@staticmethod
	def scenarioRoot():
		return os.path.join(os.path.dirname(os.path.realpath(os.path.abspath(__file__))), 'scenarios')
	#scenarioRoot()


	@classmethod
	def listScenarios(cls):
		"""
		Discovers the bundled scenarios.

		Returns:
			(dict): scenario name -> list of aliases, for every scenarios/<name>/scenario.conf
		"""
		root = cls.scenarioRoot()
		scenarios = collections.OrderedDict()
		for name in sorted(os.listdir(root)) if os.path.isdir(root) else []:
			path = os.path.join(root, name, 'scenario.conf')
			if os.path.exists(path):
				scenarios[name] = [a for rec in conf.readRecords(path) if rec.keyword == 'ALIAS' for a in rec.args]
		return scenarios
	#listScenarios()


	@classmethod
	def findScenario(cls, name):
		"""Resolves a scenario name or alias to its directory name, or None."""
		scenarios = cls.listScenarios()
		if name in scenarios:
			return name
		for scenario,aliases in scenarios.items():
			if name in aliases:
				return scenario
		return None
	#findScenario()


	def loadScenario(self, name):
		"""
		Reads scenarios/<name>/scenario.conf.

		Returns:
			(dict): name, description, channels [(name, path)], reference, scan,
				fingerprints, compare_otdr, use_deconvolution
		"""
		found = self.findScenario(name)
		if found is None:
			available = ["%s (%s)" % (n, ','.join(a)) if a else n for n,a in self.listScenarios().items()]
			sys.exit("ERROR: no scenario named '%s' (available: %s)" % (name, ', '.join(available)))
		path = os.path.join(self.scenarioRoot(), found, 'scenario.conf')
		here = os.path.dirname(path)
		scenario = {'name': found, 'description': '', 'channels': [], 'reference': None, 'scan': None, 'fingerprints': None, 'compare_otdr': False, 'use_deconvolution': False}
		violations = list()
		overrides = list()
		for rec in conf.readRecords(path):
			if rec.keyword not in self._scenarioKeys:
				violations.append(Violation(rec.where(), 'unknown-keyword', rec.keyword))
			elif rec.keyword == 'ALIAS':
				pass
			elif rec.keyword == 'DESCRIPTION':
				scenario['description'] = ' '.join(rec.args)
			elif rec.keyword == 'CHANNEL':
				if len(rec.args) != 2:
					violations.append(Violation(rec.where(), 'argument-count', "CHANNEL expects a name and a file"))
				else:
					scenario['channels'].append((rec.args[0], os.path.join(here, rec.args[1])))
			elif rec.keyword in ('REFERENCE', 'SCAN', 'FINGERPRINTS'):
				scenario[rec.keyword.lower()] = os.path.join(here, rec.args[0]) if rec.args else None
			elif rec.keyword in ('COMPARE_OTDR', 'USE_DECONVOLUTION'):
				try:
					scenario[rec.keyword.lower()] = (yesno(rec.args[0] if rec.args else 'yes') == 'yes')
				except argparse.ArgumentTypeError as e:
					violations.append(Violation(rec.where(), 'bad-value', str(e)))
			else:
				for arg in rec.args:
					if '=' not in arg:
						violations.append(Violation(rec.where(), 'malformed-argument', arg))
					else:
						overrides.append(tuple(arg.split('=', 1)))
		#foreach record
		if not scenario['channels'] or not scenario['scan']:
			violations.append(Violation(path, 'incomplete', "a scenario needs at least one CHANNEL and a SCAN"))
		if violations:
			raise ConfigError(violations, path)

		# command-line overrides win over the scenario's own
		cmdline = self._options.set or []
		self.applyOverrides(overrides, path)
		self.applyOverrides(cmdline, 'command line')
		if self._options.seed is not None:
			self._scanOverrides['seed'] = str(self._options.seed)
		return scenario
	#loadScenario()


	def reproduceScenario(self, name):
		scenario = self.loadScenario(name)
		self.logPush("reproducing scenario %s: %s\n" % (scenario['name'], scenario['description']))
		if scenario['use_deconvolution']:
			self._useDeconvolution = True
		db = self.loadFingerprints(scenario['fingerprints']) if scenario['fingerprints'] else None

		reference = None
		refChannel = None
		summary = {'scenario': scenario['name'], 'description': scenario['description'], 'channels': collections.OrderedDict()}
		for label,channelPath in scenario['channels']:
			channel = self.loadChannel(channelPath)
			cfg = self.loadScan(scenario['scan'], channel)
			if self._options.report_configuration:
				self.reportConfiguration(channel, cfg, label)
			if scenario['reference'] and reference is None:
				refChannel = self.loadChannel(scenario['reference'])
				reference = self.simulate(refChannel, cfg, 'reference', rng.REFERENCE_NOISE)
			sonogram = self.simulate(channel, cfg, label)
			trace,report = self.analyze(sonogram, channel, reference, db, label, "channel '%s'" % label)
			entry = {
				'channel_digest': bocda_fiber.digest(channel),
				'events': [e.asDict() for e in report.events],
			}
			if db is not None:
				entry['fingerprints'] = self.fingerprintTable(sonogram, db, channel, label)
			if scenario['compare_otdr']:
				otdrReport,comparison = self.compareOtdr(channel, cfg, report, label)
				entry['otdr_events'] = [e.asDict() for e in otdrReport.events]
				entry['comparison'] = comparison['features']
			summary['channels'][label] = entry
		#foreach channel
		self.writeJson(summary, self.outputPath('summary.json', scenario['name']))
		self.logPop("... OK\n")
		return summary
	#reproduceScenario()


	##################################################
	# commands


	def runSimulate(self):
		channel = self.loadChannel(self._require('channel'))
		cfg = self.loadScan(self._options.scan, channel)
		if self._options.report_configuration:
			self.reportConfiguration(channel, cfg)
		self.simulate(channel, cfg)
	#runSimulate()


	def runAnalyze(self):
		sonogram = self.loadSonogram(self._require('sonogram'))
		channel = self.loadChannel(self._options.channel) if self._options.channel else None
		self.checkDigest(sonogram, channel)
		reference = self.loadSonogram(self._options.reference) if self._options.reference else None
		self.checkReference(sonogram, reference, self.loadChannel(self._options.reference_channel) if self._options.reference_channel else None)
		db = self.loadFingerprints(self._options.fingerprints) if self._options.fingerprints else None
		if self._options.report_configuration:
			self.reportConfiguration(channel, bocda_forward.scanFromDict(sonogram.meta['scan']))
		self.analyze(sonogram, channel, reference, db)
	#runAnalyze()


	def runFingerprint(self):
		channel = self.loadChannel(self._options.channel) if self._options.channel else None
		if self._options.sonogram:
			sonogram = self.loadSonogram(self._options.sonogram)
			self.checkDigest(sonogram, channel)
		elif channel is not None:
			sonogram = self.simulate(channel, self.loadScan(self._options.scan, channel))
		else:
			raise ConfigError([Violation('fingerprint', 'missing-input', "give --sonogram, or --channel and --scan")])
		db = self.loadFingerprints(self._require('fingerprints'))
		self.fingerprintTable(sonogram, db, channel)
	#runFingerprint()


	def runCompareOtdr(self):
		channel = self.loadChannel(self._require('channel'))
		cfg = self.loadScan(self._options.scan, channel)
		if self._options.report_configuration:
			self.reportConfiguration(channel, cfg)
		reference = self.loadSonogram(self._options.reference) if self._options.reference else None
		sonogram = self.simulate(channel, cfg)
		self.checkReference(sonogram, reference, self.loadChannel(self._options.reference_channel) if self._options.reference_channel else None)
		trace,report = self.analyze(sonogram, channel, reference)
		self.compareOtdr(channel, cfg, report)
	#runCompareOtdr()


	def _require(self, name):
		value = getattr(self._options, name)
		if not value:
			raise ConfigError([Violation(self._options.command, 'missing-option', "--%s is required" % name)])
		return value
	#_require()


	def run(self):
		"""
		Executes the requested command.

		Returns:
			(int): 0 when every artifact was written, 2 for configuration errors, 1 otherwise
		"""
		command = self._options.command
		handlers = {
			'simulate': self.runSimulate,
			'analyze': self.runAnalyze,
			'fingerprint': self.runFingerprint,
			'compare-otdr': self.runCompareOtdr,
			'reproduce-figure': lambda: self.reproduceScenario(self._options.scenario),
		}
		self.openLog()
		try:
			self.log("tapscan version %s, command %s\n" % (TapScan.getVersionString(), command))
			handlers[command]()
		except ConfigError as e:
			self.removeOutputs()
			sys.stderr.write(json.dumps(e.asDict(), sort_keys=True) + "\n")
			return 2
		except (ValueError, KernelSizeError, ConvergenceError, OSError) as e:
			self.removeOutputs()
			sys.stderr.write("ERROR: %s\n" % (e,))
			return 1
		except BaseException:
			self.removeOutputs()
			raise
		finally:
			self.closeLog()
		return 0
	#run()

#TapScan


##################################################
# command line


# define custom bool-ish type handler
def yesno(val):
	val = str(val).strip().lower()
	if val in ('1','t','true','y','yes','on'):
		return 'yes'
	if val in ('0','f','false','n','no','off'):
		return 'no'
	raise argparse.ArgumentTypeError("'%s' must be yes/on/true/1 or no/off/false/0" % val)
#yesno()


# define custom unsigned 64-bit seed handler
def u64(val):
	try:
		val = int(str(val).strip(), 0)
	except ValueError:
		raise argparse.ArgumentTypeError("'%s' is not an integer" % (val,))
	if val < 0 or val >= 2**64:
		raise argparse.ArgumentTypeError("'%s' must be between 0 and 2^64-1" % (val,))
	return val
#u64()


# define custom key=value handler for --set
def keyvalue(val):
	if '=' not in val:
		raise argparse.ArgumentTypeError("'%s' must be key=value" % (val,))
	key,value = val.split('=', 1)
	return (key.strip(), value.strip())
#keyvalue()


def makeParser():
	version = "tapscan version %s" % (TapScan.getVersionString(),)
	parser = argparse.ArgumentParser(
		prog='tapscan',
		description=version,
		add_help=False,
		formatter_class=argparse.RawDescriptionHelpFormatter
	)

	group = parser.add_argument_group("Configuration Options")
	group.add_argument('--help', '-h', action='help', help="show this help message and exit")
	group.add_argument('--version', action='version', version=version)
	group.add_argument('command', choices=COMMANDS, metavar='command',
			help="one of: %s" % (', '.join(COMMANDS),)
	)
	group.add_argument('scenario', nargs='?', default=None, metavar='scenario',
			help="bundled scenario (name or alias) for reproduce-figure, one of: %s" % (', '.join(TapScan.listScenarios()),)
	)
	group.add_argument('--channel', '-c', type=str, metavar='file', default=None,
			help="channel description file"
	)
	group.add_argument('--scan', '-s', type=str, metavar='file', default=None,
			help="scan configuration file"
	)
	group.add_argument('--seed', type=u64, metavar='u64', default=None,
			help="seed for every random sub-stream (overrides the scan's SEED)"
	)
	group.add_argument('--set', type=keyvalue, metavar='key=value', action='append', default=None,
			help="override a scan or analysis setting; repeatable"
	)
	group.add_argument('--report-configuration', '--rc', type=yesno, metavar='yes/no', nargs='?', const='yes', default='no',
			help="write the effective channel, scan and analysis settings (default: no)"
	)

	group = parser.add_argument_group("Analysis Options")
	group.add_argument('--sonogram', type=str, metavar='file', default=None,
			help="sonogram to analyze"
	)
	group.add_argument('--reference', type=str, metavar='file', default=None,
			help="clean-channel sonogram on the same grid, for the intensity-dip detector"
	)
	group.add_argument('--reference-channel', type=str, metavar='file', default=None,
			help="channel the --reference sonogram was simulated for; its digest is checked"
	)
	group.add_argument('--use-deconvolution', '--ud', type=yesno, metavar='yes/no', nargs='?', const='yes', default='no',
			help="remove the correlation background before peak extraction (default: no)"
	)
	group.add_argument('--fingerprints', type=str, metavar='file', default=None,
			help="fingerprint file used to label fiber sections"
	)
	group.add_argument('--allow-digest-mismatch', '--adm', type=yesno, metavar='yes/no', nargs='?', const='yes', default='no',
			help="analyze a sonogram simulated for a different channel than --channel (default: no)"
	)

	group = parser.add_argument_group("Output Options")
	group.add_argument('--out', '-o', type=str, metavar='dir', default='.',
			help="output directory (default: .)"
	)
	group.add_argument('--prefix', type=str, metavar='prefix', default='tapscan',
			help="prefix for all output file names (default: tapscan)"
	)
	group.add_argument('--overwrite', type=yesno, metavar='yes/no', nargs='?', const='yes', default='no',
			help="overwrite any existing output files (default: no)"
	)
	group.add_argument('--quiet', '-q', type=yesno, metavar='yes/no', nargs='?', const='yes', default='no',
			help="don't print warnings to stderr (default: no)"
	)
	group.add_argument('--verbose', '-v', type=yesno, metavar='yes/no', nargs='?', const='yes', default='no',
			help="print progress messages to stderr (default: no)"
	)
	return parser
#makeParser()


def main(argv=None):
	parser = makeParser()
	options = parser.parse_args(argv)
	for flag in ('report_configuration', 'use_deconvolution', 'allow_digest_mismatch', 'overwrite', 'quiet', 'verbose'):
		setattr(options, flag, getattr(options, flag) == 'yes')
	if (options.command == 'reproduce-figure') != (options.scenario is not None):
		parser.error("a scenario is required for reproduce-figure and only there")

	if not os.path.isdir(options.out):
		try:
			os.makedirs(options.out)
		except OSError as e:
			sys.exit("ERROR: cannot create output directory '%s': %s" % (options.out, e))
	if not os.access(options.out, os.W_OK):
		sys.exit("ERROR: output directory '%s' is not writable" % (options.out,))

	try:
		app = TapScan(options)
	except ConfigError as e:
		sys.stderr.write(json.dumps(e.asDict(), sort_keys=True) + "\n")
		return 2
	return app.run()
#main()


if __name__ == "__main__":
	sys.exit(main())
