#!/usr/bin/env python

"""
Spectral retrieval: per-position peak-BFS traces straight from a sonogram, and
removal of the correlation background by regularized deconvolution.

The background kernel maps the local gain spectrum g(z, ν) (the spectrum a
correlation point would see at z), written as a sum of Lorentzian lines, to
predicted sonogram pixels. For measurement row p and fiber cell c it is a
convolution along ν with the cell-averaged arcsine-smeared Lorentzian of the
beat amplitude A_p(z); at a correlation point that stencil is the line itself.
"""

import dataclasses
import math

import numpy as np
import scipy.fft

from tapscan.bocda import ConvergenceError, GridMismatchError, KernelSizeError
from tapscan.bocda import bocda_fiber, bocda_forward, bocda_log


DEFAULT_LAMBDA = 1e-2
CG_TOLERANCE = 1e-8
CG_MAXITER = 10000
MEMORY_BUDGET = 1 << 30


@dataclasses.dataclass(frozen=True, eq=False)
class BfsTrace:
	positions: np.ndarray
	peak_bfs: np.ndarray
	peak_intensity: np.ndarray
	step: float = 0.0  # detuning step of the source grid
	flagged: tuple = ()  # positions whose column was all zero
	meta: dict = dataclasses.field(default_factory=dict)

	def __len__(self):
		return len(self.positions)
	#__len__()

#BfsTrace


@dataclasses.dataclass(frozen=True, eq=False)
class GainMap:
	positions: np.ndarray
	detunings: np.ndarray
	gain: np.ndarray
	residual_norm: float
	regularization: float
	iterations: int = 0
	meta: dict = dataclasses.field(default_factory=dict)

	def asSonogram(self):
		"""View as a Sonogram so trace extraction treats raw and deconvolved data alike."""
		return bocda_forward.Sonogram(self.positions, self.detunings, self.gain, dict(self.meta, deconvolved=True))
	#asSonogram()

#GainMap


##################################################
# peak traces


def _parabolaPeak(nu, col, k):
	# 3-point parabola through the grid maximum, offset clamped to half a bin
	step = nu[1] - nu[0]
	if 0 < k < len(col) - 1:
		y0,y1,y2 = col[k-1], col[k], col[k+1]
		denom = y0 - 2.0 * y1 + y2
		if denom < 0:
			return nu[k] + step * min(0.5, max(-0.5, 0.5 * (y0 - y2) / denom))
	return nu[k]
#_parabolaPeak()


def _lorentzianPeak(nu, col, k, half):
	# 1/I of a Lorentzian is a parabola in ν; weights I undo the 1/I² noise growth
	lo,hi = max(0, k - half), min(len(col), k + half + 1)
	u = nu[lo:hi] - nu[k]
	y = col[lo:hi]
	keep = y > 0
	if half < 2 or np.count_nonzero(keep) < 5 or k == 0 or k == len(col) - 1:
		return _parabolaPeak(nu, col, k)
	c2,c1,c0 = np.polyfit(u[keep], 1.0 / y[keep], 2, w=y[keep])
	if not (c2 > 0):
		return _parabolaPeak(nu, col, k)
	return nu[k] + min(max(-c1 / (2.0 * c2), u[0]), u[-1])
#_lorentzianPeak()


def peakBfsTrace(s, linewidth=27e6):
	"""
	Extracts the maximum-BFS trace of a sonogram.

	Per position the grid maximum (first one, i.e. lowest detuning, on ties) is
	refined by a weighted least-squares parabola through 1/intensity over
	±linewidth/2 around it, which is exact for a Lorentzian line and averages the
	pixel noise of the flat, background-dominated peak; with fewer than five usable
	bins a 3-point parabola is used. peak_intensity is the mean intensity within
	±linewidth of the refined peak. Positions whose column is all zero are flagged
	and left out of the trace.

	Args:
		s (Sonogram): raw or deconvolved sonogram
		linewidth (float): half-width in Hz of the band averaged for peak_intensity

	Returns:
		(BfsTrace): one entry per usable position
	"""
	nu = np.asarray(s.detunings, dtype=float)
	step = float(nu[1] - nu[0]) if len(nu) > 1 else 0.0
	half = int(round(0.5 * linewidth / step)) if step > 0 else 0
	positions = list()
	peaks = list()
	levels = list()
	flagged = list()
	for i,z in enumerate(s.positions):
		col = np.asarray(s.intensity[i], dtype=float)
		if not np.any(col > 0):
			flagged.append(float(z))
			continue
		k = int(np.argmax(col))
		peak = _lorentzianPeak(nu, col, k, half) if len(nu) > 1 else nu[k]
		band = np.abs(nu - peak) <= linewidth
		positions.append(float(z))
		peaks.append(peak)
		levels.append(float(np.mean(col[band])) if np.any(band) else float(col[k]))
	#foreach position
	if flagged:
		bocda_log.getLogger().warn("WARNING: %d position(s) with an all-zero spectrum excluded from the trace\n" % len(flagged))
	meta = {'channel_digest': s.meta.get('channel_digest'), 'deconvolved': bool(s.meta.get('deconvolved', False))}
	return BfsTrace(np.array(positions), np.array(peaks), np.array(levels), step, tuple(flagged), meta)
#peakBfsTrace()


##################################################
# background kernel


class BackgroundKernel(object):
	"""
	Linear operator from Lorentzian line amplitudes a[c, k] (fiber cell c, line
	center on bin k of the unknown detuning grid) to predicted sonogram pixels s[p, j].

	The local gain spectrum of cell c is Σ_k a[c, k]·L(ν - ν_k), L the unit-peak
	Lorentzian of the kernel linewidth. Each line is smeared by the beat amplitude
	in closed form and averaged over the cell, so its tails and the whole arcsine
	support reach the measured window exactly as they do in synthesizeSonogram.
	The unknown grid is the measured grid extended by `pad` bins on each side (one
	linewidth when None). Stencils depend on the bin offset only and are even in it,
	so the adjoint reuses them.
	"""

	##################################################
	# constructor


	def __init__(self, channel_length, cfg, cell_width=None, pad=None, budget=MEMORY_BUDGET, linewidth=27e6):
		self.positions = cfg.positions()
		self.detunings = cfg.detunings()
		if len(self.detunings) < 2:
			raise ValueError("background kernel needs at least two detunings")
		if not (linewidth > 0):
			raise ValueError("background kernel needs a positive linewidth")
		self.step = float(self.detunings[1] - self.detunings[0])
		self.linewidth = float(linewidth)
		res = cfg.resolution(self.linewidth)
		if cell_width is None:
			cell_width = 0.5 * res
		nCells = max(1, int(math.ceil(channel_length / cell_width - 1e-9)))
		self.cellWidth = channel_length / nCells
		self.cells = (np.arange(nCells) + 0.5) * self.cellWidth
		if pad is None:
			pad = int(math.ceil(self.linewidth / self.step))
		if pad < 0:
			raise ValueError("detuning padding must not be negative")
		self.pad = int(pad)

		P = len(self.positions)
		N = len(self.detunings)
		C = nCells
		Nu = N + 2 * self.pad
		M = N + self.pad - 1
		self.nUnknown = Nu
		self.nfft = scipy.fft.next_fast_len(3 * N + 4 * self.pad - 2, real=True)
		F = self.nfft // 2 + 1
		nSub = max(1, int(math.ceil(self.cellWidth / (res / 8.0))))
		required = P * C * F * 16 + C * nSub * (M + 1) * 16 + N * Nu * 8
		if required > budget:
			raise KernelSizeError(required, budget)

		logger = bocda_log.getLogger()
		logger.log("building background kernel (%d rows x %d cells x %d lines) ..." % (P, C, Nu))
		sub = (np.arange(nSub) + 0.5) / nSub - 0.5
		absolute = self.cells[:, None] + self.cellWidth * sub[None, :] + cfg.position_offset
		offsets = np.arange(M + 1) * self.step
		gamma = 0.5 * self.linewidth
		self.Bf = np.empty((P, C, F), dtype=complex)
		for p,f_m in enumerate(cfg.f_m_sweep):
			A = bocda_forward.beatAmplitude(absolute, f_m, cfg.delta_f, cfg.group_velocity)
			half = self.cellWidth * bocda_forward.smearedLorentzian(offsets[None, None, :], gamma, A[:, :, None]).mean(axis=1)
			full = np.concatenate((half[:, :0:-1], half), axis=1)
			self.Bf[p] = scipy.fft.rfft(full, self.nfft, axis=1)
		#foreach row
		self.lines = bocda_forward.lorentzian(self.detunings[:, None] - self.unknownDetunings()[None, :], self.linewidth)
		self._frobeniusSq = None
		self._power = None
		logger.log(" OK\n")
	#__init__()


	##################################################
	# geometry


	@property
	def shape(self):
		return (len(self.positions) * len(self.detunings), len(self.cells) * self.nUnknown)
	#shape


	def unknownDetunings(self):
		return self.detunings[0] + (np.arange(self.nUnknown) - self.pad) * self.step
	#unknownDetunings()


	##################################################
	# operator


	def matvec(self, a):
		N = len(self.detunings)
		a = np.asarray(a, dtype=float).reshape(len(self.cells), self.nUnknown)
		Af = scipy.fft.rfft(a, self.nfft, axis=1)
		Sf = np.einsum('pcf,cf->pf', self.Bf, Af)
		lo = N + 2 * self.pad - 1
		return scipy.fft.irfft(Sf, self.nfft, axis=1)[:, lo:lo + N]
	#matvec()


	def rmatvec(self, s):
		N = len(self.detunings)
		s = np.asarray(s, dtype=float).reshape(len(self.positions), N)
		Sf = scipy.fft.rfft(s, self.nfft, axis=1)
		Af = np.einsum('pcf,pf->cf', self.Bf, Sf)
		return scipy.fft.irfft(Af, self.nfft, axis=1)[:, N - 1:N - 1 + self.nUnknown]
	#rmatvec()


	def localGain(self, a):
		"""Local gain spectra of the cells on the measured detunings, Σ_k a[c, k]·L(ν_j - ν_k)."""
		a = np.asarray(a, dtype=float).reshape(len(self.cells), self.nUnknown)
		return a.dot(self.lines.T)
	#localGain()


	def preconditioner(self, lam):
		"""
		Inverse of the circulant approximation of KᵀK + lam·DᵀD, applied cell by
		cell in the frequency domain: 1/(Σ_p |B_pc|² + lam·|D|²).
		"""
		if self._power is None:
			power = np.zeros(self.Bf.shape[1:])
			for p in range(self.Bf.shape[0]):
				power += self.Bf[p].real ** 2 + self.Bf[p].imag ** 2
			self._power = power
		omega = 2.0 * np.pi * np.arange(self._power.shape[1]) / self.nfft
		denom = self._power + lam * (2.0 - 2.0 * np.cos(omega)) ** 2
		weights = 1.0 / (denom + 1e-8 * float(np.max(denom)))
		nfft,Nu = self.nfft,self.nUnknown

		def apply(r):
			return scipy.fft.irfft(scipy.fft.rfft(r, nfft, axis=1) * weights, nfft, axis=1)[:, :Nu]
		#apply()

		return apply
	#preconditioner()


	def frobeniusSq(self):
		"""Exact squared Frobenius norm, from the stencils and the count of (j, k) pairs per offset."""
		if self._frobeniusSq is None:
			N = len(self.detunings)
			M = N + self.pad - 1
			full = scipy.fft.irfft(self.Bf, self.nfft, axis=2)[:, :, :2 * M + 1]
			m = np.arange(2 * M + 1) - M
			count = np.maximum(0, np.minimum(N, self.nUnknown + m - self.pad) - np.maximum(0, m - self.pad))
			self._frobeniusSq = float(np.einsum('pcm,m->', full * full, count.astype(float)))
		return self._frobeniusSq
	#frobeniusSq()

#BackgroundKernel


def backgroundKernel(channel_length, cfg, cell_width=None, pad=None, budget=MEMORY_BUDGET, linewidth=27e6):
	return BackgroundKernel(channel_length, cfg, cell_width=cell_width, pad=pad, budget=budget, linewidth=linewidth)
#backgroundKernel()


def localGainMap(channel, kernel, cfg):
	"""
	Ground-truth local gain on the kernel's cells and measured detunings:
	w(z)·coupling(z)·Lorentzian(ν - bfs(z)), averaged over each cell.
	"""
	res = cfg.resolution(min(s.gain_linewidth for s in channel.segments))
	nSub = max(1, int(math.ceil(kernel.cellWidth / (res / 8.0))))
	sub = (np.arange(nSub) + 0.5) / nSub - 0.5
	z = np.clip((kernel.cells[:, None] + kernel.cellWidth * sub[None, :]).ravel(), 0.0, channel.totalLength)
	prof = bocda_fiber.sampleProfile(channel, z)
	tEnd = bocda_fiber.localProfile(channel, channel.totalLength).transmission_to_z
	weight = cfg.pump_power * cfg.probe_power * tEnd * prof.transmission_to_z * prof.coupling
	nu = kernel.detunings
	g = weight[:, None] * bocda_forward.lorentzian(nu[None, :] - prof.effectiveBfs()[:, None], prof.linewidth[:, None])
	return g.reshape(len(kernel.cells), nSub, len(nu)).mean(axis=1)
#localGainMap()


##################################################
# deconvolution


def _secondDifference(g):
	return g[:, :-2] - 2.0 * g[:, 1:-1] + g[:, 2:]
#_secondDifference()


def _secondDifferenceAdjoint(d, n):
	out = np.zeros((d.shape[0], n))
	out[:, :-2] += d
	out[:, 1:-1] -= 2.0 * d
	out[:, 2:] += d
	return out
#_secondDifferenceAdjoint()


def _conjugateGradient(apply, b, tol, maxiter, precondition=None):
	# preconditioned CG on a symmetric positive (semi)definite operator, fixed reduction order
	x = np.zeros_like(b)
	r = b.copy()
	bnorm = math.sqrt(float(np.vdot(b, b)))
	if bnorm == 0.0:
		return x, 0.0, 0
	z = precondition(r) if precondition else r.copy()
	p = z.copy()
	rz = float(np.vdot(r, z))
	rnorm = bnorm
	it = 0
	for it in range(1, maxiter + 1):
		Ap = apply(p)
		pAp = float(np.vdot(p, Ap))
		if pAp <= 0.0 or rz <= 0.0:
			break
		alpha = rz / pAp
		x += alpha * p
		r -= alpha * Ap
		rnorm = math.sqrt(float(np.vdot(r, r)))
		if rnorm <= tol * bnorm:
			return x, rnorm / bnorm, it
		z = precondition(r) if precondition else r.copy()
		rzNew = float(np.vdot(r, z))
		p = z + (rzNew / rz) * p
		rz = rzNew
	raise ConvergenceError(rnorm / bnorm, it)
#_conjugateGradient()


def deconvolveGain(s, kernel, lambda_reg=DEFAULT_LAMBDA, tol=CG_TOLERANCE, maxiter=CG_MAXITER):
	"""
	Recovers the local gain map behind a sonogram.

	Solves min ‖K·a - s‖² + λ_eff‖D·a‖² over the kernel's line amplitudes a by
	preconditioned conjugate gradient on the normal equations, D the second
	difference along detuning and λ_eff = λ·‖K‖²_F/‖D‖²_F. The local gain
	Σ_k a_k·L(ν - ν_k) is then evaluated on the measured detunings and projected
	onto g >= 0.

	Args:
		s (Sonogram): measured sonogram on the kernel's grids
		kernel (BackgroundKernel): forward operator
		lambda_reg (float): trace-normalized regularization weight, >= 0
		tol (float): relative residual of the normal equations
		maxiter (int): iteration cap

	Returns:
		(GainMap): gain on the kernel cells and the measured detunings; residual_norm is
			‖K·a - s‖/‖s‖ of the unprojected solution

	Raises:
		GridMismatchError: sonogram and kernel grids differ
		ConvergenceError: the solver did not reach `tol` within `maxiter` iterations
	"""
	if (len(s.positions) != len(kernel.positions) or len(s.detunings) != len(kernel.detunings)
			or not np.allclose(s.positions, kernel.positions, rtol=0, atol=1e-9)
			or not np.allclose(s.detunings, kernel.detunings, rtol=0, atol=1e-3)):
		raise GridMismatchError("sonogram grid does not match the background kernel")
	if not (lambda_reg >= 0):
		raise ValueError("regularization must not be negative")

	C,Nu = len(kernel.cells), kernel.nUnknown
	data = np.asarray(s.intensity, dtype=float)
	dNormSq = 6.0 * C * max(0, Nu - 2)
	lam = lambda_reg * kernel.frobeniusSq() / dNormSq if dNormSq > 0 else 0.0

	def normal(a):
		out = kernel.rmatvec(kernel.matvec(a))
		if lam > 0:
			out = out + lam * _secondDifferenceAdjoint(_secondDifference(a), Nu)
		return out
	#normal()

	logger = bocda_log.getLogger()
	logger.log("deconvolving gain (lambda %g) ..." % lambda_reg)
	a,rel,iterations = _conjugateGradient(normal, kernel.rmatvec(data), tol, maxiter, kernel.preconditioner(lam))
	logger.log(" OK (%d iterations)\n" % iterations)

	dNorm = float(np.linalg.norm(data))
	residual = float(np.linalg.norm(kernel.matvec(a) - data)) / dNorm if dNorm > 0 else 0.0
	gain = np.maximum(kernel.localGain(a), 0.0)
	meta = {'channel_digest': s.meta.get('channel_digest'), 'pad': kernel.pad, 'cell_width': kernel.cellWidth, 'linewidth': kernel.linewidth}
	return GainMap(kernel.cells.copy(), np.asarray(s.detunings, dtype=float).copy(), gain, residual, float(lambda_reg), iterations, meta)
#deconvolveGain()


LCURVE_LAMBDAS = tuple(10.0 ** e for e in range(-6, 2))


def lCurveLambda(s, kernel, lambdas=LCURVE_LAMBDAS, tol=CG_TOLERANCE, maxiter=CG_MAXITER):
	"""
	Picks λ at the corner of the L-curve (log residual vs log ‖D·g‖) by the largest
	curvature through consecutive triples of the ladder.

	Returns:
		(float): a member of `lambdas`
	"""
	lambdas = sorted(float(l) for l in lambdas)
	if len(lambdas) < 3:
		return lambdas[len(lambdas) // 2]
	logger = bocda_log.getLogger()
	logger.logPush("searching the L-curve over %d weights ...\n" % len(lambdas))
	pts = list()
	for lam in lambdas:
		gm = deconvolveGain(s, kernel, lam, tol, maxiter)
		rough = float(np.linalg.norm(_secondDifference(gm.gain)))
		pts.append((math.log(max(gm.residual_norm, 1e-300)), math.log(max(rough, 1e-300))))
	best,bestCurv = lambdas[1], -1.0
	for i in range(1, len(pts) - 1):
		(x0,y0),(x1,y1),(x2,y2) = pts[i-1], pts[i], pts[i+1]
		area2 = abs((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
		sides = math.hypot(x1 - x0, y1 - y0) * math.hypot(x2 - x1, y2 - y1) * math.hypot(x2 - x0, y2 - y0)
		curv = 2.0 * area2 / sides if sides > 0 else 0.0
		if curv > bestCurv:
			best,bestCurv = lambdas[i], curv
	logger.logPop("... OK (lambda %g)\n" % best)
	return best
#lCurveLambda()




##################################################
# exports


def _header(f, meta):
	for key in sorted(meta):
		f.write("# %s: %s\n" % (key, meta[key]))
#_header()


def writeBfsTrace(trace, path, meta=None):
	with open(path, 'w') as f:
		_header(f, dict(trace.meta, **(meta or {})))
		if trace.flagged:
			f.write("# flagged_positions_m: %s\n" % " ".join("%.17g" % z for z in trace.flagged))
		f.write("position_m,peak_bfs_hz,peak_intensity\n")
		for z,b,i in zip(trace.positions, trace.peak_bfs, trace.peak_intensity):
			f.write("%.17g,%.17g,%.17g\n" % (z, b, i))
	return [path]
#writeBfsTrace()


def writeGainMap(gm, path, meta=None):
	with open(path, 'w') as f:
		_header(f, dict(gm.meta, residual_norm="%.17g" % gm.residual_norm, regularization="%.17g" % gm.regularization, iterations=gm.iterations, **(meta or {})))
		f.write("position_m,detuning_hz,gain\n")
		for i,z in enumerate(gm.positions):
			for j,nu in enumerate(gm.detunings):
				f.write("%.17g,%.17g,%.17g\n" % (z, nu, gm.gain[i, j]))
	return [path]
#writeGainMap()
