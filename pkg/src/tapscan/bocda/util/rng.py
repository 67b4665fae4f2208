#!/usr/bin/env python

import zlib

import numpy as np


# sub-stream names used by the pipeline; any other name is allowed too
SONOGRAM_NOISE = 'sonogram-noise'
REFERENCE_NOISE = 'reference-noise'
OTDR_TRACES = 'otdr-traces'


def streamKey(name):
	"""
	Returns the stable integer key of a named sub-stream.

	Args:
		name (str): stream name, e.g. 'sonogram-noise'

	Returns:
		(int): CRC32 of the UTF-8 name
	"""
	return zlib.crc32(name.encode('utf-8'))
#streamKey()


def generator(seed, name, *indices):
	"""
	Returns a numpy Generator for the sub-stream (seed, name, indices...).

	The generator depends only on its arguments, never on how many draws were
	made elsewhere, so work split across rows or workers stays reproducible.
	"""
	if seed < 0 or seed >= 2**64:
		raise ValueError("seed %r must be an unsigned 64-bit integer" % (seed,))
	seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(streamKey(name),) + tuple(int(i) for i in indices))
	return np.random.Generator(np.random.PCG64(seq))
#generator()
