#!/usr/bin/env python

"""
Reader for the line-oriented configuration dialect shared by channel, scan and fingerprint files.

Each non-blank line is `KEYWORD arg arg ...`; `#` starts a comment line; arguments are
whitespace separated and may be "double quoted"; `INCLUDE file ...` reads other files
first (relative to the including file) and include loops are an error.
"""

import csv
import io
import os

from tapscan.bocda import ConfigError, Violation


# define a CSV dialect for conf files (to support "quoted substrings")
class cfDialect(csv.Dialect):
	delimiter = ' '
	doublequote = False
	escapechar = '\\'
	lineterminator = '\n'
	quotechar = '"'
	quoting = csv.QUOTE_MINIMAL
	skipinitialspace = True
#cfDialect


_prefixes = {
	'p': 1e-12, 'n': 1e-9, 'u': 1e-6, 'm': 1e-3, 'c': 1e-2,
	'k': 1e3, 'M': 1e6, 'G': 1e9, 'T': 1e12,
}


def quantity(val):
	"""
	Parses a number with an optional SI prefix suffix: '47G', '699k', '1550n', '2.5c', '1e-3'.

	Prefixes are case-sensitive ('m' is milli, 'M' is mega).
	"""
	text = str(val).strip()
	if text[-1:] in _prefixes:
		return float(text[:-1]) * _prefixes[text[-1]]
	return float(text)
#quantity()


class Record(object):
	
	def __init__(self, keyword, args, path, line):
		self.keyword = keyword
		self.args = args
		self.path = path
		self.line = line
	#__init__()
	
	
	def where(self):
		return "%s:%d" % (self.path, self.line)
	#where()
	
#Record


def readRecords(path, _stack=None):
	"""
	Reads all records of a configuration file, expanding INCLUDE directives in place.

	Args:
		path (str): file to read

	Returns:
		(list): Record objects in file order
	"""
	stack = _stack if _stack is not None else list()
	cfAbs = os.path.abspath(path)
	if cfAbs in stack:
		raise ConfigError([Violation(path, 'include-loop', ' -> '.join(stack + [cfAbs]))])
	if not os.path.exists(path):
		raise ConfigError([Violation(path, 'missing-file')])
	stack.append(cfAbs)
	
	records = list()
	with open(path, 'r') as cfHandle:
		for lineNum,line in enumerate(cfHandle, 1):
			line = line.replace('\t',' ').strip()
			if not line or line.startswith('#'):
				continue
			words = next(csv.reader([line], dialect=cfDialect))
			words = [w for w in words if w != '']
			keyword = words[0].upper().replace('-','_')
			if keyword == 'INCLUDE':
				for inc in words[1:]:
					incPath = inc if os.path.isabs(inc) else os.path.join(os.path.dirname(cfAbs), inc)
					records.extend(readRecords(incPath, stack))
			else:
				records.append(Record(keyword, words[1:], path, lineNum))
		#foreach line
	
	assert(stack[-1] == cfAbs)
	stack.pop()
	return records
#readRecords()


def parseParams(record, allowed, violations):
	"""
	Parses `name=value` arguments of a record, rejecting names not in `allowed`.

	Args:
		record (Record): the record being parsed
		allowed (dict): name -> converter callable
		violations (list): receives a Violation per bad argument

	Returns:
		(dict): converted values by name
	"""
	params = dict()
	for arg in record.args:
		if '=' not in arg:
			violations.append(Violation(record.where(), 'malformed-argument', arg))
			continue
		name,value = arg.split('=', 1)
		name = name.strip().lower()
		if name not in allowed:
			violations.append(Violation(record.where(), 'unknown-key', name))
			continue
		try:
			params[name] = allowed[name](value)
		except ValueError:
			violations.append(Violation(record.where(), 'bad-value', "%s=%s" % (name,value)))
	#foreach arg
	return params
#parseParams()


def formatNumber(value):
	"""Full-precision text for a float (round-trips exactly)."""
	return repr(float(value))
#formatNumber()


def formatRecord(keyword, args):
	"""Formats one record line, quoting arguments that contain spaces."""
	buf = io.StringIO()
	csv.writer(buf, dialect=cfDialect).writerow([keyword] + [str(a) for a in args])
	return buf.getvalue()
#formatRecord()
