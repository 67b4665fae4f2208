#!/usr/bin/env python

import apsw

from tapscan.bocda import ConfigError, Violation
from tapscan.bocda.util import conf


class FingerprintDb(object):
	"""
	Manufacturer fingerprints (mean BFS and tolerance per fiber label) held in SQLite.

	A database is only usable once validate() finds every tolerance positive and
	every pair of entries separated by more than the sum of their tolerances;
	load() enforces this.
	"""

	##################################################
	# class interrogation


	@classmethod
	def getVersionTuple(cls):
		# tuple = (major,minor,revision,dev,build,date)
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


	_schema = {
		'setting': {
			'table': """
(
  setting VARCHAR(32) PRIMARY KEY NOT NULL,
  value VARCHAR(256)
)
""",
			'data': [
				('schema','1'),
			],
			'index': {},
		}, #.db.setting

		'fiber': {
			'table': """
(
  label VARCHAR(64) PRIMARY KEY NOT NULL,
  mean_bfs REAL NOT NULL,
  tolerance REAL NOT NULL
)
""",
			'index': {
				'fiber__mean': '(mean_bfs)',
			},
		}, #.db.fiber
	}


	##################################################
	# constructor


	def __init__(self, dbFile=None):
		self._dbFile = dbFile
		self._db = apsw.Connection(dbFile or ':memory:')
		self.configureDatabase()
		self.createDatabaseObjects()
	#__init__()


	def __enter__(self):
		return self._db.__enter__()
	#__enter__()


	def __exit__(self, excType, excVal, traceback):
		return self._db.__exit__(excType, excVal, traceback)
	#__exit__()


	##################################################
	# database management


	def configureDatabase(self):
		cursor = self._db.cursor()
		cursor.execute("PRAGMA page_size = 4096")
		cursor.execute("PRAGMA synchronous = OFF")
		cursor.execute("PRAGMA journal_mode = MEMORY")
		cursor.execute("PRAGMA temp_store = MEMORY")
	#configureDatabase()


	def createDatabaseObjects(self):
		cursor = self._db.cursor()
		for tblName,tbl in self._schema.items():
			cursor.execute("CREATE TABLE IF NOT EXISTS `%s` %s" % (tblName, tbl['table']))
			if tbl.get('data'):
				sql = "INSERT OR IGNORE INTO `%s` VALUES (%s)" % (tblName, ("?,"*len(tbl['data'][0]))[:-1])
				cursor.executemany(sql, tbl['data'])
			for idxName,idxDef in tbl['index'].items():
				cursor.execute("CREATE INDEX IF NOT EXISTS `%s` ON `%s` %s" % (idxName, tblName, idxDef))
		#foreach table
	#createDatabaseObjects()


	def getDatabaseSetting(self, setting, type=None):
		value = None
		for row in self._db.cursor().execute("SELECT value FROM `setting` WHERE setting = ?", (setting,)):
			value = row[0]
		if type:
			value = type(value) if (value != None) else type()
		return value
	#getDatabaseSetting()


	##################################################
	# entries


	def addEntry(self, label, mean_bfs, tolerance):
		self._db.cursor().execute("INSERT OR REPLACE INTO `fiber` (label, mean_bfs, tolerance) VALUES (?, ?, ?)", (label, float(mean_bfs), float(tolerance)))
	#addEntry()


	def entries(self):
		"""Returns {label: (mean_bfs, tolerance)} ordered by mean BFS."""
		return dict(
			(row[0], (row[1], row[2]))
			for row in self._db.cursor().execute("SELECT label, mean_bfs, tolerance FROM `fiber` ORDER BY mean_bfs, label")
		)
	#entries()


	def validate(self):
		violations = list()
		rows = list(self._db.cursor().execute("SELECT label, mean_bfs, tolerance FROM `fiber` ORDER BY mean_bfs, label"))
		for label,mean,tol in rows:
			if not (tol > 0):
				violations.append(Violation("fiber %s" % label, 'tolerance', "%r" % (tol,)))
		for i,(l1,m1,t1) in enumerate(rows):
			for l2,m2,t2 in rows[i+1:]:
				if not (abs(m2 - m1) > t1 + t2):
					violations.append(Violation("fiber %s" % l2, 'ambiguous', "overlaps %s (%r Hz apart, tolerances %r + %r Hz)" % (l1, abs(m2 - m1), t1, t2)))
		return violations
	#validate()


	@classmethod
	def fromEntries(cls, entries, dbFile=None):
		"""
		Builds and validates a database from {label: (mean_bfs, tolerance)}.

		Raises:
			ConfigError: ambiguous or non-positive-tolerance entries
		"""
		db = cls(dbFile)
		with db:
			for label,(mean,tol) in entries.items():
				db.addEntry(label, mean, tol)
		violations = db.validate()
		if violations:
			raise ConfigError(violations, dbFile)
		return db
	#fromEntries()


	@classmethod
	def load(cls, path, dbFile=None):
		"""
		Reads a fingerprint file of `FIBER label mean_bfs_hz tolerance_hz` records.

		Raises:
			ConfigError: malformed records, duplicate labels, ambiguous entries
		"""
		violations = list()
		entries = dict()
		for rec in conf.readRecords(path):
			if rec.keyword != 'FIBER':
				violations.append(Violation(rec.where(), 'unknown-keyword', rec.keyword))
				continue
			if len(rec.args) != 3:
				violations.append(Violation(rec.where(), 'argument-count', "FIBER expects label, mean and tolerance"))
				continue
			if rec.args[0] in entries:
				violations.append(Violation(rec.where(), 'duplicate-label', rec.args[0]))
				continue
			try:
				entries[rec.args[0]] = (conf.quantity(rec.args[1]), conf.quantity(rec.args[2]))
			except ValueError:
				violations.append(Violation(rec.where(), 'bad-value', ' '.join(rec.args[1:])))
		if violations:
			raise ConfigError(violations, path)
		try:
			return cls.fromEntries(entries, dbFile)
		except ConfigError as e:
			raise ConfigError(e.violations, path)
	#load()

#FingerprintDb
