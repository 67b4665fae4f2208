#!/usr/bin/env python

import sys


class Log(object):
	"""
	Indented progress log shared by the library modules and the command line program.

	Messages are written verbatim (no implicit newline) so a step can print
	"doing something ..." and later complete the line with " OK\\n". Each
	logPush() indents following lines by two spaces until the matching logPop().
	Normal messages go to the log file, and to stderr only when verbose;
	warnings also go to stderr unless quiet.
	"""
	
	##################################################
	# constructor
	
	
	def __init__(self, logFile=None, verbose=False, quiet=True):
		self._logFile = logFile
		self._verbose = verbose
		self._quiet = quiet
		self._logIndent = 0
		self._logHanging = False
	#__init__()
	
	
	##################################################
	# configuration
	
	
	def configure(self, logFile=None, verbose=False, quiet=True):
		self._logFile = logFile
		self._verbose = verbose
		self._quiet = quiet
		self._logIndent = 0
		self._logHanging = False
	#configure()
	
	
	##################################################
	# logging
	
	
	def _log(self, message="", warning=False):
		toStderr = self._verbose or (warning and not self._quiet)
		if (self._logIndent > 0) and (not self._logHanging):
			if self._logFile:
				self._logFile.write(self._logIndent * "  ")
			if toStderr:
				sys.stderr.write(self._logIndent * "  ")
			self._logHanging = True
		
		if self._logFile:
			self._logFile.write(message)
		if toStderr:
			sys.stderr.write(message)
		
		if message[-1:] != "\n":
			if self._logFile:
				self._logFile.flush()
			if toStderr:
				sys.stderr.flush()
			self._logHanging = True
		else:
			self._logHanging = False
		return self._logIndent
	#_log()
	
	
	def log(self, message=""):
		return self._log(message, False)
	#log()
	
	
	def logPush(self, message=None):
		if message:
			self.log(message)
		if self._logHanging:
			self.log("\n")
		self._logIndent += 1
		return self._logIndent
	#logPush()
	
	
	def logPop(self, message=None):
		if self._logHanging:
			self.log("\n")
		self._logIndent = max(0, self._logIndent - 1)
		if message:
			self.log(message)
		return self._logIndent
	#logPop()
	
	
	def warn(self, message=""):
		return self._log(message, True)
	#warn()
	
#Log


_logger = Log()


def getLogger():
	return _logger
#getLogger()
