__all__ = ["bocda_log","bocda_fiber","bocda_forward","bocda_retrieval","bocda_detect","bocda_fingerprint","bocda_otdr","util"]


class DomainError(ValueError):
	"""An input lies outside the physical domain of an operation."""
	pass
#DomainError


class Violation(object):
	"""
	One broken invariant, naming the offending object and rule.
	"""
	
	def __init__(self, subject, rule, detail=""):
		self.subject = subject
		self.rule = rule
		self.detail = detail
	#__init__()
	
	
	def __repr__(self):
		return "Violation(%r, %r, %r)" % (self.subject, self.rule, self.detail)
	#__repr__()
	
	
	def __eq__(self, other):
		return isinstance(other, Violation) and (self.subject, self.rule, self.detail) == (other.subject, other.rule, other.detail)
	#__eq__()
	
	
	def asDict(self):
		return {'subject': self.subject, 'rule': self.rule, 'detail': self.detail}
	#asDict()
	
#Violation


class ConfigError(Exception):
	"""
	Raised when a configuration fails validation; carries every violation found.
	"""
	
	def __init__(self, violations, source=None):
		self.violations = list(violations)
		self.source = source
		lines = ["%s: %s%s" % (v.subject, v.rule, (" (%s)" % v.detail) if v.detail else "") for v in self.violations]
		prefix = ("in '%s': " % source) if source else ""
		super(ConfigError, self).__init__(prefix + "; ".join(lines))
	#__init__()
	
	
	def asDict(self):
		return {'error': 'configuration', 'source': self.source, 'violations': [v.asDict() for v in self.violations]}
	#asDict()
	
#ConfigError


class GridMismatchError(ValueError):
	pass
#GridMismatchError


class KernelSizeError(MemoryError):
	
	def __init__(self, required, budget):
		self.required = required
		self.budget = budget
		super(KernelSizeError, self).__init__("background kernel needs %d bytes, memory budget is %d bytes" % (required, budget))
	#__init__()
	
#KernelSizeError


class ConvergenceError(ArithmeticError):
	
	def __init__(self, residual, iterations):
		self.residual = residual
		self.iterations = iterations
		super(ConvergenceError, self).__init__("conjugate gradient did not converge after %d iterations (relative residual %.3e)" % (iterations, residual))
	#__init__()
	
#ConvergenceError
