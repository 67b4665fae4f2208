"""
TapScan: correlation-domain Brillouin simulation and eavesdropper localization for optical fiber channels
"""

__all__ = ["tapscan", "bocda"]
__version__ = "1.0.0"
