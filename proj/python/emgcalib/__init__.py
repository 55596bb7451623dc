"""EMG classifier calibration toolkit.

Thin wrapper around the compiled extension. When the package is installed the
extension lives next to this file; during development it may sit on the path
as a top-level module (e.g. built by CMake).
"""

try:
    from ._emgcalib import *  # noqa: F401,F403
    from ._emgcalib import __doc__  # noqa: F401
except ImportError:  # pragma: no cover - development layout
    from _emgcalib import *  # noqa: F401,F403

__version__ = "0.1.0"
