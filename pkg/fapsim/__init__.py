"""Energy simulator for rotary-wing and fixed-wing UAVs serving as flying access points."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("fapsim")
except PackageNotFoundError:  # pragma: no cover - running from a source checkout
    __version__ = "0.0.0"
