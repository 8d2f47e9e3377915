"""Unit conversions, kept in one place.

Internal units everywhere: times in ns, angular frequencies and coupling
strengths in rad/ns, decay rates in 1/ns.  User-facing interfaces (CLI flags,
schedule files) speak linear MHz/GHz; linear frequencies pick up a factor of
2*pi on the way in, decay rates do not.
"""

import math

TWO_PI = 2.0 * math.pi


def mhz_to_rad_per_ns(f_mhz):
    """Linear frequency in MHz -> angular frequency in rad/ns."""
    return TWO_PI * f_mhz * 1e-3


def ghz_to_rad_per_ns(f_ghz):
    """Linear frequency in GHz -> angular frequency in rad/ns."""
    return TWO_PI * f_ghz


def rad_per_ns_to_mhz(w):
    """Angular frequency in rad/ns -> linear MHz."""
    return w * 1e3 / TWO_PI


def rate_mhz_to_per_ns(r_mhz):
    """Plain rate in MHz (1e6/s) -> 1/ns.  No 2*pi."""
    return r_mhz * 1e-3


def rate_per_ns_to_mhz(r):
    """Plain rate in 1/ns -> MHz."""
    return r * 1e3
