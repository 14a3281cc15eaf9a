"""Fog-federation access control: CP-ABE key wrapping, threshold shares and a
quorum-replicated tracking ledger, exercised on a deterministic network simulator.

The bundled group backend is an exponent-arithmetic reference and offers no
cryptographic security.
"""

__version__ = "0.1.0"
