"""Positive-duality-gap SDP toolkit: generators, exact certificates,
facial reduction checks and a two-variable canonical form."""

from .symkernel import SymMat, PsdKind, PsdStatus, Tolerances, inner, congruence, psd_status

__version__ = "0.1.0"
