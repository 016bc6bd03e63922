"""Discrete rearrangements, convex bodies and Young functions, with numerical checks
of the inequalities that connect them."""
from .grid import Grid, GridError, GridFunction, GridSet, PaddingError
from .convex import ConvexBody, polar, square, square_of_area, hexagon_of_area, unit_ball
from .young import Power, PhiMax, PhiMin, SqrtShift, Truncated, conjugate, luxemburg_norm, build_phi_body
from .rearrange import (Composite, Identity, KSchwarz, Polarization, Schwarz, Steiner, SymDecreasing,
                        layer_cake_reconstruct, polarization_flow)
from .verify import CheckReport

__version__ = "0.1.0"
