"""Numerical companion for the ancient Yin-Yang curve shortening flow.

Modules
-------
core       planar curves, discrete geometry, symmetric-difference areas
soliton    the rotating soliton profile and its large-angle expansion
cap        the corrected Grim Reaper cap
assembly   the glued approximate solution and the reference region Omega(t)
deficit    how far the approximate solution is from solving the flow
flow       curve shortening flow solver and monitors
homotopy   normal homotopies, their length and the area bounds
cli        command-line front end
"""

__version__ = "0.1.0"
