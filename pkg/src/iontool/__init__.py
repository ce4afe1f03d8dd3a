"""Numerical toolkit for segmented linear Paul traps.

Submodules
----------
trapmodel   Mathieu parameters, secular frequencies, pseudopotential.
fieldsolve  Finite-difference, finite-element and boundary-element field solvers.
classint    Classical integrators and Coulomb interaction.
inversevolt Regularised electrode-voltage inversion and transport waveforms.
qdyn        Grid quantum dynamics: eigensolvers and propagators.
krotov      Optimal control for transport and phase gates.
"""
__version__ = "0.1.0"
