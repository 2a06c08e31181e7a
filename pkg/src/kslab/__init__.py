"""Random and deterministic 1D Schrödinger operators: potentials, spectra,
eigenfunction correlators, and the integral-operator machinery behind their
decay bounds."""

__version__ = "0.1.0"
