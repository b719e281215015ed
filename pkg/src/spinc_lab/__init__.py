"""Spin^c spinor calculus on model manifolds: Clifford algebras, spin connections,
hypersurfaces, generalized cylinders, lattice Dirac spectra and metric variations."""

__version__ = "0.1.0"
