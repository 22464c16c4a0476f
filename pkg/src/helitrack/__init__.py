"""Geometric attitude tracking toolkit for small-scale aerobatic helicopters.

Subpackages by responsibility:

  so3         rotation-group kernel: hat/vee, exponential map, error functions
  model       coupled rotor-fuselage plant, parameters and conversions
  control     nominal backstepping, robust compensated, and structure-preserving laws
  analysis    equilibrium linearization, eigenvalue classification, Lyapunov rates
  trajectory  sinusoid references and minimum-effort flip generation
  harness     scenario-driven closed-loop simulation, presets, CSV/JSON persistence
  cli         command-line entry point (simulate / preset / damping-demo /
              linearize / optimize-flip / batch)
"""

__version__ = "0.1.0"
