"""Coupled spin-field dynamics of an extended charged particle at rest.

The submodules split along the physics: radial source profiles, the
retarded memory kernel, the rigid rotor map, free wave pulses, the
meridional field grid, the delay-kernel solvers, and the coupled
co-simulation with its conservation audits. The command line lives in
gyroled.cli.
"""

__version__ = "0.1.0"
