"""Blowup numerics for the semilinear wave equation with scale-invariant damping.

Modules:
    exponents    critical exponents, the admissible set S_N, lifespan exponents
    hypergeom    Gauss 2F1 with error estimates
    testfunc     self-similar test functions and their identities
    wavesolver   radial finite-difference solver with blowup detection
    functionals  integral functionals of solutions and the ODE blowup criteria
    sweep        eps sweeps, lifespan fits, report files
    cli          the ``dampwave`` command
"""

__version__ = "0.1.0"
