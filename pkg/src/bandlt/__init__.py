"""Numerical toolkit for complex perturbations of band Schrodinger operators.

Submodules:

* ``bandset``   -- truncated band sets, distances, gap statistics
* ``moebius``   -- the map 1/(z - omega), image geometry, distortion bounds
* ``hill``      -- periodic-potential band computation via the monodromy trace
* ``operators`` -- finite-difference models of H0 = -D^2 + V0 and H = H0 + V
* ``schatten``  -- Schatten/Lebesgue norms and resolvent-difference bounds
* ``ltsums``    -- Lieb-Thirring type eigenvalue sums and ensemble checks
* ``cli``       -- configuration-driven experiment runner (``band-lt``)
"""

from . import bandset, cli, errors, hill, ltsums, moebius, operators, schatten

__all__ = [
    "bandset", "cli", "errors", "hill", "ltsums", "moebius", "operators",
    "schatten",
]

__version__ = "0.1.0"
