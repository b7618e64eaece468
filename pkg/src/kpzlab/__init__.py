"""kpzlab: a desk-scale laboratory for a two-rate interlacing growth model.

Subpackages cover the exact event-driven simulation (growth), the limit
shape and its complex structure (shape), numerical evaluation of the
determinantal correlation kernel (kernel), Monte Carlo fluctuation
statistics against the Gaussian free field predictions (fluct), and a
command-line harness (cli).
"""

from .growth import ENGINE

__version__ = "0.1.0"
__all__ = ["ENGINE", "__version__"]
