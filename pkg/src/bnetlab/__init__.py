"""Branching-coalescing random walks and their Brownian-net scaling limit.

Submodules
----------
lattice    arrow field sampling and the coupled dual field
paths      lattice paths, net-path membership and path metrics
classify   special-site census, reachable sets, wedges, meshes
sde        sticky gap, reflection with a crossing clock, meeting triple
excursion  excursion decomposition of reflected Brownian motion
stats      analytic references and estimator plumbing
cli        command line harness
"""

__version__ = "0.1.0"
