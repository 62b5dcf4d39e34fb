"""biphoton-lab: desk-scale simulations of entangled-photon experiments."""

__version__ = "0.1.0"
