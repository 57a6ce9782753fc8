"""
Hamiltonet - neural networks that learn conservative dynamics from trajectory data

Three model families share one training and forecasting stack: a plain dynamics net (NN),
a Hamiltonian net (HNN) and a generalized Hamiltonian net (gHNN) that learns a transform
to latent canonical coordinates.
"""

__version__ = "0.1.0"
