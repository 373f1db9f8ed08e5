"""Probabilistic type inference for a TypeScript subset with a hypergraph neural network."""

__version__ = "0.1.0"
