"""Numerical models: ratings store, factor kernels, solvers, swarm and pipeline."""
