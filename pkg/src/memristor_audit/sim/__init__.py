"""Simulation core: noise synthesis, device models, testbenches and audit."""
