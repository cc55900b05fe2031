"""Graph-attention prediction of quantum-circuit expectation values and PQC ranking."""
__version__ = "0.1.0"
