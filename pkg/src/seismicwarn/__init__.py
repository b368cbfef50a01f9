"""Seismic-hazard warning pipeline: schema, features, protocols, learners, metrics."""

__version__ = "0.1.0"
