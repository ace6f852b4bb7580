"""Morphology evolution with asynchronous tournaments over a capsule-limb design space."""

__version__ = "0.1.0"
