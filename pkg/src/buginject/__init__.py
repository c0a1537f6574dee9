"""Inject validated, witness-backed bugs into MiniC programs and score
analyzer reports against the resulting ground truth."""

__version__ = "0.1.0"
