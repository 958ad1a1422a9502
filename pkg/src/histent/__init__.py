"""Evaluation toolkit for medical history entity extraction from clinical notes."""
__version__ = "0.1.0"
