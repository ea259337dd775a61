"""Harvest-task lab comparing global and local observation/action
representations: deterministic game engine, both codecs, a from-scratch
advantage actor-critic trainer, reference baselines, and evaluation
metrics."""

__version__ = "0.1.0"
