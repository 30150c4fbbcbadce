"""Desk-scale digital test bench for liquid rocket engines.

Subpackages: ``sim`` (cycle model), ``nn`` (MLP core), ``control``
(environment, baselines, actor-critic training), ``monitor`` (instability
precursors), ``surrogate`` (learned surrogates with extrapolation guard).
"""

__version__ = "0.1.0"
