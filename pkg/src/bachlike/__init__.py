"""Curvature tensors of four-dimensional shrinking Ricci solitons, checked numerically.

Modules, bottom up: ``jets`` (Taylor-jet arithmetic), ``tensors`` (jet-valued
point tensors), ``curvature`` (Riemann through Bach, U, V and D),
``geometry`` (catalog solitons and random metrics), ``quadrature``
(sublevel-set integrals), then the verifier layer: ``identities``,
``lemmas``, ``regime``, ``manifest``, ``suite`` and ``cli``.
"""

__version__ = "0.1.0"
