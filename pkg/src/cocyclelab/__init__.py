"""Desk-scale laboratory for cocycle growth on finitely generated groups.

Modules: groups (word metrics and random walks), repcoc (representations
and cocycles), compression (compression exponents and the Markov-type
test), banachmoduli (moduli of convexity/smoothness and invariant
renorming), spectralgap (Markov operators, Kazhdan constants, cocycle
harmonization), radialode (the rank-one radial equation), cli.
"""

__version__ = "0.1.0"
