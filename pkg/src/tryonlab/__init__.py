"""Desk-scale virtual try-on lab.

Conditioned latent diffusion with window-partitioned garment cross-attention
and a learned informative mask, trained end-to-end on procedural synthetic
try-on pairs.
"""

__version__ = "0.1.0"
