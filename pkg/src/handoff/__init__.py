"""Multi-camera person tracking with correlation filters and re-identification.

The package is organised around a per-camera tracking loop (cftracker, intra),
cross-camera search (inter), and a coordinator that owns the track lifecycle.
A deterministic simulator (simworld) and oracle perception backends make every
pipeline run reproducible end to end.
"""

__version__ = "0.1.0"
