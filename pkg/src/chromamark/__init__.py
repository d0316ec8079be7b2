"""Keyed DT-CWT chroma watermarking with robust and semi-robust decoders."""
