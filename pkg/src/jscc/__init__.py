"""Code spectra of linear codes and a linear-code JSCC scheme for multiple-access channels."""

__version__ = "0.1.0"
