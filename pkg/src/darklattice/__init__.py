"""Single-excitation dynamics of sub-wavelength atomic arrays under periodic detuning patterns."""

__version__ = "0.1.0"
