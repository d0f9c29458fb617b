"""Rate limits of bosonic Gaussian multiple-access channels"""

__version__ = "1.0.0"
