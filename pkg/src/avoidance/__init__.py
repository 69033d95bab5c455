"""Dense sets avoiding shifted infinite sumsets, product sets and polynomial
configurations, with finite certificates and brute-force verification."""

__version__ = "0.1.0"
