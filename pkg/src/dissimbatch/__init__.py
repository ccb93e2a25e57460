"""Dissimilar batch decompositions and similarity-bounded subsets of random datasets."""

__version__ = "0.1.0"
