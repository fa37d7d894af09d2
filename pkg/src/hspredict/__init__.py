"""Predictive inference for sparse Gaussian sequence models under the Horseshoe prior.

Exact fixed-scale predictive densities and Kullback-Leibler risks, the
fully hierarchical (unknown-sparsity) predictive machinery, a Monte Carlo
risk estimator, and a pairwise-verification toolkit fed by wavelet and
functional-PCA ingestion.
"""

__version__ = "0.1.0"
