"""Singer identification from music recordings.

Robust-PCA voice separation, Daubechies wavelet denoising and sub-band
features (with an MFCC baseline), SVM/GMM classifiers and a repeated
k-fold evaluation harness.
"""

__version__ = "0.1.0"
