"""SVM and GMM classifiers."""
from .gmm import (
    GaussianMixtureDiag,
    GmmBank,
    GmmClassifier,
    GmmModel,
    gmm_bank_predict,
    gmm_fit,
    gmm_log_likelihood,
    gmm_responsibilities,
    kmeans,
)
from .kernels import KernelSpec, gamma_from_sigma, kernel_eval, kernel_matrix, scale_gamma
from .svm import (
    BinarySVC,
    BinarySvmModel,
    OneVsAllSVC,
    OvaSvmModel,
    ova_predict,
    ova_train,
    smo_solve,
    svm_decision,
    svm_train_binary,
)

__all__ = [
    "BinarySVC", "BinarySvmModel", "GaussianMixtureDiag", "GmmBank", "GmmClassifier", "GmmModel",
    "KernelSpec", "OneVsAllSVC", "OvaSvmModel", "gamma_from_sigma", "gmm_bank_predict", "gmm_fit",
    "gmm_log_likelihood", "gmm_responsibilities", "kernel_eval", "kernel_matrix", "kmeans",
    "ova_predict", "ova_train", "scale_gamma", "smo_solve", "svm_decision", "svm_train_binary",
]
