"""From-scratch classifiers: KNN, SVM, decision trees, ensembles, LDA."""

from hydrasense.ml.base import Standardizer, save_model, load_model, model_to_dict, model_from_dict
from hydrasense.ml.knn import KnnModel, knn_fit, knn_predict
from hydrasense.ml.svm import SvmModel, svm_fit, svm_predict
from hydrasense.ml.tree import TreeModel, tree_fit, tree_predict
from hydrasense.ml.lda import LdaModel, ld_fit, ld_predict
from hydrasense.ml.ensemble import ensemble_fit, ensemble_predict

__all__ = [
    "Standardizer",
    "save_model",
    "load_model",
    "model_to_dict",
    "model_from_dict",
    "KnnModel",
    "knn_fit",
    "knn_predict",
    "SvmModel",
    "svm_fit",
    "svm_predict",
    "TreeModel",
    "tree_fit",
    "tree_predict",
    "LdaModel",
    "ld_fit",
    "ld_predict",
    "ensemble_fit",
    "ensemble_predict",
]
