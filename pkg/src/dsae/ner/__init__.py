from .features import FeatureRegistry, TokenFeatures, featurize
from .crf import CrfConfig, CrfModel, crf_neg_log_likelihood, crf_train, viterbi
from .lstm_crf import LstmCrfConfig, LstmCrfModel, lstm_crf_decode, lstm_crf_train
from .svm import SvmModel, svm_predict, svm_train
from .predict import predict_entities

__all__ = [
    "FeatureRegistry",
    "TokenFeatures",
    "featurize",
    "CrfConfig",
    "CrfModel",
    "crf_neg_log_likelihood",
    "crf_train",
    "viterbi",
    "LstmCrfConfig",
    "LstmCrfModel",
    "lstm_crf_decode",
    "lstm_crf_train",
    "SvmModel",
    "svm_predict",
    "svm_train",
    "predict_entities",
]
