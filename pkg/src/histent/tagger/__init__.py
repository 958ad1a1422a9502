"""Linear softmax BIO tagger with hashed features and an optional BME tail."""
from ._backend import BACKEND
from .features import DEFAULT_HASH_BITS, DocFeatures, TokenFeatures, build_batch, featurize
from .model import TaggerModel, TrainConfig, loss_and_grad, predict
from .train import FoldPlan, FoldResult, MODES, TrainResult, make_folds, train, train_fold

__all__ = [
    "BACKEND", "DEFAULT_HASH_BITS", "DocFeatures", "TokenFeatures", "build_batch", "featurize",
    "TaggerModel", "TrainConfig", "loss_and_grad", "predict",
    "FoldPlan", "FoldResult", "MODES", "TrainResult", "make_folds", "train", "train_fold",
]
