from .base import (
    ALGORITHMS,
    ClassifierSpec,
    TrainedModel,
    feature_importance,
    fit,
    load_model,
    model_from_dict,
    model_to_dict,
    predict_score,
    save_model,
)
