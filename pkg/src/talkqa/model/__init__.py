from talkqa.model.backends import (
    BACKEND_SETS,
    BackendInfo,
    OracleBackendSet,
    RealBackendSet,
    StubBackendSet,
    SyncAdapterConfig,
    SyncFeatureAdapter,
    check_av_duration,
    extract_features,
    make_backend_set,
)
from talkqa.model.cache import read_feature_cache, write_feature_cache
from talkqa.model.frames import FrameSampleSet, from_arrays, sample_frames
from talkqa.model.fusion import FeatureBundle, fuse, gap, mean_frame_features
from talkqa.model.identity import (
    FaceBox,
    FacePipeline,
    cosine_similarity,
    identity_consistency,
    match_boxes,
)
from talkqa.model.regressor import (
    RegressorParams,
    forward,
    gradient_check,
    init_params,
    mse_loss_and_grads,
)
from talkqa.model.training import (
    FoldModel,
    TrainConfig,
    load_models,
    predict_cv,
    save_models,
    train_cv,
)
