from .checkpoint import CheckpointError, load_into, load_params, save_params
from .gradcheck import coordinate_errors, grad_check
from .nets import (
    CONTENT_DIM,
    STYLE_DIM,
    ContentEncoder,
    Decoder,
    NetSize,
    PatchDiscriminator,
    StyleEncoder,
    decode,
    discriminate,
    encode_content,
    encode_style,
    init_weights,
    sample_style,
    style_seed,
    to_image,
    to_tensor,
)
from .optim import AdamState, GradientBlowUp, TrainConfig, adam_step, step_module
