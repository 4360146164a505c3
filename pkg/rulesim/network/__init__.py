from .network import (
    Activation,
    NetworkConfig,
    NetworkParams,
    StateTrajectory,
    activation_apply,
    init_params,
    rnn_forward,
    weight_eigenspectrum,
)
from .loss import (
    LossKind,
    loss_and_signal,
    normalized_accuracy,
    readout_feedback,
    step_losses,
)
