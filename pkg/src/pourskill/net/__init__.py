from .adam import AdamState, adam_step
from .checkpoint import Hyper, ModelCheckpoint, load_checkpoint, save_checkpoint
from .lstm import (
    HeadParams,
    LstmParams,
    Network,
    StepState,
    backward,
    cell_forward,
    dropout,
    loss_and_grads,
    sequence_forward,
    sequence_loss,
)
from .train import TrainResult, run_epochs, train
