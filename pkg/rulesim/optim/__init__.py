from .optim import Optimizer, Adam, adam_step
