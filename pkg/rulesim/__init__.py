from . import network, optim, rule, similarity, task, toy, util
from .runner import Runner
