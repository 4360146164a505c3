from .confighandler import ConfigHandler
from .rulesimobject import RuleSimObject
from .errors import (
    ConfigurationError,
    DegenerateInputError,
    IngestionError,
    ShapeError,
    UnsupportedConfigurationError,
)
from .seeding import derive_seed, torch_generator
from .logconfig import get_logging_config_dict, configure_worker_logging
