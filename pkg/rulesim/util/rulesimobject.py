from abc import ABC
from typing import Dict, Optional

from .confighandler import ConfigHandler


class RuleSimObject(ABC):
    """Base for every configurable object: the ``__init__`` arguments are the config."""

    def __repr__(self):
        return f"{self.__module__}.{self.__class__.__name__}"

    def save_config(self, file_path: str):
        confighandler = ConfigHandler()
        confighandler.save_config_dict(self.get_config_dict(), file_path)

    def get_config_dict(self) -> Dict:
        confighandler = ConfigHandler()
        return confighandler.object_to_config_dict(self)

    @classmethod
    def from_config_file(cls, config_file: str, section: Optional[str] = None):
        confighandler = ConfigHandler()
        config_dict = confighandler.load_config_dict(config_file)
        if section is not None:
            config_dict = config_dict.get(section) or {}
        return cls.from_config_dict(config_dict)

    @classmethod
    def from_config_dict(cls, config_dict: Dict):
        confighandler = ConfigHandler()
        return confighandler.config_dict_to_object(cls, config_dict)
