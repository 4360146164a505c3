from enum import Enum
from typing import Any, Callable, Dict, List
import hashlib
import inspect

import numpy as np
import torch
import yaml

from .errors import ConfigurationError


class ConfigHandler:
    def save_config_dict(self, config_dict: dict, file: str) -> None:
        if not file.endswith((".yml", ".yaml")):
            file += ".yml"
        with open(file, "w", encoding="utf-8") as dumpfile:
            yaml.dump(
                config_dict,
                dumpfile,
                default_flow_style=False,
                sort_keys=False,
                indent=4,
            )

    def load_config_dict(self, file: str) -> dict:
        try:
            from yaml import CSafeLoader as Loader
        except ImportError:
            from yaml import SafeLoader as Loader
        try:
            with open(file, "r", encoding="utf-8") as config:
                config_dict = yaml.load(config, Loader=Loader)
        except yaml.YAMLError as error:
            raise ConfigurationError(f"{file}: not a valid config file ({error})")
        except OSError as error:
            raise ConfigurationError(f"{file}: cannot be read ({error})")
        if config_dict is None:
            return {}
        if not isinstance(config_dict, dict):
            raise ConfigurationError(f"{file}: top level must be a mapping of sections")
        return config_dict

    def object_to_config_dict(self, rulesim_object: Any) -> dict:
        init_attributes = self._get_init_attributes(rulesim_object.__init__)
        config_dict = {}
        for attribute in init_attributes:
            value = getattr(rulesim_object, attribute)
            config_dict[attribute] = self._obj_to_native_datatypes(value)
        return config_dict

    def config_dict_to_object(self, constructor: Callable, config_dict: Dict) -> Any:
        config_dict = dict(config_dict or {})
        allowed = self._get_init_attributes(constructor.__init__)
        unknown = [key for key in config_dict if key not in allowed]
        if unknown:
            raise ConfigurationError(
                f"unknown key(s) {unknown} for {constructor.__name__}, allowed: {allowed}"
            )
        try:
            return constructor(**config_dict)
        except TypeError as error:
            raise ConfigurationError(f"{constructor.__name__}: {error}")

    def config_hash(self, config_dict: dict) -> str:
        canonical = yaml.safe_dump(
            self._obj_to_native_datatypes(config_dict), sort_keys=True
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def _obj_to_native_datatypes(self, obj) -> Any:
        if isinstance(obj, (bool, np.bool_)):
            return bool(obj)

        if isinstance(obj, np.integer):
            return int(obj)

        if isinstance(obj, np.floating):
            return float(obj)

        if isinstance(obj, Enum):
            return obj.value

        if isinstance(obj, np.ndarray):
            return obj.tolist()

        if isinstance(obj, torch.Tensor):
            return obj.tolist()

        if isinstance(obj, (list, tuple)):
            return [self._obj_to_native_datatypes(v) for v in obj]

        if isinstance(obj, dict):
            return {k: self._obj_to_native_datatypes(v) for k, v in obj.items()}

        from .rulesimobject import RuleSimObject

        if isinstance(obj, RuleSimObject):
            return obj.get_config_dict()

        if obj is None or isinstance(obj, (int, float, str)):
            return obj

        raise NotImplementedError(f"Handling this class {obj.__class__} in not implemented ")

    @staticmethod
    def _get_init_attributes(init_function) -> List[str]:
        init_attributes = []
        kwargs = inspect.signature(init_function)
        for param in kwargs.parameters.values():
            if param.kind in (param.VAR_POSITIONAL, param.VAR_KEYWORD):
                continue
            init_attributes.append(param.name)
        if "self" in init_attributes:
            init_attributes.remove("self")
        return init_attributes
