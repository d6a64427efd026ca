from importlib import resources
from pathlib import Path


def model_path(name):
    return Path(str(resources.files("pebc").joinpath("models", name)))
