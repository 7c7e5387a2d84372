"""Reference remote inference backend.

Serves the shared wire protocol with a deterministic lexicon model and a
plug-in seam where a trained sequence model can be mounted.
"""

from .app import create_app
from .config import ServiceConfig
from .model import LexiconModel, load_model

__version__ = "0.1.0"

__all__ = ["ServiceConfig", "LexiconModel", "create_app", "load_model", "__version__"]
