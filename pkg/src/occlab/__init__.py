"""Learned occupancy for radiance fields, the momentum-grid baseline and a synthetic scene lab."""

# defined before the imports: occlab.writer stamps it into every manifest
__version__ = "0.1.0"

from .errors import OccLabError, ConfigurationError, NumericalError
from .config import ExperimentConfig, load_config

from . import diffcore
from . import fields
from . import rendering
from . import losses
from . import grid
from . import scene
from . import evaluation
from . import writer
from . import reader
