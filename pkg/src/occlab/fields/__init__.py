from .encoding import positional_encode, encoded_size, normalize_directions
from .networks import *
from .dispatch import Dispatch, dispatch
from .field import FieldOutput, OccupancyField, RadianceField, decode_raw
