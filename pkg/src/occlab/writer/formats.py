"""
Binary layouts shared by the writer and reader modules.

Every binary file starts with an 8-byte magic string and a little-endian uint32 format
version. Arrays are stored little-endian and row-major.
"""

import struct

CHECKPOINT_MAGIC = b"OCCLABCK"
CHECKPOINT_VERSION = 1

GRID_MAGIC = b"OCCGRID\0"
GRID_VERSION = 1

DEPTH_MAGIC = b"OCCDEPTH"
DEPTH_VERSION = 1

UINT32 = struct.Struct("<I")
UINT64 = struct.Struct("<Q")
DEPTH_HEADER = struct.Struct("<III")
