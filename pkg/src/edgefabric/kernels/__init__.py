"""Kernel backend selection.

The hot inner-loop routines (frame codec, radio path math, mobility
interpolation) exist twice: a compiled Cython extension (_core) and a
pure-Python reference (_pure).  The compiled backend is preferred when
importable; set EDGEFABRIC_PURE_PYTHON=1 to force the fallback.  Both
produce bit-identical results (enforced by tests/test_kernels.py).
"""

import os

from ._errors import (  # noqa: F401  (re-exported for wire.py)
    BAD_MAGIC,
    BAD_VERSION,
    INVALID_FIELD,
    LENGTH_MISMATCH,
    PAYLOAD_TOO_LARGE,
    TRUNCATED,
    UNKNOWN_KIND,
    CodecError,
)

if os.environ.get("EDGEFABRIC_PURE_PYTHON") == "1":
    from . import _pure as _backend
else:
    try:
        from . import _core as _backend  # type: ignore[attr-defined]
    except ImportError:
        from . import _pure as _backend

BACKEND = _backend.BACKEND

MAGIC = bytes(_backend.MAGIC)
VERSION = _backend.VERSION
HEADER_LEN = _backend.HEADER_LEN
MAX_PAYLOAD = _backend.MAX_PAYLOAD

pack_frame = _backend.pack_frame
unpack_frame = _backend.unpack_frame
pack_route_entries = _backend.pack_route_entries
unpack_route_entries = _backend.unpack_route_entries
pack_member_ids = _backend.pack_member_ids
unpack_member_ids = _backend.unpack_member_ids
pack_load_request = _backend.pack_load_request
unpack_load_request = _backend.unpack_load_request
pack_store_request = _backend.pack_store_request
unpack_store_request = _backend.unpack_store_request
pack_load_response = _backend.pack_load_response
unpack_load_response = _backend.unpack_load_response

throughput_Bps = _backend.throughput_Bps
loss_prob = _backend.loss_prob
link_distance = _backend.link_distance
polyline_point = _backend.polyline_point
