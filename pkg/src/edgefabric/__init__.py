"""edgefabric: mesh-routed load/store memory fabric with a deterministic simulator.

Small edge devices federate their non-volatile memory over a lossy radio
mesh: requests are routed hop by hop toward the owning module, stores
resolve by last-write-wins timestamps, and membership churns as mobile
nodes pass through coverage.  The simulator reproduces the throughput /
distance, throughput / speed, and join-convergence behaviour of such a
fabric at desk scale.
"""

from .address import FabricAddress, LocalAddressSpace, make_address
from .coherence import NvmStore
from .kernels import BACKEND as kernel_backend
from .metrics import MetricsRecord, percentile, sem
from .module_core import ModuleState, ProtocolConfig
from .radio import MobilityTrace, Placement, RadioModel
from .routing import RoutingTable
from .scenario import Scenario, load_scenario
from .simulator import Simulator, run
from .wire import Message, MessageKind, decode_frame, encode_frame

__version__ = "0.1.0"

__all__ = [
    "FabricAddress",
    "LocalAddressSpace",
    "make_address",
    "NvmStore",
    "MetricsRecord",
    "percentile",
    "sem",
    "ModuleState",
    "ProtocolConfig",
    "MobilityTrace",
    "Placement",
    "RadioModel",
    "RoutingTable",
    "Scenario",
    "load_scenario",
    "Simulator",
    "run",
    "Message",
    "MessageKind",
    "decode_frame",
    "encode_frame",
    "kernel_backend",
    "__version__",
]
