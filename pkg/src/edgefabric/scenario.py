"""Scenario files: strict-schema JSON describing one simulation.

Top-level sections: modules, radio, protocol, workload, run.  Unknown keys
anywhere are errors, so configs stay auditable.  Units are meters, seconds,
bytes, and bytes/second throughout.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .address import AddressError, LocalAddressSpace, RemoteRange, parse_module_id
from .module_core import ProtocolConfig
from .radio import MobilityTrace, RadioModel


class ScenarioInvalid(Exception):
    """Carries every violated constraint, not just the first."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


class ScenarioParseError(Exception):
    pass


@dataclass(slots=True)
class ModuleSpec:
    id: int
    capacity: int
    position: tuple[float, float] | None
    trace: MobilityTrace | None
    member: bool
    gateway: int | None


@dataclass(slots=True)
class TargetSpec:
    kind: str  # "nearest" | "module" | "local"
    module: int = 0
    offset: int = 0
    local: int = 0


@dataclass(slots=True)
class ChurnEvent:
    at: float
    module: int
    action: str  # down | up | leave


@dataclass(slots=True)
class WorkloadSpec:
    transport: str = "fabric"
    reader: int | None = None
    speed_mps: float | None = None
    start_s: float = 0.0
    interval_s: float = 1.0
    count: int = 0  # 0 = repeat until duration
    op: str = "load"
    payload_bytes: int = 0
    traffic_class: int = 0
    targets: list[TargetSpec] = field(default_factory=list)
    address_space: LocalAddressSpace | None = None
    events: list[ChurnEvent] = field(default_factory=list)


@dataclass(slots=True)
class SweepSpec:
    param: str
    values: list[float]
    seeds: int
    compare_transports: bool = False


@dataclass
class Scenario:
    name: str
    modules: list[ModuleSpec]
    radio: RadioModel
    protocol: ProtocolConfig
    workload: WorkloadSpec
    duration_s: float
    window_s: float
    seed: int
    sweep: SweepSpec | None = None

    def module_ids(self) -> list[int]:
        return [m.id for m in self.modules]


_RADIO_KEYS = {
    "range_m": (float, lambda v: v > 0, "must be positive"),
    "t_max_bps": (float, lambda v: v > 0, "must be positive"),
    "alpha": (float, lambda v: v > 0, "must be positive"),
    "mtu": (int, lambda v: v >= 64, "must be at least 64"),
    "base_latency_s": (float, lambda v: v >= 0, "must be non-negative"),
    "loss0": (float, lambda v: 0 <= v < 1, "must be in [0, 1)"),
}

_PROTOCOL_KEYS = {
    "beacon_interval_s": (float, lambda v: v > 0, "must be positive"),
    "ttl_max": (int, lambda v: 1 <= v <= 255, "must be in [1, 255]"),
    "contact_k": (int, lambda v: v >= 1, "must be at least 1"),
    "route_expiry_intervals": (int, lambda v: v >= 1, "must be at least 1"),
    "neighbor_cap": (int, lambda v: v >= 1, "must be at least 1"),
    "poison_hold_intervals": (int, lambda v: v >= 1, "must be at least 1"),
    "request_timeout_s": (float, lambda v: v > 0, "must be positive"),
}


def _type_name(t):
    return "number" if t is float else t.__name__


def _check_num(errs, path, value, want, pred, why):
    if want is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            errs.append("%s: expected number, got %r" % (path, value))
            return None
        value = float(value)
    elif want is int:
        if not isinstance(value, int) or isinstance(value, bool):
            errs.append("%s: expected integer, got %r" % (path, value))
            return None
    if not pred(value):
        errs.append("%s: %s (got %r)" % (path, why, value))
        return None
    return value


def _check_keys(errs, path, obj, allowed):
    if not isinstance(obj, dict):
        errs.append("%s: expected an object" % path)
        return False
    for k in obj:
        if k not in allowed:
            errs.append("%s.%s: unknown key" % (path, k))
    return True


def _parse_id(errs, path, value):
    if not isinstance(value, str):
        errs.append("%s: module ids are 'aa:bb:cc:dd:ee:ff' strings, got %r" % (path, value))
        return None
    try:
        mid = parse_module_id(value)
    except AddressError as e:
        errs.append("%s: %s" % (path, e))
        return None
    if mid == 0:
        errs.append("%s: module id 00:00:00:00:00:00 is reserved" % path)
        return None
    return mid


def validate_data(data) -> list[str]:
    """Check one raw scenario document; returns every violation found."""
    errs: list[str] = []
    if not isinstance(data, dict):
        return ["top level: expected an object"]
    for k in data:
        if k not in ("modules", "radio", "protocol", "workload", "run"):
            errs.append("%s: unknown section" % k)
    _validate_modules(errs, data.get("modules"))
    _validate_section(errs, "radio", data.get("radio", {}), _RADIO_KEYS)
    _validate_section(errs, "protocol", data.get("protocol", {}), _PROTOCOL_KEYS)
    known = _known_ids(data)
    _validate_workload(errs, data.get("workload", {}), known)
    _validate_run(errs, data.get("run"))
    return errs


def _known_ids(data) -> set[int]:
    ids = set()
    for m in data.get("modules", []) if isinstance(data.get("modules"), list) else []:
        if isinstance(m, dict) and isinstance(m.get("id"), str):
            try:
                ids.add(parse_module_id(m["id"]))
            except AddressError:
                pass
    return ids


def _validate_modules(errs, modules):
    if not isinstance(modules, list) or not modules:
        errs.append("modules: expected a non-empty array")
        return
    seen = {}
    for i, m in enumerate(modules):
        path = "modules[%d]" % i
        if not _check_keys(errs, path, m, {"id", "capacity", "position", "trace", "member", "gateway"}):
            continue
        if "id" not in m:
            errs.append("%s.id: required" % path)
            continue
        mid = _parse_id(errs, path + ".id", m["id"])
        if mid is not None:
            if mid in seen:
                errs.append("%s.id: duplicate module id %s (also modules[%d])" % (path, m["id"], seen[mid]))
            seen[mid] = i
        if "capacity" not in m:
            errs.append("%s.capacity: required" % path)
        else:
            _check_num(errs, path + ".capacity", m["capacity"], int, lambda v: v > 0, "must be positive")
        has_pos = "position" in m
        has_trace = "trace" in m
        if has_pos == has_trace:
            errs.append("%s: exactly one of position/trace required" % path)
        if has_pos:
            _validate_point(errs, path + ".position", m["position"])
        if has_trace:
            _validate_trace(errs, path + ".trace", m["trace"])
        if "member" in m and not isinstance(m["member"], bool):
            errs.append("%s.member: expected true/false" % path)
        if "gateway" in m:
            _parse_id(errs, path + ".gateway", m["gateway"])


def _validate_point(errs, path, p):
    if (
        not isinstance(p, list)
        or len(p) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in p)
    ):
        errs.append("%s: expected [x_m, y_m]" % path)


def _validate_trace(errs, path, t):
    if not _check_keys(errs, path, t, {"waypoints", "speed_mps", "loop"}):
        return
    wps = t.get("waypoints")
    if not isinstance(wps, list) or not wps:
        errs.append("%s.waypoints: expected a non-empty array of [x, y]" % path)
    else:
        for j, p in enumerate(wps):
            _validate_point(errs, "%s.waypoints[%d]" % (path, j), p)
    if "speed_mps" not in t:
        errs.append("%s.speed_mps: required" % path)
    else:
        _check_num(errs, path + ".speed_mps", t["speed_mps"], float, lambda v: v >= 0, "must be non-negative")
    if "loop" in t and not isinstance(t["loop"], bool):
        errs.append("%s.loop: expected true/false" % path)


def _validate_section(errs, name, obj, keys):
    if not _check_keys(errs, name, obj, set(keys)):
        return
    for k, (want, pred, why) in keys.items():
        if k in obj:
            _check_num(errs, "%s.%s" % (name, k), obj[k], want, pred, why)


def _validate_workload(errs, w, known_ids):
    allowed = {
        "transport",
        "reader",
        "speed_mps",
        "start_s",
        "interval_s",
        "count",
        "op",
        "payload_bytes",
        "class",
        "targets",
        "address_space",
        "events",
    }
    if not _check_keys(errs, "workload", w, allowed):
        return
    if "transport" in w and w["transport"] not in ("fabric", "tcp"):
        errs.append("workload.transport: expected 'fabric' or 'tcp', got %r" % w["transport"])
    reader = None
    if "reader" in w:
        reader = _parse_id(errs, "workload.reader", w["reader"])
        if reader is not None and reader not in known_ids:
            errs.append("workload.reader: %s is not a declared module" % w["reader"])
    if "speed_mps" in w:
        _check_num(errs, "workload.speed_mps", w["speed_mps"], float, lambda v: v >= 0, "must be non-negative")
    for k, pred, why in (
        ("start_s", lambda v: v >= 0, "must be non-negative"),
        ("interval_s", lambda v: v > 0, "must be positive"),
    ):
        if k in w:
            _check_num(errs, "workload.%s" % k, w[k], float, pred, why)
    if "count" in w:
        _check_num(errs, "workload.count", w["count"], int, lambda v: v >= 0, "must be non-negative")
    if "op" in w and w["op"] not in ("load", "store"):
        errs.append("workload.op: expected 'load' or 'store', got %r" % w["op"])
    if "payload_bytes" in w:
        _check_num(errs, "workload.payload_bytes", w["payload_bytes"], int, lambda v: v >= 0, "must be non-negative")
    if "class" in w and w["class"] not in (0, 1):
        errs.append("workload.class: expected 0 or 1, got %r" % w["class"])
    has_local_target = False
    if "targets" in w:
        if not isinstance(w["targets"], list) or not w["targets"]:
            errs.append("workload.targets: expected a non-empty array")
        else:
            for i, t in enumerate(w["targets"]):
                has_local_target |= _validate_target(errs, "workload.targets[%d]" % i, t, known_ids)
        if reader is None:
            errs.append("workload.reader: required when targets are given")
    if "address_space" in w:
        _validate_address_space(errs, w["address_space"], known_ids)
    elif has_local_target:
        errs.append("workload.address_space: required for local-address targets")
    if "events" in w:
        if not isinstance(w["events"], list):
            errs.append("workload.events: expected an array")
        else:
            for i, ev in enumerate(w["events"]):
                _validate_event(errs, "workload.events[%d]" % i, ev, known_ids)


def _validate_target(errs, path, t, known_ids) -> bool:
    """Returns True when this is a local-address target."""
    if t == "nearest":
        return False
    if not isinstance(t, dict):
        errs.append("%s: expected 'nearest', {module, offset} or {local}" % path)
        return False
    if set(t) == {"local"}:
        _check_num(errs, path + ".local", t["local"], int, lambda v: v >= 0, "must be non-negative")
        return True
    if set(t) <= {"module", "offset"} and "module" in t:
        mid = _parse_id(errs, path + ".module", t["module"])
        if mid is not None and mid not in known_ids:
            errs.append("%s.module: %s is not a declared module" % (path, t["module"]))
        if "offset" in t:
            _check_num(errs, path + ".offset", t["offset"], int, lambda v: v >= 0, "must be non-negative")
        return False
    errs.append("%s: expected 'nearest', {module, offset} or {local}" % path)
    return False


def _validate_address_space(errs, a, known_ids):
    if not _check_keys(errs, "workload.address_space", a, {"hw_bits", "remote_map"}):
        return
    if "hw_bits" not in a:
        errs.append("workload.address_space.hw_bits: required")
    else:
        _check_num(errs, "workload.address_space.hw_bits", a["hw_bits"], int, lambda v: 1 <= v <= 62, "must be in [1, 62]")
    rmap = a.get("remote_map")
    if not isinstance(rmap, list) or not rmap:
        errs.append("workload.address_space.remote_map: expected a non-empty array")
        return
    for i, r in enumerate(rmap):
        path = "workload.address_space.remote_map[%d]" % i
        if not _check_keys(errs, path, r, {"start", "length", "module", "offset"}):
            continue
        for k in ("start", "length", "offset"):
            if k not in r:
                errs.append("%s.%s: required" % (path, k))
            else:
                low = 1 if k == "length" else 0
                _check_num(errs, "%s.%s" % (path, k), r[k], int, lambda v, lo=low: v >= lo, "must be >= %d" % low)
        if "module" not in r:
            errs.append("%s.module: required" % path)
        else:
            mid = _parse_id(errs, path + ".module", r["module"])
            if mid is not None and mid not in known_ids:
                errs.append("%s.module: %s is not a declared module" % (path, r["module"]))


def _validate_event(errs, path, ev, known_ids):
    if not _check_keys(errs, path, ev, {"at", "module", "action"}):
        return
    if "at" not in ev:
        errs.append("%s.at: required" % path)
    else:
        _check_num(errs, path + ".at", ev["at"], float, lambda v: v >= 0, "must be non-negative")
    if "module" not in ev:
        errs.append("%s.module: required" % path)
    else:
        mid = _parse_id(errs, path + ".module", ev["module"])
        if mid is not None and mid not in known_ids:
            errs.append("%s.module: %s is not a declared module" % (path, ev["module"]))
    if ev.get("action") not in ("down", "up", "leave"):
        errs.append("%s.action: expected 'down', 'up' or 'leave'" % path)


def _validate_run(errs, run):
    if run is None:
        errs.append("run: required section")
        return
    if not _check_keys(errs, "run", run, {"duration_s", "window_s", "seed", "sweep"}):
        return
    if "duration_s" not in run:
        errs.append("run.duration_s: required")
    else:
        _check_num(errs, "run.duration_s", run["duration_s"], float, lambda v: v > 0, "must be positive")
    if "window_s" in run:
        _check_num(errs, "run.window_s", run["window_s"], float, lambda v: v > 0, "must be positive")
    if "seed" in run:
        _check_num(errs, "run.seed", run["seed"], int, lambda v: v >= 0, "must be non-negative")
    if "sweep" in run:
        s = run["sweep"]
        if not _check_keys(errs, "run.sweep", s, {"param", "values", "seeds", "compare_transports"}):
            return
        if not isinstance(s.get("param"), str):
            errs.append("run.sweep.param: required string")
        vals = s.get("values")
        if not isinstance(vals, list) or not vals or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals
        ):
            errs.append("run.sweep.values: expected a non-empty numeric array")
        if "seeds" in s:
            _check_num(errs, "run.sweep.seeds", s["seeds"], int, lambda v: v >= 1, "must be at least 1")
        if "compare_transports" in s and not isinstance(s["compare_transports"], bool):
            errs.append("run.sweep.compare_transports: expected true/false")


# -- construction ---------------------------------------------------------------


def build_scenario(data, name="scenario") -> Scenario:
    """Turn a validated document into a Scenario; raises ScenarioInvalid."""
    errors = validate_data(data)
    if errors:
        raise ScenarioInvalid(errors)
    modules = []
    for m in data["modules"]:
        trace = None
        position = None
        if "trace" in m:
            t = m["trace"]
            trace = MobilityTrace(
                [(p[0], p[1]) for p in t["waypoints"]], float(t["speed_mps"]), bool(t.get("loop", False))
            )
        else:
            position = (float(m["position"][0]), float(m["position"][1]))
        modules.append(
            ModuleSpec(
                id=parse_module_id(m["id"]),
                capacity=int(m["capacity"]),
                position=position,
                trace=trace,
                member=bool(m.get("member", False)),
                gateway=parse_module_id(m["gateway"]) if "gateway" in m else None,
            )
        )
    radio = RadioModel(**{k: (int(v) if k == "mtu" else float(v)) for k, v in data.get("radio", {}).items()})
    pdata = dict(data.get("protocol", {}))
    if "request_timeout_s" not in pdata:
        # twice the hop budget at quarter rate: a frame of mtu bytes over a
        # degraded link, per hop, out and back
        ttl_max = int(pdata.get("ttl_max", 8))
        interval = float(pdata.get("beacon_interval_s", 0.5))
        worst_hop = radio.base_latency_s + radio.mtu / (radio.t_max_bps / 4.0)
        pdata["request_timeout_s"] = 2.0 * ttl_max * worst_hop
        pdata.setdefault("beacon_interval_s", interval)
    protocol = ProtocolConfig(
        **{k: (float(v) if k in ("beacon_interval_s", "request_timeout_s") else int(v)) for k, v in pdata.items()}
    )
    w = data.get("workload", {})
    targets = []
    for t in w.get("targets", []):
        if t == "nearest":
            targets.append(TargetSpec("nearest"))
        elif "local" in t:
            targets.append(TargetSpec("local", local=int(t["local"])))
        else:
            targets.append(TargetSpec("module", module=parse_module_id(t["module"]), offset=int(t.get("offset", 0))))
    space = None
    if "address_space" in w:
        a = w["address_space"]
        space = LocalAddressSpace(
            int(a["hw_bits"]),
            [
                RemoteRange(int(r["start"]), int(r["length"]), parse_module_id(r["module"]), int(r["offset"]))
                for r in a["remote_map"]
            ],
        )
    workload = WorkloadSpec(
        transport=w.get("transport", "fabric"),
        reader=parse_module_id(w["reader"]) if "reader" in w else None,
        speed_mps=float(w["speed_mps"]) if "speed_mps" in w else None,
        start_s=float(w.get("start_s", 0.0)),
        interval_s=float(w.get("interval_s", 1.0)),
        count=int(w.get("count", 0)),
        op=w.get("op", "load"),
        payload_bytes=int(w.get("payload_bytes", 0)),
        traffic_class=int(w.get("class", 0)),
        targets=targets,
        address_space=space,
        events=[
            ChurnEvent(float(e["at"]), parse_module_id(e["module"]), e["action"])
            for e in w.get("events", [])
        ],
    )
    run = data["run"]
    sweep = None
    if "sweep" in run:
        s = run["sweep"]
        sweep = SweepSpec(
            param=s["param"],
            values=[float(v) for v in s["values"]],
            seeds=int(s.get("seeds", 1)),
            compare_transports=bool(s.get("compare_transports", False)),
        )
    return Scenario(
        name=name,
        modules=modules,
        radio=radio,
        protocol=protocol,
        workload=workload,
        duration_s=float(run["duration_s"]),
        window_s=float(run.get("window_s", 1.0)),
        seed=int(run.get("seed", 1)),
        sweep=sweep,
    )


def load_data(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ScenarioParseError("cannot read %s: %s" % (path, e)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError("%s:%d:%d: %s" % (path, e.lineno, e.colno, e.msg)) from None


def load_scenario(path) -> Scenario:
    data = load_data(path)
    return build_scenario(data, name=Path(path).stem)


def set_param(data: dict, dotted: str, value):
    """Override one numeric field ('workload.speed_mps') in a raw document."""
    out = copy.deepcopy(data)
    parts = dotted.split(".")
    cur = out
    for p in parts[:-1]:
        if not isinstance(cur, dict) or p not in cur:
            if isinstance(cur, dict) and p in ("workload", "radio", "protocol", "run"):
                cur[p] = {}
            else:
                raise KeyError(dotted)
        cur = cur.setdefault(p, {}) if isinstance(cur, dict) else None
        if cur is None:
            raise KeyError(dotted)
    leaf = parts[-1]
    if not isinstance(cur, dict):
        raise KeyError(dotted)
    cur[leaf] = value
    return out


def bundled_scenario_path(name: str) -> Path:
    """Path of one shipped scenario file (without .json suffix)."""
    ref = resources.files("edgefabric") / "scenarios" / ("%s.json" % name)
    return Path(str(ref))


def bundled_scenario_names() -> list[str]:
    base = resources.files("edgefabric") / "scenarios"
    return sorted(p.name[:-5] for p in Path(str(base)).glob("*.json"))
