"""Case file schema: parsing, validation and per-unit bookkeeping.

A case is a JSON document with top-level keys ``system_base_mva``,
``frequency_hz``, ``buses``, ``branches``, ``thevenin_links`` and
``converters``.  All reactances are pu on the system base; converter
blocks declare their own voltage/power base and are converted at load
time.  The ground node is implicit: Thevenin links connect buses to it.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .errors import CaseFormatError

CASE_DIR_ENV = "GRIDSTRENGTH_CASE_DIR"

# extinction-angle defaults by nominal frequency, degrees
_GAMMA_DEFAULT_DEG = {50.0: 18.0, 60.0: 15.0}


@dataclass(frozen=True)
class Bus:
    id: str
    kind: str  # "converter" | "internal"


@dataclass(frozen=True)
class Branch:
    from_bus: str
    to_bus: str
    reactance_pu: float


@dataclass(frozen=True)
class TheveninLink:
    bus: str
    reactance_pu: float
    emf_pu: float


@dataclass(frozen=True)
class ConverterSpec:
    """Raw converter block as written in the case file.

    Quantities are pu on the converter's own base (``p_dn_mw``,
    ``u_ac_kv``); :func:`gridstrength.converter.LccParams.from_spec`
    performs the conversion to system base.
    """

    bus: str
    p_dn_mw: float
    gamma_deg: float
    n_bridges: int
    k_ratio: float
    x_commutation_pu: float
    r_dc_pu: float
    b_c_pu: float
    u_ac_kv: float
    control: str = "cp-cea"

    @property
    def base_impedance_ohm(self) -> float:
        return self.u_ac_kv**2 / self.p_dn_mw


@dataclass(frozen=True)
class CaseFile:
    system_base_mva: float
    frequency_hz: float
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    thevenin_links: tuple[TheveninLink, ...]
    converters: tuple[ConverterSpec, ...]
    name: str = ""
    comment: str = ""

    def converter_buses(self) -> tuple[str, ...]:
        return tuple(b.id for b in self.buses if b.kind == "converter")

    def converter_at(self, bus: str) -> ConverterSpec:
        for c in self.converters:
            if c.bus == bus:
                return c
        raise KeyError(bus)

    def rating_pu(self, spec: ConverterSpec) -> float:
        """Converter rated power on the system base."""
        return spec.p_dn_mw / self.system_base_mva


def _get(obj: dict, key: str, where: str, kind=None):
    if key not in obj:
        raise CaseFormatError(f"{where}: missing key '{key}'")
    val = obj[key]
    if kind is not None and not isinstance(val, kind):
        raise CaseFormatError(f"{where}.{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


def _positive(val, where: str) -> float:
    try:
        x = float(val)
    except (TypeError, ValueError):
        raise CaseFormatError(f"{where}: not a number: {val!r}") from None
    if not math.isfinite(x) or x <= 0:
        raise CaseFormatError(f"{where}: must be a positive finite number, got {val!r}")
    return x


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        self.parent[self.find(a)] = self.find(b)


def validate_case(case: CaseFile) -> CaseFile:
    """Check every schema invariant; raises CaseFormatError naming the first violation."""
    ids = [b.id for b in case.buses]
    if len(ids) != len(set(ids)):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise CaseFormatError(f"buses: duplicate id '{dup}'")
    known = set(ids)
    for b in case.buses:
        if b.kind not in ("converter", "internal"):
            raise CaseFormatError(f"bus {b.id}: unknown kind '{b.kind}'")
    if case.system_base_mva <= 0:
        raise CaseFormatError("system_base_mva: must be positive")
    if not case.thevenin_links:
        raise CaseFormatError("thevenin_links: at least one link is required")

    for i, br in enumerate(case.branches):
        where = f"branches[{i}]"
        for end in (br.from_bus, br.to_bus):
            if end not in known:
                raise CaseFormatError(f"{where}: unknown bus '{end}'")
        if br.from_bus == br.to_bus:
            raise CaseFormatError(f"{where}: self-loop at '{br.from_bus}'")
        _positive(br.reactance_pu, f"{where}.reactance_pu")
    for i, ln in enumerate(case.thevenin_links):
        where = f"thevenin_links[{i}]"
        if ln.bus not in known:
            raise CaseFormatError(f"{where}: unknown bus '{ln.bus}'")
        _positive(ln.reactance_pu, f"{where}.reactance_pu")
        _positive(ln.emf_pu, f"{where}.emf_pu")

    conv_buses = [c.bus for c in case.converters]
    if len(conv_buses) != len(set(conv_buses)):
        dup = next(b for b in conv_buses if conv_buses.count(b) > 1)
        raise CaseFormatError(f"converters: duplicate converter at bus '{dup}'")
    declared = {b.id for b in case.buses if b.kind == "converter"}
    if set(conv_buses) != declared:
        missing = declared - set(conv_buses)
        extra = set(conv_buses) - declared
        if missing:
            raise CaseFormatError(f"converters: converter bus '{sorted(missing)[0]}' has no converter block")
        raise CaseFormatError(f"converters: bus '{sorted(extra)[0]}' is not declared kind=converter")
    for c in case.converters:
        where = f"converter at {c.bus}"
        if c.control != "cp-cea":
            raise CaseFormatError(f"{where}: unsupported control mode '{c.control}' (only cp-cea)")
        _positive(c.p_dn_mw, f"{where}.p_dn_mw")
        _positive(c.u_ac_kv, f"{where}.u_ac_kv")
        _positive(c.k_ratio, f"{where}.k_ratio")
        _positive(c.x_commutation_pu, f"{where}.x_commutation_pu")
        if c.r_dc_pu < 0:
            raise CaseFormatError(f"{where}.r_dc_pu: must be >= 0")
        if c.b_c_pu < 0:
            raise CaseFormatError(f"{where}.b_c_pu: must be >= 0")
        if c.n_bridges < 1:
            raise CaseFormatError(f"{where}.n_bridges: must be >= 1")
        if not 0.0 < c.gamma_deg < 90.0:
            raise CaseFormatError(f"{where}.gamma_deg: must lie in (0, 90)")

    # connectivity over buses + implicit ground
    uf = _UnionFind(list(known) + ["<ground>"])
    for br in case.branches:
        uf.union(br.from_bus, br.to_bus)
    for ln in case.thevenin_links:
        uf.union(ln.bus, "<ground>")
    root = uf.find("<ground>")
    for b in known:
        if uf.find(b) != root:
            raise CaseFormatError(f"network: bus '{b}' is not connected to any source")
    return case


def _parse_converter(obj: dict, idx: int, frequency_hz: float) -> ConverterSpec:
    where = f"converters[{idx}]"
    if not isinstance(obj, dict):
        raise CaseFormatError(f"{where}: expected object")
    gamma = obj.get("gamma_deg")
    if gamma is None:
        gamma = _GAMMA_DEFAULT_DEG.get(float(frequency_hz))
        if gamma is None:
            raise CaseFormatError(
                f"{where}: gamma_deg omitted and no default exists for {frequency_hz} Hz "
                "(defaults cover 50 and 60 Hz)"
            )
    return ConverterSpec(
        bus=str(_get(obj, "bus", where)),
        p_dn_mw=float(_get(obj, "p_dn_mw", where)),
        gamma_deg=float(gamma),
        n_bridges=int(_get(obj, "n_bridges", where)),
        k_ratio=float(_get(obj, "k_ratio", where)),
        x_commutation_pu=float(_get(obj, "x_commutation_pu", where)),
        r_dc_pu=float(_get(obj, "r_dc_pu", where)),
        b_c_pu=float(_get(obj, "b_c_pu", where)),
        u_ac_kv=float(_get(obj, "u_ac_kv", where)),
        control=str(obj.get("control", "cp-cea")),
    )


def case_from_dict(doc: dict, name: str = "") -> CaseFile:
    if not isinstance(doc, dict):
        raise CaseFormatError("top level: expected object")
    buses = []
    for i, b in enumerate(_get(doc, "buses", "top level", list)):
        if not isinstance(b, dict):
            raise CaseFormatError(f"buses[{i}]: expected object")
        buses.append(Bus(id=str(_get(b, "id", f"buses[{i}]")), kind=str(b.get("kind", "converter"))))
    branches = []
    for i, br in enumerate(doc.get("branches", [])):
        if not isinstance(br, dict):
            raise CaseFormatError(f"branches[{i}]: expected object")
        branches.append(
            Branch(
                from_bus=str(_get(br, "from", f"branches[{i}]")),
                to_bus=str(_get(br, "to", f"branches[{i}]")),
                reactance_pu=float(_get(br, "reactance_pu", f"branches[{i}]")),
            )
        )
    links = []
    for i, ln in enumerate(_get(doc, "thevenin_links", "top level", list)):
        if not isinstance(ln, dict):
            raise CaseFormatError(f"thevenin_links[{i}]: expected object")
        links.append(
            TheveninLink(
                bus=str(_get(ln, "bus", f"thevenin_links[{i}]")),
                reactance_pu=float(_get(ln, "reactance_pu", f"thevenin_links[{i}]")),
                emf_pu=float(_get(ln, "emf_pu", f"thevenin_links[{i}]")),
            )
        )
    frequency = float(_get(doc, "frequency_hz", "top level"))
    converters = [
        _parse_converter(c, i, frequency)
        for i, c in enumerate(_get(doc, "converters", "top level", list))
    ]
    case = CaseFile(
        system_base_mva=float(_get(doc, "system_base_mva", "top level")),
        frequency_hz=frequency,
        buses=tuple(buses),
        branches=tuple(branches),
        thevenin_links=tuple(links),
        converters=tuple(converters),
        name=name or str(doc.get("name", "")),
        comment=str(doc.get("comment", "")),
    )
    return validate_case(case)


def case_to_dict(case: CaseFile) -> dict:
    doc: dict = {}
    if case.name:
        doc["name"] = case.name
    if case.comment:
        doc["comment"] = case.comment
    doc["system_base_mva"] = case.system_base_mva
    doc["frequency_hz"] = case.frequency_hz
    doc["buses"] = [{"id": b.id, "kind": b.kind} for b in case.buses]
    doc["branches"] = [
        {"from": br.from_bus, "to": br.to_bus, "reactance_pu": br.reactance_pu}
        for br in case.branches
    ]
    doc["thevenin_links"] = [
        {"bus": ln.bus, "reactance_pu": ln.reactance_pu, "emf_pu": ln.emf_pu}
        for ln in case.thevenin_links
    ]
    doc["converters"] = [
        {
            "bus": c.bus,
            "p_dn_mw": c.p_dn_mw,
            "gamma_deg": c.gamma_deg,
            "n_bridges": c.n_bridges,
            "k_ratio": c.k_ratio,
            "x_commutation_pu": c.x_commutation_pu,
            "r_dc_pu": c.r_dc_pu,
            "b_c_pu": c.b_c_pu,
            "u_ac_kv": c.u_ac_kv,
            "control": c.control,
        }
        for c in case.converters
    ]
    return doc


def load_case(path: str | Path) -> CaseFile:
    """Load and validate a case file; CaseFormatError carries the location."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise CaseFormatError(f"cannot read case file {p}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseFormatError(f"{p}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return case_from_dict(doc, name=p.stem)
    except CaseFormatError as exc:
        raise CaseFormatError(f"{p}: {exc}") from exc


def save_case(case: CaseFile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(case_to_dict(case), indent=2) + "\n")


def bundled_case_dir() -> Path:
    """Directory the named cases are loaded from; env override wins."""
    override = os.environ.get(CASE_DIR_ENV)
    if override:
        return Path(override)
    return Path(resources.files("gridstrength") / "cases")


def load_bundled_case(name: str) -> CaseFile:
    if not name.endswith(".json"):
        name = name + ".json"
    path = bundled_case_dir() / name
    if not path.is_file():
        raise CaseFormatError(f"no bundled case named {name!r} in {bundled_case_dir()}")
    return load_case(path)


def with_rating(case: CaseFile, bus: str, p_dn_mw: float) -> CaseFile:
    """Copy of the case with one converter's rating replaced."""
    if not any(c.bus == bus for c in case.converters):
        raise KeyError(bus)
    convs = tuple(
        replace(c, p_dn_mw=p_dn_mw) if c.bus == bus else c for c in case.converters
    )
    return replace(case, converters=convs)
