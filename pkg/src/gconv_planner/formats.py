"""Network JSON, measurement CSV and report-row serialization."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Iterable, List, Optional

import jsonschema

from .calibration import MeasurementRecord
from .core import LayerSpec, NetworkSpec

SCHEMA_VERSION = 1

_LAYER_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": [
        "id", "kind", "in_channels", "out_channels", "kernel", "stride",
        "padding", "ofmap", "groups", "bias", "batchnorm",
    ],
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "kind": {"enum": ["conv", "fully_connected"]},
        "in_channels": {"type": "integer", "minimum": 1},
        "out_channels": {"type": "integer", "minimum": 1},
        "kernel": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2},
        "stride": {"type": "integer", "minimum": 1},
        "padding": {"type": "integer", "minimum": 0},
        "ofmap": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2},
        "groups": {"type": "integer", "minimum": 1},
        "bias": {"type": "boolean"},
        "batchnorm": {"type": "boolean"},
    },
}

NETWORK_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "name", "layers", "substitution_sites"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "layers": {"type": "array", "items": _LAYER_SCHEMA},
        "substitution_sites": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2},
        },
    },
}


class FormatError(ValueError):
    pass


def _key_path(path) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def _describe(error: jsonschema.ValidationError) -> str:
    path = list(error.absolute_path)
    if error.validator == "additionalProperties":
        allowed = set(error.schema.get("properties", {}))
        extra = sorted(set(error.instance) - allowed)
        return "; ".join(f"{_key_path(path + [key])}: unknown key" for key in extra)
    if error.validator == "required":
        missing = [k for k in error.validator_value if k not in error.instance]
        return "; ".join(f"{_key_path(path + [key])}: missing required key" for key in missing)
    return f"{_key_path(path)}: {error.message}"


def network_to_dict(net: NetworkSpec) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": net.name,
        "layers": [
            {
                "id": layer.id,
                "kind": layer.kind,
                "in_channels": layer.m,
                "out_channels": layer.n,
                "kernel": [layer.dk_h, layer.dk_w],
                "stride": layer.stride,
                "padding": layer.padding,
                "ofmap": [layer.h, layer.w],
                "groups": layer.g,
                "bias": layer.has_bias,
                "batchnorm": layer.has_batchnorm,
            }
            for layer in net.layers
        ],
        "substitution_sites": [list(site) for site in net.substitution_sites],
    }


def network_from_dict(doc) -> NetworkSpec:
    errors = sorted(
        jsonschema.Draft7Validator(NETWORK_SCHEMA).iter_errors(doc), key=lambda e: list(e.absolute_path)
    )
    if errors:
        raise FormatError("; ".join(_describe(e) for e in errors))
    seen = set()
    layers = []
    for i, item in enumerate(doc["layers"]):
        if item["id"] in seen:
            raise FormatError(f"layers[{i}].id: duplicate layer id {item['id']!r}")
        seen.add(item["id"])
        layers.append(
            LayerSpec(
                id=item["id"], kind=item["kind"], m=item["in_channels"], n=item["out_channels"],
                dk_h=item["kernel"][0], dk_w=item["kernel"][1], h=item["ofmap"][0], w=item["ofmap"][1],
                stride=item["stride"], padding=item["padding"], g=item["groups"],
                has_bias=item["bias"], has_batchnorm=item["batchnorm"],
            )
        )
    return NetworkSpec(doc["name"], layers, [tuple(s) for s in doc["substitution_sites"]])


def dumps_network(net: NetworkSpec) -> str:
    return json.dumps(network_to_dict(net), indent=2, sort_keys=True) + "\n"


def loads_network(text: str) -> NetworkSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed JSON: {exc}") from exc
    return network_from_dict(doc)


def emit_network_json(net: NetworkSpec, path) -> None:
    Path(path).write_text(dumps_network(net))


def parse_network_json(path) -> NetworkSpec:
    return loads_network(Path(path).read_text())


# -- measurements -----------------------------------------------------------

MEASUREMENT_COLUMNS = ("config_id", "batch_size", "device", "epf_millijoule")


def loads_measurements(text: str) -> List[MeasurementRecord]:
    lines = [line for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != list(MEASUREMENT_COLUMNS):
        raise FormatError(f"measurement CSV needs header row: {','.join(MEASUREMENT_COLUMNS)}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        try:
            records.append(
                MeasurementRecord(
                    config_id=row["config_id"].strip(),
                    batch_size=int(row["batch_size"]),
                    device=row["device"].strip(),
                    epf_millijoule=float(row["epf_millijoule"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise FormatError(f"measurement row {lineno}: {exc}") from exc
    return records


def read_measurements(path) -> List[MeasurementRecord]:
    return loads_measurements(Path(path).read_text())


def bundled_measurements() -> List[MeasurementRecord]:
    text = resources.files("gconv_planner").joinpath("data/epf_measurements.csv").read_text()
    return loads_measurements(text)


# -- report rows ------------------------------------------------------------

REPORT_COLUMNS = (
    "config_id", "strategy", "layer_id", "mc", "params", "activations",
    "ai", "energy_proxy", "epf_measured_mj",
)


@dataclass(frozen=True)
class ReportRow:
    config_id: str
    strategy: str
    layer_id: str
    mc: int
    params: int
    activations: int
    ai: float
    energy_proxy: Optional[float] = None
    epf_measured_mj: Optional[float] = None


def fmt_float(x) -> str:
    return "" if x is None else f"{x:.6g}"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def _json_value(value):
    if isinstance(value, float):
        return float(fmt_float(value))
    return value


def format_table(rows: Iterable, columns, fmt: str = "csv") -> str:
    """Render dataclass rows or dicts as CSV or a JSON array."""
    dicts = [asdict(r) if hasattr(r, "__dataclass_fields__") else dict(r) for r in rows]
    if fmt == "json":
        data = [{c: _json_value(d.get(c)) for c in columns} for d in dicts]
        return json.dumps(data, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for d in dicts:
        writer.writerow([_cell(d.get(c)) for c in columns])
    return buf.getvalue()


def report_to_csv(rows: Iterable[ReportRow]) -> str:
    return format_table(rows, REPORT_COLUMNS, "csv")


def report_from_csv(text: str) -> List[ReportRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
        raise FormatError(f"report CSV needs header row: {','.join(REPORT_COLUMNS)}")
    types = {f.name: f.type for f in fields(ReportRow)}
    rows = []
    for row in reader:
        values = {}
        for key, raw in row.items():
            if types[key] == "int":
                values[key] = int(raw)
            elif types[key] in ("float", "Optional[float]"):
                values[key] = float(raw) if raw != "" else None
            else:
                values[key] = raw
        rows.append(ReportRow(**values))
    return rows
