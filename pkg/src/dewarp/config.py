"""Pipeline configuration: defaults, validation, and flat config-file I/O.

The config file is a flat TOML-style ``key = value`` document (comments with
'#', booleans true/false, strings optionally quoted).  Every tuning knob the
method leaves open is surfaced here so ablations need no code changes.
"""

from dataclasses import dataclass, fields, replace

_BOOL = {"true": True, "false": False}


@dataclass(frozen=True)
class PipelineConfig:
    grid_rows: int = 21
    grid_cols: int = 21
    dp_tolerance: float = 0.02              # fraction of contour perimeter
    sg_window: int = 9
    sg_order: int = 3
    extrapolation_margin: float = 0.15      # fraction of line domain per end
    intersection_threshold_frac: float = 0.01
    output_format: str = "png"
    dump_debug: bool = False

    def validate(self) -> "PipelineConfig":
        if self.grid_rows < 2 or self.grid_cols < 2:
            raise ValueError("grid_rows and grid_cols must be >= 2")
        if self.sg_window <= self.sg_order or self.sg_window % 2 != 1:
            raise ValueError("sg_window must be odd and greater than sg_order")
        if self.sg_order < 1:
            raise ValueError("sg_order must be >= 1")
        for name in ("dp_tolerance", "extrapolation_margin", "intersection_threshold_frac"):
            value = getattr(self, name)
            if not (0.0 < value < 1.0):
                raise ValueError(f"{name} must be in (0, 1), got {value}")
        if self.output_format not in ("png", "jpeg"):
            raise ValueError(f"output_format must be png or jpeg, got {self.output_format!r}")
        return self


def config_to_text(config: PipelineConfig) -> str:
    lines = []
    for f in fields(config):
        value = getattr(config, f.name)
        if isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, str):
            rendered = f'"{value}"'
        else:
            rendered = repr(value)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"


def save_config(config: PipelineConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config_to_text(config))


def _parse_value(raw: str, target_type):
    raw = raw.strip()
    if target_type is bool:
        if raw.lower() in _BOOL:
            return _BOOL[raw.lower()]
        raise ValueError(f"expected true/false, got {raw!r}")
    if target_type is int:
        return int(raw)
    if target_type is float:
        return float(raw)
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    return raw


def load_config(path, base: PipelineConfig = None) -> PipelineConfig:
    config = base or PipelineConfig()
    names = {"int": int, "float": float, "str": str, "bool": bool}
    known = {f.name: (names[f.type] if isinstance(f.type, str) else f.type)
             for f in fields(config)}
    overrides = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in stripped.split("=", 1))
            if key not in known:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            overrides[key] = _parse_value(raw, known[key])
    return replace(config, **overrides).validate()
