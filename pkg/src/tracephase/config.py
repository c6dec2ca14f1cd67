"""INI-style experiment configuration with lossless text round-trip."""

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional


class ConfigError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0, source: str = "<config>"):
        super().__init__(f"{source}:{line}:{col}: {message}")
        self.line, self.col, self.source = line, col, source


def _tuple(elem, default):
    return field(default=tuple(default), metadata={"elem": elem})


@dataclass
class GridSection:
    dim: int = 2
    h: float = 0.25
    counts: tuple = _tuple(int, (513, 257))
    origin_offset: tuple = _tuple(float, (-64.0, 0.0))


@dataclass
class WellSection:
    name: str = "standard-p2"
    p: float = 2.0
    C_o: float = 1.0


@dataclass
class SolverSection:
    max_iters: int = 5000
    tol: float = 1e-9
    step0: float = 0.01
    backtrack: float = 0.5
    delta: float = 0.0
    pinned: tuple = _tuple(str, ("left", "right"))
    init: str = "planar"  # planar | constant:<c> | noise | file:<path>
    init_width: float = 2.0
    noise: float = 0.0
    seed: int = 0
    profile_half_length: float = 10.0
    profile_h: float = 0.05


@dataclass
class ScanSection:
    theta: float = 0.0
    x_o: tuple = _tuple(float, (0.0, 0.0))
    radii: tuple = _tuple(float, (8.0, 16.0, 32.0, 64.0))
    side: str = "both"  # above | below | both
    field: str = ""  # node dump to analyse; empty means minimize first
    k_list: tuple = _tuple(int, (1, 2, 3))
    T: float = 4.0


@dataclass
class AuditSection:
    Q: float = 1.001
    trials: int = 100
    perturb_scale: float = 0.05
    radius_min: float = 1.0
    radius_max: float = 6.0


@dataclass
class RecursionSection:
    source: str = "scan"  # scan | fixture:power | fixture:constant | file:<csv k,A,V>
    n: int = 2
    C: float = 0.0  # 0 means calibrate
    epsilon: float = 0.0  # 0 means the admissible bound for C
    T: float = 2.0
    K: int = 32
    length: int = 100


@dataclass
class VerifySection:
    v_exponent_min: float = 1.9
    v_exponent_max: float = 2.1
    e_exponent_min: float = 0.85
    e_exponent_max: float = 1.15
    density_ratio_min: float = 0.4
    density_r_min: float = 8.0
    a_exponent_slack: float = 0.2
    audit: bool = True
    recursion: bool = True


@dataclass
class RunSection:
    out_dir: str = "out"


SECTIONS = {
    "grid": GridSection, "well": WellSection, "solver": SolverSection, "scan": ScanSection,
    "audit": AuditSection, "recursion": RecursionSection, "verify": VerifySection,
    "run": RunSection,
}


@dataclass
class ExperimentConfig:
    grid: GridSection = field(default_factory=GridSection)
    well: WellSection = field(default_factory=WellSection)
    solver: SolverSection = field(default_factory=SolverSection)
    scan: ScanSection = field(default_factory=ScanSection)
    audit: AuditSection = field(default_factory=AuditSection)
    recursion: RecursionSection = field(default_factory=RecursionSection)
    verify: VerifySection = field(default_factory=VerifySection)
    run: RunSection = field(default_factory=RunSection)

    def to_text(self) -> str:
        out = []
        for name in SECTIONS:
            out.append(f"[{name}]")
            sec = getattr(self, name)
            for f in dataclasses.fields(sec):
                out.append(f"{f.name} = {_format(getattr(sec, f.name))}")
            out.append("")
        return "\n".join(out)

    @classmethod
    def from_text(cls, text: str, overrides=(), source: str = "<config>") -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            parser.read_string(text, source=source)
        except configparser.MissingSectionHeaderError as exc:
            raise ConfigError("missing section header", exc.lineno, 1, source) from None
        except configparser.ParsingError as exc:
            line = exc.errors[0][0] if exc.errors else 0
            raise ConfigError("cannot parse line", line, 1, source) from None
        except configparser.Error as exc:
            raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", 0) or 0, 1, source) from None
        for item in overrides:
            key, sep, value = item.partition("=")
            sec, dot, opt = key.strip().partition(".")
            if not sep or not dot:
                raise ConfigError(f"override {item!r} is not section.key=value", 0, 0, "--set")
            if not parser.has_section(sec):
                parser.add_section(sec)
            parser.set(sec, opt, value.strip())
        cfg = cls()
        for sec_name in parser.sections():
            if sec_name not in SECTIONS:
                line, col = _locate(text, f"[{sec_name}]")
                raise ConfigError(f"unknown section [{sec_name}]", line, col, source)
            sec = getattr(cfg, sec_name)
            known = {f.name: f for f in dataclasses.fields(sec)}
            for key, raw in parser.items(sec_name):
                if key not in known:
                    line, col = _locate(text, key, sec_name)
                    raise ConfigError(f"unknown key {sec_name}.{key}", line, col, source)
                try:
                    setattr(sec, key, _parse(known[key], raw))
                except ValueError as exc:
                    line, col = _locate(text, key, sec_name, value=True)
                    raise ConfigError(f"bad value for {sec_name}.{key}: {exc}", line, col, source) from None
        return cfg

    @classmethod
    def load(cls, path, overrides=()) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_text(path.read_text(), overrides, source=str(path))


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_format(x) for x in v)
    return str(v)


def _parse(f: dataclasses.Field, raw: str):
    kind = type(f.default) if f.default is not dataclasses.MISSING else str
    if kind is tuple:
        elem = f.metadata.get("elem", str)
        items = [s.strip() for s in raw.split(",") if s.strip()]
        return tuple(_scalar(elem, s) for s in items)
    return _scalar(kind, raw.strip())


def _scalar(kind, s: str):
    if kind is bool:
        low = s.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected a boolean, got {s!r}")
    if kind is int:
        return int(s)
    if kind is float:
        return float(s)
    return s


def _locate(text: str, key: str, section: Optional[str] = None, value: bool = False):
    """1-based (line, column) of `key` in `text`, inside `section` when given."""
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1]
            if key == stripped:
                return lineno, line.index("[") + 1
            continue
        if section is not None and current != section:
            continue
        name, sep, _ = line.partition("=")
        if sep and name.strip() == key:
            col = line.index("=") + 2 if value else line.index(key) + 1
            if value:
                while col <= len(line) and line[col - 1] == " ":
                    col += 1
            return lineno, col
    return 0, 0
