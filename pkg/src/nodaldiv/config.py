"""Run configuration and surface-spec files.

Both use plain key = value lines under bracketed section headers (INI), so
runs are reproducible from a single diffable file.  Unknown keys are
rejected rather than ignored.
"""

from __future__ import annotations

import configparser
import dataclasses

from .generate import PRESET_NAMES, SurfaceSpec
from .mesh import MeshError


class ConfigError(ValueError):
    """Invalid run configuration."""


_RUN_KEYS = {
    "preset", "spec_file", "level", "rho0", "collar_rings", "margin",
    "smooth_seam", "out", "seed", "sample_count",
}
_TOL_KEYS = {"eigen"}


@dataclasses.dataclass
class RunConfig:
    preset: str | None = None
    spec_file: str | None = None
    level: int = 0
    rho0: float = 0.2
    collar_rings: int = 8
    margin: float = 0.05
    smooth_seam: bool = False
    out: str = "nodaldiv_out"
    seed: int = 7
    sample_count: int = 256
    eigen_tol: float | None = None

    def validate(self) -> None:
        if self.preset is not None and self.preset not in PRESET_NAMES:
            raise ConfigError(
                f"unknown preset {self.preset!r}; choose from "
                f"{', '.join(PRESET_NAMES)}"
            )
        if self.level < 0 or self.level > 6:
            raise ConfigError("level must lie in 0..6")
        if not self.rho0 > 0.0:
            raise ConfigError("rho0 must be positive")
        if self.collar_rings < 4:
            raise ConfigError("collar_rings must be at least 4")
        if not 0.0 < self.margin < 0.5:
            raise ConfigError("margin must lie strictly between 0 and 0.5")
        if self.seed < 0 or self.sample_count < 1:
            raise ConfigError("seed must be nonnegative, sample_count positive")
        if self.eigen_tol is not None and not self.eigen_tol > 0.0:
            raise ConfigError("tolerances.eigen must be positive")


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    cfg = RunConfig()
    for section in parser.sections():
        if section == "run":
            for key, value in parser.items("run"):
                if key not in _RUN_KEYS:
                    raise ConfigError(f"unknown key {key!r} in [run]")
                if key in ("level", "collar_rings", "seed", "sample_count"):
                    setattr(cfg, key, int(value))
                elif key in ("rho0", "margin"):
                    setattr(cfg, key, float(value))
                elif key == "smooth_seam":
                    cfg.smooth_seam = value.strip().lower() in ("1", "true", "yes")
                else:
                    setattr(cfg, key, value.strip())
        elif section == "tolerances":
            for key, value in parser.items("tolerances"):
                if key not in _TOL_KEYS:
                    raise ConfigError(f"unknown key {key!r} in [tolerances]")
                cfg.eigen_tol = float(value)
        else:
            raise ConfigError(f"unknown section [{section}]")
    cfg.validate()
    return cfg


def load_surface_spec(path, collar_rings: int = 8, level: int = 0) -> SurfaceSpec:
    """Parse a surface spec file.

    Format:

        [circles]
        c0 = 16          ; vertex count per dividing circle
        [minus]
        piece0 = 0 c0    ; genus followed by the bounding circle ids
        [plus]
        piece0 = 0 c0
        [surface]        ; optional
        collar_rings = 8
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read spec file {path}")
    if not parser.has_section("circles"):
        raise ConfigError(f"{path}: missing [circles] section")
    counts = {}
    for cid, value in parser.items("circles"):
        try:
            counts[cid] = int(value)
        except ValueError:
            raise ConfigError(f"{path}: circle {cid!r} count must be an integer")
    comps = {"minus": [], "plus": []}
    for side in ("minus", "plus"):
        if not parser.has_section(side):
            raise ConfigError(f"{path}: missing [{side}] section")
        for _, value in parser.items(side):
            parts = value.split()
            if len(parts) < 2:
                raise ConfigError(
                    f"{path}: component must read 'genus circle-ids...'"
                )
            comps[side].append((int(parts[0]), tuple(parts[1:])))
    if parser.has_section("surface"):
        for key, value in parser.items("surface"):
            if key == "collar_rings":
                collar_rings = int(value)
            else:
                raise ConfigError(f"{path}: unknown key {key!r} in [surface]")
    spec = SurfaceSpec(
        minus_components=comps["minus"],
        plus_components=comps["plus"],
        circle_counts=counts,
        collar_rings=collar_rings,
        refinement_level=level,
    )
    try:
        spec.validate()
    except MeshError as err:
        raise ConfigError(f"{path}: {err}") from err
    return spec
