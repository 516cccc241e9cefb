"""Run configuration: plain INI text with sections, presets, validation.

The config is the only way runs are parametrized from the outside.  It is
deliberately not an expression language: boundary data come as named
profile presets (constant, sinusoid in arc length, per side) and initial
data as named field presets.  Everything the loader accepts can be echoed
back with canonical_text() and reloaded to an equal RunConfig.
"""
from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass, field

import numpy as np

from .boundary import PROFILE_KINDS, BoundaryData, SideProfile
from .flux_models import MODEL_NAMES, FluxModel, by_name
from .geometry import Grid

INITIAL_PRESETS = ("constant", "bump", "two_bump", "random")
MAX_CELLS_PER_AXIS = 4096

_SECTIONS = ("run", "grid", "initial", "boundary")


@dataclass
class RunConfig:
    # [run]
    model: str = "meanfield"
    nu: float = 0.1
    t_final: float = 0.3
    cfl: float = 0.5
    output_interval: float = 0.05
    store_gradients: bool = False
    kinetic: bool = False
    audit: bool = False
    seed: int = 0
    # [grid]
    nx: int = 40
    ny: int = 40
    lx: float = 1.0
    ly: float = 1.0
    # [initial]
    initial: str = "constant"
    initial_value: float = 0.0
    initial_amplitude: float = 0.0
    x0: float = 0.5
    y0: float = 0.5
    rx: float = 0.2
    ry: float = 0.2
    # [boundary]
    a: SideProfile = field(default_factory=lambda: SideProfile.constant_value(1.0))
    b0: SideProfile = field(default_factory=lambda: SideProfile.constant_value(0.0))
    j_threshold: SideProfile = field(default_factory=lambda: SideProfile.constant_value(1.0))
    b1: float = 0.0
    kappa: float = 0.5

    # ------------------------------------------------------------------
    def grid(self) -> Grid:
        return Grid(self.nx, self.ny, self.lx, self.ly)

    def flux_model(self) -> FluxModel:
        return by_name(self.model)

    def boundary(self) -> BoundaryData:
        return BoundaryData(
            a=self.a, b0=self.b0, j_threshold=self.j_threshold, b1=self.b1, kappa=self.kappa
        )

    def initial_condition(self) -> np.ndarray:
        """Materialize the initial density on the configured grid."""
        g = self.grid()
        if self.initial == "constant":
            return np.full((g.nx, g.ny), float(self.initial_value))
        if self.initial == "random":
            rng = np.random.default_rng(self.seed)
            lo = self.initial_value - self.initial_amplitude
            hi = self.initial_value + self.initial_amplitude
            return rng.uniform(lo, hi, size=(g.nx, g.ny))
        out = np.full((g.nx, g.ny), float(self.initial_value))
        out += self.initial_amplitude * self._bump(g, self.x0, self.y0)
        if self.initial == "two_bump":
            out += self.initial_amplitude * self._bump(g, self.lx - self.x0, self.ly - self.y0)
        return out

    def _bump(self, g: Grid, cx: float, cy: float) -> np.ndarray:
        # compactly supported cos^2 hill, peak 1 at the center
        ux = np.clip((g.xc - cx) / self.rx, -1.0, 1.0)
        uy = np.clip((g.yc - cy) / self.ry, -1.0, 1.0)
        return np.outer(np.cos(0.5 * np.pi * ux) ** 2, np.cos(0.5 * np.pi * uy) ** 2)

    # ------------------------------------------------------------------
    def validate(self) -> "RunConfig":
        if self.model not in MODEL_NAMES:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODEL_NAMES}")
        if not self.nu >= 0.0:
            raise ValueError(f"viscosity nu must be >= 0, got {self.nu}")
        if not self.t_final > 0.0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.output_interval > 0.0:
            raise ValueError(f"output_interval must be positive, got {self.output_interval}")
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if not 2 <= n <= MAX_CELLS_PER_AXIS:
                raise ValueError(f"{name} must lie in [2, {MAX_CELLS_PER_AXIS}], got {n}")
        if self.initial not in INITIAL_PRESETS:
            raise ValueError(
                f"unknown initial preset {self.initial!r}; expected one of {INITIAL_PRESETS}"
            )
        if self.initial in ("bump", "two_bump") and (self.rx <= 0.0 or self.ry <= 0.0):
            raise ValueError("bump radii rx, ry must be positive")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        self.boundary()  # kappa/b1/b0 range checks live there
        self.grid()
        if self.model == "kellersegel":
            # the aggregation flux degenerates at 0 and 1; densities must
            # start and stay inside that box, so inflow may not nucleate
            # above the baseline and all data must sit in [0, 1]
            if self.b1 != 0.0:
                raise ValueError(
                    "kellersegel requires b1 = 0: gradient-triggered inflow could push "
                    "the wall density above 1 and break the invariant box [0, 1]"
                )
            lo, hi = self.b0.range_bounds()
            if lo < 0.0 or hi > 1.0:
                raise ValueError(
                    f"kellersegel requires 0 <= b0 <= 1, got range [{lo}, {hi}]"
                )
            w0 = self.initial_condition()
            if w0.min() < 0.0 or w0.max() > 1.0:
                raise ValueError(
                    f"kellersegel requires the initial density inside [0, 1], got range "
                    f"[{w0.min()}, {w0.max()}]"
                )
        return self


# ---------------------------------------------------------------------------
# profile <-> key group


def _profile_to_items(name: str, p: SideProfile) -> list[tuple[str, str]]:
    items = [(f"{name}.preset", p.kind)]
    if p.kind == "constant":
        items.append((f"{name}.value", repr(float(p.value))))
    elif p.kind == "sinusoid":
        items += [
            (f"{name}.offset", repr(float(p.offset))),
            (f"{name}.amplitude", repr(float(p.amplitude))),
            (f"{name}.mode", repr(int(p.mode))),
            (f"{name}.phase", repr(float(p.phase))),
        ]
    else:
        items += [(f"{name}.{s}", repr(float(p.sides[s]))) for s in ("left", "right", "bottom", "top")]
    return items


def _profile_from_keys(name: str, grab) -> SideProfile:
    kind = grab(f"{name}.preset", "constant")
    if kind not in PROFILE_KINDS:
        raise ValueError(
            f"boundary key {name}.preset: unknown preset {kind!r}; expected one of {PROFILE_KINDS}"
        )
    if kind == "constant":
        return SideProfile.constant_value(float(grab(f"{name}.value", "0.0")))
    if kind == "sinusoid":
        return SideProfile(
            kind="sinusoid",
            offset=float(grab(f"{name}.offset", "0.0")),
            amplitude=float(grab(f"{name}.amplitude", "0.0")),
            mode=int(grab(f"{name}.mode", "1")),
            phase=float(grab(f"{name}.phase", "0.0")),
        )
    sides = {s: float(grab(f"{name}.{s}", "0.0")) for s in ("left", "right", "bottom", "top")}
    return SideProfile(kind="per_side", sides=sides)


# ---------------------------------------------------------------------------
# load / dump


def _parse_bool(key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"key {key}: expected a boolean, got {raw!r}")


def parse_config(text: str) -> RunConfig:
    """Parse INI-style config text into a validated RunConfig."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep key case (J.value)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"config parse error: {exc}") from exc
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ValueError(f"unknown config section [{section}]; expected {_SECTIONS}")

    cfg = RunConfig()
    consumed: set[tuple[str, str]] = set()

    def grab(section, key, default=None):
        if cp.has_option(section, key):
            consumed.add((section, key))
            return cp.get(section, key)
        return default

    def num(section, key, cast, default):
        raw = grab(section, key)
        if raw is None:
            return default
        try:
            return cast(raw)
        except ValueError as exc:
            raise ValueError(f"key [{section}] {key}: cannot parse {raw!r}") from exc

    cfg.model = (grab("run", "model") or cfg.model).strip().lower()
    cfg.nu = num("run", "nu", float, cfg.nu)
    cfg.t_final = num("run", "t_final", float, cfg.t_final)
    cfg.cfl = num("run", "cfl", float, cfg.cfl)
    cfg.output_interval = num("run", "output_interval", float, cfg.output_interval)
    cfg.seed = num("run", "seed", int, cfg.seed)
    for key in ("store_gradients", "kinetic", "audit"):
        raw = grab("run", key)
        if raw is not None:
            setattr(cfg, key, _parse_bool(key, raw))

    cfg.nx = num("grid", "nx", int, cfg.nx)
    cfg.ny = num("grid", "ny", int, cfg.ny)
    cfg.lx = num("grid", "lx", float, cfg.lx)
    cfg.ly = num("grid", "ly", float, cfg.ly)

    cfg.initial = (grab("initial", "preset") or cfg.initial).strip().lower()
    cfg.initial_value = num("initial", "value", float, cfg.initial_value)
    cfg.initial_amplitude = num("initial", "amplitude", float, cfg.initial_amplitude)
    for key in ("x0", "y0", "rx", "ry"):
        setattr(cfg, key, num("initial", key, float, getattr(cfg, key)))

    if cp.has_section("boundary"):

        def bgrab(key, default=None):
            raw = grab("boundary", key)
            return default if raw is None else raw

        def mentioned(name):
            return any(opt.startswith(name + ".") for opt in cp.options("boundary"))

        if mentioned("a"):
            cfg.a = _profile_from_keys("a", bgrab)
        if mentioned("b0"):
            cfg.b0 = _profile_from_keys("b0", bgrab)
        if mentioned("J"):
            cfg.j_threshold = _profile_from_keys("J", bgrab)
        cfg.b1 = num("boundary", "b1", float, cfg.b1)
        cfg.kappa = num("boundary", "kappa", float, cfg.kappa)

    for section in cp.sections():
        for key in cp.options(section):
            if (section, key) not in consumed:
                raise ValueError(f"unknown config key [{section}] {key}")
    return cfg.validate()


def load_config(source: str) -> RunConfig:
    """Load from a file path, or parse directly if given inline text."""
    if os.path.exists(source):
        with open(source, "r", encoding="ascii") as fh:
            return parse_config(fh.read())
    if "=" in source or "[" in source:
        return parse_config(source)
    raise FileNotFoundError(f"config file not found: {source}")


def canonical_text(cfg: RunConfig) -> str:
    """Stable, reloadable INI text; floats at full round-trip precision."""
    out = io.StringIO()
    out.write("[run]\n")
    out.write(f"model = {cfg.model}\n")
    for key in ("nu", "t_final", "cfl", "output_interval"):
        out.write(f"{key} = {repr(float(getattr(cfg, key)))}\n")
    for key in ("store_gradients", "kinetic", "audit"):
        out.write(f"{key} = {'true' if getattr(cfg, key) else 'false'}\n")
    out.write(f"seed = {cfg.seed}\n\n")
    out.write("[grid]\n")
    out.write(f"nx = {cfg.nx}\nny = {cfg.ny}\n")
    out.write(f"lx = {repr(float(cfg.lx))}\nly = {repr(float(cfg.ly))}\n\n")
    out.write("[initial]\n")
    out.write(f"preset = {cfg.initial}\n")
    out.write(f"value = {repr(float(cfg.initial_value))}\n")
    out.write(f"amplitude = {repr(float(cfg.initial_amplitude))}\n")
    for key in ("x0", "y0", "rx", "ry"):
        out.write(f"{key} = {repr(float(getattr(cfg, key)))}\n")
    out.write("\n[boundary]\n")
    for name, prof in (("a", cfg.a), ("b0", cfg.b0), ("J", cfg.j_threshold)):
        for key, val in _profile_to_items(name, prof):
            out.write(f"{key} = {val}\n")
    out.write(f"b1 = {repr(float(cfg.b1))}\n")
    out.write(f"kappa = {repr(float(cfg.kappa))}\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# named scenarios


def scenario(name: str) -> RunConfig:
    """Built-in scenario presets used by the verification suites."""
    if name == "steady_constant":
        prof = SideProfile.constant_value
        return RunConfig(
            model="meanfield",
            nu=0.05,
            t_final=0.5,
            cfl=0.5,
            output_interval=0.1,
            nx=20,
            ny=20,
            initial="constant",
            initial_value=0.7,
            a=prof(0.7),
            b0=prof(0.7),
            j_threshold=prof(10.0),
            b1=0.0,
            kappa=0.5,
        ).validate()
    if name == "meanfield_nucleation":
        prof = SideProfile.constant_value
        return RunConfig(
            model="meanfield",
            nu=0.1,
            t_final=0.3,
            cfl=0.5,
            output_interval=0.01,
            store_gradients=True,
            nx=40,
            ny=40,
            initial="constant",
            initial_value=0.0,
            a=prof(2.0),
            b0=prof(0.1),
            j_threshold=prof(0.5),
            b1=0.5,
            kappa=0.5,
        ).validate()
    if name == "kellersegel_random":
        prof = SideProfile.constant_value
        return RunConfig(
            model="kellersegel",
            nu=0.01,
            t_final=1.0,
            cfl=0.25,
            output_interval=0.05,
            seed=20240817,
            nx=64,
            ny=64,
            initial="random",
            initial_value=0.5,
            initial_amplitude=0.5,
            a=prof(1.0),
            b0=prof(0.3),
            j_threshold=prof(1.0),
            b1=0.0,
            kappa=0.5,
        ).validate()
    raise ValueError(
        f"unknown scenario {name!r}; expected steady_constant, meanfield_nucleation "
        f"or kellersegel_random"
    )


SCENARIO_NAMES = ("steady_constant", "meanfield_nucleation", "kellersegel_random")
