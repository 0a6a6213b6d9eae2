"""Command-line front end.

Modes:
  timeseries     observables vs time from the ground state
  steady         one steady-state row
  sweep          steady-state rows over one swept parameter
  figure-preset  the time series behind a figure panel, one file per curve

Exit status: 0 ok, 2 invalid configuration, 3 numerical degeneracy, 4 I/O.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import __version__
from .bloch import build_reduced_system, initial_state_ground
from .errors import DegeneracyError, DomainError, EstimationError
from .evolve import TimeGrid, TimeSeries, propagate_reduced
from .observables import COLUMNS
from .params import Geometry, SystemParams, photon_number_from_temperature
from .steady import steady_report

log = logging.getLogger("thermodimer")

MODES = ("timeseries", "steady", "sweep", "figure-preset")
PRESETS = ("fig2a", "fig2b", "fig2c", "fig2d", "fig3")
FORMATS = ("csv", "json")
PARAM_KEYS = ("gamma2", "delta", "n_photon", "xi", "f", "dd", "gamma_override_zero")
SWEEPABLE = ("gamma2", "delta", "n_photon", "xi", "f", "dd")
PARAM_COLUMNS = ("gamma2", "delta", "n_photon", "xi", "f1", "f2", "dd", "gamma_override_zero")
TS_HEADER = ("t",) + COLUMNS


class ConfigError(ValueError):
    pass


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _sweep(v) -> tuple[str, tuple[float, ...]] | None:
    if v is None or isinstance(v, tuple):
        return v
    if isinstance(v, list):
        return (v[0], tuple(float(x) for x in v[1]))
    name, sep, values = str(v).partition("=")
    name = name.strip().replace("-", "_")
    if not sep or not values.strip():
        raise ConfigError(f"sweep must look like name=v1,v2,..., got {v!r}")
    try:
        vals = tuple(float(x) for x in values.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad sweep values in {v!r}") from exc
    return name, vals


@dataclass(frozen=True)
class RunConfig:
    mode: str = "timeseries"
    preset: str | None = None
    gamma2: float = 0.9999
    delta: float = 0.0
    n_photon: float = 0.0
    xi: float = 0.02
    f: float = 0.0
    dd: float = 1.0
    gamma_override_zero: bool = False
    t_start: float = 0.0
    t_end: float = 20.0
    samples: int = 2000
    log_grid: bool = False
    sweep: tuple[str, tuple[float, ...]] | None = None
    wavelength_nm: float | None = None
    temperature_k: float | None = None
    output: str | None = None
    format: str = "csv"
    workers: int = 1
    explicit: frozenset = field(default=frozenset(), compare=False, repr=False)

    def params(self) -> SystemParams:
        return SystemParams(
            geometry=Geometry.parallel(self.xi, self.f)
            if self.dd == 1.0
            else Geometry(self.xi, self.f, self.f, self.dd),
            gamma2=self.gamma2,
            delta=self.delta,
            n_photon=self.n_photon,
            gamma_override_zero=self.gamma_override_zero,
        )

    def grid(self) -> TimeGrid:
        return TimeGrid(
            t_start=self.t_start,
            t_end=self.t_end,
            n_samples=self.samples,
            spacing="logarithmic" if self.log_grid else "linear",
        )

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "explicit"}
        if self.sweep is not None:
            d["sweep"] = [self.sweep[0], list(self.sweep[1])]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        kw = {}
        for f in dataclasses.fields(cls):
            if f.name in d and f.name != "explicit":
                kw[f.name] = _CONVERT[f.name](d[f.name]) if d[f.name] is not None else None
        return cls(**kw)


_CONVERT = {
    "mode": str,
    "preset": str,
    "gamma2": float,
    "delta": float,
    "n_photon": float,
    "xi": float,
    "f": float,
    "dd": float,
    "gamma_override_zero": _bool,
    "t_start": float,
    "t_end": float,
    "samples": int,
    "log_grid": _bool,
    "sweep": _sweep,
    "wavelength_nm": float,
    "temperature_k": float,
    "output": str,
    "format": str,
    "workers": int,
}


def read_config_file(path: str | Path) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key = key.strip().lstrip("-").replace("-", "_")
        if key == "config":
            raise ConfigError(f"{path}:{lineno}: nested config files are not supported")
        if key not in _CONVERT:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def load_presets() -> dict:
    return json.loads(resources.files("thermodimer").joinpath("presets.json").read_text())


def resolve(raw: dict) -> RunConfig:
    """Validate merged key-value settings and produce the resolved config."""
    try:
        kw = {k: _CONVERT[k](v) for k, v in raw.items() if v is not None}
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    explicit = frozenset(kw)
    if "mode" not in kw:
        kw["mode"] = "figure-preset" if "preset" in kw else "sweep" if "sweep" in kw else "timeseries"
    mode = kw["mode"]
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; choose from {', '.join(MODES)}")
    if kw.get("format", "csv") not in FORMATS:
        raise ConfigError(f"unknown format {kw['format']!r}")
    if kw.get("workers", 1) < 1:
        raise ConfigError("workers must be >= 1")

    wl, temp = kw.pop("wavelength_nm", None), kw.pop("temperature_k", None)
    if (wl is None) != (temp is None):
        raise ConfigError("--wavelength-nm and --temperature-k must be given together")
    if wl is not None:
        if "n_photon" in kw:
            raise ConfigError("give either --n-photon or a wavelength/temperature pair, not both")
        try:
            kw["n_photon"] = photon_number_from_temperature(wl * 1e-9, temp)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc

    if mode == "sweep":
        if "sweep" not in kw:
            raise ConfigError("sweep mode needs --sweep name=v1,v2,...")
        if kw["sweep"][0] not in SWEEPABLE:
            raise ConfigError(f"cannot sweep {kw['sweep'][0]!r}; choose from {', '.join(SWEEPABLE)}")
    elif "sweep" in kw:
        raise ConfigError(f"--sweep is only valid in sweep mode, not {mode}")
    if mode == "figure-preset":
        if kw.get("preset") not in PRESETS:
            raise ConfigError(f"figure-preset mode needs --preset in {', '.join(PRESETS)}")
    elif "preset" in kw:
        raise ConfigError(f"--preset is only valid in figure-preset mode, not {mode}")

    cfg = RunConfig(**kw, explicit=explicit)
    try:
        cfg.params()
        if mode in ("timeseries", "figure-preset"):
            cfg.grid()
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def preset_configs(cfg: RunConfig) -> list[RunConfig]:
    """One resolved timeseries config per curve of the preset."""
    entry = load_presets()[cfg.preset]
    manual = (cfg.explicit & set(PARAM_KEYS + ("t_start", "t_end", "samples", "log_grid", "n_photon")))
    if manual:
        log.warning("preset %s overrides manual settings: %s", cfg.preset, ", ".join(sorted(manual)))
    g = entry["grid"]
    base = dict(entry["base"], **{k: g[k] for k in ("t_start", "t_end", "samples", "log_grid")})
    out = []
    for v in entry["values"]:
        kw = dict(base, **{entry["vary"]: v})
        out.append(
            dataclasses.replace(
                RunConfig(**kw, gamma_override_zero=False),
                mode="timeseries",
                preset=cfg.preset,
                format=cfg.format,
                output=cfg.output,
                workers=cfg.workers,
            )
        )
    return out


# -- computation -------------------------------------------------------------


def compute_timeseries(cfg: RunConfig) -> TimeSeries:
    p = cfg.params()
    return propagate_reduced(build_reduced_system(p), initial_state_ground(), cfg.grid())


def param_row(p: SystemParams) -> tuple:
    g = p.geometry
    return (p.gamma2, p.delta, p.n_photon, g.xi, g.f1, g.f2, g.dd, int(p.gamma_override_zero))


def compute_steady_row(cfg: RunConfig) -> tuple:
    p = cfg.params()
    obs = steady_report(p).observables()
    return param_row(p) + obs.as_row()


def sweep_configs(cfg: RunConfig) -> list[RunConfig]:
    name, values = cfg.sweep
    return [dataclasses.replace(cfg, **{name: v}, mode="steady", sweep=None) for v in values]


def _map(func, items, workers: int) -> list:
    if workers == 1 or len(items) < 2:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


# -- output -------------------------------------------------------------------


def fmt(x) -> str:
    return f"{float(x):.17g}"


def emit_table(header, rows, fmt_name: str, path: str | None, metadata: dict) -> None:
    """Write rows as CSV or JSON; ``path`` None or '-' means stdout."""
    if fmt_name == "csv":
        lines = [",".join(header)] + [",".join(fmt(v) for v in row) for row in rows]
        text = "\n".join(lines) + "\n"
    else:
        records = [{k: float(v) for k, v in zip(header, row)} for row in rows]
        text = json.dumps({"metadata": metadata, "records": records}, indent=1) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def metadata_for(cfg: RunConfig) -> dict:
    p = cfg.params()
    c = p.couplings
    return {
        "artifact": "thermodimer",
        "version": __version__,
        "config": cfg.to_dict(),
        "couplings": {"big_gamma": c.big_gamma, "big_omega": c.big_omega},
    }


def _series_path(cfg: RunConfig, vary: str, value: float) -> str:
    out = Path(cfg.output or cfg.preset)
    out.mkdir(parents=True, exist_ok=True)
    return str(out / f"{cfg.preset}_{vary}={value:g}.{cfg.format}")


def run(cfg: RunConfig) -> list[str]:
    """Execute a resolved config; returns the paths written."""
    written = []
    if cfg.mode == "timeseries":
        ts = compute_timeseries(cfg)
        emit_table(TS_HEADER, ts.table(), cfg.format, cfg.output, metadata_for(cfg))
        written.append(cfg.output or "-")
    elif cfg.mode in ("steady", "sweep"):
        points = [cfg] if cfg.mode == "steady" else sweep_configs(cfg)
        rows = _map(compute_steady_row, points, cfg.workers)
        emit_table(PARAM_COLUMNS + COLUMNS, rows, cfg.format, cfg.output, metadata_for(cfg))
        written.append(cfg.output or "-")
    else:
        entry = load_presets()[cfg.preset]
        curves = preset_configs(cfg)
        series = _map(compute_timeseries, curves, cfg.workers)
        for c, v, ts in zip(curves, entry["values"], series):
            path = _series_path(cfg, entry["vary"], v)
            emit_table(TS_HEADER, ts.table(), cfg.format, path, metadata_for(c))
            written.append(path)
    return written


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="thermodimer",
        description="Two dipole-coupled molecules under incoherent driving.",
    )
    a = ap.add_argument
    a("--config", help="flat key = value file; flags override it")
    a("--mode", choices=MODES)
    a("--preset", choices=PRESETS)
    a("--gamma2", type=float, help="decay rate of molecule 2 (units of gamma1)")
    a("--delta", type=float, help="detuning omega1 - omega2 (units of gamma1)")
    a("--n-photon", type=float, help="mean thermal photon number")
    a("--xi", type=float, help="effective distance")
    a("--f", type=float, help="dipole/axis cosine, same for both dipoles")
    a("--dd", type=float, help="dipole/dipole cosine")
    a("--gamma-override-zero", action="store_const", const=True, default=None,
      help="force the collective decay rate to zero")
    a("--t-start", type=float)
    a("--t-end", type=float)
    a("--samples", type=int)
    a("--log-grid", action="store_const", const=True, default=None)
    a("--sweep", help="name=v1,v2,... (sweep mode)")
    a("--wavelength-nm", type=float)
    a("--temperature-k", type=float)
    a("--output", help="output file (directory for presets); default stdout")
    a("--format", choices=FORMATS)
    a("--workers", type=int)
    a("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(levelname)s: %(message)s")
    ap = build_parser()
    args = ap.parse_args(argv)
    raw = {}
    try:
        if args.config:
            raw.update(read_config_file(args.config))
        raw.update({k: v for k, v in vars(args).items() if k != "config" and v is not None})
        cfg = resolve(raw)
    except ConfigError as exc:
        print(f"thermodimer: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"thermodimer: cannot read config: {exc}", file=sys.stderr)
        return 4
    try:
        run(cfg)
    except DegeneracyError as exc:
        print(f"thermodimer: degenerate system: {exc}", file=sys.stderr)
        return 3
    except (DomainError, EstimationError) as exc:
        print(f"thermodimer: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"thermodimer: I/O error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
