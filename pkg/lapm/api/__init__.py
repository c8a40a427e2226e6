import dataclasses, sys, pathlib
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..eng.grid_field import Grid, Field
from ..eng.maxwell import MediumProfile
from ..eng.sweep import MediumSpec, CurrentSpec, SweepConfig, SweepReport, run_lap_sweep, save_sweep_fields, write_report_csv
from ..eng.error import ConfigNotFoundError, InvalidConfigError, ShapeError, ParameterError

_SECTIONS = ('grid', 'medium', 'currents', 'exponents', 'sweep')

def _build(cls, section: str, table: dict[str, Any]):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(table) - names
    if unknown:
        raise InvalidConfigError(f"Unknown keys in [{section}]: {', '.join(sorted(unknown))}")
    try:
        return cls(**table)
    except TypeError as e:
        raise InvalidConfigError(f"Invalid [{section}] section: {e}") from e

def parse_sweep_config(data: dict[str, Any], base_dir: Optional[pathlib.Path] = None) -> SweepConfig:
    """ Build a SweepConfig from the parsed TOML tables. """
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise InvalidConfigError(f"Unknown config sections: {', '.join(sorted(unknown))}")
    for required in ('grid', 'sweep'):
        if required not in data:
            raise InvalidConfigError(f"Missing [{required}] section")
    g = data['grid']
    try:
        grid = Grid(int(g.get('n', 3)), int(g['N']), float(g['L']))
    except KeyError as e:
        raise InvalidConfigError(f"[grid] needs key {e}") from e
    except (ShapeError, ParameterError, TypeError, ValueError) as e:
        raise InvalidConfigError(f"Invalid [grid]: {e}") from e

    medium = _build(MediumSpec, 'medium', dict(data.get('medium', {})))
    currents = _build(CurrentSpec, 'currents', dict(data.get('currents', {})))
    if base_dir is not None:
        for key in ('je_path', 'jm_path'):
            p = getattr(currents, key)
            if p is not None and not pathlib.Path(p).is_absolute():
                setattr(currents, key, str(base_dir / p))

    exps = dict(data.get('exponents', {}))
    if 'ptilde' in exps:
        exps['p_tilde'] = exps.pop('ptilde')
    unknown = set(exps) - {'p', 'p_tilde', 'q', 'q1', 'q2'}
    if unknown:
        raise InvalidConfigError(f"Unknown keys in [exponents]: {', '.join(sorted(unknown))}")
    sweep = dict(data['sweep'])
    if 'sign' in sweep and isinstance(sweep['sign'], str):
        s = sweep['sign'].strip()
        if s not in ('+', '-'):
            raise InvalidConfigError(f"[sweep] sign must be '+' or '-', got {s!r}")
        sweep['sign'] = 1 if s == '+' else -1
    table = {**sweep, **exps}
    if 'omega' not in table:
        raise InvalidConfigError("[sweep] needs key 'omega'")
    return _build(SweepConfig, 'sweep', {'grid': grid, 'medium': medium, 'currents': currents, **table})

def load_sweep_config(path: str | pathlib.Path) -> SweepConfig:
    path = pathlib.Path(path)
    if not path.is_file():
        raise ConfigNotFoundError(f"Config file not found: {path}")
    try:
        data = tomllib.loads(path.read_text(encoding='utf-8'))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as e:
        raise InvalidConfigError(f"Cannot parse {path}: {e}") from e
    return parse_sweep_config(data, base_dir=path.parent)

def build_medium(cfg: SweepConfig) -> MediumProfile:
    return cfg.medium.build(cfg.grid)

def build_currents(cfg: SweepConfig) -> tuple[Field, Field]:
    """ Raw (unmollified, unprojected) J_e, J_m of the config. """
    return cfg.currents.build(cfg.grid, cfg.seed)

def sweep_from_file(
    path: str | pathlib.Path,
    output: Optional[str | pathlib.Path] = None,
    save_fields: Optional[str | pathlib.Path] = None,
    ) -> SweepReport:
    """ Load a config, run the sweep, and optionally write the CSV report and field snapshots. """
    cfg = load_sweep_config(path)
    report = run_lap_sweep(cfg, build_medium(cfg), build_currents(cfg))
    if output is not None:
        write_report_csv(report, output)
    if save_fields is not None:
        save_sweep_fields(report, save_fields)
    return report
