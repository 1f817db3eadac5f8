"""Command-line front end: ``pg``, ``figure`` and ``compare``.

Configuration comes from flags and/or a ``key=value`` file (``--config``);
flags win.  Every dataset starts with ``# key=value`` lines holding the full
configuration, so a dataset file can itself be passed back as ``--config``.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics_effective import pg_series
from .dynamics_full import IntegrationError, compare_models, evolve_model
from .figures import DEFAULT_ETAS, FIGURES
from .hilbert import DEFAULT_EPS, Preparation, SystemParams

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
MODELS = ("effective", "carrier", "full", "compare")

# key -> (parser, default)
CONFIG_KEYS = {
    "model": (str, "effective"),
    "level": (str, "e"),
    "eta": (float, 0.0),
    "alpha": (complex, 2.0),
    "fock_m": (int, None),
    "beta": (complex, None),
    "fock_p": (int, 0),
    "r_ratio": (float, None),
    "delta": (float, 20.0),
    "nu": (float, 400.0),
    "omega_c": (float, 1000.0),
    "g1": (float, 1.0),
    "g2": (float, 1.0),
    "tau_min": (float, 0.0),
    "tau_max": (float, 25.0),
    "tau_points": (int, 2000),
    "eps": (float, DEFAULT_EPS),
}
EXCLUSIVE = {"alpha": "fock_m", "fock_m": "alpha", "beta": "fock_p", "fock_p": "beta"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: str
    params: SystemParams
    prep: Preparation
    tau_min: float
    tau_max: float
    tau_points: int
    eps: float
    output_path: str | None
    raw: dict

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if not self.tau_max > self.tau_min >= 0:
            raise ConfigError("need tau_max > tau_min >= 0")
        if self.tau_points < 2:
            raise ConfigError("tau_points must be >= 2")
        if not 0 < self.eps < 1:
            raise ConfigError("eps must lie in (0, 1)")

    @property
    def tau_grid(self):
        return np.linspace(self.tau_min, self.tau_max, self.tau_points)


def _normalize_key(key):
    return key.strip().lstrip("-").replace("-", "_")


def read_config_file(path):
    """Parse ``key=value`` lines; ``#``-prefixed ``key=value`` lines are accepted too."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        commented = line.lstrip().startswith("#")
        text = line.lstrip().lstrip("#").strip()
        if "=" not in text:
            continue
        key, _, value = text.partition("=")
        key = _normalize_key(key)
        if key in CONFIG_KEYS:
            values[key] = value.strip()
        elif not commented:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    return values


def _coerce(key, text):
    kind = CONFIG_KEYS[key][0]
    if text is None or text == "None":
        return None
    try:
        value = kind(text) if not isinstance(text, kind) else text
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc
    if kind is complex and value.imag == 0:
        value = value.real
    return value


def merge_config(file_values, flag_values):
    """Defaults, then the config file, then flags.  A flag on one side of an
    exclusive pair (alpha/fock_m, beta/fock_p) drops the other side."""
    merged = {k: default for k, (_, default) in CONFIG_KEYS.items()}
    for k, v in file_values.items():
        merged[k] = _coerce(k, v)
        if merged[k] is not None and k in EXCLUSIVE:
            merged[EXCLUSIVE[k]] = None
    for k, v in flag_values.items():
        if v is None:
            continue
        merged[k] = _coerce(k, v)
        if k in EXCLUSIVE:
            merged[EXCLUSIVE[k]] = None
    return merged


def build_run_config(merged, output_path=None):
    try:
        g1, g2 = merged["g1"], merged["g2"]
        if merged["r_ratio"] is not None:
            g1 = merged["r_ratio"] * g2
        params = SystemParams(nu=merged["nu"], omega_c=merged["omega_c"], delta=merged["delta"],
                              g1=g1, g2=g2, eta=merged["eta"])
        prep = Preparation(level=merged["level"], alpha=merged["alpha"], fock_m=merged["fock_m"],
                           beta=merged["beta"], fock_p=merged["fock_p"])
        return RunConfig(merged["model"], params, prep, merged["tau_min"], merged["tau_max"],
                         merged["tau_points"], merged["eps"], output_path, dict(merged))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# --- output ------------------------------------------------------------------

def _fmt(x):
    return format(float(x), ".12g")


def _preamble(command, config, extra=()):
    lines = [f"# command={command}"]
    lines.extend(f"# {key}={config.raw[key]}" for key in CONFIG_KEYS)
    lines.extend(f"# {k}={v}" for k, v in extra)
    return lines


def _series_metadata(series):
    meta = []
    if series.cutoffs is not None:
        c = series.cutoffs
        meta.append(("cutoffs", f"m_max:{c.m_max} n_max:{c.n_max} pad:{c.pad}"))
    meta.append(("model_tag", series.model_tag))
    meta.append(("truncation_deficit", _fmt(series.deficit)))
    if series.warning:
        meta.append(("warning", series.warning))
    return meta


def _emit(lines, path):
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def compute_series(config):
    if config.model == "effective":
        return pg_series(config.params, config.prep, config.tau_grid, config.eps)
    return evolve_model(config.model, config.params, config.prep, config.tau_grid, eps=config.eps)


def render_dataset(command, config, series, extra=()):
    lines = _preamble(command, config, list(extra) + _series_metadata(series))
    numeric = series.p_r is not None
    lines.append("tau,p_g,p_r,p_e" if numeric else "tau,p_g")
    for i, t in enumerate(series.tau_grid):
        row = [t, series.values[i]]
        if numeric:
            row += [series.p_r[i], series.p_e[i]]
        lines.append(",".join(_fmt(v) for v in row))
    return lines


def cmd_pg(config):
    if config.model == "compare":
        raise ConfigError("model=compare belongs to the 'compare' command")
    series = compute_series(config)
    _emit(render_dataset("pg", config, series), config.output_path)
    return EXIT_OK


def cmd_figure(name, eta_list, output_dir, base):
    """Write one dataset per eta with the preset's preparation and time span."""
    if name not in FIGURES:
        raise ConfigError(f"unknown figure {name!r}; choose from {sorted(FIGURES)}")
    preset = FIGURES[name]
    out = Path(output_dir)
    written = []
    for eta in eta_list:
        merged = dict(base)
        merged.update(model="effective", eta=float(eta), level="e", alpha=preset.prep.alpha,
                      fock_m=None, beta=preset.prep.beta, fock_p=preset.prep.fock_p,
                      tau_min=0.0, tau_max=preset.tau_max, tau_points=preset.tau_points)
        config = build_run_config(merged)
        series = compute_series(config)
        extra = [("figure", name),
                 ("note", "eta sweep and time span are tool defaults")]
        path = out / f"{name}_eta{_fmt(eta)}.csv"
        _emit(render_dataset("figure", config, series, extra), path)
        written.append(path)
    return EXIT_OK, written


def cmd_compare(config):
    report = compare_models(config.params, config.prep, config.tau_grid, eps=config.eps)
    nu_delta, delta_g = report.regime_ratios
    lines = _preamble("compare", config)
    lines.append("quantity,value")
    lines.append(f"nu_over_delta,{_fmt(nu_delta)}")
    lines.append(f"delta_over_g,{_fmt(delta_g)}")
    for pair, dev in report.max_dev_pg.items():
        lines.append(f"max_dev_pg_{pair.replace('-', '_')},{_fmt(dev)}")
    for model, pr in report.max_pr.items():
        lines.append(f"max_pr_{model},{_fmt(pr)}")
    _emit(lines, config.output_path)
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------

def _common_flags():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--level", choices=("g", "e"))
    p.add_argument("--alpha", help="coherent motion amplitude (complex literal allowed)")
    p.add_argument("--beta", help="coherent field amplitude (complex literal allowed)")
    p.add_argument("--fock-p", dest="fock_p", help="field Fock number")
    p.add_argument("--fock-m", dest="fock_m", help="motion Fock number")
    p.add_argument("--r-ratio", dest="r_ratio", help="g1/g2; sets g1 = r * g2")
    for flag in ("delta", "nu", "g1", "g2"):
        p.add_argument(f"--{flag}")
    p.add_argument("--omega-c", dest="omega_c")
    p.add_argument("--tau-min", dest="tau_min")
    p.add_argument("--tau-max", dest="tau_max")
    p.add_argument("--tau-points", dest="tau_points")
    p.add_argument("--eps")
    p.add_argument("--out", help="output file ('-' for stdout); a directory for 'figure'")
    return p


def make_parser():
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="cavion", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    pg = sub.add_parser("pg", parents=[common], help="P_g(tau) dataset for one configuration")
    pg.add_argument("--eta")
    fig = sub.add_parser("figure", parents=[common], help="dataset family for a figure preset")
    fig.add_argument("name", help="cv, cc or sr")
    fig.add_argument("--eta", help="comma-separated eta list")
    cmp_ = sub.add_parser("compare", parents=[common], help="full/carrier/effective audit")
    cmp_.add_argument("--eta")
    return parser


def _flag_values(args):
    values = {k: getattr(args, k, None) for k in CONFIG_KEYS}
    if args.command == "figure":
        # the eta list is handled by cmd_figure
        values["eta"] = None
    return values


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        file_values = read_config_file(args.config) if args.config else {}
        merged = merge_config(file_values, _flag_values(args))
        if args.command == "pg":
            return cmd_pg(build_run_config(merged, args.out))
        if args.command == "compare":
            merged["model"] = "compare"
            return cmd_compare(build_run_config(merged, args.out))
        etas = DEFAULT_ETAS if args.eta is None else [float(x) for x in args.eta.split(",") if x]
        status, _ = cmd_figure(args.name, etas, args.out or ".", merged)
        return status
    except IntegrationError as exc:
        print(f"cavion: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        # ConfigError and TruncationError are ValueErrors
        print(f"cavion: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
