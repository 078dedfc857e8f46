"""Command-line entry point: one verb per analysis, one table per run.

Exit status: 0 ok, 1 config error, 2 numeric error, 3 data error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .apt_core import gains, spectrum
from .config import RunConfig, load_config
from .errors import AptError, ConfigError, DataError
from .fitting import ensure_converged, fit_delta_k, model_gains
from .lossy import build_lossy_generator, propagate_mean, propagate_moments, variance_diff_photon
from .detection import detected_squeezing
from .physical import effective_from_physical, kappa_from_physical, alpha_from_physical
from .sweeps import AXES, AXIS_UNITS, SweepRecord, at_axis, locate_ep, optimal_squeezing, sweep
from .tables import OutputTable, format_value, read_dataset

log = logging.getLogger("aptfwm")

VERBS = ("eigen", "propagate", "noise", "sweep", "ep", "fit", "optimum")

RECORD_UNITS = {
    "beta": "1", "regime": "", "lambda_re": "rad/m", "lambda_im": "rad/m",
    "g_p": "1", "g_s": "1", "g_p_norm": "1", "g_s_norm": "1",
    "s_ideal": "1", "s_ideal_db": "dB", "s_lossy": "1", "s_lossy_db": "dB",
    "s_detected": "1", "s_detected_db": "dB", "kappa": "rad/m", "alpha": "rad/m", "error": "",
}


@dataclass
class CommandResult:
    table: OutputTable
    summary: dict
    status: int = 0

    def summary_line(self) -> str:
        return " ".join(f"{k}={format_value(v)}" for k, v in self.summary.items())


def _points(cfg: RunConfig):
    """(axis column or None, [(axis value, model)]) for verbs that tabulate per point."""
    if cfg.model is not None:
        return None, [(None, cfg.model)]
    if cfg.sweep is None:
        p = cfg.physical
        return "density", [(p.density, effective_from_physical(p))]
    axis = cfg.sweep.axis
    return axis, [(x, effective_from_physical(at_axis(cfg.physical, axis, x))) for x in cfg.sweep.grid()]


def _axis_column(axis):
    return [AXES[axis]], [AXIS_UNITS[axis]]


def _table(cfg, verb, axis, columns, units) -> OutputTable:
    cols, us = _axis_column(axis) if axis else ([], [])
    comments = [f"aptfwm {verb}"] + cfg.echo()
    return OutputTable(cols + columns, us + units, comments=comments)


def _eigen(cfg, data):
    axis, points = _points(cfg)
    t = _table(cfg, "eigen", axis, ["lambda_re", "lambda_im", "beta", "regime"],
               ["rad/m", "rad/m", "1", ""])
    regimes = []
    for x, model in points:
        s = spectrum(model.lossless(), cfg.tolerances.ep_tolerance)
        lam = complex(s.lambda_plus)
        regimes.append(s.regime.value)
        t.add(*([x] if axis else []), lam.real, lam.imag, s.beta, s.regime.value)
    transitions = sum(a != b for a, b in zip(regimes, regimes[1:]))
    return t, {"rows": len(points), "regime_changes": transitions}


def _propagate(cfg, data):
    axis, points = _points(cfg)
    t = _table(cfg, "propagate", axis,
               ["kappa", "alpha", "a_re", "a_im", "c_re", "c_im", "g_p", "g_s", "g_p_norm", "g_s_norm"],
               ["rad/m", "rad/m"] + ["1"] * 8)
    last = None
    for x, model in points:
        tc, _ = propagate_mean(build_lossy_generator(model), model.length)
        gr = gains(tc)
        t.add(*([x] if axis else []), complex(model.kappa).real, complex(model.alpha).real,
              tc.a.real, tc.a.imag, tc.c.real, tc.c.imag, gr.g_p, gr.g_s, gr.g_p_norm, gr.g_s_norm)
        last = gr
    summary = {"rows": len(points)}
    if len(points) == 1:
        summary.update(g_p=last.g_p, g_s=last.g_s)
    return t, summary


def _noise(cfg, data):
    axis, points = _points(cfg)
    t = _table(cfg, "noise", axis,
               ["coherent_term", "langevin_term", "total_var", "mean_np", "mean_ns",
                "s_lossy", "s_lossy_db", "s_detected", "s_detected_db"],
               ["photons^2"] * 3 + ["photons"] * 2 + ["1", "dB", "1", "dB"])
    for x, model in points:
        moments = propagate_moments(build_lossy_generator(model), model.length)
        lossy = variance_diff_photon(moments, cfg.seed_photons)
        det = detected_squeezing(moments, cfg.detector, cfg.seed_photons)
        t.add(*([x] if axis else []), lossy.coherent_term, lossy.langevin_term, lossy.total_var,
              lossy.mean_np, lossy.mean_ns, lossy.squeezing_S, lossy.squeezing_dB,
              det.squeezing_S, det.squeezing_dB)
    summary = {"rows": len(points)}
    if len(points) == 1:
        summary.update(s_lossy_db=lossy.squeezing_dB, s_detected_db=det.squeezing_dB)
    return t, summary


def _need_sweep(cfg, verb):
    if cfg.physical is None or cfg.sweep is None:
        raise ConfigError(f"'{verb}' needs a [physical] parameter set and a [sweep] section")


def _record_table(cfg, verb, records):
    axis = cfg.sweep.axis
    names = [f.name for f in fields(SweepRecord) if f.name != "param_value"]
    t = _table(cfg, verb, axis, names, [RECORD_UNITS[n] for n in names])
    for r in records:
        t.add(r.param_value, *(getattr(r, n) if n != "error" else (r.error or "") for n in names))
    return t


def _sweep_records(cfg):
    return sweep(cfg.physical, cfg.sweep.axis, cfg.sweep.grid(), cfg.detector, cfg.seed_photons,
                 workers=cfg.workers, ep_tol=cfg.tolerances.ep_tolerance)


def _sweep(cfg, data):
    _need_sweep(cfg, "sweep")
    records = _sweep_records(cfg)
    failed = sum(r.error is not None for r in records)
    transitions = sum(a.regime != b.regime for a, b in zip(records, records[1:]))
    return _record_table(cfg, "sweep", records), {
        "rows": len(records), "failed": failed, "regime_changes": transitions}


def _ep_value(cfg, p, axis, lo, hi):
    return locate_ep(p, axis, (lo, hi), rtol=cfg.tolerances.ep_rtol)


def _ep(cfg, data):
    _need_sweep(cfg, "ep")
    s, p = cfg.sweep, cfg.physical
    x = _ep_value(cfg, p, s.axis, s.start, s.stop)
    at = at_axis(p, s.axis, x)
    model = effective_from_physical(at)
    t = _table(cfg, "ep", s.axis, ["kappa", "alpha", "beta"], ["rad/m", "rad/m", "1"])
    t.add(x, kappa_from_physical(at), alpha_from_physical(at), model.beta())
    return t, {f"ep_{AXES[s.axis]}": x}


def _optimum(cfg, data):
    _need_sweep(cfg, "optimum")
    records = _sweep_records(cfg)
    opt = optimal_squeezing(cfg.physical, cfg.sweep.axis, cfg.sweep.grid(), cfg.detector,
                            cfg.seed_photons, xtol=cfg.tolerances.optimum_xtol, records=records)
    key = AXES[cfg.sweep.axis]
    summary = {f"optimum_{key}": opt.param_value, "s_detected": opt.s_detected,
               "s_detected_db": opt.s_detected_db, "bracketed": opt.bracketed}
    return _record_table(cfg, "optimum", records), summary


def _fit(cfg, data):
    if data is None:
        raise ConfigError("'fit' needs a gain dataset (--data PATH)")
    if cfg.physical is None:
        raise ConfigError("'fit' needs a [physical] parameter set")
    ds = read_dataset(data)
    if cfg.sweep is not None and cfg.sweep.axis != ds.axis:
        raise DataError(f"dataset axis {ds.axis!r} differs from the configured sweep axis {cfg.sweep.axis!r}")
    res = ensure_converged(fit_delta_k(ds, cfg.physical, cfg.fit.free, cfg.fit.log_scale, cfg.fit.max_nfev))
    fitted = cfg.physical.replace(**res.params)
    g_p, g_s = model_gains(fitted, ds.axis, ds.param)

    t = OutputTable(
        [AXES[ds.axis], "g_p_meas", "g_s_meas", "g_p_model", "g_s_model"],
        [AXIS_UNITS[ds.axis], "1", "1", "1", "1"],
        comments=[f"aptfwm fit", f"data = {Path(data).name}"] + cfg.echo()
        + [f"fit {k} = {v!r} +- {res.stderr[k]!r}" for k, v in res.params.items()],
    )
    for row in zip(ds.param, ds.g_p, ds.g_s, g_p, g_s):
        t.add(*row)

    summary = {}
    for k, v in res.params.items():
        summary[k] = v
        summary[f"{k}_stderr"] = res.stderr[k]
    summary.update(residual_norm=res.residual_norm, converged=res.converged,
                   identifiable=res.identifiable)
    try:
        summary[f"ep_{AXES[ds.axis]}"] = _ep_value(cfg, fitted, ds.axis, ds.param.min(), ds.param.max())
    except AptError:
        summary[f"ep_{AXES[ds.axis]}"] = math.nan
    return t, summary


HANDLERS = {
    "eigen": _eigen, "propagate": _propagate, "noise": _noise, "sweep": _sweep,
    "ep": _ep, "fit": _fit, "optimum": _optimum,
}


def run_command(verb: str, cfg: RunConfig, data=None) -> CommandResult:
    """Run one verb; raises an AptError subclass on failure."""
    if verb not in HANDLERS:
        raise ConfigError(f"unknown verb {verb!r}; expected one of {VERBS}")
    table, summary = HANDLERS[verb](cfg, data)
    return CommandResult(table, {"verb": verb, **summary})


def output_path(cfg: RunConfig, verb: str, override=None) -> Path:
    if override is not None:
        return Path(override)
    stem = Path(cfg.source).stem if cfg.source else "aptfwm"
    template = cfg.output_table or "{stem}_{verb}.csv"
    return Path(template.format(stem=stem, verb=verb))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aptfwm", description="Anti-PT four-wave-mixing simulator.")
    ap.add_argument("verb", choices=VERBS)
    ap.add_argument("config", help="run configuration file")
    ap.add_argument("--data", help="gain dataset (required by 'fit')")
    ap.add_argument("-o", "--output", help="output table path (overrides [output] table)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        result = run_command(args.verb, cfg, args.data)
        path = output_path(cfg, args.verb, args.output)
        try:
            result.table.write(path)
        except OSError as exc:
            raise ConfigError(f"cannot write {path}: {exc}") from None
        result.summary["table"] = str(path)
    except AptError as exc:
        category = {1: "config", 2: "numeric", 3: "data"}[exc.exit_code]
        print(f"error={category} message={str(exc)!r}", file=sys.stderr)
        return exc.exit_code
    print(result.summary_line())
    return 0


if __name__ == "__main__":
    sys.exit(main())
