"""Experiment runner: parses a JSON config, dispatches one command pipeline,
manages the kernel cache, and emits CSV/JSON reports plus rendered figures.

Usage:  pinlab <command> --config <file> [--out <dir>] [--threads <n>]
        [--seed <u64>]

Commands: green, annealed, quenched, fracmom, renewal, pam, polymer.
The config file is a flat JSON object of parameters; required keys are
validated (and unknown keys rejected) before anything touches the disk, so a
bad config produces no outputs.  All files are written atomically and listed
with content digests in manifest.json, which is always written last.  Replica
reductions are fixed-order, so the emitted bytes do not depend on --threads.

Exit codes: 0 success, 1 config error (message names the key), 2 numerical
failure (message names the violated tolerance).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from importlib import metadata

from . import annealed as ann
from . import figures, reports
from .errors import ConfigError, NumericalFailure, PinlabError
from .fracmom import FracMomConfig, gap_scan
from .kernels import tables
from .kernels.greens import green_ct, green_pair, tilted_greens
from .kernels.tables import LatticeConfig, build_kernel_table
from .pam_polymer import (
    bernoulli_log_mgf,
    beta_hat,
    lyapunov_estimate,
    polymer_partition,
    sample_polymer_field,
)
from .quenched import ModelParams, free_energy_estimate
from .renewal import AppendixAParams, appendixA_scan
from .rngstreams import POLYMER, stream

COMMANDS = ("green", "annealed", "quenched", "fracmom", "renewal", "pam", "polymer")


def _version() -> str:
    try:
        return metadata.version("pinlab")
    except metadata.PackageNotFoundError:
        return "0.0.0"


# ---------------------------------------------------------------------------
# config validation


@dataclass
class _Key:
    cast: object
    default: object = None
    required: bool = False


def _num(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError("expected a number")
    return v


def _int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError("expected an integer")
    return v


def _float(v):
    return float(_num(v))


def _str(v):
    if not isinstance(v, str):
        raise ValueError("expected a string")
    return v


def _bool(v):
    if not isinstance(v, bool):
        raise ValueError("expected true/false")
    return v


def _grid(v):
    if not isinstance(v, (list, tuple)) or not v:
        raise ValueError("expected a non-empty array of numbers")
    return tuple(_num(x) for x in v)


SCHEMAS = {
    "green": {
        "d": _Key(_int, required=True),
        "rho": _Key(_float, 0.0),
        "h": _Key(_float),
        "eps": _Key(_float, 1e-6),
    },
    "annealed": {
        "mode": _Key(_str, required=True),
        "d": _Key(_int, required=True),
        "rho": _Key(_float, 0.0),
        "z_grid": _Key(_grid, (1.005, 1.01, 1.02, 1.04)),
    },
    "quenched": {
        "mode": _Key(_str, required=True),
        "d": _Key(_int, required=True),
        "beta": _Key(_float),
        "z": _Key(_float),
        "rho": _Key(_float, 0.0),
        "N": _Key(_num),
        "t": _Key(_num),
        "replicas": _Key(_int, 200),
        "seed": _Key(_int, 0),
        "doubling": _Key(_bool, True),
    },
    "fracmom": {
        "mode": _Key(_str, required=True),
        "d": _Key(_int, required=True),
        "gamma": _Key(_float, required=True),
        "z": _Key(_float),
        "beta_bar": _Key(_float),
        "rho": _Key(_float, 0.0),
        "L": _Key(_num),
        "R": _Key(_int, 8),
        "epsilon": _Key(_float, 0.1),
        "h": _Key(_float),
        "replicas": _Key(_int, 200),
        "seed": _Key(_int, 0),
        "steps": _Key(_int, 512),
        "grid": _Key(_grid),
    },
    "renewal": {
        "d": _Key(_int, 4),
        "c": _Key(_float, 1.0),
        "delta1": _Key(_float, 0.55),
        "delta2": _Key(_float, 0.9),
        "N_grid": _Key(_grid, (256, 512, 1024, 2048, 4096)),
        "replicas": _Key(_int, 200),
        "seed": _Key(_int, 0),
    },
    "pam": {
        "d": _Key(_int, required=True),
        "beta": _Key(_float, required=True),
        "rho": _Key(_float, required=True),
        "t": _Key(_num),
        "t_grid": _Key(_grid),
        "replicas": _Key(_int, 100),
        "seed": _Key(_int, 0),
        "eps": _Key(_float, 1e-8),
    },
    "polymer": {
        "d": _Key(_int, 1),
        "N": _Key(_int, 8),
        "lambda_grid": _Key(_grid, (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5)),
        "seed": _Key(_int, 0),
    },
}


def validate_params(command: str, raw: dict) -> dict:
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}", key="command")
    schema = SCHEMAS[command]
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", key="config")
    for k in raw:
        if k not in schema:
            raise ConfigError(f"unknown config key {k!r} for {command}", key=k)
    out = {}
    for k, spec in schema.items():
        if k in raw:
            try:
                out[k] = spec.cast(raw[k])
            except (ValueError, TypeError) as e:
                raise ConfigError(f"bad value for key {k!r}: {e}", key=k) from e
        elif spec.required:
            raise ConfigError(f"missing required key {k!r}", key=k)
        else:
            out[k] = spec.default
    return out


def load_config(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}", key="config") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}", key="config") from e


# ---------------------------------------------------------------------------
# kernel cache


def _cache_root(out_dir: str) -> str:
    return os.environ.get("PINLAB_CACHE") or os.path.join(out_dir, "cache")


def _prewarm_table(d: int, n_max: int, out_dir: str, manifest) -> None:
    """Build (or load) the disk-cached kernel table and seed the memo so the
    pipeline below picks it up instead of rebuilding."""
    if d < 2 or n_max < 1:
        return
    table = build_kernel_table(LatticeConfig(d=d, n_max=n_max), _cache_root(out_dir))
    if getattr(table, "from_cache", False):
        manifest.cache_hits += 1
    current = tables._MEMO.get((d, n_max))
    if current is None or current.config.n_max < n_max:
        tables._MEMO[(d, n_max)] = table


# ---------------------------------------------------------------------------
# command pipelines


def _emit_pair(rows, columns, name, out_dir, manifest, extra=None):
    """CSV + JSON mirror for one result set; records both digests."""
    csv_path = os.path.join(out_dir, name + ".csv")
    manifest.record(csv_path, reports.emit(rows, "csv", csv_path, columns=columns))
    payload = {"rows": rows}
    if extra:
        payload.update(extra)
    json_path = os.path.join(out_dir, name + ".json")
    manifest.record(json_path, reports.emit(payload, "json", json_path))
    return payload


def _record_figure(path, manifest):
    manifest.record(path, reports.digest_file(path))


def _green_value_rows(p):
    rows = []
    gp = green_pair(p["d"], eps=p["eps"])
    rows.append(
        {
            "quantity": "g_pair",
            "d": p["d"],
            "rho": None,
            "h": None,
            "value": gp.value,
            "by_series": gp.by_series,
            "by_quadrature": gp.by_quadrature,
            "error": gp.error,
            "finite": gp.finite,
        }
    )
    gc = green_ct(p["d"], p["rho"], eps=p["eps"])
    rows.append(
        {
            "quantity": "g_ct",
            "d": p["d"],
            "rho": p["rho"],
            "h": None,
            "value": gc.value,
            "by_series": gc.by_series,
            "by_quadrature": gc.by_quadrature,
            "error": gc.error,
            "finite": gc.finite,
        }
    )
    if p["h"] is not None and p["d"] >= 3:
        tg = tilted_greens(p["d"], p["h"])
        for name, val in (("g_even", tg.g_even), ("g_odd", tg.g_odd)):
            rows.append(
                {
                    "quantity": name,
                    "d": p["d"],
                    "rho": None,
                    "h": p["h"],
                    "value": val,
                    "by_series": None,
                    "by_quadrature": None,
                    "error": None,
                    "finite": True,
                }
            )
    return rows


GREEN_COLS = ["quantity", "d", "rho", "h", "value", "by_series", "by_quadrature", "error", "finite"]


def _run_green(p, out_dir, threads, manifest):
    rows = _green_value_rows(p)
    _emit_pair(rows, GREEN_COLS, "greens", out_dir, manifest)
    dual = [r for r in rows if r["by_series"] is not None]
    if dual:
        fig = figures.bar_compare(
            os.path.join(out_dir, "greens.png"),
            [r["quantity"] for r in dual],
            {
                "series": [r["by_series"] for r in dual],
                "quadrature": [r["by_quadrature"] for r in dual],
            },
            ylabel="Green value at the origin",
            title=f"d={p['d']} dual-route Green functions",
        )
        _record_figure(fig, manifest)


ANNEALED_COLS = ["mode", "d", "rho", "beta_c", "z", "f_ann", "f_per_excess"]


def _run_annealed(p, out_dir, threads, manifest):
    mode, d, rho = p["mode"], p["d"], p["rho"]
    if mode not in ("discrete", "continuous"):
        raise ConfigError(f"unknown mode {mode!r}", key="mode")
    beta_c = ann.critical_point(mode, d, rho)
    base = {"mode": mode, "d": d, "rho": rho, "beta_c": beta_c}
    if d <= 2:
        rows = [dict(base, z=None, f_ann=None, f_per_excess=None)]
        _emit_pair(rows, ANNEALED_COLS, "annealed", out_dir, manifest)
        return
    law = (
        ann.renewal_law_discrete(d)
        if mode == "discrete"
        else ann.renewal_law_ct(d, rho)
    )
    rows = []
    for z in p["z_grid"]:
        f = ann.annealed_free_energy(z, law)
        rows.append(
            dict(base, z=z, f_ann=f, f_per_excess=f / (z - 1.0) if z > 1 else None)
        )
    _emit_pair(rows, ANNEALED_COLS, "annealed", out_dir, manifest)
    zs = [r["z"] for r in rows]
    fig = figures.line_plot(
        os.path.join(out_dir, "annealed.png"),
        zs,
        {"f_ann": [r["f_ann"] for r in rows]},
        xlabel="coupling z",
        ylabel="annealed free energy",
        title=f"{mode} d={d} (beta_c={beta_c:.6f})",
    )
    _record_figure(fig, manifest)


QUENCHED_COLS = ["mode", "d", "beta", "z", "rho", "horizon", "f_hat", "stderr", "replicas", "seed"]


def _run_quenched(p, out_dir, threads, manifest):
    if p["N"] is None and p["t"] is None:
        raise ConfigError("need a horizon: key 'N' (discrete) or 't' (continuous)", key="N")
    horizon = p["N"] if p["mode"] == "discrete" else p["t"]
    if horizon is None:
        missing = "N" if p["mode"] == "discrete" else "t"
        raise ConfigError(
            f"horizon key {missing!r} required in {p['mode']} mode", key=missing
        )
    params = ModelParams(mode=p["mode"], d=p["d"], beta=p["beta"], z=p["z"], rho=p["rho"])
    fe = free_energy_estimate(
        params, horizon, p["replicas"], p["seed"], threads=threads, doubling=p["doubling"]
    )
    rows = []
    for hz in fe.horizons:
        est = fe.estimate(hz)
        rows.append(
            {
                "mode": p["mode"],
                "d": p["d"],
                "beta": params.beta_value,
                "z": params.z,
                "rho": p["rho"],
                "horizon": hz,
                "f_hat": est.mean,
                "stderr": est.stderr,
                "replicas": p["replicas"],
                "seed": p["seed"],
            }
        )
    _emit_pair(rows, QUENCHED_COLS, "quenched", out_dir, manifest)
    fig = figures.line_plot(
        os.path.join(out_dir, "quenched.png"),
        [r["horizon"] for r in rows],
        {"f_hat": [r["f_hat"] for r in rows]},
        yerr={"f_hat": [r["stderr"] for r in rows]},
        xlabel="horizon",
        ylabel="free-energy estimate",
        title=f"{p['mode']} d={p['d']} quenched free energy",
    )
    _record_figure(fig, manifest)


FRACMOM_COLS = [
    "coupling",
    "L",
    "h",
    "windowed_value",
    "prefactor",
    "rho_check",
    "rho_tail",
    "holder_product",
    "holder_margin_sigma",
    "shrink",
]


def _run_fracmom(p, out_dir, threads, manifest):
    kwargs = {k: p[k] for k in
              ("mode", "d", "gamma", "z", "beta_bar", "rho", "L", "R", "epsilon",
               "h", "replicas", "seed", "steps")}
    config = FracMomConfig(**kwargs)
    if config.mode == "discrete":
        n_tab = int(config.L if config.L is not None else 64)
        _prewarm_table(config.d, max(n_tab, 1), out_dir, manifest)
    report = gap_scan(config, grid=p["grid"], threads=threads)
    rows = []
    for e in report.entries:
        rows.append(
            {
                "coupling": e.coupling,
                "L": e.L,
                "h": e.h,
                "windowed_value": e.windowed_value,
                "prefactor": e.prefactor,
                "rho_check": e.rho_check.value,
                "rho_tail": e.rho_check.tail_residual,
                "holder_product": e.holder.product,
                "holder_margin_sigma": e.holder.margin_sigma,
                "shrink": e.shrink,
            }
        )
    flags = {
        "windowed_decreasing": report.windowed_decreasing,
        "rho_decreasing": report.rho_decreasing,
        "rho_final_below_one": report.rho_final_below_one,
    }
    _emit_pair(rows, FRACMOM_COLS, "fracmom", out_dir, manifest, extra=flags)
    xs = [r["coupling"] for r in rows]
    fig = figures.line_plot(
        os.path.join(out_dir, "fracmom.png"),
        xs,
        {
            "windowed A": [r["windowed_value"] for r in rows],
            "rho_check": [r["rho_check"] for r in rows],
        },
        xlabel="coupling",
        ylabel="criterion value",
        title=f"{config.mode} d={config.d} gamma={config.gamma}",
        logy=True,
    )
    _record_figure(fig, manifest)


RENEWAL_COLS = ["N", "s", "value", "prefactored", "mc_value", "mc_stderr"]


def _run_renewal(p, out_dir, threads, manifest):
    law = ann.renewal_law_discrete(p["d"])
    params = AppendixAParams(
        c=p["c"],
        delta1=p["delta1"],
        delta2=p["delta2"],
        N_grid=tuple(int(n) for n in p["N_grid"]),
        alpha=p["d"] / 2.0 - 1.0,
    )
    report = appendixA_scan(law, params, replicas=p["replicas"], seed=p["seed"], threads=threads)
    rows = [
        {
            "N": r.N,
            "s": r.s,
            "value": r.value,
            "prefactored": r.prefactored,
            "mc_value": r.mc_value,
            "mc_stderr": r.mc_stderr,
        }
        for r in report.rows
    ]
    flags = {
        "strictly_decreasing": report.strictly_decreasing,
        "max_decade_ratio": report.max_decade_ratio,
        "decay_flag": report.decay_flag,
        "max_mc_sigma": report.max_mc_sigma,
    }
    _emit_pair(rows, RENEWAL_COLS, "renewal", out_dir, manifest, extra=flags)
    fig = figures.line_plot(
        os.path.join(out_dir, "renewal.png"),
        [r["N"] for r in rows],
        {
            "exact": [r["prefactored"] for r in rows],
            "sampled": [r["N"] ** (1.0 - p["delta2"]) * r["mc_value"] for r in rows],
        },
        yerr={"sampled": [r["N"] ** (1.0 - p["delta2"]) * r["mc_stderr"] for r in rows]},
        xlabel="N",
        ylabel="prefactored damped count",
        title=f"d={p['d']} thinned-count decay",
        logy=True,
    )
    _record_figure(fig, manifest)


PAM_COLS = ["t", "lambda0_hat", "lambda0_stderr", "f_hat", "f_stderr"]


def _run_pam(p, out_dir, threads, manifest):
    if p["t"] is None and p["t_grid"] is None:
        raise ConfigError("need a horizon: key 't' or 't_grid'", key="t")
    t_grid = p["t_grid"] if p["t_grid"] is not None else (p["t"],)
    params = ModelParams(mode="continuous", d=p["d"], beta=p["beta"], rho=p["rho"])
    rows = []
    for idx, t in enumerate(t_grid):
        ly = lyapunov_estimate(
            p["d"], p["beta"], p["rho"], float(t), p["replicas"],
            seed=p["seed"] + 7919 * idx, eps=p["eps"], threads=threads,
        )
        fe = free_energy_estimate(
            params, float(t), p["replicas"], p["seed"] + 7919 * idx,
            threads=threads, doubling=False,
        ).estimate(float(t))
        rows.append(
            {
                "t": float(t),
                "lambda0_hat": ly.mean,
                "lambda0_stderr": ly.stderr,
                "f_hat": fe.mean,
                "f_stderr": fe.stderr,
            }
        )
    _emit_pair(rows, PAM_COLS, "pam", out_dir, manifest)
    fig = figures.line_plot(
        os.path.join(out_dir, "pam.png"),
        [r["t"] for r in rows],
        {
            "lambda0_hat": [r["lambda0_hat"] for r in rows],
            "f_hat": [r["f_hat"] for r in rows],
        },
        yerr={
            "lambda0_hat": [r["lambda0_stderr"] for r in rows],
            "f_hat": [r["f_stderr"] for r in rows],
        },
        xlabel="t",
        ylabel="growth-rate estimate",
        title=f"d={p['d']} beta={p['beta']} rho={p['rho']}",
    )
    _record_figure(fig, manifest)


POLYMER_COLS = ["lambda", "m_lambda", "beta_hat", "z_sample"]


def _run_polymer(p, out_dir, threads, manifest):
    rows = []
    for idx, lam in enumerate(p["lambda_grid"]):
        rng = stream(p["seed"], POLYMER, idx)
        w = sample_polymer_field(p["N"], p["d"], rng)
        z_val = polymer_partition(float(lam), p["N"], p["d"], w)
        rows.append(
            {
                "lambda": float(lam),
                "m_lambda": bernoulli_log_mgf(float(lam)),
                "beta_hat": beta_hat(float(lam)),
                "z_sample": z_val,
            }
        )
    _emit_pair(rows, POLYMER_COLS, "polymer", out_dir, manifest)
    fig = figures.line_plot(
        os.path.join(out_dir, "polymer.png"),
        [r["lambda"] for r in rows],
        {"beta_hat": [r["beta_hat"] for r in rows]},
        xlabel="disorder strength lambda",
        ylabel="collision coupling beta_hat",
        title=f"Bernoulli disorder, N={p['N']} d={p['d']}",
    )
    _record_figure(fig, manifest)


RUNNERS = {
    "green": _run_green,
    "annealed": _run_annealed,
    "quenched": _run_quenched,
    "fracmom": _run_fracmom,
    "renewal": _run_renewal,
    "pam": _run_pam,
    "polymer": _run_polymer,
}


# ---------------------------------------------------------------------------
# entry point


def run(command: str, params: dict, out_dir: str, threads: int = 1) -> reports.RunManifest:
    """Validated dispatch; returns the manifest (already written to disk)."""
    t0 = time.time()
    os.makedirs(out_dir, exist_ok=True)
    manifest = reports.RunManifest(
        command=command,
        config=dict(params, output=out_dir, threads=threads),
        version=_version(),
        wall_time_s=0.0,
    )
    RUNNERS[command](params, out_dir, threads, manifest)
    manifest.wall_time_s = round(time.time() - t0, 3)
    manifest.write(os.path.join(out_dir, "manifest.json"))
    return manifest


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pinlab",
        description="Random-walk pinning experiments: partition functions, "
        "Green functions, fractional moments, and the catalyst field.",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON parameter file")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        raw = load_config(args.config)
        params = validate_params(args.command, raw)
        if args.seed is not None:
            if "seed" in SCHEMAS[args.command]:
                params["seed"] = args.seed
            else:
                raise ConfigError(
                    f"command {args.command!r} takes no seed", key="seed"
                )
        if args.threads < 1:
            raise ConfigError("threads must be >= 1", key="threads")
        run(args.command, params, args.out, threads=args.threads)
        return 0
    except ConfigError as e:
        key = f" (key: {e.key})" if e.key else ""
        print(f"config error: {e}{key}", file=sys.stderr)
        return 1
    except NumericalFailure as e:
        tol = f" (tolerance {e.tolerance:g}, observed {e.observed:g})" if e.tolerance is not None else ""
        print(f"numerical failure: {e}{tol}", file=sys.stderr)
        return 2
    except PinlabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
