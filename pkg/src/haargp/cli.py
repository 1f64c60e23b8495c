"""Command-line front end: output distributions, pair correlations, moment verification, prediction and tail sweeps.

Settings resolve in the order: command-line flag, ``HAARGP_<FLAG>``
environment variable, ``--config`` JSON file, built-in default. Outputs are
CSV tables with JSON sidecars (``--format csv``) or one JSON document per
table (``--format json``). The exit status is 0 iff every pass/fail column
passes; failures are summarized as JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .empirics import accumulate, empirical_covariance, gaussian_reference, histogram, histogram2d, moment_ratio, tail_frequency
from .errors import HaarGPError
from .exact_weingarten import MomentSpec, check_group, exact_moment
from .export import jsonable, write_table
from .gp_inference import GPModel, fidelity_kernel, triviality_report
from .gp_moments import asymptotic_moment_pairings, isserlis_moment, covariance_matrix, orthogonal_states_moment
from .perm import InnerProductMatrix
from .sampler import PauliObservable, make_dataset, parameter_shift_gradient_samples, sample_outputs
from .tails import TailBound, loss_concentration_bound, tail_report

ENV_PREFIX = "HAARGP_"

COMMON: dict[str, Any] = {
    "group": None,
    "qubits": None,
    "dim": None,
    "samples": None,
    "seed": 0,
    "order": None,
    "states": None,
    "observable": "Z1",
    "mode": None,
    "out": ".",
    "format": "csv",
    "threads": None,
    "cache_dir": None,
    "bins": None,
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "output-moments": {"group": "both", "qubits": "10", "samples": 10_000, "order": 8, "bins": 50},
    "pair-correlations": {"group": "unitary", "qubits": "12", "samples": 10_000, "states": "ghz,epsilon", "bins": 40, "mode": "asymptotic"},
    "verify-moments": {"group": "both", "qubits": "3", "samples": 100_000, "order": 4, "states": "same,orthogonal,ghz"},
    "predictive": {"group": "unitary", "qubits": "14,16,18", "samples": None, "order": 4, "states": "0.5", "mode": "asymptotic", "shots": "10,100,1000", "label": 1.0},
    "tails": {"group": "unitary", "qubits": "6", "samples": 100_000, "order": 6, "grid": "1,2,3,4", "label": 0.5},
}

INT_KEYS = {"samples", "seed", "order", "threads", "bins", "dim"}
FLOAT_KEYS = {"label"}


class ConfigError(HaarGPError, ValueError):
    """Invalid or inconsistent experiment settings."""


@dataclass
class ExperimentConfig:
    subcommand: str
    values: dict[str, Any]

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError as exc:
            raise AttributeError(name) from exc

    def groups(self) -> list[str]:
        g = self.values["group"]
        return ["unitary", "orthogonal"] if g == "both" else [check_group(g)]

    def qubit_list(self) -> list[int]:
        if self.values.get("dim") is not None:
            return [_qubits_of(int(self.values["dim"]))]
        qs = _int_list(self.values["qubits"])
        if any(q < 1 for q in qs):
            raise ConfigError("qubit counts must be >= 1")
        return qs

    def single_qubits(self) -> int:
        qs = self.qubit_list()
        if len(qs) != 1:
            raise ConfigError(f"{self.subcommand} takes a single qubit count, got {qs}")
        return qs[0]

    def echo(self) -> dict:
        return {"subcommand": self.subcommand, **self.values}


def _qubits_of(d: int) -> int:
    n = int(round(math.log2(d))) if d > 0 else -1
    if n < 1 or 2**n != d:
        raise ConfigError(f"--dim must be a power of two (qubit register), got {d}")
    return n


def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).split(",") if x.strip()]


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(Fraction(x.strip())) for x in str(text).split(",") if x.strip()]


def _coerce(key: str, value):
    if value is None:
        return None
    if key in INT_KEYS:
        return int(value)
    if key in FLOAT_KEYS:
        return float(value)
    return value


def resolve_config(subcommand: str, cli: dict[str, Any], env: dict[str, str] | None = None) -> ExperimentConfig:
    env = os.environ if env is None else env
    values = {**COMMON, **DEFAULTS[subcommand]}
    cfg_path = cli.get("config") or env.get(ENV_PREFIX + "CONFIG")
    if cfg_path:
        try:
            with open(cfg_path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {cfg_path}: {exc}") from exc
        data = {**data, **data.get(subcommand, {})}
        for k in values:
            if k in data and not isinstance(data[k], dict):
                values[k] = data[k]
    for k in values:
        ev = env.get(ENV_PREFIX + k.upper())
        if ev is not None:
            values[k] = ev
    for k, v in cli.items():
        if k in values and v is not None:
            values[k] = v
    values = {k: _coerce(k, v) for k, v in values.items()}
    if cli.get("dim") is not None and cli.get("qubits") is not None:
        if _int_list(cli["qubits"]) != [_qubits_of(int(cli["dim"]))]:
            raise ConfigError(f"--dim {cli['dim']} inconsistent with --qubits {cli['qubits']}")
    if values["threads"] is None:
        values["threads"] = os.cpu_count() or 1
    if values["samples"] is not None and values["samples"] < 1:
        raise ConfigError("--samples must be >= 1")
    if values["order"] is not None and values["order"] < 1:
        raise ConfigError("--order must be >= 1")
    if values["format"] not in ("csv", "json"):
        raise ConfigError(f"--format must be csv or json, got {values['format']}")
    if values["group"] not in ("both", "unitary", "orthogonal", "u", "o"):
        raise ConfigError(f"unknown group {values['group']!r}")
    return ExperimentConfig(subcommand, values)


# --- output ------------------------------------------------------------------


@dataclass
class Outputs:
    config: ExperimentConfig
    started: float = field(default_factory=time.time)
    files: list[Path] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    @property
    def out_dir(self) -> Path:
        return Path(self.config.out)

    def meta(self, extra: dict | None = None) -> dict:
        return {
            "config": self.config.echo(),
            "version": __version__,
            "wall_time_s": round(time.time() - self.started, 3),
            **(extra or {}),
        }

    def table(self, name: str, header: list[str], rows, extra: dict | None = None) -> None:
        rows = [list(r) for r in rows]
        try:
            if self.config.format == "csv":
                path = self.out_dir / f"{name}.csv"
                write_table(path, header, rows, self.meta(extra))
            else:
                path = self.out_dir / f"{name}.json"
                path.parent.mkdir(parents=True, exist_ok=True)
                doc = {"columns": header, "rows": [dict(zip(header, r)) for r in rows], "meta": self.meta(extra)}
                path.write_text(json.dumps(jsonable(doc), indent=2, sort_keys=True))
        except OSError as exc:
            raise OSError(f"cannot write output {exc.filename or name}: {exc.strerror or exc}") from exc
        self.files.append(path)
        if "pass" in header:
            j = header.index("pass")
            for r in rows:
                if not r[j]:
                    self.failures.append({"table": name, **{h: v for h, v in zip(header, r)}})


def _observable(config: ExperimentConfig, n: int) -> PauliObservable:
    return PauliObservable.parse(config.observable, n)


def _sigma2(d: int, group: str) -> float:
    return (2.0 if group == "orthogonal" else 1.0) / d


# --- subcommands ---------------------------------------------------------------


def cmd_output_moments(config: ExperimentConfig, out: Outputs) -> None:
    """Output histogram with Gaussian overlay and even moment ratios."""
    n = config.single_qubits()
    d = 2**n
    obs = _observable(config, n)
    states, _ = make_dataset("computational", d=d, m=1)
    summary = []
    for group in config.groups():
        batch = sample_outputs(states, obs, group, config.samples, config.seed, config.threads)
        x = batch.values[:, 0]
        s2 = _sigma2(d, group)
        h = histogram(x, config.bins, sigma=math.sqrt(s2))
        out.table(f"output_{group}_hist", h.header(), h.rows(), {"tv_distance": h.tv_distance, "sigma2": s2})
        acc = accumulate(x, max(2, config.order))
        rows = []
        for k in range(2, config.order + 1, 2):
            r = moment_ratio(acc, k, x)
            gauss = gaussian_reference(k) * s2 ** (k // 2)
            ok = k == 2 or abs(r.ratio - r.reference) <= 5 * r.se
            rows.append([k, acc.raw_moment(k), gauss, r.ratio, r.reference, r.se, ok])
        var = acc.raw_moment(2)
        rows.insert(0, [0, var, s2, var / s2, 1, float("nan"), abs(var / s2 - 1) <= 0.05])
        out.table(
            f"output_{group}_moments",
            ["k", "empirical_moment", "gaussian_moment", "ratio", "reference", "ratio_se", "pass"],
            rows,
            {"row_k0": "variance check: ratio = empirical variance / model variance, tolerance 5%"},
        )
        summary.append({"group": group, "d": d, "variance": var, "model_variance": s2, "tv_distance": h.tv_distance})
    print(json.dumps(jsonable({"output-moments": summary})))


def cmd_pair_correlations(config: ExperimentConfig, out: Outputs) -> None:
    """Joint histograms and correlations of output pairs."""
    n = config.single_qubits()
    d = 2**n
    obs = _observable(config, n)
    pairs = {"ghz": "ghz_pair", "epsilon": "epsilon_pair"}
    keys = [s.strip() for s in config.states.split(",")]
    for key in keys:
        if key not in pairs:
            raise ConfigError(f"pair states must be among {sorted(pairs)}, got {key!r}")
    # every pair shares |0...0> and lives in span{|0...0>, |1...1>}, so one
    # rank-2 isometry per sample serves all pairs; each pair's joint law is exact
    datasets = {key: make_dataset(pairs[key], d=d) for key in keys}
    states = [datasets[keys[0]][0][0]] + [datasets[key][0][1] for key in keys]
    rows = []
    for group in config.groups():
        joint = sample_outputs(states, obs, group, config.samples, config.seed, config.threads)
        for j, key in enumerate(keys, start=1):
            pair = joint.values[:, [0, j]]
            G = datasets[key][1]
            est = empirical_covariance(pair)
            h2 = histogram2d(pair, 0, 1, config.bins)
            out.table(f"pairs_{group}_{key}_hist2d", h2.header(), h2.rows())
            mode = "exact-finite" if config.mode == "exact" else ("asymptotic-fidelity" if key == "ghz" else "asymptotic-diagonal")
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model = covariance_matrix(G, d, group, mode).as_float()
            model_corr = model[0, 1] / math.sqrt(model[0, 0] * model[1, 1])
            corr = est.correlation[0, 1]
            rows.append([
                group, key, d, est.covariance[0, 0], est.covariance[1, 1], est.covariance[0, 1],
                est.covariance_se[0, 1], model[0, 1], corr, est.correlation_se[0, 1], model_corr,
                abs(corr - model_corr) <= 0.05,
            ])
    header = ["group", "pair", "d", "var_1", "var_2", "cov_12", "cov_12_se", "model_cov_12", "corr", "corr_se", "model_corr", "pass"]
    out.table("pair_correlations", header, rows)


def _regime_dataset(regime: str, k: int, d: int):
    if regime == "same":
        states, G = make_dataset("computational", d=d, m=1)
        return states, G, [0] * k
    if regime == "orthogonal":
        if k > d:
            raise ConfigError(f"{k} orthogonal states do not fit in d={d}")
        states, G = make_dataset("computational", d=d, m=k)
        return states, G, list(range(k))
    if regime == "ghz":
        states, G = make_dataset("ghz_pair", d=d)
        return states, G, [a % 2 for a in range(k)]
    raise ConfigError(f"unknown state regime {regime!r}; expected same, orthogonal or ghz")


def _float_or_nan(x) -> float:
    return float("nan") if x is None else float(x)


def cmd_verify_moments(config: ExperimentConfig, out: Outputs) -> None:
    """Exact vs Gaussian-process vs Monte Carlo moments."""
    n = config.single_qubits()
    d = 2**n
    obs = _observable(config, n)
    run_mc = config.mode != "exact"
    rows = []
    for group in config.groups():
        for regime in [s.strip() for s in config.states.split(",")]:
            for k in range(1, config.order + 1):
                if regime == "orthogonal" and k > d:
                    continue
                states, G, asg = _regime_dataset(regime, k, d)
                exact_G = InnerProductMatrix.identity(G.m) if regime != "ghz" else G
                ex = exact_moment(MomentSpec(group, d, tuple(asg), exact_G), cache_dir=config.cache_dir)
                asym = asymptotic_moment_pairings(exact_G, asg, d, group)
                iss = isserlis_moment(covariance_matrix(exact_G, d, group, "exact"), asg)
                if regime == "orthogonal":
                    literal = orthogonal_states_moment(k, d, group, "literal")
                else:
                    literal = asym
                note = []
                if float(literal) * float(ex) < 0:
                    note.append("sign mismatch between literal leading-order value and exact moment")
                mc = se = z = float("nan")
                ok = True
                if run_mc:
                    batch = sample_outputs(states, obs, group, config.samples, config.seed, config.threads)
                    prod = np.prod(batch.values[:, asg], axis=1)
                    mc = float(prod.mean())
                    se = float(prod.std(ddof=1) / math.sqrt(len(prod)))
                    z = (mc - float(ex)) / se if se > 0 else (0.0 if mc == float(ex) else math.inf)
                    ok = abs(z) <= 4
                rows.append([
                    group, regime, k, d, ex, float(ex), float(asym), float(iss), float(literal), mc, se, z, "; ".join(note), ok,
                ])
    header = ["group", "regime", "k", "d", "exact", "exact_float", "asymptotic", "isserlis_exact_cov", "literal", "monte_carlo", "mc_se", "z", "note", "pass"]
    out.table("verify_moments", header, rows)


def cmd_predictive(config: ExperimentConfig, out: Outputs) -> None:
    """Posterior-vs-prior shifts on a grid of dimensions, shot counts and training sizes."""
    mode = "exact" if config.mode == "exact" else "asymptotic"
    overlaps = _float_list(config.states)
    rows = []
    for group in config.groups():
        for n in config.qubit_list():
            d = 2**n
            for N in _float_list(config.shots):
                for t in overlaps:
                    m = config.order
                    _, G = make_dataset("common_overlap", d=d, m=m, overlap=t)
                    gp = GPModel.from_overlaps(G, d, group, n_shots=N, mode=mode)
                    cross = [float(fidelity_kernel(t, d, group, mode))] * m
                    prior = float(fidelity_kernel(1, d, group, mode))
                    rep = triviality_report(gp, [config.label] * m, cross, prior)
                    r = rep.result
                    rows.append([
                        group, d, N, m, t, r.mean, r.prior_variance, r.variance, r.relative_variance_reduction,
                        rep.mean_shift_bound, rep.variance_shift_bound, rep.mean_scaling, rep.variance_scaling,
                        rep.polylog_ok, "; ".join(rep.flags), rep.bounds_hold,
                    ])
    header = [
        "group", "d", "shots", "m", "overlap", "mean", "prior_variance", "variance", "relative_variance_reduction",
        "mean_shift_bound", "variance_shift_bound", "N_over_d", "N_over_d2", "polylog_ok", "flags", "pass",
    ]
    out.table("predictive", header, rows)


def cmd_tails(config: ExperimentConfig, out: Outputs) -> None:
    """Empirical tail frequencies against every bound on a (c, d) grid."""
    rows = []
    multiples = _float_list(config.grid)
    y = config.label
    for group in config.groups():
        for n in config.qubit_list():
            d = 2**n
            obs = _observable(config, n)
            states, _ = make_dataset("computational", d=d, m=1)
            x = sample_outputs(states, obs, group, config.samples, config.seed, config.threads).values[:, 0]
            grad = None
            if group == "unitary":
                grad = parameter_shift_gradient_samples(
                    states[0], obs, "unitary", config.samples, config.seed + 1, threads=config.threads
                ).column("dC")
            sigma = math.sqrt(_sigma2(d, group))
            loss_dev = (x - y) ** 2 - (y * y + sigma * sigma)
            ts = tuple(range(2, config.order + 1, 2))
            for mlt in multiples:
                c = mlt * sigma
                bounds = [(b, x, c) for b in tail_report(c, d, group, y=y, ts=ts) if b.kind != "loss"]
                # a one-sigma output move changes the loss by about 2|y| sigma + sigma^2
                c_loss = mlt * sigma * (2 * abs(y) + sigma)
                bounds.append((TailBound("loss", loss_concentration_bound(c_loss, y, d, group)), loss_dev, c_loss))
                for b, sample, c_eff in bounds:
                    if b.kind.startswith("gradient"):
                        sample = grad
                    if sample is None:
                        continue
                    tf = tail_frequency(sample, c_eff)
                    literal = b.kind.endswith("literal")
                    ok = True if literal else b.value >= tf.frequency - 4 * tf.se
                    rows.append([group, d, mlt, c_eff, b.kind, b.params.get("t", ""), b.value, tf.frequency, tf.se, ok])
    header = ["group", "d", "c_over_sigma", "c", "kind", "t", "bound", "empirical", "empirical_se", "pass"]
    out.table("tails", header, rows, {"loss_threshold": "loss rows use c = multiple * sigma * (2|y| + sigma)", "label_y": y})


COMMANDS: dict[str, Callable[[ExperimentConfig, Outputs], None]] = {
    "output-moments": cmd_output_moments,
    "pair-correlations": cmd_pair_correlations,
    "verify-moments": cmd_verify_moments,
    "predictive": cmd_predictive,
    "tails": cmd_tails,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="haargp", description="Haar-random QNN outputs as Gaussian processes")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "output-moments": "output histogram, Gaussian overlay and moment ratios",
        "pair-correlations": "joint output histograms and correlations for state pairs",
        "verify-moments": "exact vs asymptotic vs Monte Carlo moment table",
        "predictive": "GP posterior-vs-prior triviality grid",
        "tails": "empirical tails against concentration bounds",
    }
    for name, h in helps.items():
        sp = sub.add_parser(name, help=h, description=h)
        sp.add_argument("--group", choices=["unitary", "orthogonal", "both", "u", "o"])
        sp.add_argument("--qubits", help="qubit count (comma list for predictive and tails)")
        sp.add_argument("--dim", type=int, help="Hilbert-space dimension (power of two)")
        sp.add_argument("--samples", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--order", type=int, help="largest moment order k (predictive: training-set size)")
        sp.add_argument("--states", help="state spec: correlation pairs, verify-moments regimes, predictive overlaps")
        sp.add_argument("--observable", help="Pauli string or single-qubit shorthand such as Z1")
        sp.add_argument("--mode", choices=["exact", "asymptotic", "literal", "mc"])
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--format", choices=["csv", "json"])
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--threads", type=int)
        sp.add_argument("--cache-dir", dest="cache_dir", help="directory for cached Weingarten tables")
        sp.add_argument("--bins", type=int)
        if name == "predictive":
            sp.add_argument("--shots", help="comma list of shot counts N")
            sp.add_argument("--label", type=float, help="training label value")
        if name == "tails":
            sp.add_argument("--grid", help="comma list of thresholds in units of sigma")
            sp.add_argument("--label", type=float, help="label y for the loss bound")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    try:
        config = resolve_config(command, args)
        out = Outputs(config)
        COMMANDS[command](config, out)
    except (HaarGPError, OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    for f in out.files:
        print(f)
    if out.failures:
        print(json.dumps(jsonable({"failures": out.failures})), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
