"""Command-line entry point: ``nilm-limits <subcommand> [options]``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import experiments as ex
from .detection import np_threshold
from .errors import ConfigError, InputError, NumericalError
from .montecarlo import evaluate_estimator, map_decision, nway_success_probability

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

DEFAULT_PRESETS = {
    "pairwise": "toaster-vs-kettle",
    "noise-sweep": "toaster-vs-nothing",
    "rate-sweep": "toaster-vs-kettle",
    "nway": "six-devices",
    "nway-sweep": "six-devices",
    "magnitude-sweep": "six-devices",
    "np-threshold": "toaster-vs-kettle",
    "eval-estimator": "toaster-vs-kettle",
}


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    """Parse ``v``, ``a,b,c`` or ``log:lo:hi:n`` (base-10 exponents)."""
    try:
        if text.startswith("log:"):
            _, lo, hi, n = text.split(":")
            return [float(v) for v in np.logspace(float(lo), float(hi), int(n))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse grid {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse integer grid {text!r}") from None


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--scenarios", help="JSON scenario file (overrides the config)")
    common.add_argument("--preset", choices=["toaster-vs-nothing", "toaster-vs-kettle", "six-devices"],
                        help="built-in stand-in scenarios")
    common.add_argument("--sigma2", type=_floats, help="noise variance: v, a,b,c or log:lo:hi:n")
    common.add_argument("--covariance", help="CSV file with a full noise covariance")
    common.add_argument("--samples", type=int, help="Monte-Carlo sample count")
    common.add_argument("--seed", type=_seed, help="64-bit Monte-Carlo seed")
    common.add_argument("--workers", type=int, help="threads for Monte-Carlo chunks")
    common.add_argument("--prior", type=_floats, help="comma-separated scenario prior weights")
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--format", choices=["csv", "json"], help="output format")

    parser = _ArgumentParser(prog="nilm-limits",
                             description="Upper bounds on load-disaggregation success under Gaussian noise.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)
    sub.add_parser("pairwise", parents=[common], help="two-scenario MAP success, closed form and MC")
    sub.add_parser("nway", parents=[common], help="N-scenario MAP success at one noise level")
    sub.add_parser("noise-sweep", parents=[common], help="two-scenario success versus sigma^2")
    p = sub.add_parser("rate-sweep", parents=[common], help="two-scenario success versus decimation")
    p.add_argument("--decimation", type=_ints, help="comma-separated K values")
    sub.add_parser("nway-sweep", parents=[common], help="per-scenario success versus sigma^2")
    p = sub.add_parser("magnitude-sweep", parents=[common], help="linear-system bound versus U")
    p.add_argument("--magnitudes", type=_floats, help="U grid")
    p.add_argument("--prior-null", type=float, help="prior probability of the zero input")
    p.add_argument("--system-matrix", help="CSV file with the system matrix")
    p = sub.add_parser("np-threshold", parents=[common], help="Neyman-Pearson threshold for a miss cap")
    p.add_argument("--beta", type=float, required=True, help="allowed miss probability")
    p = sub.add_parser("eval-estimator", parents=[common], help="score a fixed decision rule")
    p.add_argument("--estimator", default="nearest-mean",
                   choices=["map", "nearest-mean", "constant", "coin-flip", "energy"])
    return parser


def _config(args) -> ex.ExperimentConfig:
    overrides = {
        "sigma2": args.sigma2, "covariance": args.covariance, "samples": args.samples,
        "seed": args.seed, "workers": args.workers, "prior": args.prior,
        "out": args.out, "format": args.format,
        "decimation": getattr(args, "decimation", None),
        "magnitudes": getattr(args, "magnitudes", None),
        "prior_null": getattr(args, "prior_null", None),
        "system_matrix": getattr(args, "system_matrix", None),
        "scenarios": args.scenarios, "preset": args.preset,
    }
    if args.config:
        return ex.load_config(args.config, overrides)
    if args.scenarios is None and args.preset is None:
        overrides["preset"] = DEFAULT_PRESETS[args.command]
    return ex.config_from_mapping({}, ".", overrides)


def builtin_estimator(name: str, cfg: ex.ExperimentConfig, noise, prior, seed: int):
    """Batched decision rules used to illustrate that nothing beats the MAP."""
    M = np.vstack([m.mean for m in cfg.means()])
    if name == "map":
        return map_decision(M, prior, noise)
    if name == "nearest-mean":
        return lambda Y: np.argmin(((Y[:, None, :] - M[None]) ** 2).sum(-1), axis=1)
    if name == "constant":
        return lambda Y: np.zeros(len(Y), dtype=int)
    if name == "coin-flip":
        rng = np.random.default_rng(seed)
        return lambda Y: rng.integers(0, len(M), size=len(Y))
    if name == "energy":
        energy = (M ** 2).sum(axis=1)
        return lambda Y: np.argmin(np.abs((Y ** 2).sum(axis=1)[:, None] - energy[None]), axis=1)
    raise ConfigError(f"unknown estimator {name!r}")


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(args) -> tuple[str, str | None]:
    """Execute one subcommand; returns the rendered output and its destination."""
    cfg = _config(args)
    cmd = args.command
    if cmd == "noise-sweep":
        table = ex.run_noise_sweep(cfg)
    elif cmd == "pairwise":
        table = ex.pairwise_table(cfg)
    elif cmd == "rate-sweep":
        table = ex.run_rate_sweep(cfg)
    elif cmd == "nway-sweep":
        table = ex.run_nway_sweep(cfg)
    elif cmd == "nway":
        s2 = cfg.sigma2_grid()[0] if cfg.sigma2 else 1.0
        table = ex.run_nway_sweep(replace(cfg, sigma2=(s2,)))
        table.metadata["command"] = "nway"
    elif cmd == "magnitude-sweep":
        table = ex.run_magnitude_sweep(cfg)
    elif cmd == "np-threshold":
        means = cfg.means()
        if len(means) != 2:
            raise ConfigError("np-threshold needs exactly two scenarios")
        s2 = cfg.fixed_sigma2()
        rule = np_threshold(means[0], means[1], cfg.noise_for(s2), args.beta)
        doc = {"beta": args.beta, "sigma2": s2, "log_threshold": rule.log_threshold,
               "threshold": rule.threshold, "miss_probability": rule.miss_probability,
               "false_alarm_probability": rule.false_alarm_probability,
               "rule": rule.describe()}
        if cfg.format == "json":
            return json.dumps(doc, indent=2, sort_keys=True) + "\n", cfg.out
        keys = list(doc)
        return ",".join(keys) + "\n" + ",".join(
            repr(doc[k]) if isinstance(doc[k], float) else f'"{doc[k]}"' if k == "rule" else str(doc[k])
            for k in keys) + "\n", cfg.out
    elif cmd == "eval-estimator":
        means = cfg.means()
        prior = cfg.prior_for(len(means))
        s2 = cfg.fixed_sigma2()
        noise = cfg.noise_for(s2)
        rule = builtin_estimator(args.estimator, cfg, noise, prior, cfg.mc.seed)
        est = evaluate_estimator(rule, means, prior, noise, cfg.mc, batched=True)
        best = nway_success_probability(means, prior, noise, cfg.mc).overall
        table = ex.SweepTable([ex.SweepRow.estimated(s2, est, series=args.estimator),
                               ex.SweepRow.estimated(s2, best, series="map-bound")],
                              cfg.metadata("eval-estimator"))
    else:  # pragma: no cover - argparse restricts the choices
        raise ConfigError(f"unknown command {cmd!r}")
    return table.render(cfg.format), cfg.out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, out = run(args)
        _emit(text, out)
    except NumericalError as exc:
        print(f"nilm-limits: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, OSError) as exc:
        print(f"nilm-limits: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
