"""Command-line interface.

Subcommands:
  channel build     dump F, G and H(f_d) for a drawn NTN channel
  bounds sweep      evaluate a bound grid and write the results CSV
  precoder inspect  build the aligned precoder and report its residuals
  validate          run the built-in invariant suite
  figure            two-panel preset sweep (the CSV the plot frontend eats)

Exit codes: 0 success, 1 configuration error, 2 validation failure.
"""

import argparse
import json
import sys
import warnings

import numpy as np

from . import matio
from .alignment import build_precoder
from .config import (ConfigError, NTN_SOURCE, SYNTHETIC_SOURCE,
                     build_spec, load_config)
from .ofdm import build_ntn_channel, full_channel
from .sweep import sweep_to_csv
from .validate import all_passed, run_all


def _add_channel_opts(parser):
    # Defaults stay None so a config file value is only overridden by a
    # flag the user actually typed; SweepSpec supplies the real defaults.
    parser.add_argument("--n", type=int, default=None,
                        help="number of subcarriers (default 64)")
    parser.add_argument("--tap-seed", type=int, default=None)
    parser.add_argument("--source", choices=[NTN_SOURCE, SYNTHETIC_SOURCE],
                        default=None)
    parser.add_argument("--f-file", help="F matrix file (synthetic source)")
    parser.add_argument("--g-file", help="G matrix file (synthetic source)")


def _add_sweep_opts(parser):
    parser.add_argument("--config", help="INI sweep config; flags override")
    parser.add_argument("--snr", help="comma-separated SNR grid in dB")
    parser.add_argument("--sigma", help="comma-separated sigma list")
    parser.add_argument("--bounds", help="comma-separated bound names")
    parser.add_argument("--realizations", type=int,
                        help="tap realizations to average (default 20)")
    parser.add_argument("--mc-samples", type=int)
    parser.add_argument("--mc-seed", type=int)
    parser.add_argument("--q-policy", choices=["isotropic", "optimized"])
    parser.add_argument("--snr-convention",
                        choices=["per-subcarrier", "total"])
    parser.add_argument("--rho-grid-points", type=int)
    parser.add_argument("--timings", choices=["none", "real"],
                        help="real wall times break CSV byte-identity")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", help="CSV path (default: stdout)")


def _spec_from_args(args, defaults=None):
    opts = dict(defaults or {})
    if getattr(args, "config", None):
        opts.update(load_config(args.config))
    if args.snr:
        opts["snr_grid_db"] = tuple(float(v) for v in args.snr.split(","))
    if args.sigma:
        opts["sigma_list"] = tuple(float(v) for v in args.sigma.split(","))
    if args.bounds:
        opts["bounds"] = tuple(args.bounds.split(","))
    if args.realizations is not None:
        opts["n_channel_realizations"] = args.realizations
    if args.mc_samples is not None:
        opts["mc_samples"] = args.mc_samples
    if args.mc_seed is not None:
        opts["mc_seed"] = args.mc_seed
    if args.q_policy:
        opts["q_policy"] = args.q_policy
    if args.snr_convention:
        opts["snr_convention"] = args.snr_convention
    if args.rho_grid_points is not None:
        opts["rho_grid_points"] = args.rho_grid_points
    if args.timings:
        opts["timings"] = args.timings == "real"
    if getattr(args, "n", None) is not None:
        opts["n_subcarriers"] = args.n
    if getattr(args, "tap_seed", None) is not None:
        opts["tap_seed"] = args.tap_seed
    if getattr(args, "source", None):
        opts["channel_source"] = args.source
    if getattr(args, "f_file", None):
        opts["f_file"] = args.f_file
    if getattr(args, "g_file", None):
        opts["g_file"] = args.g_file
    return build_spec(opts)


def _emit_csv(csv_text, spec, out_path):
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(csv_text)
        meta = {
            "snr_grid_db": list(spec.snr_grid_db),
            "sigma_list": list(spec.sigma_list),
            "n_subcarriers": spec.n_subcarriers,
            "bounds": list(spec.bounds),
            "channel_source": spec.channel_source,
            "tap_seed": spec.tap_seed,
            "mc_seed": spec.mc_seed,
            "mc_samples": spec.mc.n_samples,
            "n_channel_realizations": spec.n_channel_realizations,
            "snr_convention": spec.snr_convention,
            "q_policy": spec.q_policy,
            "rho_grid_points": spec.rho_grid_points,
            "rates_in": "nats (rate_bits = rate_nats / ln 2)",
        }
        with open(out_path + ".meta", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {out_path} (+ .meta)")
    else:
        sys.stdout.write(csv_text)


def cmd_channel_build(args):
    rng = np.random.default_rng(np.random.SeedSequence((args.tap_seed, 0)))
    config, taps, lin = build_ntn_channel(args.n, rng)
    h_mat = full_channel(config, taps, args.fd)
    prefix = args.out_dir.rstrip("/") + "/"
    matio.save_matrix(prefix + "F.txt", lin.nominal)
    matio.save_matrix(prefix + "G.txt", lin.sensitivity)
    matio.save_matrix(prefix + "H.txt", h_mat)
    print(f"N={args.n} taps={len(taps)} cp={config.cp_length} "
          f"f_d={args.fd}: wrote F.txt G.txt H.txt to {args.out_dir}")
    return 0


def cmd_bounds_sweep(args):
    spec = _spec_from_args(args)
    csv_text = sweep_to_csv(spec, workers=args.workers)
    _emit_csv(csv_text, spec, args.out)
    return 0


def cmd_precoder_inspect(args):
    if args.source == SYNTHETIC_SOURCE:
        if not (args.f_file and args.g_file):
            raise ConfigError("synthetic source needs --f-file and --g-file")
        f_mat, g_mat = matio.load_channel_pair(args.f_file, args.g_file)
    else:
        tap_seed = args.tap_seed if args.tap_seed is not None else 1
        rng = np.random.default_rng(np.random.SeedSequence((tap_seed, 0)))
        _, _, lin = build_ntn_channel(args.n if args.n is not None else 64,
                                      rng)
        f_mat, g_mat = lin.nominal, lin.sensitivity
    pre = build_precoder(f_mat, g_mat)
    print(f"N={f_mat.shape[0]} d_perp={pre.d_perp}")
    for key, value in pre.residuals.items():
        print(f"  {key}: {value:.3e}")
    if args.dump_dir:
        prefix = args.dump_dir.rstrip("/") + "/"
        matio.save_matrix(prefix + "V.txt", pre.V)
        matio.save_matrix(prefix + "U.txt", pre.U)
        matio.save_matrix(prefix + "U_perp.txt", pre.U_perp)
        matio.save_matrix(prefix + "w.txt", pre.w.reshape(-1, 1))
        print(f"dumped V/U/U_perp/w to {args.dump_dir}")
    return 0


def cmd_validate(args):
    results = run_all(verbose=True)
    return 0 if all_passed(results) else 2


def cmd_figure(args):
    n_default = 1024 if args.full_scale else 64
    if args.full_scale:
        warnings.warn("full-scale N=1024 sweeps take hours", RuntimeWarning)
    defaults = {
        "snr_grid_db": (0.0, 10.0, 20.0, 30.0, 40.0),
        "sigma_list": (0.1, 0.01),
        "bounds": ("gaussian_optimal", "gaussian_linear", "sa_pilot",
                   "ub_logdet", "ub_dof"),
        "n_subcarriers": n_default,
        "n_channel_realizations": 5,
        "mc_samples": 4000,
        "rho_grid_points": 5,
    }
    spec = _spec_from_args(args, defaults=defaults)
    csv_text = sweep_to_csv(spec, workers=args.workers)
    _emit_csv(csv_text, spec, args.out)
    return 0


def make_parser():
    parser = argparse.ArgumentParser(
        prog="dopplercap",
        description="Achievable rates and capacity bounds for "
                    "Doppler-impaired OFDM channels")
    sub = parser.add_subparsers(dest="command", required=True)

    channel = sub.add_parser("channel", help="channel construction")
    channel_sub = channel.add_subparsers(dest="subcommand", required=True)
    build = channel_sub.add_parser("build", help="dump F, G, H(f_d)")
    build.add_argument("--n", type=int, default=64)
    build.add_argument("--tap-seed", type=int, default=1)
    build.add_argument("--fd", type=float, default=0.1,
                       help="normalized Doppler shift for H")
    build.add_argument("--out-dir", required=True)
    build.set_defaults(func=cmd_channel_build)

    bounds = sub.add_parser("bounds", help="bound evaluation")
    bounds_sub = bounds.add_subparsers(dest="subcommand", required=True)
    swp = bounds_sub.add_parser("sweep", help="run a bound sweep to CSV")
    _add_channel_opts(swp)
    _add_sweep_opts(swp)
    swp.set_defaults(func=cmd_bounds_sweep)

    precoder = sub.add_parser("precoder", help="aligned precoder tools")
    precoder_sub = precoder.add_subparsers(dest="subcommand", required=True)
    inspect = precoder_sub.add_parser("inspect",
                                      help="audit the Lemma-1 construction")
    _add_channel_opts(inspect)
    inspect.add_argument("--dump-dir")
    inspect.set_defaults(func=cmd_precoder_inspect)

    val = sub.add_parser("validate", help="run the invariant suite")
    val.set_defaults(func=cmd_validate)

    figure = sub.add_parser("figure",
                            help="emit the two-panel comparison CSV")
    _add_sweep_opts(figure)
    figure.add_argument("--full-scale", action="store_true",
                        help="N=1024 (long-running)")
    figure.add_argument("--tap-seed", type=int, default=None)
    figure.add_argument("--n", type=int, default=None)
    figure.set_defaults(func=cmd_figure)

    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
