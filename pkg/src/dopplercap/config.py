"""Sweep configuration: spec dataclasses, INI config parsing, CSV schema.

A sweep is described either programmatically (SweepSpec) or by a flat
key/value config file with sections ([channel], [sweep], [mc], [scheme],
[output]); every key can be overridden by a CLI flag. The CSV column
layout is fixed and byte-stable: identical specs (seeds included) produce
identical files regardless of worker count.
"""

from dataclasses import dataclass, field
import configparser
import math

from .montecarlo import MCConfig
from .ofdm import MultipathProfile

CSV_HEADER = ("snr_db,sigma,n,bound_name,rate_nats,rate_bits,stderr_nats,"
              "n_samples,tap_seed,mc_seed,q_policy,wall_ms,certified")

KNOWN_BOUNDS = ("gaussian_optimal", "gaussian_linear", "sa_pilot",
                "sa_superposition", "ub_logdet", "ub_dof", "ub_general")

SNR_PER_SUBCARRIER = "per-subcarrier"   # P = N * 10^(snr/10)  (default)
SNR_TOTAL = "total"                     # P = 10^(snr/10)

NTN_SOURCE = "ntn_tdl_a"
SYNTHETIC_SOURCE = "synthetic_file"


class ConfigError(ValueError):
    """Invalid sweep configuration (CLI exit code 1)."""


@dataclass(frozen=True)
class SweepSpec:
    snr_grid_db: tuple
    sigma_list: tuple
    n_subcarriers: int = 64
    bounds: tuple = ("gaussian_linear", "ub_logdet")
    channel_source: str = NTN_SOURCE
    tap_seed: int = 1
    mc_seed: int = 7
    mc: MCConfig = field(default_factory=lambda: MCConfig(n_samples=10_000,
                                                          seed=0))
    n_channel_realizations: int = 20
    snr_convention: str = SNR_PER_SUBCARRIER
    q_policy: str = "isotropic"          # or "optimized"
    rho_grid_points: int = 8
    f_file: str = None
    g_file: str = None
    timings: bool = False
    profile: MultipathProfile = None  # None -> built-in NTN-TDL-A

    def __post_init__(self):
        if not self.snr_grid_db or not self.sigma_list:
            raise ConfigError("snr and sigma grids must be nonempty")
        if not self.bounds:
            raise ConfigError("bound list must be nonempty")
        unknown = [b for b in self.bounds if b not in KNOWN_BOUNDS]
        if unknown:
            raise ConfigError(f"unknown bounds: {unknown}")
        if self.channel_source not in (NTN_SOURCE, SYNTHETIC_SOURCE):
            raise ConfigError(f"unknown channel source "
                              f"{self.channel_source!r}")
        if self.channel_source == SYNTHETIC_SOURCE and \
                not (self.f_file and self.g_file):
            raise ConfigError("synthetic_file source needs f_file and g_file")
        if self.snr_convention not in (SNR_PER_SUBCARRIER, SNR_TOTAL):
            raise ConfigError(f"unknown snr convention "
                              f"{self.snr_convention!r}")
        if self.q_policy not in ("isotropic", "optimized"):
            raise ConfigError(f"unknown q policy {self.q_policy!r}")
        if self.n_channel_realizations < 1:
            raise ConfigError("need at least one channel realization")
        object.__setattr__(self, "snr_grid_db",
                           tuple(float(v) for v in self.snr_grid_db))
        object.__setattr__(self, "sigma_list",
                           tuple(float(v) for v in self.sigma_list))
        object.__setattr__(self, "bounds", tuple(self.bounds))

    def power_for(self, snr_db):
        scale = self.n_subcarriers \
            if self.snr_convention == SNR_PER_SUBCARRIER else 1.0
        return scale * 10.0 ** (snr_db / 10.0)


@dataclass(frozen=True)
class ResultRow:
    snr_db: float
    sigma: float
    n: int
    bound_name: str
    rate_nats: float
    rate_bits: float
    stderr_nats: float
    n_samples: int
    tap_seed: int
    mc_seed: int
    q_policy: str
    wall_ms: int
    certified: bool

    def to_csv_line(self):
        return ",".join([
            _fmt(self.snr_db), _fmt(self.sigma), str(self.n),
            self.bound_name, _fmt(self.rate_nats), _fmt(self.rate_bits),
            _fmt(self.stderr_nats), str(self.n_samples), str(self.tap_seed),
            str(self.mc_seed), self.q_policy, str(self.wall_ms),
            "true" if self.certified else "false",
        ])


def _fmt(value):
    if value != value:  # nan
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.12g}"


def rows_to_csv(rows):
    lines = [CSV_HEADER]
    lines.extend(row.to_csv_line() for row in rows)
    return "\n".join(lines) + "\n"


def _parse_list(text, cast=float):
    return tuple(cast(tok) for tok in text.replace(",", " ").split())


def load_config(path):
    """Read an INI-style sweep config into a dict of raw option values."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file {path!r} not found")
    opts = {}
    mapping = {
        ("channel", "source"): ("channel_source", str),
        ("channel", "n_subcarriers"): ("n_subcarriers", int),
        ("channel", "tap_seed"): ("tap_seed", int),
        ("channel", "n_realizations"): ("n_channel_realizations", int),
        ("channel", "f_file"): ("f_file", str),
        ("channel", "g_file"): ("g_file", str),
        ("sweep", "snr_db"): ("snr_grid_db", _parse_list),
        ("sweep", "sigma"): ("sigma_list", _parse_list),
        ("sweep", "bounds"): ("bounds",
                              lambda t: _parse_list(t, cast=str)),
        ("sweep", "snr_convention"): ("snr_convention", str),
        ("sweep", "q_policy"): ("q_policy", str),
        ("scheme", "rho_grid_points"): ("rho_grid_points", int),
        ("mc", "samples"): ("mc_samples", int),
        ("mc", "seed"): ("mc_seed", int),
        ("mc", "batch"): ("mc_batch", int),
        ("output", "timings"): ("timings",
                                lambda t: t.strip().lower() == "real"),
    }
    for (section, key), (name, cast) in mapping.items():
        if parser.has_option(section, key):
            try:
                opts[name] = cast(parser.get(section, key))
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for [{section}] {key}") from exc
    if parser.has_section("profile"):
        try:
            opts["profile"] = MultipathProfile(
                normalized_delays=_parse_list(
                    parser.get("profile", "normalized_delays")),
                powers_db=_parse_list(parser.get("profile", "powers_db")),
                desired_rms_delay_spread_ns=parser.getfloat(
                    "profile", "rms_delay_spread_ns"),
            )
        except (ValueError, configparser.NoOptionError) as exc:
            raise ConfigError(f"bad [profile] section: {exc}") from exc
    return opts


def build_spec(options):
    """Assemble a SweepSpec from merged config/CLI options.

    The top-level mc_seed drives per-cell seed derivation; the inner
    MCConfig seed is a placeholder that run_sweep overwrites per cell.
    """
    opts = dict(options)
    mc = MCConfig(n_samples=opts.pop("mc_samples", 10_000), seed=0,
                  batch_size=opts.pop("mc_batch", 2048))
    opts.setdefault("snr_grid_db", (0.0, 10.0, 20.0, 30.0, 40.0))
    opts.setdefault("sigma_list", (0.1, 0.01))
    try:
        return SweepSpec(mc=mc, **opts)
    except TypeError as exc:
        raise ConfigError(f"bad sweep option: {exc}") from exc
