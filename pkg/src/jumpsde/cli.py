"""Command-line entry point wiring config files to the library and reports.

Commands: validate, simulate, convergence, positivity, moments. Configuration
comes from a preset or a config file (flat key=value blocks), optionally
overridden by flags; the JUMPSDE_SEED environment variable outranks both for
the seed. Exit codes: 0 success, 1 validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .harness import (
    PathFailure,
    moment_probe,
    positivity_table,
    strong_error_ladder,
)
from .mesh import MeshError
from .model import (
    InvalidModelError,
    JumpCoefficient,
    ModelParams,
    Regime,
    make_jump,
    one_sided_lipschitz,
    validate_jump,
    validate_params,
)
from .paths import generate_bundle
from .reports import (
    write_convergence_reports,
    write_mesh_csv,
    write_moment_report,
    write_positivity_report,
    write_trajectory_csv,
)
from .solver import SolverConfig, SolverError, step_size_diagnostics, tjabem_path

__all__ = ["ExperimentConfig", "load_config", "main"]

PRESET_NAMES = ("set1", "set2")
ENV_SEED = "JUMPSDE_SEED"
FAST_N_PATHS = 1000
# default positivity sweep: contracting, expanding, and oscillating jumps
POSITIVITY_JUMPS = (("linear", -0.5), ("linear", 0.5), ("sine", 1.0))
DEFAULT_P_LIST = (1.0, 2.0, -1.0, -2.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment configuration."""

    params: ModelParams
    jump: JumpCoefficient
    scheme: str
    m_list: tuple[int, ...]
    m_ref: int
    n_paths: int
    global_seed: int
    parallelism: int
    fast_mode: bool
    out_dir: str
    formats: tuple[str, ...]

    def echo(self) -> dict:
        """Result-affecting fields only; parallelism and paths are execution detail."""
        return {
            "model": {
                "alpha_m1": self.params.alpha_m1,
                "alpha0": self.params.alpha0,
                "alpha1": self.params.alpha1,
                "alpha2": self.params.alpha2,
                "alpha3": self.params.alpha3,
                "gamma": self.params.gamma,
                "rho": self.params.rho,
                "lambda": self.params.lam,
                "x0": self.params.x0,
                "T": self.params.T,
            },
            "jump": self.jump.label,
            "scheme": self.scheme,
            "ladder": {"m_list": list(self.m_list), "m_ref": self.m_ref},
            "n_paths": self.n_paths,
            "global_seed": self.global_seed,
            "fast_mode": self.fast_mode,
        }


def _preset_path(name: str) -> Path:
    if name not in PRESET_NAMES:
        raise InvalidModelError(
            f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"
        )
    return Path(str(resources.files("jumpsde").joinpath(f"presets/{name}.cfg")))


def load_config(path: Path) -> ExperimentConfig:
    """Parse a block-structured key=value config file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = parser.read(path)
    if not read:
        raise InvalidModelError(f"config file not found: {path}")
    try:
        model = parser["model"]
        params = ModelParams(
            alpha_m1=model.getfloat("alpha_m1"),
            alpha0=model.getfloat("alpha0"),
            alpha1=model.getfloat("alpha1"),
            alpha2=model.getfloat("alpha2"),
            alpha3=model.getfloat("alpha3"),
            gamma=model.getfloat("gamma"),
            rho=model.getfloat("rho"),
            lam=model.getfloat("lambda"),
            x0=model.getfloat("x0"),
            T=model.getfloat("T"),
        )
        jump_section = parser["jump"]
        family = jump_section.get("family", "zero").strip()
        param = jump_section.getfloat("param", fallback=None)
        jump = make_jump(family, param)
        scheme = parser.get("scheme", "scheme", fallback="tjabem").strip().lower()
        ladder = parser["ladder"]
        m_list = tuple(
            int(tok) for tok in ladder.get("m_list").replace(",", " ").split()
        )
        m_ref = ladder.getint("m_ref")
        n_paths = parser.getint("run", "n_paths", fallback=5000)
        global_seed = parser.getint("run", "global_seed", fallback=0)
        parallelism = parser.getint("run", "parallelism", fallback=1)
        fast_mode = parser.getboolean("run", "fast_mode", fallback=False)
        out_dir = parser.get("output", "directory", fallback="out")
        formats = parser.get("output", "formats", fallback="csv, json")
    except (KeyError, configparser.Error, TypeError, ValueError) as exc:
        raise InvalidModelError(f"malformed config {path}: {exc}") from exc

    return ExperimentConfig(
        params=params,
        jump=jump,
        scheme=scheme,
        m_list=m_list,
        m_ref=m_ref,
        n_paths=n_paths,
        global_seed=global_seed,
        parallelism=parallelism,
        fast_mode=fast_mode,
        out_dir=out_dir,
        formats=tuple(tok.strip() for tok in formats.split(",") if tok.strip()),
    )


def _parse_jump_flag(spec: str) -> JumpCoefficient:
    family, _, raw = spec.partition(":")
    param = float(raw) if raw else None
    return make_jump(family, param)


def _resolve(args: argparse.Namespace) -> ExperimentConfig:
    """Merge preset/config file with flag and environment overrides."""
    if getattr(args, "config", None):
        config = load_config(Path(args.config))
    else:
        config = load_config(_preset_path(getattr(args, "preset", None) or "set1"))
    if getattr(args, "h", None):
        config = replace(config, jump=_parse_jump_flag(args.h))
    if getattr(args, "lam", None) is not None:
        config = replace(config, params=replace(config.params, lam=args.lam))
    if getattr(args, "scheme", None):
        config = replace(config, scheme=args.scheme)
    if getattr(args, "seed", None) is not None:
        config = replace(config, global_seed=args.seed)
    if os.environ.get(ENV_SEED):
        config = replace(config, global_seed=int(os.environ[ENV_SEED]))
    if getattr(args, "out", None):
        config = replace(config, out_dir=args.out)
    if getattr(args, "fast", False):
        half = config.m_list[: max(2, math.ceil(len(config.m_list) / 2))]
        config = replace(
            config, n_paths=FAST_N_PATHS, m_list=half, fast_mode=True
        )
    return config


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="path to a config file")
    sub.add_argument("--preset", help="bundled preset name (set1 or set2)")
    sub.add_argument("--h", help="jump coefficient as family:param, e.g. linear:-0.5")
    sub.add_argument("--lambda", dest="lam", type=float, help="jump intensity override")
    sub.add_argument(
        "--scheme", choices=("tjabem", "bem", "both"), help="scheme selection"
    )
    sub.add_argument("--seed", type=int, help="global seed override")
    sub.add_argument("--fast", action="store_true", help="1000 paths, halved ladder")
    sub.add_argument("--out", help="output directory")


def cmd_validate(config: ExperimentConfig) -> int:
    """Print the validation gates; exit 0 only if every gate passes."""
    try:
        check = validate_params(config.params)
    except InvalidModelError as exc:
        print(f"FAIL parameter gate: {exc}")
        return 1
    print(f"regime: {check.regime.value}")
    if check.critical_moment_cap is not None:
        print(f"critical moment cap: {check.critical_moment_cap!r}")

    try:
        bounds = validate_jump(config.jump, config.params)
    except InvalidModelError as exc:
        print(f"FAIL jump gate: {exc}")
        return 1
    print(
        f"jump {config.jump.label}: mu={bounds.mu!r} r={bounds.r!r} "
        f"band=[{bounds.mu1!r}, {bounds.mu2!r}]"
        + (" (sampled only)" if bounds.sampled else "")
    )
    if not bounds.band_positive:
        print(
            "warning: transform band not bounded away from zero; convergence "
            "theory unavailable (positivity unaffected)"
        )

    q = one_sided_lipschitz(config.params)
    print(f"Q: {q!r}")
    cfg = SolverConfig()
    for m in config.m_list:
        q_dt = q * config.params.T / m
        status = "ok" if q_dt <= cfg.step_safety else "FAIL"
        print(f"M={m}: Q*dt={q_dt!r} {status}")
        if q_dt > cfg.step_safety:
            print(
                f"FAIL step-size gate: Q*dt = {q_dt} exceeds step_safety "
                f"{cfg.step_safety} at M={m}"
            )
            return 1

    if check.regime is Regime.SUPERCRITICAL:
        gamma, rho = config.params.gamma, config.params.rho
        eps_max = 2.0 * (gamma + 1.0 - 2.0 * rho) / (3.0 * rho * (gamma - 1.0))
        epsilon = eps_max / 2.0
        diag = step_size_diagnostics(
            config.params, q, config.params.T / config.m_list[0], epsilon
        )
        print(
            f"small-step diagnostics (epsilon={epsilon!r}): "
            f"power_condition={diag.power_condition_ok} "
            f"epsilon_condition={diag.epsilon_condition_ok} (advisory)"
        )
    print("all gates passed")
    return 0


def cmd_simulate(config: ExperimentConfig, path_index: int, mesh_only: bool) -> int:
    """Write one trajectory (or just its mesh) for inspection."""
    validate_params(config.params)
    validate_jump(config.jump, config.params)
    m = config.m_list[0]
    bundle = generate_bundle(config.params, m, config.global_seed, path_index)
    out_dir = Path(config.out_dir)
    if mesh_only:
        path = write_mesh_csv(bundle.fine_mesh, out_dir / "mesh.csv")
        print(f"wrote {path}")
        return 0
    trajectory, x_terminal = tjabem_path(
        config.params, config.jump, bundle.fine_mesh, bundle.dw_fine
    )
    path = write_trajectory_csv(config.params, trajectory, out_dir / "trajectory.csv")
    print(f"wrote {path} (terminal x = {x_terminal!r})")
    return 0


def cmd_convergence(config: ExperimentConfig) -> int:
    validate_params(config.params)
    validate_jump(config.jump, config.params)
    reports = strong_error_ladder(
        config.params,
        config.jump,
        config.scheme,
        config.m_list,
        config.m_ref,
        config.n_paths,
        config.global_seed,
        parallelism=config.parallelism,
    )
    written = write_convergence_reports(
        reports, Path(config.out_dir), config.echo(), config.formats
    )
    for name, report in reports.items():
        print(
            f"{name}: slope={report.slope:.4f} r_squared={report.r_squared:.4f} "
            f"({report.n_paths} paths)"
        )
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_positivity(args: argparse.Namespace) -> int:
    preset_names = [
        tok.strip() for tok in (args.presets or "set1,set2").split(",") if tok.strip()
    ]
    configs = []
    for name in preset_names:
        if name in PRESET_NAMES:
            ns = argparse.Namespace(**{**vars(args), "preset": name, "config": None})
        else:
            # allow config file paths alongside bundled preset names
            ns = argparse.Namespace(**{**vars(args), "preset": None, "config": name})
            name = Path(name).stem
        configs.append((name, _resolve(ns)))
    base = configs[0][1]
    if args.h:
        jumps = [_parse_jump_flag(args.h)]
    else:
        jumps = [make_jump(f, p) for f, p in POSITIVITY_JUMPS]
    dt_list = [base.params.T / m for m in base.m_list[:3]]
    report = positivity_table(
        [(name, cfg.params) for name, cfg in configs],
        jumps,
        dt_list,
        base.params.lam,
        base.n_paths,
        base.global_seed,
        parallelism=base.parallelism,
    )
    written = write_positivity_report(
        report, Path(base.out_dir), base.echo(), base.formats
    )
    worst = max((cell.percent for cell in report.cells), default=0.0)
    print(f"{len(report.cells)} cells, max nonpositive percent = {worst!r}")
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_moments(config: ExperimentConfig, p_list: tuple[float, ...]) -> int:
    report = moment_probe(
        config.params,
        config.jump,
        config.m_list[0],
        config.n_paths,
        p_list,
        config.global_seed,
        parallelism=config.parallelism,
    )
    written = write_moment_report(
        report, Path(config.out_dir), config.echo(), config.formats
    )
    for row in report.rows:
        print(
            f"p={row.p:g}: sup={row.sup_moment!r} (se {row.sup_stderr:.3g}) "
            f"terminal={row.terminal_moment!r} (se {row.terminal_stderr:.3g})"
        )
    for path in written:
        print(f"wrote {path}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jumpsde",
        description=(
            "Positivity-preserving implicit schemes and Monte Carlo experiments "
            "for a jump-extended mean-reverting interest-rate model"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check configuration gates")
    _add_common_flags(p_validate)

    p_simulate = sub.add_parser("simulate", help="dump one trajectory")
    _add_common_flags(p_simulate)
    p_simulate.add_argument("--path-index", type=int, default=0)
    p_simulate.add_argument(
        "--mesh-only", action="store_true", help="write only the mesh nodes"
    )

    p_conv = sub.add_parser("convergence", help="strong-error ladder and order fit")
    _add_common_flags(p_conv)

    p_pos = sub.add_parser("positivity", help="nonpositive-value table")
    _add_common_flags(p_pos)
    p_pos.add_argument(
        "--presets", help="comma-separated preset list (default set1,set2)"
    )

    p_mom = sub.add_parser("moments", help="empirical moment table")
    _add_common_flags(p_mom)
    p_mom.add_argument(
        "--p-list",
        default=",".join(str(p) for p in DEFAULT_P_LIST),
        help="comma-separated moment orders",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "positivity":
            return cmd_positivity(args)
        config = _resolve(args)
        if args.command == "validate":
            return cmd_validate(config)
        if args.command == "simulate":
            return cmd_simulate(config, args.path_index, args.mesh_only)
        if args.command == "convergence":
            return cmd_convergence(config)
        if args.command == "moments":
            p_list = tuple(float(tok) for tok in args.p_list.split(",") if tok.strip())
            return cmd_moments(config, p_list)
        raise AssertionError(f"unhandled command {args.command}")
    except PathFailure as exc:
        print(
            f"runtime failure: {exc} (global_seed={exc.global_seed}, "
            f"path_index={exc.path_index})",
            file=sys.stderr,
        )
        return 2
    except (InvalidModelError, MeshError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 1
    except SolverError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
