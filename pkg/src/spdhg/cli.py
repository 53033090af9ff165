"""Experiment runner: config ingestion, gamma search, solver runs, and
CSV/image emission.

Configs are flat ``key=value`` text files ('#' starts a comment); any key
can be overridden on the command line with ``--key value``. Subcommands:

* ``run``      -- generate the instance, search gamma, run the requested
                  algorithms against a target, write convergence.csv,
                  images, and a manifest of every resolved parameter.
* ``validate`` -- dry run: build the instance, print block norms, check
                  the step-size condition over the whole gamma grid.
* ``oracle``   -- solve the quadratic model directly and print residuals.

Exit codes: 0 success, 1 config error, 2 divergence.
"""

import argparse
import dataclasses
import hashlib
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, backend, mri, oracle, solvers, theory

CSV_HEADER = ("run_id,algorithm,gamma,epoch,objective,relative_objective,"
              "distance_to_target,bregman_gap,wall_time_s,seed")

DEFAULT_GAMMA_GRID = tuple(10.0 ** k for k in range(-5, 6))


class ConfigError(ValueError):
    pass


@dataclasses.dataclass
class ExperimentConfig:
    rows: int = 64
    cols: int = 64
    n_coils: int = 4
    sampling_factor: float = 2.0
    mask_kind: str = "cartesian_lines"
    noise_sigma: float = 0.05
    regularizer: str = "l2"
    alpha: float = 1e-4
    seed: int = 0
    algorithms: tuple = ("spdhg", "pdhg")
    epochs: float = 100.0
    gamma_grid: tuple = DEFAULT_GAMMA_GRID
    gamma_search_epochs: float = 100.0
    log_every: float = 1.0
    target_mode: str = "oracle"
    target_epochs: float = 0.0  # 0 -> 10x epochs
    output_dir: str = "results"

    def mri_config(self):
        return mri.MriConfig(
            shape=(self.rows, self.cols), n_coils=self.n_coils,
            sampling_factor=self.sampling_factor, mask_kind=self.mask_kind,
            noise_sigma=self.noise_sigma, regularizer=self.regularizer,
            alpha=self.alpha, seed=self.seed)

    def resolved_target_epochs(self):
        return self.target_epochs if self.target_epochs > 0 else 10.0 * self.epochs


_PARSERS = {
    int: int,
    float: float,
    str: str,
}


def _parse_value(name, raw, current):
    raw = raw.strip()
    if name in ("algorithms",):
        algs = tuple(a.strip() for a in raw.split(",") if a.strip())
        bad = [a for a in algs if a not in ("pdhg", "spdhg")]
        if bad or not algs:
            raise ConfigError(f"algorithms: expected subset of pdhg,spdhg, got {raw!r}")
        return algs
    if name in ("gamma_grid",):
        try:
            grid = tuple(float(v) for v in raw.split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"gamma_grid: not a float list: {raw!r}") from None
        if not grid:
            raise ConfigError("gamma_grid: empty")
        return grid
    caster = _PARSERS[type(current)] if type(current) in _PARSERS else str
    try:
        return caster(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {caster.__name__}") from None


def load_config(path=None, overrides=()):
    """Build an ExperimentConfig from an optional file plus overrides."""
    config = ExperimentConfig()
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    items = []
    if path is not None:
        text = Path(path).read_text()
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, raw = line.split("=", 1)
            items.append((key.strip(), raw))
    items.extend(overrides)
    for key, raw in items:
        if key not in fields:
            raise ConfigError(f"unknown config key {key!r}")
        current = getattr(config, key)
        setattr(config, key, _parse_value(key, raw, current))
    _check(config)
    return config


def _check(config):
    if config.epochs <= 0:
        raise ConfigError("epochs must be > 0")
    if config.log_every <= 0:
        raise ConfigError("log_every must be > 0")
    if config.target_mode not in ("oracle", "long_run"):
        raise ConfigError(f"unknown target_mode {config.target_mode!r}")
    if config.target_mode == "long_run" and \
            config.resolved_target_epochs() <= config.epochs:
        raise ConfigError("long_run target epochs must exceed run epochs")
    if config.target_mode == "oracle" and config.regularizer == "tv":
        raise ConfigError(
            "no closed-form target for the tv model; use target_mode=long_run")
    try:
        config.mri_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _fmt(value):
    if value is None:
        return ""
    return repr(float(value))


def write_csv(path, rows):
    lines = [CSV_HEADER]
    for run_id, rec in rows:
        lines.append(",".join([
            run_id, rec.algorithm, _fmt(rec.gamma), _fmt(rec.epoch),
            _fmt(rec.objective), _fmt(rec.relative_objective),
            _fmt(rec.distance_to_target), _fmt(rec.bregman_gap),
            _fmt(rec.wall_time_s), str(rec.seed)]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_image(image, stem):
    """Write the magnitude of a complex image as raw float32 + PGM.

    Produces ``<stem>.f32`` (little-endian float32, row-major), a
    ``<stem>.meta`` sidecar with shape and range, and ``<stem>.pgm``
    (8-bit P5) with the magnitude linearly rescaled to [0, 255]; a
    constant positive image maps to 255, a zero image to 0.
    """
    stem = Path(stem)
    mag = np.abs(np.asarray(image)).astype("<f4")
    lo, hi = float(mag.min()), float(mag.max())
    try:
        stem.with_suffix(".f32").write_bytes(mag.tobytes())
        stem.with_suffix(".meta").write_text(
            f"shape={mag.shape[0]} {mag.shape[1]}\n"
            f"dtype=float32-le\nmin={lo!r}\nmax={hi!r}\n")
        if hi > lo:
            pix = np.round((mag - lo) / (hi - lo) * 255.0).astype(np.uint8)
        else:
            pix = np.full(mag.shape, 255 if hi > 0 else 0, dtype=np.uint8)
        header = f"P5\n{mag.shape[1]} {mag.shape[0]}\n255\n".encode()
        stem.with_suffix(".pgm").write_bytes(header + pix.tobytes())
    except OSError as exc:
        raise OSError(f"writing image {stem}: {exc}") from exc


def _build_target(config, problem, gamma_spdhg):
    if config.target_mode == "oracle":
        x_hat, y_hat = oracle.solve_quadratic(problem)
        return solvers.Target(x=x_hat, saddle=(x_hat, y_hat)), "oracle"
    steps = solvers.compute_step_sizes(problem, gamma_spdhg, "spdhg")
    records, state = solvers.run(
        problem, "spdhg", steps, config.resolved_target_epochs(),
        log_every=config.resolved_target_epochs(), seed=config.seed)
    return solvers.Target(x=state.x), f"long_run({config.resolved_target_epochs():g})"


def run_experiment(config):
    """Execute the full experiment; returns a summary dict.

    Deterministic given the config: the CSV's numeric content is
    reproducible except for the wall_time_s measurement column.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    problem, x_true, _ = mri.assemble_problem(config.mri_config())
    mask_idx = problem.operators[0].ops[0].indices

    searches = {}
    for algorithm in config.algorithms:
        searches[algorithm] = solvers.gamma_search(
            problem, algorithm, config.gamma_grid, config.gamma_search_epochs,
            seed=config.seed, log_every=config.gamma_search_epochs)
    gamma_for_target = searches.get("spdhg", searches[config.algorithms[0]])[0]
    target, target_desc = _build_target(config, problem, gamma_for_target)

    csv_rows = []
    final_states = {}
    chosen = {}
    for algorithm in config.algorithms:
        gamma_star, _ = searches[algorithm]
        chosen[algorithm] = gamma_star
        steps = solvers.compute_step_sizes(problem, gamma_star, algorithm)
        records, state = solvers.run(
            problem, algorithm, steps, config.epochs, target=target,
            log_every=config.log_every, seed=config.seed)
        final_states[algorithm] = state
        csv_rows.extend((algorithm, rec) for rec in records)

    write_csv(out / "convergence.csv", csv_rows)
    write_image(x_true, out / "ground_truth")
    write_image(target.x, out / "target")
    for algorithm, state in final_states.items():
        write_image(state.x, out / f"recon_{algorithm}")

    manifest = {
        "version": __version__,
        "backend": backend.BACKEND,
        **{f.name: getattr(config, f.name) for f in dataclasses.fields(config)},
        "gamma_grid": ",".join(f"{g:g}" for g in config.gamma_grid),
        "algorithms": ",".join(config.algorithms),
        "target": target_desc,
        "target_epochs_resolved": config.resolved_target_epochs()
        if config.target_mode == "long_run" else "",
        "mask_size": mask_idx.size,
        "mask_sha256": hashlib.sha256(np.ascontiguousarray(mask_idx).tobytes()).hexdigest(),
        "block_norms": ",".join(f"{v!r}" for v in problem.block_norms),
        "full_norm": repr(problem.full_norm),
        **{f"gamma_star_{alg}": f"{g:g}" for alg, g in chosen.items()},
        "wall_time_s": f"{time.perf_counter() - t0:.3f}",
    }
    (out / "manifest.txt").write_text(
        "".join(f"{k}={v}\n" for k, v in manifest.items()))
    return {"output_dir": out, "gamma_star": chosen,
            "csv": out / "convergence.csv"}


def cmd_run(config):
    summary = run_experiment(config)
    print(f"wrote {summary['csv']}")
    for alg, gamma in summary["gamma_star"].items():
        print(f"{alg}: gamma* = {gamma:g}")
    return 0


def cmd_validate(config):
    problem, _, _ = mri.assemble_problem(config.mri_config())
    print(f"blocks: {problem.n_blocks}")
    for i, v in enumerate(problem.block_norms):
        print(f"  ||A_{i}|| <= {v:.6g}")
    print(f"  ||A|| <= {problem.full_norm:.6g}")
    bad = 0
    for algorithm in config.algorithms:
        for gamma in config.gamma_grid:
            steps = solvers.compute_step_sizes(problem, gamma, algorithm)
            violations = solvers.validate_step_sizes(problem, steps)
            for v in violations:
                print(f"{algorithm} gamma={gamma:g}: VIOLATION {v}")
                bad += 1
    if bad:
        print(f"step-size condition violated ({bad} cases)")
        return 1
    print("step-size condition satisfied for all algorithms and gammas")
    return 0


def cmd_oracle(config):
    if config.regularizer != "l2":
        print("oracle: closed-form solve needs the l2 model", file=sys.stderr)
        return 1
    problem, x_true, _ = mri.assemble_problem(config.mri_config())
    x_hat, y_hat = oracle.solve_quadratic(problem)
    steps = solvers.compute_step_sizes(problem, 1.0, "spdhg")
    resid = theory.saddle_residual(problem, steps, (x_hat, y_hat))
    print(f"objective at x_hat: {problem.objective(x_hat):.9g}")
    print(f"fixed-point residual: {resid:.3e}")
    print(f"distance to ground truth: {np.linalg.norm(x_hat - x_true):.6g}")
    return 0


class _Parser(argparse.ArgumentParser):
    # usage problems are config errors (exit 1), not argparse's exit 2
    def error(self, message):
        raise ConfigError(message)


def _parse_args(argv):
    parser = _Parser(
        prog="spdhg", description="Primal-dual MRI reconstruction experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "validate", "oracle"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key=value config file")
    known, extra = parser.parse_known_args(argv)
    overrides = []
    i = 0
    while i < len(extra):
        token = extra[i]
        if not token.startswith("--") or i + 1 >= len(extra):
            parser.error(f"expected --key value pairs, got {token!r}")
        overrides.append((token[2:], extra[i + 1]))
        i += 2
    return known, overrides


def main(argv=None):
    try:
        args, overrides = _parse_args(argv if argv is not None else sys.argv[1:])
        config = load_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    handler = {"run": cmd_run, "validate": cmd_validate, "oracle": cmd_oracle}
    try:
        return handler[args.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except solvers.DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        if "diverged" in str(exc):
            print(f"divergence: {exc}", file=sys.stderr)
            return 2
        raise


if __name__ == "__main__":
    sys.exit(main())
