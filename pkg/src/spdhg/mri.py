"""Synthetic parallel-MRI instances.

Builds a piecewise-constant ellipse phantom, smooth complex coil
sensitivities, a k-space subsampling mask, and noisy per-coil data
``b_i = A_i x + noise`` with ``A_i = mask o dft2 o coil_i``, then
assembles everything into a saddle-point problem. The DFT stage uses the
centered (fftshift) convention so that the mask's central rows are the
low spatial frequencies.
"""

import dataclasses
import math

import numpy as np

from . import linops, prox, solvers

__all__ = [
    "MriConfig",
    "make_phantom",
    "make_coil_maps",
    "make_mask",
    "synthesize_data",
    "assemble_problem",
]

# Fraction of k-space rows that is always fully sampled (low frequencies)
# by the cartesian_lines mask.
CENTER_FRACTION = 0.08

# (intensity, half-axis a, half-axis b, center x, center y, angle in deg)
# on the [-1, 1]^2 square; the usual head-phantom ellipse table with
# intensities that keep the sum inside [0, 1].
_ELLIPSES = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    (-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0),
    (-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0),
    (0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0),
    (0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0),
    (0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0),
    (0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0),
]


@dataclasses.dataclass(frozen=True)
class MriConfig:
    shape: tuple = (64, 64)
    n_coils: int = 4
    sampling_factor: float = 2.0
    mask_kind: str = "cartesian_lines"
    noise_sigma: float = 0.05
    regularizer: str = "l2"
    alpha: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.n_coils < 1:
            raise ValueError("n_coils must be >= 1")
        if self.sampling_factor < 1:
            raise ValueError("sampling_factor must be >= 1")
        if self.mask_kind not in ("cartesian_lines", "uniform_random"):
            raise ValueError(f"unknown mask_kind {self.mask_kind!r}")
        if self.regularizer not in ("l2", "tv"):
            raise ValueError(f"unknown regularizer {self.regularizer!r}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


def make_phantom(shape):
    """Deterministic piecewise-constant ellipse phantom in [0, 1].

    Real-valued, nonzero on an interior head-shaped region, zero near
    the border. Needs at least an 8 x 8 grid.
    """
    rows, cols = shape
    if rows < 8 or cols < 8:
        raise ValueError(f"phantom grid must be at least 8 x 8, got {shape}")
    yy = np.linspace(-1.0, 1.0, rows)[:, None]
    xx = np.linspace(-1.0, 1.0, cols)[None, :]
    img = np.zeros((rows, cols))
    for level, a, b, x0, y0, angle in _ELLIPSES:
        phi = math.radians(angle)
        u = (xx - x0) * math.cos(phi) + (yy - y0) * math.sin(phi)
        v = -(xx - x0) * math.sin(phi) + (yy - y0) * math.cos(phi)
        img[(u / a) ** 2 + (v / b) ** 2 <= 1.0] += level
    return np.clip(img, 0.0, 1.0).astype(np.complex128)


def make_coil_maps(shape, n_coils, seed=0):
    """Smooth complex coil sensitivities.

    Gaussian-bump magnitudes centered at equally spaced angles around the
    grid, each with a random linear phase ramp; jointly normalized so the
    pointwise sum of squared moduli peaks at 1.
    """
    if n_coils < 1:
        raise ValueError("n_coils must be >= 1")
    rows, cols = shape
    rng = np.random.default_rng(seed)
    yy = np.linspace(-1.0, 1.0, rows)[:, None]
    xx = np.linspace(-1.0, 1.0, cols)[None, :]
    angle0 = rng.uniform(0.0, 2.0 * np.pi)
    maps = []
    for i in range(n_coils):
        theta = angle0 + 2.0 * np.pi * i / n_coils
        cx, cy = 0.9 * math.cos(theta), 0.9 * math.sin(theta)
        mag = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * 1.0 ** 2))
        ax, ay, phi0 = rng.uniform(-np.pi, np.pi, size=3)
        maps.append(mag * np.exp(1j * (ax * xx + ay * yy + phi0)))
    total = np.sum([np.abs(m) ** 2 for m in maps], axis=0)
    scale = 1.0 / np.sqrt(total.max())
    return [scale * m for m in maps]


def make_mask(shape, sampling_factor, mask_kind, seed=0):
    """Sorted raveled k-space indices retained by the mask.

    ``uniform_random`` draws ``m = floor(d / sampling_factor)`` indices
    without replacement. ``cartesian_lines`` keeps whole rows: the
    central 8% of rows (the low frequencies, in the centered-spectrum
    convention) always, plus uniformly random further rows until about m
    indices are kept (rounded to whole rows).
    """
    rows, cols = shape
    d = rows * cols
    m = int(d // sampling_factor)
    if m < 1:
        raise ValueError(
            f"sampling_factor {sampling_factor} leaves no samples on {shape}")
    rng = np.random.default_rng(seed)
    if mask_kind == "uniform_random":
        idx = rng.choice(d, size=m, replace=False)
        return np.sort(idx)
    if mask_kind != "cartesian_lines":
        raise ValueError(f"unknown mask_kind {mask_kind!r}")
    n_center = math.ceil(CENTER_FRACTION * rows)
    first = rows // 2 - n_center // 2
    center_rows = np.arange(first, first + n_center)
    n_rows = max(n_center, int(round(m / cols)))
    n_rows = min(n_rows, rows)
    others = np.setdiff1d(np.arange(rows), center_rows)
    extra = rng.choice(others, size=n_rows - n_center, replace=False)
    selected = np.sort(np.concatenate([center_rows, extra]))
    idx = (selected[:, None] * cols + np.arange(cols)[None, :]).ravel()
    return np.sort(idx)


def synthesize_data(x_true, operators, noise_sigma, seed=0):
    """Noisy measurements ``b_i = A_i x + eta_i``.

    The noise is i.i.d. complex Gaussian, independent across coils, with
    standard deviation ``noise_sigma`` per real component.
    """
    rng = np.random.default_rng(seed)
    data = []
    for op in operators:
        clean = op.apply(x_true)
        noise = noise_sigma * (rng.standard_normal(op.codomain_shape)
                               + 1j * rng.standard_normal(op.codomain_shape))
        data.append(clean + noise)
    return data


def assemble_problem(config):
    """Build the full instance: ``(problem, ground_truth, data)``.

    Per-coil forward operators are mask o dft2 o coil with a shared mask;
    data terms are squared distances to the noisy samples. The l2
    regularizer becomes ``g = alpha ||x||^2``; the tv regularizer is
    dualized as one extra block (gradient operator with an isotropic
    group-l1 data term, 4 real values per pixel) with ``g = 0``. Sampling
    probabilities are uniform over all blocks and block norms are
    estimated and cached.
    """
    shape = tuple(config.shape)
    x_true = make_phantom(shape)
    coils = make_coil_maps(shape, config.n_coils, seed=config.seed)
    mask_idx = make_mask(shape, config.sampling_factor, config.mask_kind,
                         seed=config.seed + 1)
    fourier = linops.Dft2(shape, centered=True)
    operators = [
        linops.Compose([linops.Mask(mask_idx, shape), fourier,
                        linops.CoilMultiply(c)])
        for c in coils
    ]
    data = synthesize_data(x_true, operators, config.noise_sigma,
                           seed=config.seed + 2)
    functionals = [prox.SquaredDistance(b) for b in data]

    if config.regularizer == "l2":
        g = prox.SquaredNorm(config.alpha)
        blocks_ops = operators
        blocks_fns = functionals
    else:
        g = prox.Zero()
        blocks_ops = operators + [linops.Gradient(shape)]
        blocks_fns = functionals + [prox.GroupL1(config.alpha, group_size=4)]

    n = len(blocks_ops)
    problem = solvers.SaddleProblem(
        operators=tuple(blocks_ops), functionals=tuple(blocks_fns), g=g,
        probabilities=(1.0 / n,) * n)
    solvers.estimate_problem_norms(problem, seed=config.seed + 3)
    return problem, x_true, data
