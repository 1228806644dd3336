"""Thermal-annealing minimizer over parametrized Hermitian Dirac candidates.

A single Metropolis walker perturbs one parameter coordinate at a time.  The
run has four phases:

1. cooling: the temperature drops by an entropy-matching rule (the running
   variance of the energy sets the decrement) from an automatically
   estimated initial temperature down to t_final;
2. settling: the walk keeps cooling geometrically a few more decades, so the
   state funnels into the bottom basin before the stochastic noise freezes;
3. quench: derivative-free refinement (Powell-style conjugate pattern
   directions with exact polynomial line minimization -- the energy along
   any line is a fixed-degree polynomial in all three parametrizations);
4. measurement: samples collected at the frozen reached temperature, every
   measure_stride accepted steps.

All randomness flows from one 64-bit seed through a counter-based Philox
generator, so identical configurations replay bit-identically.
"""

from dataclasses import dataclass

import numpy as np

from . import heisenberg
from .linalg import DimensionMismatchError

KINDS = ("circle-real", "sphere-block-p", "sphere-block-rs")


# -- parametrizations -------------------------------------------------------

def n_params(kind, dim):
    if kind == "circle-real":
        return dim * (dim - 1) // 2
    if kind == "sphere-block-p":
        return (dim // 2) ** 2
    if kind == "sphere-block-rs":
        return 2 * (dim // 2) ** 2
    raise ValueError(f"unknown parametrization kind {kind!r}")


@dataclass(frozen=True)
class DiracParam:
    kind: str
    dim: int
    params: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown parametrization kind {self.kind!r}")
        expect = n_params(self.kind, self.dim)
        if len(self.params) != expect:
            raise DimensionMismatchError(
                f"{self.kind} at dim {self.dim} needs {expect} params, "
                f"got {len(self.params)}")


def _hermitian_from(v, h):
    """Hermitian h x h matrix from h^2 reals: diagonal first, then (re, im)
    pairs for the strict upper triangle."""
    g = np.zeros((h, h), dtype=complex)
    g[np.diag_indices(h)] = v[:h]
    off = v[h:].reshape(-1, 2)
    iu = np.triu_indices(h, 1)
    g[iu] = off[:, 0] + 1j * off[:, 1]
    g[(iu[1], iu[0])] = off[:, 0] - 1j * off[:, 1]
    return g


def _antihermitian_from(v, h):
    """Anti-Hermitian h x h matrix from h^2 reals: imaginary diagonal first,
    then (re, im) pairs for the strict upper triangle."""
    s = np.zeros((h, h), dtype=complex)
    s[np.diag_indices(h)] = 1j * v[:h]
    off = v[h:].reshape(-1, 2)
    iu = np.triu_indices(h, 1)
    s[iu] = off[:, 0] + 1j * off[:, 1]
    s[(iu[1], iu[0])] = -off[:, 0] + 1j * off[:, 1]
    return s


def _circle_fourier(dim):
    """Unitary map from the discrete position basis to the mode basis; the
    real structure J acts as plain conjugation on the position side."""
    cutoff = (dim - 1) // 2
    modes = np.arange(-cutoff, cutoff + 1)
    grid = np.arange(dim)
    return np.exp(-2j * np.pi * np.outer(modes, grid) / dim) / np.sqrt(dim)


_fourier_cache = {}


def realize(p):
    """Realize a DiracParam as a Hermitian matrix on its carrier."""
    kind, dim, v = p.kind, p.dim, np.asarray(p.params, dtype=float)
    if kind == "circle-real":
        # d = J (iA) J with A real antisymmetric on the position side, so
        # the spectrum is symmetric about 0 and the class contains the
        # truncated circle Dirac.
        if dim not in _fourier_cache:
            _fourier_cache[dim] = _circle_fourier(dim)
        F = _fourier_cache[dim]
        A = np.zeros((dim, dim))
        A[np.triu_indices(dim, 1)] = v
        A = A - A.T
        return F @ (1j * A) @ F.conj().T
    h = dim // 2
    if kind == "sphere-block-p":
        g = _hermitian_from(v, h)
        pos = g @ g
        d = np.zeros((dim, dim), dtype=complex)
        d[:h, :h] = -pos
        d[h:, h:] = pos
        return d
    # sphere-block-rs
    r = _hermitian_from(v[:h * h], h)
    s = _antihermitian_from(v[h * h:], h)
    d = np.zeros((dim, dim), dtype=complex)
    d[:h, :h] = r
    d[:h, h:] = s
    d[h:, :h] = -s
    d[h:, h:] = -r
    return d


def propose(p, sigma, rng):
    """Perturb one uniformly chosen coordinate by a N(0, sigma) deviate."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    k = int(rng.integers(len(p.params)))
    v = np.array(p.params, dtype=float)
    v[k] += sigma * rng.standard_normal()
    return DiracParam(kind=p.kind, dim=p.dim, params=v)


# -- annealing --------------------------------------------------------------

@dataclass
class AnnealConfig:
    c_speed: float = 0.05
    t_final: float = 0.001
    proposal_sigma: float = 0.3
    n_measure: int = 150
    measure_stride: int = 10
    max_steps: int = 4_000_000
    seed: int = 0
    schedule: str = "entropy"       # "entropy" | "geometric"
    steps_per_temp: int = 0         # 0: one sweep (= n_params) per update
    settle_decades: float = 5.0     # extra cooling below t_final, in decades
    refine_iters: int = 80          # Powell quench iterations (0 disables)
    init_scale: float = 1.0

    def __post_init__(self):
        if self.t_final <= 0:
            raise ValueError("t_final must be positive")
        if self.n_measure < 1:
            raise ValueError("n_measure must be >= 1")
        if self.schedule not in ("entropy", "geometric"):
            raise ValueError(f"unknown schedule {self.schedule!r}")


@dataclass
class AnnealProblem:
    triple: object
    kind: str
    kappa: float = 1.0

    def energy_fn(self):
        if self.kind == "circle-real":
            return heisenberg.circle_energy(self.triple)
        return heisenberg.sphere_energy(self.triple, self.kappa)


@dataclass
class AnnealResult:
    best_param: DiracParam
    best_constraint: float
    samples: list
    average_D: np.ndarray
    sample_std: np.ndarray
    trace: list                     # (step, temperature, constraint)
    config: AnnealConfig
    seed: int
    complete: bool
    initial_temperature: float
    final_temperature: float

    @property
    def best_D(self):
        return realize(self.best_param)


def average_samples(samples):
    """Entrywise mean and standard deviation of a nonempty list of matrices."""
    if not samples:
        raise ValueError("cannot average an empty sample list")
    if len({m.shape for m in samples}) != 1:
        raise DimensionMismatchError("samples must share one dimension")
    stack = np.array(samples)
    return stack.mean(axis=0), stack.std(axis=0)


def _initial_temperature(energy, p, e0, sigma, rng, target=0.8, trials=100):
    """Temperature giving roughly the target uphill acceptance rate."""
    ups = []
    for _ in range(trials):
        q = propose(p, sigma, rng)
        de = energy(realize(q)) - e0
        if de > 0:
            ups.append(de)
    if not ups:
        return 1.0
    return float(np.mean(ups) / (-np.log(target)))


_LINE_OFFSETS = np.linspace(-1.0, 1.0, 9)


def _line_minimize(f, x, u, radius, degree=8):
    """Exact minimization of the polynomial t -> f(x + t u) over |t| <= radius
    (widening the bracket when the minimizer sits on its edge)."""
    poly = np.polynomial.polynomial
    t_best, v_best = 0.0, None
    for _ in range(8):
        ts = _LINE_OFFSETS * radius
        vals = [f(x + t * u) for t in ts]
        c = poly.polyfit(ts, vals, degree)
        roots = poly.polyroots(poly.polyder(c))
        cands = [r.real for r in roots if abs(r.imag) < 1e-8 * radius + 1e-300
                 and abs(r.real) <= radius]
        cands.append(0.0)
        cvals = [f(x + t * u) for t in cands]
        i = int(np.argmin(cvals))
        t_best, v_best = cands[i], cvals[i]
        if abs(t_best) > 0.9 * radius and radius < 100.0:
            radius *= 3.0
            continue
        break
    return x + t_best * u, v_best


def _powell_refine(fvec, x0, e0, iters, radius=0.2):
    """Powell's conjugate-direction descent with exact line minimization."""
    n = len(x0)
    dirs = list(np.eye(n))
    x, e = np.array(x0, dtype=float), e0
    evals = 0
    for _ in range(iters):
        x_start, e_start = x.copy(), e
        drop_max, k_max = 0.0, 0
        for k in range(n):
            e_prev = e
            x, e = _line_minimize(fvec, x, dirs[k], radius)
            evals += 1
            if e_prev - e > drop_max:
                drop_max, k_max = e_prev - e, k
        d = x - x_start
        nd = np.linalg.norm(d)
        if nd > 1e-13:
            x, e = _line_minimize(fvec, x, d / nd, max(3.0 * nd, 1e-6))
            dirs.pop(k_max)
            dirs.append(d / nd)
        if e_start - e < 1e-18:
            break
    return x, e


def run(problem, cfg):
    """Metropolis thermal annealing; returns best, trace and post-cooling
    statistics.  Deterministic for a fixed (problem, config)."""
    energy = problem.energy_fn()
    dim = problem.triple.dim
    npar = n_params(problem.kind, dim)
    rng = np.random.Generator(np.random.Philox(cfg.seed))

    p = DiracParam(problem.kind, dim, cfg.init_scale * rng.standard_normal(npar))
    e = energy(realize(p))
    best_p, best_e = p, e

    sigma = cfg.proposal_sigma
    t0 = _initial_temperature(energy, p, e, sigma, rng)
    T = t0
    per_temp = cfg.steps_per_temp or npar

    # running moments of the energy for the entropy-matched decrement
    alpha = 2.0 / (per_temp + 1)
    m1, m2 = e, e * e
    eps = 1e-12

    trace = [(0, T, e)]
    step = 0
    complete = True

    def metropolis_step(p, e, sigma, T):
        q = propose(p, sigma, rng)
        eq = energy(realize(q))
        de = eq - e
        if de <= 0 or rng.random() < np.exp(-de / T):
            return q, eq, True
        return p, e, False

    t_settle = cfg.t_final * 10.0 ** (-cfg.settle_decades)

    # phases 1+2: entropy-matched cooling to t_final, then geometric settling
    while T > t_settle:
        if step >= cfg.max_steps:
            complete = False
            break
        accepted = 0
        for _ in range(per_temp):
            step += 1
            p, e, acc = metropolis_step(p, e, sigma, T)
            accepted += acc
            if e < best_e:
                best_p, best_e = p, e
                trace.append((step, T, e))
            m1 += alpha * (e - m1)
            m2 += alpha * (e * e - m2)
        if T > cfg.t_final and cfg.schedule == "entropy":
            var = max(m2 - m1 * m1, 0.0)
            f = min(cfg.c_speed * T * var / (T ** 3 + eps), 0.01)
        elif T > cfg.t_final:
            f = cfg.c_speed
        else:
            f = 0.07                # settling: fixed geometric decades
        T *= 1.0 - f
        rate = accepted / per_temp
        if rate > 0.35:
            sigma *= 1.15
        elif rate < 0.25:
            sigma /= 1.15
        trace.append((step, T, e))

    t_reached = T

    # phase 3: quench
    if cfg.refine_iters > 0:
        def fvec(v):
            return energy(realize(DiracParam(problem.kind, dim, v)))

        x, e_ref = _powell_refine(fvec, np.asarray(p.params, dtype=float),
                                  e, cfg.refine_iters)
        p = DiracParam(problem.kind, dim, x)
        e = e_ref
        step += 1
        if e < best_e:
            best_p, best_e = p, e
        trace.append((step, 0.0, e))

    # phase 4: measurement at the frozen reached temperature
    samples = []
    accepted_since = 0
    budget = cfg.n_measure * cfg.measure_stride * 1000
    spent = 0
    while len(samples) < cfg.n_measure and spent < budget:
        spent += 1
        step += 1
        p, e, acc = metropolis_step(p, e, sigma, t_reached)
        if acc:
            accepted_since += 1
            if e < best_e:
                best_p, best_e = p, e
                trace.append((step, t_reached, e))
            if accepted_since >= cfg.measure_stride:
                samples.append(realize(p))
                accepted_since = 0
                trace.append((step, t_reached, e))
    if len(samples) < cfg.n_measure:
        complete = False
    if not samples:
        samples = [realize(p)]

    avg, std = average_samples(samples)
    return AnnealResult(
        best_param=best_p,
        best_constraint=best_e,
        samples=samples,
        average_D=avg,
        sample_std=std,
        trace=trace,
        config=cfg,
        seed=cfg.seed,
        complete=complete,
        initial_temperature=t0,
        final_temperature=t_reached,
    )
