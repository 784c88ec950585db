"""Adam and limited-memory BFGS on flat parameter vectors."""

import typing
import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import line_search

from .shared_types import LineSearchStatus, make_logger

logger = make_logger("train")


@dataclass(frozen=True)
class AdamHyperparameters:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    """First and second moment estimates."""

    m: np.ndarray
    v: np.ndarray

    @classmethod
    def fresh(cls, size: int):
        return cls(np.zeros(size), np.zeros(size))


def adam_step(
    params: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    t: int,
    hyper: AdamHyperparameters = AdamHyperparameters(),
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update at step index t (1-based). Inputs are not modified."""
    m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grad
    v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grad * grad
    m_hat = m / (1.0 - hyper.beta1**t)
    v_hat = v / (1.0 - hyper.beta2**t)
    step = hyper.learning_rate * (m_hat / (np.sqrt(v_hat) + hyper.eps))
    return params - step, AdamState(m, v)


@dataclass(frozen=True)
class LbfgsOptions:
    history: int = 20
    max_iterations: int = 1000
    gradient_tolerance: float = 1e-10
    """Stop once max |g| drops to this."""
    loss_threshold: float = -np.inf
    """Stop once f drops to this."""
    c1: float = 1e-4
    c2: float = 0.9
    line_search_iterations: int = 20


@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    iterations: int
    status: LineSearchStatus
    evaluations: int = 0


@dataclass
class _Curvature:
    s: deque = field(default_factory=deque)
    y: deque = field(default_factory=deque)
    rho: deque = field(default_factory=deque)

    def clear(self):
        self.s.clear()
        self.y.clear()
        self.rho.clear()

    def push(self, s: np.ndarray, y: np.ndarray, limit: int) -> bool:
        sy = float(s @ y)
        if sy <= 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            return False
        if len(self.s) == limit:
            self.s.popleft()
            self.y.popleft()
            self.rho.popleft()
        self.s.append(s)
        self.y.append(y)
        self.rho.append(1.0 / sy)
        return True

    def direction(self, g: np.ndarray) -> np.ndarray:
        """-H g by the two-loop recursion."""
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(self.s), reversed(self.y), reversed(self.rho)):
            a = rho * float(s @ q)
            q -= a * y
            alphas.append(a)
        if self.s:
            s, y = self.s[-1], self.y[-1]
            q *= float(s @ y) / float(y @ y)
        else:
            # first step: unit-length steepest descent
            q /= max(float(np.linalg.norm(q)), 1.0)
        for (s, y, rho), a in zip(zip(self.s, self.y, self.rho), reversed(alphas)):
            b = rho * float(y @ q)
            q += (a - b) * s
        return -q


class _CachedObjective:
    """scipy's line search asks for f and g separately, the objective hands out both at once."""

    def __init__(self, fun: typing.Callable[[np.ndarray], tuple[float, np.ndarray]]):
        self.fun = fun
        self.cache: dict[bytes, tuple[float, np.ndarray]] = {}
        self.evaluations = 0

    def __call__(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        key = x.tobytes()
        if key not in self.cache:
            self.evaluations += 1
            f, g = self.fun(x)
            self.cache[key] = (float(f), np.asarray(g, dtype=np.float64))
        return self.cache[key]

    def f(self, x):
        return self(x)[0]

    def g(self, x):
        return self(x)[1]

    def keep_only(self, x: np.ndarray):
        key = x.tobytes()
        self.cache = {key: self.cache[key]} if key in self.cache else {}


def lbfgs_minimize(
    fun: typing.Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    options: LbfgsOptions = LbfgsOptions(),
    callback: typing.Callable[[int, np.ndarray, float], bool] | None = None,
) -> LbfgsResult:
    """Minimizes `fun` (returning loss and gradient) with L-BFGS and a strong-Wolfe line search.

    `callback(iteration, x, f)` runs after every accepted step, returning True stops the run.
    A failed line search returns the best point so far with status LINE_SEARCH_FAILED.
    """
    objective = _CachedObjective(fun)
    x = np.array(x0, dtype=np.float64)
    f, g = objective(x)
    old_f = None
    memory = _Curvature()

    def done(it, status):
        return LbfgsResult(x, f, g, it, status, objective.evaluations)

    if f <= options.loss_threshold:
        return done(0, LineSearchStatus.LOSS_THRESHOLD)
    if float(np.max(np.abs(g), initial=0.0)) <= options.gradient_tolerance:
        return done(0, LineSearchStatus.GRADIENT_TOLERANCE)

    for it in range(1, options.max_iterations + 1):
        d = memory.direction(g)
        if float(g @ d) >= 0:
            memory.clear()
            d = memory.direction(g)
        with warnings.catch_warnings():
            # scipy warns (LineSearchWarning) before handing back alpha=None
            warnings.simplefilter("ignore", RuntimeWarning)
            alpha, *_ = line_search(
                objective.f,
                objective.g,
                x,
                d,
                gfk=g,
                old_fval=f,
                old_old_fval=old_f,
                c1=options.c1,
                c2=options.c2,
                maxiter=options.line_search_iterations,
            )
        if alpha is None:
            logger.warning(f"line search failed at iteration {it}, returning the best point so far.")
            return done(it - 1, LineSearchStatus.LINE_SEARCH_FAILED)
        x_new = x + alpha * d
        f_new, g_new = objective(x_new)
        memory.push(x_new - x, g_new - g, options.history)
        old_f, x, f, g = f, x_new, f_new, g_new
        objective.keep_only(x)
        if callback is not None and callback(it, x, f):
            return done(it, LineSearchStatus.STOPPED_BY_CALLBACK)
        if f <= options.loss_threshold:
            return done(it, LineSearchStatus.LOSS_THRESHOLD)
        if float(np.max(np.abs(g))) <= options.gradient_tolerance:
            return done(it, LineSearchStatus.GRADIENT_TOLERANCE)
    return done(options.max_iterations, LineSearchStatus.MAX_ITERATIONS)
