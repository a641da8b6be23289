"""Multi-stage runs: engines, corrugation-number selection and run-level checks."""
from dataclasses import dataclass, field
from math import pi

import numpy as np

from ..errors import BudgetExceededError, ConfigurationError, ResolutionError
from ..metrics import WAVEFRONTS, hmax_and_ch, ladder_increment_coords, metric_ladder
from ..schedule import DIRECTIONS, Schedule
from .exact import ExactEngine, ExactLayer
from .grid import FieldGrid, GridSpec, differentiate, initial_embedding
from .process import corrugate_grid, lin_norm, pullback_of_matrix

LC_NAMES = ("LC1", "LC2", "LC3", "LC4")
TAU_CONDITIONS = ("LC2", "LC3")
DEFAULT_LAMBDA = 100.0
DEFAULT_CAP = 2 ** 52


class GridEngine:
    """Finite-difference engine: the state is a FieldGrid."""

    mode = "grid"

    def __init__(self, grid, system=WAVEFRONTS):
        self.grid = grid
        self.system = system
        self.history = ()
        rho, _ = grid.mesh_coords()
        self.rho = rho
        self.layers = [self._layer(grid)]
        self.snapshots = [grid]

    @staticmethod
    def _layer(grid):
        return ExactLayer(grid.layer, grid.nodes, differentiate(grid).matrices())

    def current(self):
        return self.layers[-1]

    def trial(self, k, i, N):
        new, data = corrugate_grid(self.grid, k, i, N, self.system)
        return data, (new, data)

    def commit(self, token):
        new, data = token
        self.grid = new
        self.history = new.history
        self.layers.append(ExactLayer(new.layer, data.f, data.df))
        self.snapshots.append(new)

    def field_grid(self, index=-1):
        return self.snapshots[index]


class SampledExactEngine(ExactEngine):
    """Exact engine on the nodes of a grid plus optional scattered points."""

    mode = "exact"

    def __init__(self, template, steps, extra_rho=(), extra_phi=(), system=WAVEFRONTS):
        rho, phi = template.mesh_coords()
        self.template = template
        self.n_mesh = rho.size
        super().__init__(np.concatenate([rho.ravel(), np.ravel(extra_rho)]),
                         np.concatenate([phi.ravel(), np.ravel(extra_phi)]), steps, system)

    def field_grid(self, index=-1):
        index %= len(self.layers)
        layer = self.layers[index]
        nodes = layer.f[:self.n_mesh].reshape(self.template.nodes.shape)
        return FieldGrid(nodes, self.template.rho_axis, self.template.phi_count,
                         self.template.symmetry, layer.stage, self.history[:index])

    def mesh_layer(self, index=-1):
        """(f, df) restricted to the grid nodes."""
        layer = self.layers[index]
        shape = self.template.nodes.shape[:2]
        return layer.f[:self.n_mesh].reshape(shape + (3,)), layer.df[:self.n_mesh].reshape(shape + (3, 2))


@dataclass
class ConditionContext:
    """Everything choose_N needs besides the trial step itself."""

    engine: object
    hmax: float
    ch: float
    lam: float = DEFAULT_LAMBDA
    hmin_start: float = None
    last: tuple = None

    def start_level(self, k):
        """Record H_min(D_{k,1}) from the current layer (call before stage (k,1))."""
        layer = self.engine.current()
        defect = metric_ladder(k, self.engine.rho.ravel()) - pullback_of_matrix(layer.df.reshape(-1, 3, 2))
        self.hmin_start = float(np.min(self.engine.system.coords(defect).as_array()))

    def bounds(self, k, tau_k):
        rho = self.engine.rho.ravel()
        nxt = ladder_increment_coords(k + 1, rho).as_array()
        hmin_next = float(np.min(nxt))
        lc1 = min(self.hmin_start / (4.0 * self.hmax), hmin_next / (6.0 * self.ch * self.hmax))
        inc_next = float(np.min((metric_ladder(k + 1, rho) - metric_ladder(k, rho)).norm()))
        inc_here = float(np.min((metric_ladder(k, rho) - metric_ladder(k - 1, rho)).norm()))
        lc4 = min(inc_next, inc_here) / (6.0 * self.lam * self.ch)
        return {"LC1": lc1, "LC2": tau_k / 3.0, "LC3": tau_k / 3.0, "LC4": lc4}


def measure_conditions(data):
    """The measured sides of (LC1)-(LC4) for one trial step."""
    err = float(np.max(data.err_field))
    return {"LC1": err, "LC2": float(np.max(data.move_field())),
            "LC3": float(np.max(data.gap_field())), "LC4": err}


def check_conditions(data, bounds, conditions=LC_NAMES):
    measured = measure_conditions(data)
    return {name: (measured[name], bounds[name], measured[name] <= bounds[name])
            for name in conditions}


def choose_N(context, k, i, tau_k, start=2, cap=DEFAULT_CAP, conditions=LC_NAMES):
    """Smallest N = start * 2^j whose trial step meets every requested condition.

    The accepted trial is kept in ``context.last`` as (N, data, token).

    Raises
    ------
    BudgetExceededError
        when N would exceed ``cap``; ``failed`` lists the conditions still
        violated at the last trial.
    """
    for name in conditions:
        if name not in LC_NAMES:
            raise ConfigurationError(f"unknown condition {name}")
    if context.hmin_start is None:
        context.start_level(k)
    bounds = context.bounds(k, tau_k)
    N = int(start)
    failed = ()
    while N <= cap:
        try:
            data, token = context.engine.trial(k, i, N)
        except ResolutionError as exc:
            raise BudgetExceededError(f"stage ({k},{i}): grid cannot resolve N={N}; "
                                      f"still failing {', '.join(failed) or 'none'}",
                                      failed=failed) from exc
        checks = check_conditions(data, bounds, conditions)
        failed = tuple(name for name, (_, _, ok) in checks.items() if not ok)
        if not failed:
            context.last = (N, data, token, checks)
            return N
        N *= 2
    raise BudgetExceededError(f"stage ({k},{i}): no N <= {cap} satisfies {', '.join(failed)}",
                              failed=failed)


# run-level checks ------------------------------------------------------------
def _sup_lin(m):
    return float(np.max(lin_norm(m.reshape(-1, 3, 2))))


def level_checks(layers_by_level, rho, schedule, a_const=None):
    """Properties (P1)-(P3) per completed level, reported as records.

    layers_by_level[k] is the layer f_k (k = 0 is f0).  The constant A of
    (P3) is measured on level 1 unless given.
    """
    rho = np.ravel(rho)
    rows = []
    for k in range(1, len(layers_by_level)):
        cur, prev = layers_by_level[k], layers_by_level[k - 1]
        pull = pullback_of_matrix(cur.df.reshape(-1, 3, 2))
        p1_value = float(np.max((metric_ladder(k, rho) - pull).norm()))
        p1_budget = float(np.max((metric_ladder(k + 1, rho) - metric_ladder(k, rho)).norm()))
        move = float(np.max(np.linalg.norm((cur.f - prev.f).reshape(-1, 3), axis=-1)))
        tau = schedule.tau(k)
        ddf = _sup_lin(cur.df - prev.df)
        prev_defect = float(np.max((metric_ladder(k, rho)
                                    - pullback_of_matrix(prev.df.reshape(-1, 3, 2))).norm()))
        if a_const is None:
            a_const = ddf / np.sqrt(prev_defect)
        p3_budget = tau + a_const * np.sqrt(prev_defect)
        rows.append({"k": k, "P1": p1_value, "P1_budget": p1_budget, "P1_ok": p1_value <= p1_budget,
                     "P2": move, "P2_budget": tau, "P2_ok": move <= tau,
                     "P3": ddf, "P3_budget": p3_budget, "P3_ok": ddf <= p3_budget * (1 + 1e-12),
                     "A": a_const})
    return rows


@dataclass
class RunSpec:
    """Everything needed for a holonomic run."""

    rho0: float = 0.1
    depth: int = 1
    mode: str = "exact"
    schedule: Schedule = None
    tau1: float = None
    lam: float = DEFAULT_LAMBDA
    n_rho: int = 141
    phi_count: int = None
    sector: bool = True
    extra_samples: int = 2000
    seed: int = 0
    conditions: tuple = LC_NAMES
    start: tuple = (2, 10, 10)
    cap: int = DEFAULT_CAP

    def validate(self):
        if not (0.0 < self.rho0 < 1.0):
            raise ConfigurationError("rho0 must lie in (0, 1)")
        if self.depth < 0:
            raise ConfigurationError("depth must be >= 0")
        if self.mode not in ("exact", "grid"):
            raise ConfigurationError("mode must be 'exact' or 'grid'")
        if self.schedule is not None and self.schedule.depth < self.depth:
            raise ConfigurationError("explicit schedule is shorter than the requested depth")
        return self

    def symmetry_order(self):
        """7 L for the schedule (or for the starting numbers when adaptive)."""
        if self.schedule is not None and self.depth > 0:
            return 7 * self.schedule.truncated(self.depth).L
        if self.schedule is None and self.depth > 0:
            return 7 * int(np.gcd(self.start[1], self.start[2]))
        return 7

    def grid_spec(self):
        mult = self.symmetry_order()
        count = self.phi_count or 14 * mult
        return GridSpec(self.rho0, self.n_rho, count, 1.0, mult, self.sector)


@dataclass
class RunResult:
    spec: RunSpec
    schedule: Schedule
    stage_data: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    level_rows: list = field(default_factory=list)
    engine: object = None

    @property
    def reports(self):
        return [d.report for d in self.stage_data]

    def level_grids(self):
        """FieldGrid of f_k for k = 0..depth."""
        return [self.engine.field_grid(3 * k) for k in range(len(self.stage_data) // 3 + 1)]

    def final_grid(self):
        return self.engine.field_grid(-1)


def _make_engine(spec, steps):
    grid = initial_embedding(spec.grid_spec().validate())
    if spec.mode == "grid":
        return GridEngine(grid)
    rng = np.random.default_rng(spec.seed)
    n = spec.extra_samples
    extra_rho = rng.uniform(spec.rho0, 1.0, n)
    extra_phi = rng.uniform(0.0, 2.0 * pi, n)
    return SampledExactEngine(grid, steps, extra_rho, extra_phi)


def run_holonomic(spec, on_stage=None):
    """Run the 3-corrugated process to the requested depth.

    With an explicit schedule the numbers are used as given; otherwise each
    N is picked by choose_N starting from ``spec.start[i - 1]`` (or from the
    previous number of the same direction).  ``on_stage(result)`` is called
    after every committed step.
    """
    spec.validate()
    rho0 = spec.rho0
    tau1 = spec.tau1
    if tau1 is None:
        tau1 = spec.schedule.tau1 if spec.schedule is not None else None
    if tau1 is None:
        from ..schedule import default_tau1
        tau1 = default_tau1(rho0)
    base = Schedule({}, 0, tau1, rho0)
    engine = _make_engine(spec, 3 * spec.depth)
    result = RunResult(spec, base, engine=engine)
    hmax, ch = hmax_and_ch()
    context = ConditionContext(engine, hmax, ch, spec.lam)
    table = {}
    for k in range(1, spec.depth + 1):
        context.start_level(k)
        for i in DIRECTIONS:
            if spec.schedule is not None:
                N = spec.schedule.N(k, i)
                data, token = engine.trial(k, i, N)
                checks = check_conditions(data, context.bounds(k, base.tau(k)), spec.conditions)
            else:
                prev = table.get((k - 1, i), spec.start[i - 1])
                N = choose_N(context, k, i, base.tau(k), start=prev, cap=spec.cap,
                             conditions=spec.conditions)
                _, data, token, checks = context.last
            engine.commit(token)
            table[(k, i)] = N
            result.stage_data.append(data)
            result.checks.append(checks)
            if on_stage is not None:
                on_stage(result)
    result.schedule = Schedule(table, spec.depth, tau1, rho0)
    levels = [engine.layers[3 * k] for k in range(spec.depth + 1)]
    result.level_rows = level_checks(levels, engine.rho, result.schedule)
    return result
