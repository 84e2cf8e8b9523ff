"""Cascade-of-trees approximation of a Gaussian correlation matrix.

Starting from the residual ``Delta_0 = Sigma``, each stage fits a tree model
to the current residual, factors it as ``Sigma_T = C C^T`` and whitens the
residual with ``Q = C^-1``::

    Delta_i = Q_i Delta_{i-1} Q_i^T

The model after ``l`` stages is ``Sigma_M = C_M C_M^T`` with
``C_M = C_1 C_2 ... C_l``, and ``D(Sigma || Sigma_M) == D(Delta_l || I)``,
which never increases from one stage to the next.
"""

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import symcore, treemodel
from .errors import CascadeError
from .ordering import FactorizationKind, StageTransform, stage_transform

log = logging.getLogger(__name__)

# residual KL below this is treated as an exact fit
EXACT_KL = 1e-14


class TreePolicy(enum.Enum):
    CHOW_LIU = "chow-liu"
    STAR_FIXED = "star-fixed"
    STAR_SWEEP = "star-sweep"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class CamState:
    """Residual correlation after stage ``i``."""

    i: int
    delta: np.ndarray
    kl_to_identity: float


@dataclass
class CascadeModel:
    """Result of a cascade run.

    ``kl_trace`` holds ``(i, D(Sigma || Sigma_M_i))`` for ``i = 0..len(stages)``
    where stage 0 is the independent model ``Sigma_M_0 = I``.
    ``residuals[i]`` is ``Delta_i`` (``residuals[0]`` is the source).
    """

    source: np.ndarray
    policy: TreePolicy
    kind: FactorizationKind
    stages: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    kl_trace: list = field(default_factory=list)
    composite: np.ndarray = None
    stop_reason: str = ""

    @property
    def n(self):
        return self.source.shape[0]

    @property
    def model_cov(self):
        c = self.composite
        return c @ c.T

    def model_cov_at(self, i):
        """``Sigma_M_i`` rebuilt from the first ``i`` stages."""
        c = np.eye(self.n)
        for st in self.stages[:i]:
            c = c @ st.transform
        return c @ c.T

    @property
    def final_kl(self):
        return self.kl_trace[-1][1]

    def residual_kl(self):
        """``[(i, D(Delta_i || I))]``; equal to ``kl_trace`` up to roundoff."""
        eye = np.eye(self.n)
        return [(i, symcore.kl_gauss(d, eye)) for i, d in enumerate(self.residuals)]


class CascadeBreakdown(CascadeError):
    """A stage failed numerically; ``partial`` holds the model built so far."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


def cam_update(delta_prev, stage):
    """Whiten the previous residual with the stage inverse.

    Returns the new :class:`CamState`; the residual is symmetrized to stop
    roundoff drift.
    """
    q = np.asarray(stage.inverse)
    delta = q @ np.asarray(delta_prev) @ q.T
    delta = 0.5 * (delta + delta.T)
    kl = symcore.kl_gauss(delta, np.eye(delta.shape[0]))
    delta.setflags(write=False)
    return CamState(stage.index, delta, kl)


def select_tree(delta, policy, stage_index, zero_tol=treemodel.DEFAULT_ZERO_TOL):
    """Tree model for stage ``stage_index`` (1-based) under ``policy``.

    ``star-fixed`` centers stage i on node i (wrapping past n) and joins it
    only to the higher-numbered nodes, so the natural order is already parent
    first and earlier, already decoupled nodes stay isolated.
    """
    policy = TreePolicy(policy)
    if policy is TreePolicy.CHOW_LIU:
        return treemodel.chow_liu(delta, zero_tol)
    if policy is TreePolicy.STAR_FIXED:
        n = delta.shape[0]
        center = (stage_index - 1) % n
        return treemodel.star_tree(delta, center, leaves=range(center + 1, n))
    return treemodel.best_star(delta)[1]


def run_cascade(
    source,
    policy=TreePolicy.CHOW_LIU,
    kind=FactorizationKind.LOWER_CHOLESKY,
    max_stages=3,
    kl_threshold=None,
    zero_tol=treemodel.DEFAULT_ZERO_TOL,
):
    """Greedy cascade approximation of ``source``.

    Runs until ``max_stages`` stages are built, the residual KL drops to
    ``kl_threshold`` or below, or the residual is numerically the identity.
    """
    if max_stages < 1:
        raise ValueError(f"max_stages must be >= 1, got {max_stages}")
    if kl_threshold is not None and kl_threshold < 0:
        raise ValueError(f"kl_threshold must be >= 0, got {kl_threshold}")
    sigma = symcore.validate_corr(source)
    n = sigma.shape[0]
    policy = TreePolicy(policy)
    kind = FactorizationKind(kind)
    eye = np.eye(n)

    model = CascadeModel(sigma, policy, kind, composite=eye.copy())
    model.residuals.append(sigma)
    model.kl_trace.append((0, symcore.kl_gauss(sigma, eye)))
    if model.kl_trace[0][1] <= EXACT_KL:
        model.stop_reason = "exact"
        return model

    delta = sigma
    composite = eye
    for i in range(1, max_stages + 1):
        try:
            tree = select_tree(delta, policy, i, zero_tol)
            st = stage_transform(tree, kind, index=i)
            state = cam_update(delta, st)
            composite = composite @ st.transform
            kl = symcore.kl_gauss(sigma, composite @ composite.T)
        except CascadeError as exc:
            model.stop_reason = f"breakdown at stage {i}: {exc}"
            raise CascadeBreakdown(model.stop_reason, model) from exc
        delta = state.delta
        model.stages.append(st)
        model.residuals.append(delta)
        model.composite = composite
        model.kl_trace.append((i, kl))
        log.debug("stage %d: kl=%.6g residual kl=%.6g", i, kl, state.kl_to_identity)
        if state.kl_to_identity <= EXACT_KL:
            model.stop_reason = "exact"
            break
        if kl_threshold is not None and state.kl_to_identity <= kl_threshold:
            model.stop_reason = "threshold"
            break
    else:
        model.stop_reason = "max_stages"
    return model


def star_exact_cascade(source):
    """Star cascade that fits ``source`` exactly within ``n - 1`` stages.

    Stage i joins node i to every later node; afterwards node i is
    uncorrelated with the rest of the residual.
    """
    n = np.asarray(source).shape[0]
    return run_cascade(
        source,
        TreePolicy.STAR_FIXED,
        FactorizationKind.LOWER_CHOLESKY,
        max_stages=max(n - 1, 1),
    )


@dataclass(frozen=True)
class ComparisonResult:
    policy: TreePolicy
    kind: FactorizationKind
    kl_trace: tuple
    error: str = ""


def compare_policies(source, max_stages, policies=None, kinds=None, workers=1):
    """Run every ``policy x kind`` combination on the same source.

    Returns a dict keyed by ``(policy, kind)`` in enumeration order. A failing
    combination keeps its partial trace and records the error.
    """
    policies = [TreePolicy(p) for p in (policies or list(TreePolicy))]
    kinds = [FactorizationKind(k) for k in (kinds or list(FactorizationKind))]
    sigma = symcore.validate_corr(source)
    combos = [(p, k) for p in policies for k in kinds]

    def one(combo):
        p, k = combo
        try:
            model = run_cascade(sigma, p, k, max_stages)
        except CascadeBreakdown as exc:
            return ComparisonResult(p, k, tuple(exc.partial.kl_trace), str(exc))
        return ComparisonResult(p, k, tuple(model.kl_trace))

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, combos))
    else:
        results = [one(c) for c in combos]
    return {c: r for c, r in zip(combos, results)}


def relative_reduction(kl_trace, base_stage=1):
    """Fractional KL drop of each stage relative to ``base_stage``."""
    values = dict(kl_trace)
    base = values[base_stage]
    return {i: (1.0 - kl / base if base > 0 else 0.0) for i, kl in kl_trace}
