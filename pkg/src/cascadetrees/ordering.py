"""Per-stage transforms and their factor graphs.

A stage factors the tree covariance ``Sigma_T = C @ C.T`` and keeps the
inverse ``Q = C^-1`` that maps the stage output back to its residual input.
With the lower Cholesky factor taken in a parent-first vertex order, each row
of ``Q`` couples a node only to its tree parent, so the stage's factor graph
is loop-free.
"""

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import symcore
from .symcore import Permutation
from .treemodel import TreeModel, traverse

ZERO_COEF = 1e-10


class FactorizationKind(enum.Enum):
    LOWER_CHOLESKY = "chol-ll"
    UPPER_CHOLESKY = "chol-uu"
    SYMMETRIC_SQRT = "sym-sqrt"

    def __str__(self):
        return self.value


def connected_ordering(tree):
    """Parent-first ordering of ``tree``'s nodes.

    Every component is rooted at its lowest node and walked depth-first with
    children ascending, so every node but a root comes after its parent.
    """
    order, _ = traverse(tree.n, tree.edges)
    return Permutation(tuple(order))


def tree_parents(tree):
    """``parent[v]`` under :func:`connected_ordering` (-1 for roots)."""
    return traverse(tree.n, tree.edges)[1]


@dataclass(frozen=True)
class StageTransform:
    """One cascade stage.

    ``transform`` is C with ``C @ C.T == tree.covariance``; ``inverse`` is
    ``Q = C^-1``. For the lower-Cholesky kind ``factor`` is the lower factor
    L of the permuted tree covariance and ``C = P^-1 L P^-T``; for the upper
    kind it is the upper factor U (identity permutation) and for the
    symmetric kind the symmetric square root.
    """

    index: int
    kind: FactorizationKind
    permutation: Permutation
    factor: np.ndarray
    transform: np.ndarray
    inverse: np.ndarray
    tree: TreeModel

    @property
    def n(self):
        return self.tree.n

    def permuted_inverse(self):
        """``Q`` viewed in the stage's permuted order (``L^-1`` for chol-ll)."""
        return symcore.permute_spd(self.inverse, self.permutation)


def stage_transform(tree, kind=FactorizationKind.LOWER_CHOLESKY, index=1):
    """Factor ``tree.covariance`` into a :class:`StageTransform`.

    Inverses come from triangular back-substitution (or the
    eigendecomposition for the symmetric square root), never from a general
    dense inverse.
    """
    kind = FactorizationKind(kind)
    cov = np.asarray(tree.covariance)
    n = tree.n
    if kind is FactorizationKind.LOWER_CHOLESKY:
        perm = connected_ordering(tree)
        low = symcore.cholesky_lower(symcore.permute_spd(cov, perm))
        low_inv = solve_triangular(low, np.eye(n), lower=True)
        back = perm.inverse()
        transform = symcore.permute_spd(low, back)
        inverse = symcore.permute_spd(low_inv, back)
        factor = low
    elif kind is FactorizationKind.UPPER_CHOLESKY:
        perm = Permutation.identity(n)
        factor = symcore.cholesky_upper(cov)
        transform = factor
        inverse = solve_triangular(factor, np.eye(n), lower=False)
    else:
        perm = Permutation.identity(n)
        factor = symcore.symmetric_sqrt(cov)
        transform = factor
        inverse = symcore.symmetric_inv_sqrt(cov)
    for a in (factor, transform, inverse):
        a.setflags(write=False)
    return StageTransform(index, kind, perm, factor, transform, inverse, tree)


@dataclass(frozen=True)
class Factor:
    """Linear factor ``sum_j coef_j * out_j = in_k`` for output variable k."""

    index: int
    output: str
    input: str
    coefficients: tuple  # ((j, q_kj), ...), diagonal first


@dataclass(frozen=True)
class FactorGraphDoc:
    """Bipartite factor graph of one stage.

    Variables are the stage outputs (``outputs``) and residual inputs
    (``inputs``). Factor k links input k with every output j that has a
    non-zero ``q_kj``; those factor-to-output links are the graph's edges.
    """

    stage: int
    outputs: tuple
    inputs: tuple
    factors: tuple

    @property
    def edge_count(self):
        return sum(len(f.coefficients) for f in self.factors)

    @property
    def coupling_count(self):
        """Off-diagonal coefficients: links between distinct variables."""
        return sum(
            1 for f in self.factors for j, _ in f.coefficients if j != f.index
        )

    def edges(self):
        return [(f.index, j) for f in self.factors for j, _ in f.coefficients]


def default_labels(stage, n):
    """Output and input labels for stage ``stage`` (1-based in the text)."""
    if stage <= 1:
        outputs = tuple(f"X{k + 1}" for k in range(n))
    else:
        outputs = tuple(f"Z{stage - 1}_{k + 1}" for k in range(n))
    inputs = tuple(f"Z{stage}_{k + 1}" for k in range(n))
    return outputs, inputs


def to_factor_graph(st, outputs=None, inputs=None, tol=ZERO_COEF):
    n = st.n
    default_out, default_in = default_labels(st.index, n)
    outputs = tuple(outputs) if outputs is not None else default_out
    inputs = tuple(inputs) if inputs is not None else default_in
    q = np.asarray(st.inverse)
    factors = []
    for k in range(n):
        coefs = [(k, float(q[k, k]))]
        coefs += [
            (j, float(q[k, j])) for j in range(n) if j != k and abs(q[k, j]) > tol
        ]
        factors.append(Factor(k, outputs[k], inputs[k], tuple(coefs)))
    return FactorGraphDoc(st.index, outputs, inputs, tuple(factors))


def _quote(s):
    return '"' + str(s).replace('"', r"\"") + '"'


def to_dot(doc):
    """Graphviz DOT text for a :class:`FactorGraphDoc`.

    Variables are circles, factors are boxes labeled with their coefficients
    to 4 significant digits. Output is byte-stable for a given document.
    """
    lines = [f"graph stage_{doc.stage} {{", "  rankdir=LR;"]
    lines.append("  node [shape=circle];")
    for label in doc.inputs + doc.outputs:
        lines.append(f"  {_quote(label)};")
    lines.append("  node [shape=box];")
    for f in doc.factors:
        text = "\\n".join(
            f"q[{f.index + 1},{j + 1}]={q:.4g}" for j, q in f.coefficients
        )
        lines.append(f'  "f{f.index + 1}" [label="{text}"];')
    for f in doc.factors:
        lines.append(f'  {_quote(f.input)} -- "f{f.index + 1}";')
        for j, _ in f.coefficients:
            lines.append(f'  "f{f.index + 1}" -- {_quote(doc.outputs[j])};')
    lines.append("}")
    return "\n".join(lines) + "\n"
