"""
Derivative Queries - gradient, Jacobian and vector-Jacobian products over a tape

The backward pass walks a snapshot of the tape in reverse, so the operations it records
while accumulating cotangents land after the snapshot and are never revisited. Returned
derivatives are ordinary tape nodes and can be differentiated again.
"""
import logging
from typing import Dict, List, Sequence, Union

import numpy as np

from hamiltonet.autodiff import ops
from hamiltonet.autodiff.tape import DualValue
from hamiltonet.error_utils import AutodiffError

logger = logging.getLogger(__name__)

Targets = Union[DualValue, Sequence[DualValue]]


def _check_targets(f: DualValue, targets: Sequence[DualValue]) -> None:
    if not isinstance(f, DualValue):
        raise AutodiffError("function value is not recorded on a tape")
    for target in targets:
        if target not in f.tape:
            raise AutodiffError("unknown leaf")


def _backward(f: DualValue, targets: Sequence[DualValue], seed: DualValue) -> List[DualValue]:
    """
    Accumulate d<seed, f>/d target for every target.

    Targets may be leaves or intermediate nodes; for an intermediate node the result is
    the total derivative of f with respect to that node's value.
    """
    tape = f.tape
    end = f.node_id
    target_ids = {t.node_id for t in targets}
    start = min(target_ids)
    nodes = tape.nodes[start:end + 1]

    # nodes downstream of at least one target
    relevant = set(target_ids)
    for node in nodes:
        if node.node_id not in relevant and any(p.node_id in relevant for p in node.parents):
            relevant.add(node.node_id)

    found: Dict[int, DualValue] = {}
    if end in relevant:
        cotangents: Dict[int, DualValue] = {end: seed}
        for node in reversed(nodes):
            g = cotangents.pop(node.node_id, None)
            if g is None:
                continue
            if node.node_id in target_ids:
                found[node.node_id] = g
            for parent, vjp_fn in zip(node.parents, node.vjps):
                if parent.node_id not in relevant:
                    continue
                contribution = vjp_fn(g)
                previous = cotangents.get(parent.node_id)
                cotangents[parent.node_id] = (
                    contribution if previous is None else ops.add(previous, contribution)
                )

    return [
        found[t.node_id] if t.node_id in found else tape.constant(np.zeros(t.shape))
        for t in targets
    ]


def gradient(f: DualValue, wrt: Targets) -> Union[DualValue, List[DualValue]]:
    """
    Gradient of a scalar recorded value.

    Args:
        f: Scalar (size-1) node
        wrt: One node or a list of nodes on the same tape

    Returns:
        Node(s) shaped like `wrt`, themselves differentiable
    """
    if isinstance(f, DualValue) and f.size != 1:
        raise AutodiffError("gradient of non-scalar")
    single = isinstance(wrt, DualValue)
    targets = [wrt] if single else list(wrt)
    _check_targets(f, targets)
    grads = _backward(f, targets, f.tape.constant(np.ones(f.shape)))
    return grads[0] if single else grads


def vjp(f: DualValue, wrt: Targets, cotangent) -> Union[DualValue, List[DualValue]]:
    """Vector-Jacobian product <cotangent, df/dwrt>"""
    single = isinstance(wrt, DualValue)
    targets = [wrt] if single else list(wrt)
    _check_targets(f, targets)
    seed = ops.lift(cotangent, f.tape)
    if seed.shape != f.shape:
        raise ValueError(f"cotangent shape {seed.shape} does not match output shape {f.shape}")
    grads = _backward(f, targets, seed)
    return grads[0] if single else grads


def jacobian(f: DualValue, wrt: DualValue) -> DualValue:
    """
    Jacobian of a vector-valued node with respect to a vector node, shape (m, n).
    Row i is gradient(f[i], wrt).
    """
    if not isinstance(f, DualValue):
        raise AutodiffError("function value is not recorded on a tape")
    if f.ndim != 1:
        raise AutodiffError(f"jacobian expects a vector function, got shape {f.shape}")
    _check_targets(f, [wrt])
    rows = [gradient(f[i], wrt) for i in range(f.shape[0])]
    return ops.stack(rows, axis=0)


def batch_jacobian(F: DualValue, X: DualValue) -> DualValue:
    """
    Per-sample Jacobians dF_b/dX_b of shape (B, m, n), one backward pass per output
    column. Valid when sample b of F depends only on row b of X.
    """
    if F.ndim != 2 or X.ndim != 2:
        raise AutodiffError(f"batch_jacobian expects (B, m) and (B, n), got {F.shape} and {X.shape}")
    _check_targets(F, [X])
    columns = []
    for j in range(F.shape[1]):
        one_hot = np.zeros(F.shape)
        one_hot[:, j] = 1.0
        columns.append(_backward(F, [X], F.tape.constant(one_hot))[0])
    return ops.stack(columns, axis=1)
