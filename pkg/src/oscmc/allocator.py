"""VM scheduling: bandwidth clustering, first-fit-decreasing placement and
congestion-driven rebalancing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import Placement, ResourceVector, Server


class ClusterCountError(Exception):
    """Asked for more clusters than data points (or fewer than one)."""


class PlacementInfeasibleError(Exception):
    """No server can host a VM under the capacity constraint."""


@dataclass
class ClusterAssignment:
    centroids: list[float]
    labels: list[int]
    objective: float
    objective_trace: list[float]

    def members(self, label: int, ids) -> list:
        return [i for i, l in zip(ids, self.labels) if l == label]

    def top_cluster(self) -> int:
        """Index of the cluster with the highest centroid."""
        return max(range(len(self.centroids)), key=lambda c: self.centroids[c])


def _lloyd(values: np.ndarray, centroids: np.ndarray, max_iter: int):
    """One Lloyd run; returns (labels, centroids, objective, trace)."""
    labels = None
    trace = []
    for _ in range(max_iter):
        dists = (values[:, None] - centroids[None, :]) ** 2
        new_labels = np.argmin(dists, axis=1)
        trace.append(float(dists[np.arange(values.size), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(centroids.size):
            members = values[labels == c]
            if members.size:
                centroids[c] = members.mean()
    return labels, centroids, trace[-1], trace


def kmeans(
    values,
    n_clusters: int,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 100,
) -> ClusterAssignment:
    """1-D k-means over predicted bandwidths, Lloyd's algorithm.

    Runs ``restarts`` seeded initialisations drawn from distinct data points
    and keeps the assignment with the lowest within-cluster squared
    distance.  The per-iteration objective of the winning run is exposed so
    callers can verify it never increases.
    """
    vals = np.asarray(list(values), dtype=float)
    if n_clusters < 1 or n_clusters > vals.size:
        raise ClusterCountError("more clusters than points")

    unique = np.unique(vals)
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        if unique.size >= n_clusters:
            init = rng.choice(unique, size=n_clusters, replace=False)
        else:
            extra = rng.choice(vals, size=n_clusters - unique.size, replace=True)
            init = np.concatenate([unique, extra])
        labels, cents, objective, trace = _lloyd(vals, init.astype(float), max_iter)
        if best is None or objective < best[2]:
            best = (labels, cents, objective, trace)

    labels, cents, objective, trace = best
    return ClusterAssignment(
        centroids=[float(c) for c in cents],
        labels=[int(l) for l in labels],
        objective=objective,
        objective_trace=trace,
    )


def ffd_place(
    items: list[tuple[int, ResourceVector, float]],
    servers: dict[int, Server],
    placement: Placement,
    eligible=None,
) -> Placement:
    """First-fit decreasing by predicted bandwidth onto a placement copy.

    ``items`` holds (vm_id, demand, predicted_bw); ties in predicted
    bandwidth break by ascending VM id, servers are scanned in ascending id
    order.  Raises PlacementInfeasibleError naming the first VM that fits
    nowhere; the input placement is left untouched in that case.
    """
    result = placement.copy()
    order = sorted(items, key=lambda it: (-it[2], it[0]))
    scan = sorted(eligible) if eligible is not None else sorted(servers)
    for vm_id, demand, _bw in order:
        for sid in scan:
            if result.fits(sid, demand):
                result.assign(vm_id, demand, sid)
                break
        else:
            raise PlacementInfeasibleError(
                "placement infeasible: no server fits VM %d" % vm_id
            )
    return result


@dataclass
class RebalanceResult:
    placement: Placement
    moved: list[tuple[int, int, int]] = field(default_factory=list)
    emptied_servers: list[int] = field(default_factory=list)
    residual_hogs: list[int] = field(default_factory=list)


def _mean_utilisation(placement: Placement, sid: int) -> float:
    used = placement.used(sid)
    cap = placement.capacity(sid)
    parts = []
    for u, c in zip(used.as_tuple(), cap.as_tuple()):
        parts.append(u / c if c > 0 else 0.0)
    return sum(parts) / 3.0


def rebalance(
    state: int,
    placement: Placement,
    servers: dict[int, Server],
    hog_vms: list[tuple[int, float]] | None = None,
    max_consolidations: int = 2,
) -> RebalanceResult:
    """Adjust placement according to the congestion state.

    Overload (1): migrate the bandwidth-hog VMs onto hog-reserved servers,
    largest predicted bandwidth first; hogs that do not fit are reported as
    residual, never dropped.  Underload (-1): try to empty the least
    utilised ordinary servers by first-fit-decreasing their VMs onto the
    remaining active ordinary servers, deactivating servers that drain
    completely.  Steady (0): no change.
    """
    result = RebalanceResult(placement.copy())

    if state == 0:
        return result

    if state == 1:
        reserved = sorted(sid for sid, s in servers.items() if s.reserved_for_hogs)
        for vm_id, _bw in sorted(hog_vms or [], key=lambda it: (-it[1], it[0])):
            origin = result.placement.server_of(vm_id)
            if origin is None:
                continue
            if servers[origin].reserved_for_hogs:
                continue
            demand = result.placement.demand_of(vm_id)
            for sid in reserved:
                if result.placement.fits(sid, demand):
                    result.placement.move(vm_id, sid)
                    result.moved.append((vm_id, origin, sid))
                    break
            else:
                result.residual_hogs.append(vm_id)
        return result

    # Underload: consolidate.
    ordinary = [
        sid
        for sid, s in servers.items()
        if not s.reserved_for_hogs and result.placement.vms_on(sid)
    ]
    by_load = sorted(ordinary, key=lambda sid: (_mean_utilisation(result.placement, sid), sid))
    drained = 0
    for sid in by_load:
        if drained >= max_consolidations:
            break
        vms = sorted(result.placement.vms_on(sid))
        if not vms:
            continue
        targets = [
            t
            for t in sorted(servers)
            if t != sid
            and not servers[t].reserved_for_hogs
            and result.placement.vms_on(t)
        ]
        trial = result.placement.copy()
        moves = []
        ok = True
        order = sorted(vms, key=lambda v: (-trial.demand_of(v).bw, v))
        for vm_id in order:
            for t in targets:
                if trial.fits(t, trial.demand_of(vm_id)):
                    trial.move(vm_id, t)
                    moves.append((vm_id, sid, t))
                    break
            else:
                ok = False
                break
        if ok and moves:
            result.placement = trial
            result.moved.extend(moves)
            result.emptied_servers.append(sid)
            drained += 1
    return result
