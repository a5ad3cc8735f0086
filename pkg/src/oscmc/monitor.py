"""Inter-VM link surveillance.

Maintains the authorised-link log (IVCL), builds per-server observed-link
matrices (VLAM), classifies observed flows against the log and raises
co-location, cascading and vulnerability threat events.  The monitor never
sees user records, so ground-truth maliciousness cannot leak into any
detection result; it only works from placement, observed links, the log,
performance samples and server vulnerability scores.

Conventions used throughout:
  * a link is a directed flow (src, dst) and is authorised iff dst appears
    in the IVCL entry of src;
  * a co-location event is an observed unauthorised flow between two VMs
    hosted on the same server;
  * a cascading event is a co-location event whose receiving VM (the relay)
    has an observed outgoing flow to a VM on a different server, i.e. the
    breach can propagate off-server through the relay's connections;
  * a vulnerability event fires when a VM's delivered throughput fraction
    and delivered bandwidth both fall below its guaranteed threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import Link, Placement


class UnregisteredVmError(Exception):
    """A link references a VM the authorised-link log does not know."""


class IncompleteTelemetryError(Exception):
    """A placed VM has no performance sample."""


class UndefinedCoverageError(Exception):
    """Attack coverage requested for a user that owns no VMs."""


LinkEnds = tuple[int, int]


def _ends(link: Link | LinkEnds) -> LinkEnds:
    if isinstance(link, Link):
        return link.ends
    return (link[0], link[1])


class Ivcl:
    """Authorised-link log: per source VM, the set of permitted destinations.

    Every VM admitted to the data centre is registered here, possibly with an
    empty destination set.  The log is treated as immutable within a
    monitoring interval.
    """

    def __init__(self):
        self._authorized: dict[int, set[int]] = {}

    def register(self, vm_id: int) -> None:
        self._authorized.setdefault(vm_id, set())

    def grant(self, src: int, dst: int) -> None:
        if src == dst:
            raise ValueError("cannot authorise a self-link")
        self.register(src)
        self.register(dst)
        self._authorized[src].add(dst)

    def is_registered(self, vm_id: int) -> bool:
        return vm_id in self._authorized

    def authorized_dsts(self, src: int) -> frozenset[int]:
        if src not in self._authorized:
            raise UnregisteredVmError("unregistered VM %d" % src)
        return frozenset(self._authorized[src])

    def is_authorized(self, src: int, dst: int) -> bool:
        if src not in self._authorized:
            raise UnregisteredVmError("unregistered VM %d" % src)
        if dst not in self._authorized:
            raise UnregisteredVmError("unregistered VM %d" % dst)
        return dst in self._authorized[src]

    @property
    def registered(self) -> frozenset[int]:
        return frozenset(self._authorized)

    def copy(self) -> "Ivcl":
        clone = Ivcl()
        clone._authorized = {vm: set(dsts) for vm, dsts in self._authorized.items()}
        return clone


@dataclass
class LinkRelation:
    """Classification of one observed link: 1 = unauthorised, 0 = authorised."""

    link: LinkEnds
    value: int


def classify_link(link: Link | LinkEnds, ivcl: Ivcl) -> LinkRelation:
    """Compare an observed flow against the authorised-link log."""
    src, dst = _ends(link)
    value = 0 if ivcl.is_authorized(src, dst) else 1
    return LinkRelation((src, dst), value)


@dataclass
class Vlam:
    """Observed-link matrix of one server for the current interval."""

    server_id: int
    links: set[LinkEnds] = field(default_factory=set)


def build_vlams(placement: Placement, links, server_ids=None) -> dict[int, Vlam]:
    """Distribute observed links onto the VLAM of each hosting server.

    A link is recorded on the server of its source and, when different, on
    the server of its destination, so every VLAM entry has at least one
    local endpoint.
    """
    if server_ids is None:
        server_ids = placement.server_ids
    vlams = {sid: Vlam(sid) for sid in sorted(server_ids)}
    for link in links:
        src, dst = _ends(link)
        for sid in {placement.server_of(src), placement.server_of(dst)}:
            if sid is not None:
                vlams[sid].links.add((src, dst))
    return vlams


def observed_links(vlams: dict[int, Vlam]) -> set[LinkEnds]:
    merged: set[LinkEnds] = set()
    for vlam in vlams.values():
        merged |= vlam.links
    return merged


# -- threat events ------------------------------------------------------


@dataclass(frozen=True)
class ColocationEvent:
    server: int
    src: int
    dst: int


@dataclass(frozen=True)
class CascadingEvent:
    src: int
    relay: int
    dst: int
    src_server: int
    dst_server: int


@dataclass(frozen=True)
class VulnerabilityEvent:
    vm: int
    server: int
    high_risk: bool = False


def detect_colocation(
    placement: Placement, vlams: dict[int, Vlam], ivcl: Ivcl
) -> list[ColocationEvent]:
    """Unauthorised flows between VMs hosted on the same server."""
    events = []
    for sid in sorted(vlams):
        for src, dst in sorted(vlams[sid].links):
            if placement.server_of(src) != sid or placement.server_of(dst) != sid:
                continue
            if classify_link((src, dst), ivcl).value == 1:
                events.append(ColocationEvent(sid, src, dst))
    return events


def cascades_from_colocation(
    colocation: list[ColocationEvent],
    vlams: dict[int, Vlam],
    placement: Placement,
) -> list[CascadingEvent]:
    """Join co-location events with the relays' observed outgoing flows."""
    outgoing: dict[int, set[int]] = {}
    for a, b in observed_links(vlams):
        outgoing.setdefault(a, set()).add(b)

    events = []
    for coloc in colocation:
        relay = coloc.dst
        for dst in sorted(outgoing.get(relay, ())):
            dst_server = placement.server_of(dst)
            if dst_server is None or dst_server == coloc.server:
                continue
            events.append(
                CascadingEvent(coloc.src, relay, dst, coloc.server, dst_server)
            )
    return events


def detect_cascading(
    placement: Placement, vlams: dict[int, Vlam], ivcl: Ivcl
) -> list[CascadingEvent]:
    """Breaches that can propagate to another server through a relay VM.

    For every co-located unauthorised flow src -> relay, any observed flow
    relay -> dst toward a VM on a different server forms a cascade
    (src, relay, dst), regardless of the relay flow's own authorisation.
    """
    return cascades_from_colocation(
        detect_colocation(placement, vlams, ivcl), vlams, placement
    )


def detect_vulnerability(
    perf: dict[int, tuple[float, float]],
    thresholds: dict[int, tuple[float, float]],
    placement: Placement,
    vuln_scores: dict[int, float],
    high_risk_score: float = 7.0,
) -> list[VulnerabilityEvent]:
    """VMs starved below their guaranteed threshold on both indicators.

    ``perf`` maps vm -> (delivered throughput fraction, delivered bandwidth)
    over the interval; ``thresholds`` maps vm -> (tp_min, bw_min).  An event
    fires only when both figures fall below their guarantee, and is flagged
    high risk when the hosting server's vulnerability score reaches
    ``high_risk_score``.
    """
    events = []
    for vm in sorted(placement.vm_ids):
        if vm not in perf or vm not in thresholds:
            raise IncompleteTelemetryError("incomplete telemetry for VM %d" % vm)
        tp_avl, bw_avl = perf[vm]
        tp_min, bw_min = thresholds[vm]
        if tp_avl < tp_min and bw_avl < bw_min:
            server = placement.server_of(vm)
            score = vuln_scores.get(server, 0.0)
            events.append(VulnerabilityEvent(vm, server, score >= high_risk_score))
    return events


def aggregate_breaches(
    colocation: list[ColocationEvent],
    cascading: list[CascadingEvent],
    vulnerability: list[VulnerabilityEvent],
    owners: dict[int, int],
) -> dict[int, int]:
    """Per-user breach totals, keyed by the victim VM's owner.

    The victim of a co-location or cascading event is the receiving VM; the
    victim of a vulnerability event is the starved VM itself.
    """
    totals: dict[int, int] = {}
    for ev in colocation:
        victim = owners[ev.dst]
        totals[victim] = totals.get(victim, 0) + 1
    for ev in cascading:
        victim = owners[ev.dst]
        totals[victim] = totals.get(victim, 0) + 1
    for ev in vulnerability:
        victim = owners[ev.vm]
        totals[victim] = totals.get(victim, 0) + 1
    return totals


# -- malicious link and VM identification -------------------------------


def malicious_links(vm_id: int, vlams: dict[int, Vlam], ivcl: Ivcl) -> set[LinkEnds]:
    """Observed flows sourced by a VM that the log does not authorise."""
    if not ivcl.is_registered(vm_id):
        raise UnregisteredVmError("unregistered VM %d" % vm_id)
    allowed = ivcl.authorized_dsts(vm_id)
    return {
        (src, dst)
        for src, dst in observed_links(vlams)
        if src == vm_id and dst not in allowed
    }


def all_malicious_links(vlams: dict[int, Vlam], ivcl: Ivcl) -> dict[int, set[LinkEnds]]:
    """Unauthorised flows grouped by source VM (sources with none omitted)."""
    grouped: dict[int, set[LinkEnds]] = {}
    for src, dst in observed_links(vlams):
        if classify_link((src, dst), ivcl).value == 1:
            grouped.setdefault(src, set()).add((src, dst))
    return grouped


def identify_malicious_vms(
    vlams: dict[int, Vlam], ivcl: Ivcl, min_links: int = 1
) -> set[int]:
    """VMs sourcing at least ``min_links`` unauthorised flows this interval."""
    if min_links < 1:
        raise ValueError("min_links must be >= 1")
    return {
        src
        for src, links in all_malicious_links(vlams, ivcl).items()
        if len(links) >= min_links
    }


@dataclass
class ThreatReport:
    """Everything the monitor concluded about one interval."""

    interval: int
    colocation: list[ColocationEvent] = field(default_factory=list)
    cascading: list[CascadingEvent] = field(default_factory=list)
    vulnerability: list[VulnerabilityEvent] = field(default_factory=list)
    theta_dc: dict[int, int] = field(default_factory=dict)
    malicious_vms: set[int] = field(default_factory=set)
    malicious_link_set: set[LinkEnds] = field(default_factory=set)
    coverage: dict[int, float] = field(default_factory=dict)

    def total_events(self) -> int:
        return len(self.colocation) + len(self.cascading) + len(self.vulnerability)

    def is_clean(self) -> bool:
        return self.total_events() == 0 and not self.malicious_link_set


def build_threat_report(
    interval: int,
    placement: Placement,
    vlams: dict[int, Vlam],
    ivcl: Ivcl,
    owners: dict[int, int],
    perf: dict[int, tuple[float, float]] | None = None,
    thresholds: dict[int, tuple[float, float]] | None = None,
    vuln_scores: dict[int, float] | None = None,
    min_links: int = 1,
    colocation: list[ColocationEvent] | None = None,
) -> ThreatReport:
    """Run the full detection pass for one interval.

    ``colocation`` may carry a precomputed (possibly fanned-out) event list;
    cascades are always joined on the merged observed links.
    """
    if colocation is None:
        colocation = detect_colocation(placement, vlams, ivcl)
    cascading = cascades_from_colocation(colocation, vlams, placement)
    if perf is not None and thresholds is not None:
        vulnerability = detect_vulnerability(
            perf, thresholds, placement, vuln_scores or {}
        )
    else:
        vulnerability = []

    grouped = all_malicious_links(vlams, ivcl)
    bad_vms = {src for src, links in grouped.items() if len(links) >= min_links}
    bad_links: set[LinkEnds] = set()
    for links in grouped.values():
        bad_links |= links

    per_owner: dict[int, set[LinkEnds]] = {}
    owner_counts: dict[int, int] = {}
    for vm, owner in owners.items():
        owner_counts[owner] = owner_counts.get(owner, 0) + 1
    for src, links in grouped.items():
        owner = owners.get(src)
        if owner is not None:
            per_owner.setdefault(owner, set()).update(links)
    coverage = {
        owner: len(links) / owner_counts[owner] for owner, links in per_owner.items()
    }

    return ThreatReport(
        interval=interval,
        colocation=colocation,
        cascading=cascading,
        vulnerability=vulnerability,
        theta_dc=aggregate_breaches(colocation, cascading, vulnerability, owners),
        malicious_vms=bad_vms,
        malicious_link_set=bad_links,
        coverage=coverage,
    )


def attack_coverage(
    attacker: int, owners: dict[int, int], reports: list[ThreatReport]
) -> float:
    """Malicious links per attacker VM across a window of reports."""
    attacker_vms = {vm for vm, owner in owners.items() if owner == attacker}
    if not attacker_vms:
        raise UndefinedCoverageError("undefined coverage: user %d owns no VMs" % attacker)
    links: set[LinkEnds] = set()
    for report in reports:
        links |= {l for l in report.malicious_link_set if l[0] in attacker_vms}
    return len(links) / len(attacker_vms)


# -- quarantine ---------------------------------------------------------


@dataclass
class QuarantineDirective:
    terminate_links: set[LinkEnds] = field(default_factory=set)
    suspend_vms: set[int] = field(default_factory=set)
    notify_servers: set[int] = field(default_factory=set)


def quarantine(
    report: ThreatReport, placement: Placement, vlams: dict[int, Vlam]
) -> QuarantineDirective:
    """Directive terminating every malicious link and suspending every
    detected malicious VM; neighbouring servers hosting any endpoint are
    listed for notification."""
    notify: set[int] = set()
    for src, dst in report.malicious_link_set:
        for vm in (src, dst):
            sid = placement.server_of(vm)
            if sid is not None:
                notify.add(sid)
    for vm in report.malicious_vms:
        sid = placement.server_of(vm)
        if sid is not None:
            notify.add(sid)
    return QuarantineDirective(
        terminate_links=set(report.malicious_link_set),
        suspend_vms=set(report.malicious_vms),
        notify_servers=notify,
    )


# -- evaluation helpers -------------------------------------------------


def colocation_server_fraction(
    events: list[ColocationEvent], total_servers: int
) -> float:
    """Fraction of servers with at least one co-location event."""
    if total_servers <= 0:
        raise ValueError("total_servers must be positive")
    return len({ev.server for ev in events}) / total_servers


def cascading_victim_fraction(
    events: list[CascadingEvent], owners: dict[int, int], candidate_users
) -> float:
    """Fraction of candidate users reachable through some cascading event."""
    candidates = set(candidate_users)
    if not candidates:
        raise ValueError("no candidate users")
    reached = {owners[ev.dst] for ev in events if owners.get(ev.dst) in candidates}
    return len(reached) / len(candidates)


def events_csv_rows(report: ThreatReport) -> list[list]:
    """Flatten a report into events.csv rows."""
    rows: list[list] = []
    for ev in report.colocation:
        rows.append([report.interval, "col", ev.src, ev.dst, str(ev.server)])
    for ev in report.cascading:
        rows.append(
            [
                report.interval,
                "cas",
                ev.src,
                ev.dst,
                "%d>%d" % (ev.src_server, ev.dst_server),
            ]
        )
    for ev in report.vulnerability:
        rows.append([report.interval, "vul", "", ev.vm, str(ev.server)])
    return rows
