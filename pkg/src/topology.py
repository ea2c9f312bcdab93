"""
Virtual network model for the emulated switch fleet.

Describes switches, inter-switch links and attached hosts, and answers the
adjacency and path questions the discovery relay and the path-provision
benchmark ask. The graph itself is a networkx ``Graph`` over datapath ids.
"""

import random
from dataclasses import dataclass, field
from enum import StrEnum

import networkx as nx

from errors import (
    DisconnectedGraph,
    DuplicatePortAssignment,
    NoPath,
    TopologyError,
    UnknownHost,
    UnknownSwitch,
    UnknownSwitchReference,
)
from openflow.constants import Port10

PortRef = tuple[int, int]  # (datapath_id, port_no)


class TopologyKind(StrEnum):
    SINGLE = "single"
    LINEAR = "linear"
    TREE = "tree"
    CUSTOM = "custom"


class HostRole(StrEnum):
    PLAIN = "plain"
    DNS_SERVER = "dns_server"
    NFS_SERVER = "nfs_server"
    MULTICAST_SERVER = "multicast_server"


@dataclass(frozen=True, slots=True)
class SwitchSpec:
    datapath_id: int
    n_ports: int = 0


@dataclass(frozen=True, slots=True)
class Link:
    a: PortRef
    b: PortRef

    def reversed(self) -> "Link":
        return Link(self.b, self.a)


@dataclass(frozen=True, slots=True)
class HostSpec:
    mac: bytes
    attached: PortRef
    role: HostRole = HostRole.PLAIN


@dataclass(frozen=True, slots=True)
class TopologySpec:
    kind: TopologyKind
    switches: tuple[SwitchSpec, ...]
    links: tuple[Link, ...] = ()
    hosts: tuple[HostSpec, ...] = ()


@dataclass(frozen=True, slots=True)
class Hop:
    datapath_id: int
    in_port: int
    out_port: int


@dataclass(frozen=True, slots=True)
class TopologySize:
    switches: int
    links: int
    hosts: int


# 0xFFFF names the pool of synthetic flow destinations.
MAX_DATAPATH_ID = 0xFFFE


def host_mac(datapath_id: int, index: int) -> bytes:
    """Locally administered MAC ``02:00:<dpid16>:<idx16>``."""
    if not 0 <= datapath_id <= 0xFFFF or not 0 <= index <= 0xFFFF:
        raise TopologyError(f"host address needs 16-bit ids, got s{datapath_id} host {index}")
    value = 0x020000000000 | datapath_id << 16 | index
    return value.to_bytes(6, "big")


def format_mac(mac: bytes) -> str:
    return ":".join(f"{octet:02x}" for octet in mac)


def format_port(ref: PortRef) -> str:
    return f"s{ref[0]}:{ref[1]}"


class _PortAllocator:
    """Hands out port numbers 1, 2, ... per switch."""

    def __init__(self) -> None:
        self._next: dict[int, int] = {}

    def take(self, dpid: int) -> PortRef:
        port = self._next.get(dpid, 1)
        self._next[dpid] = port + 1
        return dpid, port

    def used(self, dpid: int) -> int:
        return self._next.get(dpid, 1) - 1


def _attach_hosts(
    alloc: _PortAllocator, dpids: list[int], hosts_per_switch: int
) -> list[HostSpec]:
    hosts = []
    for dpid in dpids:
        for index in range(1, hosts_per_switch + 1):
            hosts.append(HostSpec(host_mac(dpid, index), alloc.take(dpid)))
    return hosts


def _finish(
    kind: TopologyKind,
    alloc: _PortAllocator,
    dpids: list[int],
    links: list[Link],
    hosts: list[HostSpec],
) -> TopologySpec:
    switches = tuple(SwitchSpec(dpid, alloc.used(dpid)) for dpid in dpids)
    return TopologySpec(kind, switches, tuple(links), tuple(hosts))


def single(hosts_per_switch: int = 64) -> TopologySpec:
    alloc = _PortAllocator()
    hosts = _attach_hosts(alloc, [1], hosts_per_switch)
    return _finish(TopologyKind.SINGLE, alloc, [1], [], hosts)


def linear(n: int, hosts_per_switch: int = 64) -> TopologySpec:
    """``n`` switches in a chain, dpids 1..n, hosts on the low ports."""
    if n < 1:
        raise TopologyError("linear topology needs at least one switch")
    dpids = list(range(1, n + 1))
    alloc = _PortAllocator()
    hosts = _attach_hosts(alloc, dpids, hosts_per_switch)
    links = [Link(alloc.take(dpid), alloc.take(dpid + 1)) for dpid in dpids[:-1]]
    return _finish(TopologyKind.LINEAR, alloc, dpids, links, hosts)


def tree(depth: int, fanout: int, hosts_per_leaf: int = 64) -> TopologySpec:
    """Complete tree numbered breadth-first from the root (dpid 1).

    Hosts hang off the leaves only, as in a Mininet tree.
    """
    if depth < 1 or fanout < 1:
        raise TopologyError("tree topology needs depth >= 1 and fanout >= 1")
    alloc = _PortAllocator()
    links: list[Link] = []
    level = [1]
    dpids = [1]
    next_dpid = 2
    for _ in range(depth - 1):
        children_level = []
        for parent in level:
            for _ in range(fanout):
                child = next_dpid
                next_dpid += 1
                links.append(Link(alloc.take(parent), alloc.take(child)))
                children_level.append(child)
        dpids.extend(children_level)
        level = children_level
    hosts = _attach_hosts(alloc, level, hosts_per_leaf)
    return _finish(TopologyKind.TREE, alloc, dpids, links, hosts)


OFNET_SERVER_ROLES = {
    2: HostRole.DNS_SERVER,
    12: HostRole.NFS_SERVER,
    20: HostRole.MULTICAST_SERVER,
}


def ofnet() -> TopologySpec:
    """Seven-switch binary tree with 20 hosts; hosts 2, 12 and 20 are servers."""
    base = tree(depth=3, fanout=2, hosts_per_leaf=5)
    hosts = tuple(
        HostSpec(host.mac, host.attached, OFNET_SERVER_ROLES.get(number, HostRole.PLAIN))
        for number, host in enumerate(base.hosts, start=1)
    )
    return TopologySpec(TopologyKind.TREE, base.switches, base.links, hosts)


def custom(
    switches: list[int], links: list[Link], hosts: list[HostSpec] | None = None
) -> TopologySpec:
    return TopologySpec(
        TopologyKind.CUSTOM,
        tuple(SwitchSpec(dpid) for dpid in switches),
        tuple(links),
        tuple(hosts or ()),
    )


@dataclass
class Topology:
    """Immutable adjacency structure built from a ``TopologySpec``."""

    spec: TopologySpec
    graph: nx.Graph
    _neighbors: dict[PortRef, PortRef] = field(repr=False)
    _hosts: dict[bytes, HostSpec] = field(repr=False)
    _hosts_by_switch: dict[int, list[HostSpec]] = field(repr=False)
    _n_ports: dict[int, int] = field(repr=False)

    @property
    def switches(self) -> list[int]:
        return sorted(self._n_ports)

    @property
    def hosts(self) -> list[HostSpec]:
        return list(self.spec.hosts)

    @property
    def size(self) -> TopologySize:
        return TopologySize(len(self._n_ports), len(self.spec.links), len(self._hosts))

    def _check_switch(self, dpid: int) -> None:
        if dpid not in self._n_ports:
            raise UnknownSwitch(f"switch {dpid} is not part of the topology")

    def ports_of(self, dpid: int) -> list[int]:
        self._check_switch(dpid)
        return list(range(1, self._n_ports[dpid] + 1))

    def hosts_on(self, dpid: int) -> list[HostSpec]:
        self._check_switch(dpid)
        return list(self._hosts_by_switch.get(dpid, []))

    def host(self, mac: bytes) -> HostSpec:
        try:
            return self._hosts[mac]
        except KeyError:
            raise UnknownHost(f"no host with MAC {format_mac(mac)}") from None

    def neighbor_of(self, dpid: int, port_no: int) -> PortRef | None:
        self._check_switch(dpid)
        return self._neighbors.get((dpid, port_no))

    def inter_switch_ports(self, dpid: int) -> list[int]:
        self._check_switch(dpid)
        return sorted(port for (owner, port) in self._neighbors if owner == dpid)

    def links(self) -> list[tuple[PortRef, PortRef]]:
        """Every link in both directions, sorted."""
        return sorted(self._neighbors.items())

    def shortest_path(self, src_mac: bytes, dst_mac: bytes) -> list[Hop]:
        """Minimal-hop path; ties go to the lexicographically smallest dpid sequence."""
        src, dst = self.host(src_mac), self.host(dst_mac)
        src_dpid, dst_dpid = src.attached[0], dst.attached[0]
        try:
            distance = nx.single_source_shortest_path_length(self.graph, dst_dpid)
        except nx.NodeNotFound:
            raise NoPath(f"no path to switch {dst_dpid}") from None
        if src_dpid not in distance:
            raise NoPath(f"{format_mac(src_mac)} cannot reach {format_mac(dst_mac)}")

        dpids = [src_dpid]
        while dpids[-1] != dst_dpid:
            here = dpids[-1]
            dpids.append(
                min(n for n in self.graph[here] if distance.get(n) == distance[here] - 1)
            )

        hops = []
        in_port = src.attached[1]
        for here, after in zip(dpids, dpids[1:]):
            out_port, next_in = self.graph.edges[here, after]["ports"][here, after]
            hops.append(Hop(here, in_port, out_port))
            in_port = next_in
        hops.append(Hop(dst_dpid, in_port, dst.attached[1]))
        return hops

    def connected_within(self, src_dpid: int, dst_dpid: int, allowed: set[int]) -> bool:
        """True when src and dst are joined by a path using only ``allowed`` switches."""
        if src_dpid not in allowed or dst_dpid not in allowed:
            return False
        if src_dpid == dst_dpid:
            return True
        return bool(nx.has_path(self.graph.subgraph(allowed), src_dpid, dst_dpid))

    def host_pairs(self, limit: int | None = None, seed: int = 0) -> list[tuple[bytes, bytes]]:
        """Ordered (src, dst) host pairs, sampled down to ``limit`` with ``seed``."""
        macs = sorted(self._hosts)
        pairs = [(s, d) for s in macs for d in macs if s != d]
        if limit is None or limit >= len(pairs):
            return pairs
        return sorted(random.Random(seed).sample(pairs, limit))


def build(spec: TopologySpec) -> Topology:
    """Validate ``spec`` and build its adjacency structure."""
    if not spec.switches:
        raise TopologyError("topology has no switches")
    n_ports: dict[int, int] = {}
    for switch in spec.switches:
        if switch.datapath_id in n_ports:
            raise TopologyError(f"switch {switch.datapath_id} declared twice")
        n_ports[switch.datapath_id] = switch.n_ports

    used: set[PortRef] = set()

    def claim(ref: PortRef, what: str) -> None:
        dpid, port = ref
        if dpid not in n_ports:
            raise UnknownSwitchReference(f"{what} references unknown switch {dpid}")
        if not 1 <= port < Port10.MAX:
            raise TopologyError(f"{what} uses invalid port {port} on switch {dpid}")
        if ref in used:
            raise DuplicatePortAssignment(f"{format_port(ref)} is assigned twice")
        used.add(ref)
        n_ports[dpid] = max(n_ports[dpid], port)

    graph = nx.Graph()
    graph.add_nodes_from(sorted(n_ports))
    neighbors: dict[PortRef, PortRef] = {}
    for link in spec.links:
        if link.a == link.b:
            raise DuplicatePortAssignment(f"link loops {format_port(link.a)} onto itself")
        claim(link.a, "link")
        claim(link.b, "link")
        neighbors[link.a] = link.b
        neighbors[link.b] = link.a
        (a_dpid, a_port), (b_dpid, b_port) = link.a, link.b
        if not graph.has_edge(a_dpid, b_dpid):
            # Parallel links keep the first one for path computation.
            graph.add_edge(
                a_dpid,
                b_dpid,
                ports={(a_dpid, b_dpid): (a_port, b_port), (b_dpid, a_dpid): (b_port, a_port)},
            )

    hosts: dict[bytes, HostSpec] = {}
    by_switch: dict[int, list[HostSpec]] = {}
    for host in spec.hosts:
        if len(host.mac) != 6:
            raise TopologyError(f"host MAC must be 6 bytes, got {len(host.mac)}")
        if host.mac in hosts:
            raise TopologyError(f"duplicate host MAC {format_mac(host.mac)}")
        claim(host.attached, f"host {format_mac(host.mac)}")
        hosts[host.mac] = host
        by_switch.setdefault(host.attached[0], []).append(host)

    if not nx.is_connected(graph):
        parts = nx.number_connected_components(graph)
        raise DisconnectedGraph(f"switch graph has {parts} disconnected components")

    return Topology(spec, graph, neighbors, hosts, by_switch, n_ports)
