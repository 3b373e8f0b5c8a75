"""Plain-text snapshot export/import of a network state.

Format: `# key value` header lines carrying the full run configuration, then
one `node <id> <x> <y> <local|random> <P>` line per agent (sorted by id) and
one `edge <i> <j> <p> <local|random>` line per link (i < j, sorted), where
the edge tag records which attachment strategy created the link.  Floats are
printed with repr, so export -> import -> export round-trips byte-identically.

The per-agent power written out is the canonical recomputation: the sum of
incident edge powers folded in ascending neighbor-id order.
"""
from __future__ import annotations

from dataclasses import fields

from .core import Kind, LinkResult, Network, Params, pair_power


class CorruptSnapshotError(ValueError):
    """Snapshot file violates the format or a structural invariant."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


_P_TOL = 1e-12


def _canonical_power(net, agent_id):
    total = 0.0
    for j in net.neighbors(agent_id):
        total += net.edge_power(agent_id, j)
    return total


def snapshot_text(net: Network, params: Params) -> str:
    lines = ["# churnmesh snapshot"]
    for f in fields(Params):
        lines.append(f"# {f.name} {getattr(params, f.name)!r}")
    for i in net.agent_ids():
        a = net.agent(i)
        p = _canonical_power(net, i)
        lines.append(f"node {i} {a.x!r} {a.y!r} {a.kind.value} {p!r}")
    edges = []
    for i in net.agent_ids():
        for j in net.neighbors(i):
            if i < j:
                si, sj = net.slot_of[i], net.slot_of[j]
                e = net.adj[si][sj]
                tag = "random" if net.erand[e] else "local"
                edges.append((i, j, float(net.ep[e]), tag))
    for i, j, p, tag in sorted(edges):
        lines.append(f"edge {i} {j} {p!r} {tag}")
    return "\n".join(lines) + "\n"


def export_snapshot(state, path, params=None):
    """Write a snapshot of ``state`` (a SimState or a Network) to ``path``."""
    net = getattr(state, "net", state)
    if params is None:
        params = state.params
    with open(path, "w") as fh:
        fh.write(snapshot_text(net, params))


def _parse_value(field_type, raw):
    if field_type is int:
        return int(raw)
    if field_type is float:
        return float(raw)
    return raw.strip("'\"")


def import_snapshot(path):
    """Reconstruct (Network, Params) from a snapshot file.

    Raises CorruptSnapshotError (with a line number) on malformed lines,
    duplicate nodes or edges, budget violations, or stored powers that
    disagree with the edge list.
    """
    with open(path) as fh:
        raw_lines = fh.read().splitlines()

    header = {}
    nodes = []  # (line_no, id, x, y, kind, stored_p)
    edges = []  # (line_no, i, j, stored_p, tag)
    for ln, line in enumerate(raw_lines, start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].strip().split(None, 1)
            if len(parts) == 2:
                header[parts[0]] = parts[1]
            continue
        parts = line.split()
        try:
            if parts[0] == "node" and len(parts) == 6:
                nodes.append(
                    (ln, int(parts[1]), float(parts[2]), float(parts[3]), parts[4], float(parts[5]))
                )
            elif parts[0] == "edge" and len(parts) == 5:
                edges.append((ln, int(parts[1]), int(parts[2]), float(parts[3]), parts[4]))
            else:
                raise CorruptSnapshotError(ln, f"unrecognized line {line[:40]!r}")
        except (ValueError, IndexError) as exc:
            if isinstance(exc, CorruptSnapshotError):
                raise
            raise CorruptSnapshotError(ln, f"unparseable line: {exc}") from None

    kwargs = {}
    for f in fields(Params):
        if f.name in header:
            try:
                kwargs[f.name] = _parse_value(f.type if isinstance(f.type, type) else
                                              {"int": int, "float": float, "str": str}[f.type],
                                              header[f.name])
            except (ValueError, KeyError):
                raise CorruptSnapshotError(0, f"bad header value for {f.name}") from None
    if "n_agents" not in kwargs:
        raise CorruptSnapshotError(0, "missing n_agents header")
    params = Params(**kwargs)
    if len(nodes) != params.n_agents:
        raise CorruptSnapshotError(0, f"{len(nodes)} node lines but n_agents={params.n_agents}")

    net = Network(params.n_agents, delta=params.delta, p_max=params.p_max)
    for ln, nid, x, y, kind, _sp in nodes:
        if kind not in ("local", "random"):
            raise CorruptSnapshotError(ln, f"bad kind {kind!r}")
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise CorruptSnapshotError(ln, "position outside the unit square")
        try:
            net.add_agent(x, y, Kind(kind), agent_id=nid)
        except ValueError as exc:
            raise CorruptSnapshotError(ln, str(exc)) from None

    for ln, i, j, stored_p, tag in edges:
        if tag not in ("local", "random"):
            raise CorruptSnapshotError(ln, f"bad edge tag {tag!r}")
        if i == j:
            raise CorruptSnapshotError(ln, "self-loop edge")
        try:
            ai, aj = net.agent(i), net.agent(j)
        except KeyError:
            raise CorruptSnapshotError(ln, f"edge references unknown agent {i} or {j}") from None
        p = pair_power((ai.x, ai.y), (aj.x, aj.y), params.delta)
        if abs(p - stored_p) > _P_TOL * max(1.0, p):
            raise CorruptSnapshotError(ln, f"edge power {stored_p!r} inconsistent with positions")
        res = net.add_link(i, j, random_origin=(tag == "random"))
        if res is LinkResult.ALREADY_LINKED:
            raise CorruptSnapshotError(ln, f"duplicate edge {i}-{j}")
        if res is LinkResult.BUDGET_EXCEEDED:
            raise CorruptSnapshotError(ln, f"edge {i}-{j} breaks the power budget")

    for ln, nid, _x, _y, _k, stored_p in nodes:
        p = _canonical_power(net, nid)
        if abs(p - stored_p) > _P_TOL * max(1.0, p):
            raise CorruptSnapshotError(ln, f"stored power {stored_p!r} inconsistent with edges")

    net.verify_ledger(reset=True)
    return net, params
