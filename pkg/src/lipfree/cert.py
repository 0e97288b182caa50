"""Dentability certificates: a DAG of rule applications and its checker.

Every node lives in a *frame*: a list of points of the root space together
with a scale, the frame metric being ``d_root / scale``.  Targets, plans and
separators use frame-local indices, and targets are stored reduced (the
frame's base coefficient dropped).  SUBSPACE moves a certificate from one
frame to another along a point map that is checked to be a scaled isometry
on the whole source frame.

A verified node with target v, eps e and depth j proves that v lies in the
j-th slice derivation of the unit ball of the frame's free space at level e.
"""

from __future__ import annotations

import copy
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import LipfreeError
from .freenorm import FreeVector, TransportPlan, lip_constant_on, pairing
from .metric import PointedMetricSpace
from .rational import RationalLike, as_fraction, fmt, parse_rational

LEAF, MIDPOINT, CONVEX, DILUTE, SUBSPACE = "LEAF", "MIDPOINT", "CONVEX", "DILUTE", "SUBSPACE"
RULES = (LEAF, MIDPOINT, CONVEX, DILUTE, SUBSPACE)
FORMAT = "lipfree.cert/1"


class CertRejection(LipfreeError):
    """Verification failure at ``node``."""

    def __init__(self, node: int, reason: str):
        self.node = node
        self.reason = reason
        super().__init__(f"node {node}: {reason}")


class BadArithmetic(CertRejection):
    pass


class WeakSeparation(CertRejection):
    def __init__(self, node: int, achieved: Fraction, required: Fraction):
        self.achieved, self.required = achieved, required
        super().__init__(node, f"separation {fmt(achieved)} < required {fmt(required)}")


class InfeasibleFlow(CertRejection):
    pass


class NotLipschitz(CertRejection):
    pass


class EpsMismatch(CertRejection):
    pass


class NonIsometricInclusion(CertRejection):
    pass


class MalformedCert(CertRejection):
    pass


@dataclass(frozen=True)
class Frame:
    points: tuple  # root-space indices, in local order
    scale: Fraction  # local metric is d_root / scale
    base: int  # local index


@dataclass
class Node:
    id: int
    rule: str
    frame: int
    eps: Fraction
    depth: int
    target: FreeVector
    children: tuple = ()
    plan: TransportPlan | None = None  # LEAF
    sep: dict | None = None  # MIDPOINT: local index -> value
    weights: tuple | None = None  # CONVEX
    lam: Fraction | None = None  # DILUTE: children = (main, ball leaf)
    sigma: tuple | None = None  # SUBSPACE: child-frame local -> this-frame local
    scale: Fraction | None = None  # SUBSPACE


@dataclass
class DentCert:
    space_hash: str
    frames: list
    nodes: list
    root: int
    intended_ordinal: str | None = None

    @property
    def root_node(self) -> Node:
        return self.nodes[self.root]

    def reroot(self, node_id: int) -> "DentCert":
        """Same DAG with another root (the sub-DAG below it is unchanged)."""
        return DentCert(self.space_hash, self.frames, self.nodes, node_id, self.intended_ordinal)


@dataclass(frozen=True)
class Verified:
    eps: Fraction
    depth: int

    def report(self) -> str:
        return f"VERIFIED eps={fmt(self.eps)} depth={self.depth}\n"


@dataclass(frozen=True)
class Rejection:
    node: int
    error: str
    reason: str

    def report(self) -> str:
        return f"REJECTED node={self.node} error={self.error} reason={self.reason}\n"


# frames -----------------------------------------------------------------

class FrameView:
    """Read-only metric on a frame; enough of the space interface for plans and witnesses."""

    def __init__(self, space: PointedMetricSpace, frame: Frame):
        self.space = space
        self.frame = frame
        self.base = frame.base

    def __len__(self) -> int:
        return len(self.frame.points)

    def dist(self, i: int, j: int) -> Fraction:
        p = self.frame.points
        return Fraction(int(self.space.num[p[i], p[j]]), self.space.den) / self.frame.scale


def transport(v: FreeVector, sigma: Sequence[int], base_from: int, base_to: int) -> FreeVector:
    """Push a reduced vector along a point map, re-reducing at the new base."""
    total = sum(v.values(), Fraction(0))
    items = [(sigma[i], c) for i, c in v.items()]
    items.append((sigma[base_from], -total))
    return FreeVector(items).reduced(base_to)


# building ---------------------------------------------------------------

class CertBuilder:
    """Appends nodes in dependency order, sharing structurally equal nodes."""

    def __init__(self, space: PointedMetricSpace):
        self.space = space
        self.frames: list[Frame] = []
        self._frame_ids: dict = {}
        self.nodes: list[Node] = []
        self._node_ids: dict = {}

    def frame(self, points: Iterable[int], scale: RationalLike = 1, base: int = 0) -> int:
        f = Frame(tuple(int(p) for p in points), as_fraction(scale), int(base))
        if f not in self._frame_ids:
            self._frame_ids[f] = len(self.frames)
            self.frames.append(f)
        return self._frame_ids[f]

    def root_frame(self) -> int:
        return self.frame(range(len(self.space)), 1, self.space.base)

    def view(self, frame: int) -> FrameView:
        return FrameView(self.space, self.frames[frame])

    def _add(self, node: Node) -> int:
        key = _node_key(node)
        if key in self._node_ids:
            return self._node_ids[key]
        node.id = len(self.nodes)
        self.nodes.append(node)
        self._node_ids[key] = node.id
        return node.id

    def leaf(self, frame: int, target: FreeVector, plan: TransportPlan, eps: RationalLike) -> int:
        base = self.frames[frame].base
        return self._add(Node(-1, LEAF, frame, as_fraction(eps), 0, target.reduced(base), plan=plan))

    def molecule_leaf(self, frame: int, x: int, y: int, eps: RationalLike) -> int:
        v = self.view(frame)
        d = v.dist(x, y)
        target = FreeVector({x: 1 / d, y: -1 / d})
        return self.leaf(frame, target, TransportPlan({(x, y): 1 / d}), eps)

    def midpoint(self, frame: int, c1: int, c2: int, sep: dict) -> int:
        a, b = self.nodes[c1], self.nodes[c2]
        target = (a.target + b.target).scale(Fraction(1, 2))
        return self._add(
            Node(-1, MIDPOINT, frame, a.eps, min(a.depth, b.depth) + 1, target, (c1, c2), sep=dict(sep))
        )

    def convex(self, frame: int, children: Sequence[int], weights: Sequence[RationalLike]) -> int:
        ws = tuple(as_fraction(w) for w in weights)
        kids = [self.nodes[c] for c in children]
        target = FreeVector()
        for w, k in zip(ws, kids):
            target = target + k.target.scale(w)
        depth = min(k.depth for k in kids)
        return self._add(Node(-1, CONVEX, frame, kids[0].eps, depth, target, tuple(children), weights=ws))

    def dilute(self, frame: int, main: int, ball: int, lam: RationalLike) -> int:
        lam = as_fraction(lam)
        a, b = self.nodes[main], self.nodes[ball]
        target = a.target.scale(lam) + b.target.scale(1 - lam)
        return self._add(Node(-1, DILUTE, frame, lam * a.eps, a.depth, target, (main, ball), lam=lam))

    def subspace(self, frame: int, child: int, sigma: Sequence[int], scale: RationalLike = 1) -> int:
        scale = as_fraction(scale)
        c = self.nodes[child]
        src = self.frames[c.frame]
        dst = self.frames[frame]
        target = transport(c.target, sigma, src.base, dst.base).scale(1 / scale)
        return self._add(
            Node(-1, SUBSPACE, frame, c.eps, c.depth, target, (child,), sigma=tuple(int(s) for s in sigma), scale=scale)
        )

    def import_cert(self, cert: DentCert, point_map: Sequence[int], scale: RationalLike = 1) -> dict:
        """Copy a certificate over space M into this one along ``point_map`` (M -> here), scaled."""
        scale = as_fraction(scale)
        fmap = {}
        for i, f in enumerate(cert.frames):
            fmap[i] = self.frame([point_map[p] for p in f.points], f.scale * scale, f.base)
        nmap: dict = {}
        for node in cert.nodes:
            new = copy.copy(node)
            new.id = -1
            new.frame = fmap[node.frame]
            new.children = tuple(nmap[c] for c in node.children)
            nmap[node.id] = self._add(new)
        return nmap

    def build(self, root: int, intended_ordinal: str | None = None) -> DentCert:
        return DentCert(self.space.content_hash, list(self.frames), list(self.nodes), root, intended_ordinal)


def _node_key(n: Node) -> tuple:
    return (
        n.rule,
        n.frame,
        n.eps,
        n.depth,
        n.target.key(),
        n.children,
        tuple(sorted(n.plan.flows.items())) if n.plan else None,
        tuple(sorted(n.sep.items())) if n.sep is not None else None,
        n.weights,
        n.lam,
        n.sigma,
        n.scale,
    )


# verification -----------------------------------------------------------

class _Checker:
    def __init__(self, space: PointedMetricSpace, cert: DentCert):
        self.space = space
        self.cert = cert
        self.views: dict = {}
        self.iso_done: set = set()

    def view(self, f: int) -> FrameView:
        if f not in self.views:
            self.views[f] = FrameView(self.space, self.cert.frames[f])
        return self.views[f]

    def check_frames(self) -> None:
        n = len(self.space)
        for fid, f in enumerate(self.cert.frames):
            pts = f.points
            if len(set(pts)) != len(pts) or any(not 0 <= p < n for p in pts):
                raise MalformedCert(-1, f"frame {fid} has repeated or out-of-range points")
            if not 0 <= f.base < len(pts) or f.scale <= 0:
                raise MalformedCert(-1, f"frame {fid} has a bad base or scale")

    def check_support(self, node: Node, v: FreeVector) -> None:
        m = len(self.cert.frames[node.frame].points)
        if any(not 0 <= i < m for i in v):
            raise MalformedCert(node.id, "vector supported outside its frame")

    def isometry(self, node: Node, child: Node) -> None:
        key = (child.frame, node.frame, node.sigma, node.scale)
        if key in self.iso_done:
            return
        src = self.cert.frames[child.frame]
        dst = self.cert.frames[node.frame]
        sigma = node.sigma
        if sigma is None or len(sigma) != len(src.points):
            raise MalformedCert(node.id, "inclusion map has the wrong length")
        if len(set(sigma)) != len(sigma) or any(not 0 <= s < len(dst.points) for s in sigma):
            raise NonIsometricInclusion(node.id, "inclusion map is not injective into the frame")
        if node.scale is None or node.scale <= 0:
            raise MalformedCert(node.id, "SUBSPACE needs a positive scale")
        img = np.array([dst.points[s] for s in sigma], dtype=np.int64)
        pre = np.array(src.points, dtype=np.int64)
        A = self.space.num[np.ix_(img, img)]
        B = self.space.num[np.ix_(pre, pre)]
        # d(img)/dst.scale == scale * d(pre)/src.scale
        r = node.scale * dst.scale / src.scale
        p, q = r.numerator, r.denominator
        big = max(int(np.abs(A).max(initial=0)) * q, int(np.abs(B).max(initial=0)) * p) >= 2**62
        if big:
            A, B = A.astype(object), B.astype(object)
        if not np.array_equal(A * q, B * p):
            bad = np.argwhere(A * q != B * p)[0]
            raise NonIsometricInclusion(
                node.id, f"distance between source points {int(bad[0])},{int(bad[1])} is not preserved"
            )
        self.iso_done.add(key)

    def check(self, node: Node) -> None:
        nid = node.id
        if node.rule not in RULES:
            raise MalformedCert(nid, f"unknown rule {node.rule!r}")
        if node.eps <= 0 or node.depth < 0:
            raise MalformedCert(nid, "eps must be positive and depth non-negative")
        if any(not 0 <= c < nid for c in node.children):
            raise MalformedCert(nid, "children must precede their parent")
        self.check_support(node, node.target)
        kids = [self.cert.nodes[c] for c in node.children]
        if node.rule != SUBSPACE and any(k.frame != node.frame for k in kids):
            raise MalformedCert(nid, "children must share the parent's frame")
        base = self.cert.frames[node.frame].base
        getattr(self, "_" + node.rule.lower())(node, kids, base)

    def _leaf(self, node, kids, base) -> None:
        if kids or node.plan is None:
            raise MalformedCert(node.id, "LEAF needs a plan and no children")
        if node.depth != 0:
            raise BadArithmetic(node.id, "LEAF depth must be 0")
        view = self.view(node.frame)
        if any(not (0 <= i < len(view) and 0 <= j < len(view)) or i == j for i, j in node.plan.flows):
            raise InfeasibleFlow(node.id, "plan uses arcs outside the frame")
        if not node.plan.carries(view, node.target):
            raise InfeasibleFlow(node.id, "plan does not ship the target")
        cost = node.plan.cost(view)
        if cost > 1:
            raise InfeasibleFlow(node.id, f"plan cost {fmt(cost)} exceeds 1")

    def _midpoint(self, node, kids, base) -> None:
        if len(kids) != 2 or node.sep is None:
            raise MalformedCert(node.id, "MIDPOINT needs two children and a separator")
        a, b = kids
        if node.target != (a.target + b.target).scale(Fraction(1, 2)):
            raise BadArithmetic(node.id, "target is not the midpoint of the children")
        if not (node.eps == a.eps == b.eps):
            raise EpsMismatch(node.id, "children and node must share eps")
        if node.depth != min(a.depth, b.depth) + 1:
            raise BadArithmetic(node.id, "depth must be min(children) + 1")
        sep = dict(node.sep)
        if sep.get(base, Fraction(0)) != 0:
            raise NotLipschitz(node.id, "separator must vanish at the base")
        sep[base] = Fraction(0)
        if any(not 0 <= i < len(self.cert.frames[node.frame].points) for i in sep):
            raise MalformedCert(node.id, "separator defined outside the frame")
        diff = a.target - b.target
        missing = [i for i in diff if i not in sep]
        if missing:
            raise MalformedCert(node.id, f"separator undefined at {missing[:5]}")
        lip = lip_constant_on(self.view(node.frame), sep, sep.keys())
        if lip > 1:
            raise NotLipschitz(node.id, f"separator has Lipschitz constant {fmt(lip)}")
        achieved = pairing(diff, sep, base)
        if achieved < 2 * node.eps:
            raise WeakSeparation(node.id, achieved, 2 * node.eps)

    def _convex(self, node, kids, base) -> None:
        ws = node.weights
        if not kids or ws is None or len(ws) != len(kids):
            raise MalformedCert(node.id, "CONVEX needs one weight per child")
        if any(w < 0 for w in ws) or sum(ws) != 1:
            raise BadArithmetic(node.id, "weights must be non-negative and sum to 1")
        expect = FreeVector()
        for w, k in zip(ws, kids):
            expect = expect + k.target.scale(w)
        if node.target != expect:
            raise BadArithmetic(node.id, "target is not the weighted sum of the children")
        if any(k.eps != node.eps for k in kids):
            raise EpsMismatch(node.id, "children and node must share eps")
        if node.depth != min(k.depth for k in kids):
            raise BadArithmetic(node.id, "depth must be the minimum over children")

    def _dilute(self, node, kids, base) -> None:
        if len(kids) != 2 or node.lam is None:
            raise MalformedCert(node.id, "DILUTE needs a main child, a ball leaf and lambda")
        main, ball = kids
        if ball.rule != LEAF:
            raise MalformedCert(node.id, "second DILUTE child must be a LEAF")
        lam = node.lam
        if not 0 < lam < 1:
            raise BadArithmetic(node.id, "lambda must lie in (0, 1)")
        if node.target != main.target.scale(lam) + ball.target.scale(1 - lam):
            raise BadArithmetic(node.id, "target is not the stated combination")
        if node.eps != lam * main.eps:
            raise EpsMismatch(node.id, "eps must be lambda times the main child's eps")
        if node.depth != main.depth:
            raise BadArithmetic(node.id, "depth must equal the main child's depth")

    def _subspace(self, node, kids, base) -> None:
        if len(kids) != 1:
            raise MalformedCert(node.id, "SUBSPACE needs one child")
        (c,) = kids
        self.isometry(node, c)
        src = self.cert.frames[c.frame]
        expect = transport(c.target, node.sigma, src.base, base).scale(1 / node.scale)
        if node.target != expect:
            raise BadArithmetic(node.id, "target is not the image of the child's target")
        if node.eps != c.eps:
            raise EpsMismatch(node.id, "SUBSPACE keeps eps")
        if node.depth != c.depth:
            raise BadArithmetic(node.id, "SUBSPACE keeps depth")


def verify(space: PointedMetricSpace, cert: DentCert) -> Verified:
    """Check every node reachable from the root; raise the first rejection."""
    if cert.space_hash != space.content_hash:
        raise MalformedCert(-1, "certificate refers to a different space")
    if not 0 <= cert.root < len(cert.nodes):
        raise MalformedCert(-1, "root out of range")
    for i, node in enumerate(cert.nodes):
        if node.id != i:
            raise MalformedCert(i, "node ids must equal their positions")
    checker = _Checker(space, cert)
    checker.check_frames()
    reach = set()
    stack = [cert.root]
    while stack:
        i = stack.pop()
        if i in reach:
            continue
        reach.add(i)
        for c in cert.nodes[i].children:
            if not 0 <= c < i:
                raise MalformedCert(i, "children must precede their parent")
            stack.append(c)
    # ids are topologically sorted, so ascending order checks children first
    for i in sorted(reach):
        checker.check(cert.nodes[i])
    r = cert.root_node
    return Verified(r.eps, r.depth)


def check(space: PointedMetricSpace, cert: DentCert) -> Verified | Rejection:
    try:
        return verify(space, cert)
    except CertRejection as e:
        return Rejection(e.node, type(e).__name__, e.reason)


# documents --------------------------------------------------------------

def _vec_doc(v: FreeVector) -> list:
    return [[i, fmt(c)] for i, c in sorted(v.items())]


def _vec_from(doc: list) -> FreeVector:
    return FreeVector((int(i), parse_rational(c)) for i, c in doc)


def to_doc(cert: DentCert) -> dict:
    nodes = []
    for n in cert.nodes:
        d = {
            "id": n.id,
            "rule": n.rule,
            "frame": n.frame,
            "eps": fmt(n.eps),
            "depth": n.depth,
            "target": _vec_doc(n.target),
        }
        if n.children:
            d["children"] = list(n.children)
        if n.plan is not None:
            d["plan"] = [[i, j, fmt(f)] for (i, j), f in sorted(n.plan.flows.items())]
        if n.sep is not None:
            d["sep"] = [[i, fmt(v)] for i, v in sorted(n.sep.items())]
        if n.weights is not None:
            d["weights"] = [fmt(w) for w in n.weights]
        if n.lam is not None:
            d["lambda"] = fmt(n.lam)
        if n.sigma is not None:
            d["map"] = list(n.sigma)
        if n.scale is not None:
            d["scale"] = fmt(n.scale)
        nodes.append(d)
    return {
        "format": FORMAT,
        "space": cert.space_hash,
        "intended_ordinal": cert.intended_ordinal,
        "frames": [{"points": list(f.points), "scale": fmt(f.scale), "base": f.base} for f in cert.frames],
        "nodes": nodes,
        "root": cert.root,
    }


def from_doc(doc: dict) -> DentCert:
    if doc.get("format") != FORMAT:
        raise MalformedCert(-1, f"unsupported certificate format {doc.get('format')!r}")
    frames = [Frame(tuple(int(p) for p in f["points"]), parse_rational(f["scale"]), int(f["base"])) for f in doc["frames"]]
    nodes = []
    for d in doc["nodes"]:
        nodes.append(
            Node(
                id=int(d["id"]),
                rule=d["rule"],
                frame=int(d["frame"]),
                eps=parse_rational(d["eps"]),
                depth=int(d["depth"]),
                target=_vec_from(d["target"]),
                children=tuple(int(c) for c in d.get("children", ())),
                plan=TransportPlan({(int(i), int(j)): parse_rational(f) for i, j, f in d["plan"]})
                if "plan" in d
                else None,
                sep={int(i): parse_rational(v) for i, v in d["sep"]} if "sep" in d else None,
                weights=tuple(parse_rational(w) for w in d["weights"]) if "weights" in d else None,
                lam=parse_rational(d["lambda"]) if "lambda" in d else None,
                sigma=tuple(int(s) for s in d["map"]) if "map" in d else None,
                scale=parse_rational(d["scale"]) if "scale" in d else None,
            )
        )
    return DentCert(doc["space"], frames, nodes, int(doc["root"]), doc.get("intended_ordinal"))


def dumps(cert: DentCert) -> str:
    return json.dumps(to_doc(cert), sort_keys=True, separators=(",", ":")) + "\n"


def loads(text: str) -> DentCert:
    return from_doc(json.loads(text))


# mutations --------------------------------------------------------------

MUTATIONS = ("shrink_separator", "perturb_weight", "infeasible_flow", "swap_child")
EXPECTED_ERROR = {
    "shrink_separator": WeakSeparation,
    "perturb_weight": BadArithmetic,
    "infeasible_flow": InfeasibleFlow,
    "swap_child": WeakSeparation,
}


def _reachable(cert: DentCert) -> list[int]:
    seen = set()
    stack = [cert.root]
    while stack:
        i = stack.pop()
        if i not in seen:
            seen.add(i)
            stack.extend(cert.nodes[i].children)
    return sorted(seen)


def mutate(cert: DentCert, kind: str, seed: int = 0) -> DentCert:
    """Corrupted copy of ``cert``; one reachable node of the relevant rule is changed."""
    rng = random.Random(seed)
    out = copy.deepcopy(cert)
    reach = _reachable(out)
    rule = {"shrink_separator": MIDPOINT, "swap_child": MIDPOINT, "perturb_weight": CONVEX, "infeasible_flow": LEAF}
    if kind not in rule:
        raise ValueError(f"unknown mutation {kind!r}")
    pool = [i for i in reach if out.nodes[i].rule == rule[kind]]
    if not pool:
        raise ValueError(f"certificate has no {rule[kind]} node to corrupt")
    n = out.nodes[rng.choice(pool)]
    if kind == "shrink_separator":
        a, b = out.nodes[n.children[0]], out.nodes[n.children[1]]
        base = out.frames[n.frame].base
        achieved = pairing(a.target - b.target, n.sep, base)
        factor = min(Fraction(1, 2), n.eps / achieved) if achieved > 0 else Fraction(1, 2)
        n.sep = {i: v * factor for i, v in n.sep.items()}
    elif kind == "swap_child":
        n.children = (n.children[1], n.children[0])
    elif kind == "perturb_weight":
        j = rng.randrange(len(n.weights))
        delta = Fraction(1, rng.randint(3, 97))
        n.weights = tuple(w + delta if i == j else w for i, w in enumerate(n.weights))
    else:
        flows = {arc: f / 2 for arc, f in n.plan.flows.items()}
        if not flows:
            flows = {(0, 1): Fraction(1)}
        n.plan = TransportPlan(flows)
    return out
