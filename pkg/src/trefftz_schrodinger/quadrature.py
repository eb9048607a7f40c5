"""Gauss-Legendre rules, the Duffy triangle rule and skeleton face integration."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mesh import Face

MAX_NODES = 64


@dataclass(frozen=True)
class QuadratureRule:
    domain: str
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self):
        return self.weights.size

    def __iter__(self):
        return iter((self.nodes, self.weights))


def _legendre_with_derivative(n, x):
    p0, p1 = np.ones_like(x), x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1)
    return p1, dp


def gauss_legendre(n):
    """n-point Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n."""
    if not 1 <= n <= MAX_NODES:
        raise ValueError(f"node count must lie in [1, {MAX_NODES}], got {n}")
    if n == 1:
        return QuadratureRule("segment", np.zeros(1), np.full(1, 2.0))
    i = np.arange(1, n + 1)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre_with_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    p, dp = _legendre_with_derivative(n, x)
    w = 2.0 / ((1 - x * x) * dp * dp)
    order = np.argsort(x)
    x, w = x[order], w[order]
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return QuadratureRule("segment", x, w)


def unit_interval_rule(n):
    """Gauss-Legendre rule mapped to [0, 1]."""
    r = gauss_legendre(n)
    return 0.5 * (r.nodes + 1), 0.5 * r.weights


def square_rule(n):
    r = gauss_legendre(n)
    X, Y = np.meshgrid(r.nodes, r.nodes, indexing="ij")
    W = np.outer(r.weights, r.weights)
    return QuadratureRule("square", np.column_stack([X.ravel(), Y.ravel()]), W.ravel())


def duffy_triangle(n):
    """Collapsed tensor Gauss rule on the reference triangle {x, y >= 0, x + y <= 1}."""
    if n < 1:
        raise ValueError("node count must be >= 1")
    u, wu = unit_interval_rule(n)
    v, wv = unit_interval_rule(n)
    U, Vv = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv) * (1 - U)
    nodes = np.column_stack([U.ravel(), (Vv * (1 - U)).ravel()])
    return QuadratureRule("triangle", nodes, W.ravel())


def default_node_count(p, frequency=0.0, length=0.0):
    """Nodes per axis for an oscillatory integrand.

    ``frequency * length`` is the phase variation of the integrand across
    the face along one axis.
    """
    phase = abs(frequency) * abs(length)
    return int(min(MAX_NODES, max(p + 3, math.ceil(phase / 2) + p) + 6))


def cell_points(space, n):
    """Physical quadrature points and weights on every spatial cell.

    Returns ``points`` of shape ``(n_cells, nq, d)`` and ``weights`` of shape
    ``(n_cells, nq)``.
    """
    cv = space.vertices[space.cells]
    if space.cell_shape == "interval":
        r = gauss_legendre(n)
        a, b = cv[:, 0, 0], cv[:, 1, 0]
        pts = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * r.nodes[None, :]
        w = 0.5 * (b - a)[:, None] * r.weights[None, :]
        return pts[..., None], w
    if space.cell_shape == "triangle":
        r = duffy_triangle(n)
        v0 = cv[:, 0]
        e1 = cv[:, 1] - v0
        e2 = cv[:, 2] - v0
        pts = (v0[:, None, :] + r.nodes[None, :, 0:1] * e1[:, None, :]
               + r.nodes[None, :, 1:2] * e2[:, None, :])
        jac = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        return pts, jac[:, None] * r.weights[None, :]
    r = square_rule(n)
    lo = cv[:, 0]
    hi = cv[:, 2]
    half = 0.5 * (hi - lo)
    pts = 0.5 * (lo + hi)[:, None, :] + half[:, None, :] * r.nodes[None, :, :]
    jac = half[:, 0] * half[:, 1]
    return pts, jac[:, None] * r.weights[None, :]


def facet_time_points(facets, n_space, t0, t1, n_time):
    """Tensor points on (spatial facet) x (t0, t1).

    ``facets`` has shape ``(nf, 1, d)`` (points) or ``(nf, 2, d)`` (segments).
    Returns ``x`` of shape ``(nf, nq, d)``, ``t`` of shape ``(nq,)`` and
    ``weights`` of shape ``(nf, nq)`` with ``nq = n_s * n_time``.
    """
    tn, tw = unit_interval_rule(n_time)
    t = t0 + (t1 - t0) * tn
    tw = (t1 - t0) * tw
    nf = facets.shape[0]
    if facets.shape[1] == 1:
        x = np.repeat(facets, n_time, axis=1)
        w = np.broadcast_to(tw, (nf, n_time)).copy()
        return x, t, w
    sn, sw = unit_interval_rule(n_space)
    p0, p1 = facets[:, 0], facets[:, 1]
    length = np.linalg.norm(p1 - p0, axis=1)
    xs = p0[:, None, :] + sn[None, :, None] * (p1 - p0)[:, None, :]
    ws = length[:, None] * sw[None, :]
    x = np.repeat(xs, n_time, axis=1)
    tt = np.tile(t, n_space)
    w = (ws[:, :, None] * tw[None, None, :]).reshape(nf, -1)
    return x, tt, w


def face_rule(face: Face, n):
    """Physical quadrature nodes ``(x, t)`` and weights for one face."""
    verts = face.vertices
    d = verts.shape[1]
    if face.is_space_like:
        t_level = face.times[0]
        if d == 1:
            r = gauss_legendre(n)
            a, b = verts[0, 0], verts[1, 0]
            x = (0.5 * (a + b) + 0.5 * (b - a) * r.nodes)[:, None]
            w = 0.5 * abs(b - a) * r.weights
        elif verts.shape[0] == 3:
            r = duffy_triangle(n)
            e1, e2 = verts[1] - verts[0], verts[2] - verts[0]
            x = verts[0] + r.nodes[:, :1] * e1 + r.nodes[:, 1:] * e2
            w = abs(e1[0] * e2[1] - e1[1] * e2[0]) * r.weights
        else:
            r = square_rule(n)
            lo, hi = verts[0], verts[2]
            half = 0.5 * (hi - lo)
            x = 0.5 * (lo + hi) + half * r.nodes
            w = abs(half[0] * half[1]) * r.weights
        return x, np.full(w.size, t_level), w
    x, t, w = facet_time_points(verts[None], n, face.times[0], face.times[1], n)
    return x[0], t, w[0]


def integrate_face(face: Face, n, integrand):
    """Integrate ``integrand(x, t)`` over a skeleton face with n nodes per axis."""
    x, t, w = face_rule(face, n)
    return complex(np.sum(w * integrand(x, t)))
