"""Toy rigid-body layer: scenes, analytic contact kinematics and stepping.

Bodies are translation-only point masses, spheres and axis-aligned boxes over
a ground half-space.  This keeps the inertia diagonal and the contact
Jacobians analytic while still producing hyperstatic, ill-conditioned and
strongly coupled multi-contact problems.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .admm import SolverResult, SolverSettings, solve
from .pgs import pgs_settings, solve_pgs
from .problem import ContactProblem

__all__ = [
    "AssembledStep",
    "Body",
    "Contact",
    "ContactSet",
    "Scene",
    "Simulator",
    "StepStats",
    "assemble_step_problem",
    "detect_contacts",
    "load_scene",
    "make_stack_scene",
    "save_scene",
    "step",
    "write_trajectory_csv",
]

CONTACT_MARGIN = 1e-4
GROUND = -1


@dataclass
class Body:
    """Translation-only rigid body: a point mass, sphere or axis-aligned box."""

    mass: float
    position: np.ndarray
    velocity: np.ndarray
    shape: str = "point"  # "point" | "sphere" | "box"
    radius: float = 0.0
    half_extents: np.ndarray | None = None
    mu: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValueError("body mass must be positive")
        self.position = np.asarray(self.position, dtype=float).reshape(3).copy()
        self.velocity = np.asarray(self.velocity, dtype=float).reshape(3).copy()
        if self.shape not in ("point", "sphere", "box"):
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.shape == "sphere" and self.radius <= 0.0:
            raise ValueError("sphere radius must be positive")
        if self.shape == "box":
            if self.half_extents is None:
                raise ValueError("box needs half_extents")
            self.half_extents = np.asarray(self.half_extents, dtype=float).reshape(3).copy()
            if np.any(self.half_extents <= 0.0):
                raise ValueError("box half extents must be positive")

    def copy(self) -> "Body":
        return Body(
            mass=self.mass, position=self.position.copy(), velocity=self.velocity.copy(),
            shape=self.shape, radius=self.radius,
            half_extents=None if self.half_extents is None else self.half_extents.copy(),
            mu=self.mu, name=self.name,
        )

    def bottom(self) -> float:
        if self.shape == "sphere":
            return float(self.position[2] - self.radius)
        if self.shape == "box":
            return float(self.position[2] - self.half_extents[2])
        return float(self.position[2])

    def top(self) -> float:
        if self.shape == "sphere":
            return float(self.position[2] + self.radius)
        if self.shape == "box":
            return float(self.position[2] + self.half_extents[2])
        return float(self.position[2])


@dataclass
class Scene:
    """World state: bodies under gravity above the ground half-space z >= 0."""

    bodies: list[Body]
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    friction_mu: float = 0.5

    def __post_init__(self):
        self.gravity = np.asarray(self.gravity, dtype=float).reshape(3).copy()

    def copy(self) -> "Scene":
        return Scene(
            bodies=[b.copy() for b in self.bodies],
            gravity=self.gravity.copy(),
            friction_mu=self.friction_mu,
        )

    def velocities(self) -> np.ndarray:
        return np.concatenate([b.velocity for b in self.bodies]) if self.bodies else np.zeros(0)

    def mass_diag(self) -> np.ndarray:
        return np.repeat([b.mass for b in self.bodies], 3) if self.bodies else np.zeros(0)


@dataclass(frozen=True)
class Contact:
    """Single contact: normal points from body_b (or ground) into body_a."""

    body_a: int
    body_b: int  # GROUND for the half-space
    point: np.ndarray
    normal: np.ndarray
    separation: float
    mu: float
    corner: int = 0

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.body_a, self.body_b, self.corner)


@dataclass
class ContactSet:
    contacts: list[Contact] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.contacts)

    def __iter__(self):
        return iter(self.contacts)

    def __getitem__(self, idx):
        return self.contacts[idx]

    def keys(self) -> list[tuple[int, int, int]]:
        return [c.key for c in self.contacts]


def _pair_mu(scene: Scene, a: Body, b: Body | None) -> float:
    mu_a = a.mu if a.mu is not None else scene.friction_mu
    mu_b = (b.mu if b.mu is not None else scene.friction_mu) if b is not None else mu_a
    return min(mu_a, mu_b)


_CORNER_SIGNS = ((-1, -1), (1, -1), (-1, 1), (1, 1))


def detect_contacts(scene: Scene, margin: float = CONTACT_MARGIN) -> ContactSet:
    """Analytic narrow phase for the toy shapes.

    Sphere/point vs ground gives one contact, a box bottom face gives its
    four corners, and two stacked axis-aligned boxes give the four corners of
    the horizontal overlap rectangle.
    """
    contacts: list[Contact] = []
    up = np.array([0.0, 0.0, 1.0])
    for ia, body in enumerate(scene.bodies):
        gap = body.bottom()
        if gap > margin:
            continue
        mu = _pair_mu(scene, body, None)
        if body.shape in ("point", "sphere"):
            point = np.array([body.position[0], body.position[1], 0.0])
            contacts.append(Contact(ia, GROUND, point, up.copy(), gap, mu, 0))
        else:
            hx, hy, _ = body.half_extents
            for corner, (sx, sy) in enumerate(_CORNER_SIGNS):
                point = np.array([body.position[0] + sx * hx,
                                  body.position[1] + sy * hy,
                                  body.bottom()])
                contacts.append(Contact(ia, GROUND, point, up.copy(), gap, mu, corner))

    boxes = [i for i, b in enumerate(scene.bodies) if b.shape == "box"]
    for ii, ia in enumerate(boxes):
        for ib in boxes[ii + 1:]:
            lower, upper = (ia, ib) if scene.bodies[ia].position[2] <= scene.bodies[ib].position[2] else (ib, ia)
            lo, hi = scene.bodies[lower], scene.bodies[upper]
            gap = hi.bottom() - lo.top()
            if gap > margin:
                continue
            x0 = max(lo.position[0] - lo.half_extents[0], hi.position[0] - hi.half_extents[0])
            x1 = min(lo.position[0] + lo.half_extents[0], hi.position[0] + hi.half_extents[0])
            y0 = max(lo.position[1] - lo.half_extents[1], hi.position[1] - hi.half_extents[1])
            y1 = min(lo.position[1] + lo.half_extents[1], hi.position[1] + hi.half_extents[1])
            if x0 >= x1 or y0 >= y1:
                continue
            z = 0.5 * (lo.top() + hi.bottom())
            mu = _pair_mu(scene, hi, lo)
            rect = ((x0, y0), (x1, y0), (x0, y1), (x1, y1))
            for corner, (px, py) in enumerate(rect):
                contacts.append(Contact(upper, lower, np.array([px, py, z]),
                                        up.copy(), gap, mu, corner))
    return ContactSet(contacts)


def _tangent_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Deterministic frame: T1 = n x e with e the axis least aligned with n.
    e = np.zeros(3)
    e[int(np.argmin(np.abs(normal)))] = 1.0
    t1 = np.cross(normal, e)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(normal, t1)
    return t1, t2


@dataclass
class AssembledStep:
    problem: ContactProblem
    v_f: np.ndarray
    J: np.ndarray
    gamma: np.ndarray
    contacts: ContactSet


def assemble_step_problem(scene: Scene, contacts: ContactSet, tau=None,
                          dt: float = 1e-3, baumgarte: float = 0.2,
                          compliance=None) -> AssembledStep:
    """Build the step NCP from the scene and a contact set.

    The free velocity integrates gravity and external forces, Jacobian rows
    are stacked (T1, T2, N) per contact, and the corrective term closes
    positive gaps within the step while pushing penetrations out at the
    Baumgarte rate.  ``compliance`` is a scalar normal compliance or a full
    3*n_c diagonal.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    n_b = len(scene.bodies)
    n_v = 3 * n_b
    n_c = len(contacts)
    masses = scene.mass_diag()

    tau_v = np.zeros(n_v) if tau is None else np.asarray(tau, dtype=float).reshape(n_v)
    v = scene.velocities()
    accel = np.tile(scene.gravity, n_b) + (tau_v / masses if n_b else tau_v)
    v_f = v + dt * accel

    J = np.zeros((3 * n_c, n_v))
    gamma = np.zeros(3 * n_c)
    mu = np.empty(n_c)
    for ci, contact in enumerate(contacts):
        t1, t2 = _tangent_basis(contact.normal)
        rows = np.vstack([t1, t2, contact.normal])
        ja = slice(3 * contact.body_a, 3 * contact.body_a + 3)
        J[3 * ci : 3 * ci + 3, ja] = rows
        if contact.body_b != GROUND:
            jb = slice(3 * contact.body_b, 3 * contact.body_b + 3)
            J[3 * ci : 3 * ci + 3, jb] = -rows
        phi = contact.separation
        gamma[3 * ci + 2] = phi / dt if phi > 0.0 else baumgarte * phi / dt
        mu[ci] = contact.mu

    if compliance is None:
        R_diag = np.zeros(3 * n_c)
    else:
        comp = np.asarray(compliance, dtype=float)
        if comp.ndim == 0:
            R_diag = np.zeros(3 * n_c)
            R_diag[2::3] = float(comp)
        else:
            R_diag = comp.reshape(3 * n_c).copy()

    Jw = J / masses[None, :] if n_b else J
    G = Jw @ J.T
    G = (G + G.T) * 0.5
    g = J @ v_f + gamma
    problem = ContactProblem(G=G, g=g, mu=mu, R_diag=R_diag)
    return AssembledStep(problem=problem, v_f=v_f, J=J, gamma=gamma, contacts=contacts)


@dataclass
class StepStats:
    result: SolverResult
    contacts: ContactSet
    problem: ContactProblem
    v_new: np.ndarray
    J: np.ndarray
    gamma: np.ndarray
    v_f: np.ndarray


class Simulator:
    """Symplectic-Euler stepper with contact-set-keyed impulse warm starts.

    The previous step's impulses are reused whenever the contact set is
    unchanged (same pair and corner keys); any mismatch falls back to a cold
    zero start.
    """

    def __init__(self, scene: Scene, solver: str = "admm",
                 settings: SolverSettings | None = None, dt: float = 1e-3,
                 baumgarte: float = 0.2, compliance=None, omega: float = 1.0,
                 margin: float = CONTACT_MARGIN):
        if solver not in ("admm", "pgs"):
            raise ValueError(f"unknown solver {solver!r}")
        self.scene = scene.copy()
        self.solver = solver
        if settings is None:
            settings = SolverSettings() if solver == "admm" else pgs_settings()
        self.settings = replace(settings, warm_start_policy="provided")
        self.dt = dt
        self.baumgarte = baumgarte
        self.compliance = compliance
        self.omega = omega
        self.margin = margin
        self._prev_impulses: dict[tuple[int, int, int], np.ndarray] = {}

    def _warm_start(self, contacts: ContactSet) -> np.ndarray | None:
        keys = contacts.keys()
        if not keys or set(keys) != set(self._prev_impulses):
            return None
        return np.concatenate([self._prev_impulses[k] for k in keys])

    def step(self, tau=None) -> StepStats:
        contacts = detect_contacts(self.scene, self.margin)
        asm = assemble_step_problem(self.scene, contacts, tau=tau, dt=self.dt,
                                    baumgarte=self.baumgarte, compliance=self.compliance)
        warm = self._warm_start(contacts)
        if self.solver == "admm":
            result = solve(asm.problem, self.settings, warm_start=warm)
        else:
            result = solve_pgs(asm.problem, self.settings, omega=self.omega,
                               warm_start=warm)

        masses = self.scene.mass_diag()
        impulse = asm.J.T @ result.lam if len(contacts) else np.zeros(3 * len(self.scene.bodies))
        v_new = asm.v_f + impulse / masses
        for i, body in enumerate(self.scene.bodies):
            body.velocity = v_new[3 * i : 3 * i + 3].copy()
            body.position = body.position + self.dt * body.velocity

        self._prev_impulses = {
            c.key: result.lam[3 * i : 3 * i + 3].copy() for i, c in enumerate(contacts)
        }
        return StepStats(result=result, contacts=contacts, problem=asm.problem,
                         v_new=v_new, J=asm.J, gamma=asm.gamma, v_f=asm.v_f)

    def run(self, n_steps: int, tau=None) -> list[StepStats]:
        return [self.step(tau) for _ in range(n_steps)]


def step(scene: Scene, tau=None, dt: float = 1e-3, solver: str = "admm",
         settings: SolverSettings | None = None, **kwargs) -> tuple[Scene, StepStats]:
    """Single cold-started step; returns the advanced scene and step stats."""
    sim = Simulator(scene, solver=solver, settings=settings, dt=dt, **kwargs)
    stats = sim.step(tau)
    return sim.scene, stats


def make_stack_scene(n_layers: int, mass_ratio: float = 1.0, mu: float = 0.5,
                     box_size: float = 1.0) -> Scene:
    """Stack of unit boxes with masses geometrically spaced from 1 to the ratio.

    The heaviest box sits on top, reproducing the heavy-on-top stress case
    that drives the Delassus conditioning with the mass ratio.
    """
    if n_layers < 1:
        raise ValueError("need at least one layer")
    if mass_ratio <= 0.0:
        raise ValueError("mass ratio must be positive")
    h = box_size / 2.0
    bodies = []
    for k in range(n_layers):
        mass = mass_ratio ** (k / (n_layers - 1)) if n_layers > 1 else 1.0
        bodies.append(Body(
            mass=mass,
            position=np.array([0.0, 0.0, h + k * box_size]),
            velocity=np.zeros(3),
            shape="box",
            half_extents=np.array([h, h, h]),
            name=f"box{k}",
        ))
    return Scene(bodies=bodies, friction_mu=mu)


def scene_to_dict(scene: Scene) -> dict:
    bodies = []
    for b in scene.bodies:
        entry = {
            "mass": b.mass,
            "position": [float(x) for x in b.position],
            "velocity": [float(x) for x in b.velocity],
            "shape": b.shape,
        }
        if b.shape == "sphere":
            entry["radius"] = b.radius
        if b.shape == "box":
            entry["half_extents"] = [float(x) for x in b.half_extents]
        if b.mu is not None:
            entry["mu"] = b.mu
        if b.name:
            entry["name"] = b.name
        bodies.append(entry)
    return {
        "bodies": bodies,
        "gravity": [float(x) for x in scene.gravity],
        "friction_mu": scene.friction_mu,
    }


def scene_from_dict(doc: dict) -> tuple[Scene, dict]:
    """Scene plus the simulation config keys (dt, steps, solver, ...)."""
    bodies = []
    for entry in doc["bodies"]:
        bodies.append(Body(
            mass=float(entry["mass"]),
            position=np.asarray(entry["position"], dtype=float),
            velocity=np.asarray(entry.get("velocity", (0.0, 0.0, 0.0)), dtype=float),
            shape=entry.get("shape", "point"),
            radius=float(entry.get("radius", 0.0)),
            half_extents=np.asarray(entry["half_extents"], dtype=float)
            if "half_extents" in entry else None,
            mu=float(entry["mu"]) if "mu" in entry else None,
            name=entry.get("name", ""),
        ))
    scene = Scene(
        bodies=bodies,
        gravity=np.asarray(doc.get("gravity", (0.0, 0.0, -9.81)), dtype=float),
        friction_mu=float(doc.get("friction_mu", 0.5)),
    )
    config = {k: doc[k] for k in ("dt", "steps", "solver", "baumgarte",
                                  "compliance", "eps_abs", "max_iter") if k in doc}
    return scene, config


def save_scene(scene: Scene, path, **config) -> None:
    doc = scene_to_dict(scene)
    doc.update(config)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_scene(path) -> tuple[Scene, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return scene_from_dict(doc)


def write_trajectory_csv(path, history: list[tuple[Scene, StepStats]]) -> None:
    """One row per body per step: positions, velocities and solver stats."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,body,px,py,pz,vx,vy,vz,status,iterations,cholesky_updates\n")
        for k, (scene, stats) in enumerate(history):
            for i, b in enumerate(scene.bodies):
                px, py, pz = (float(v) for v in b.position)
                vx, vy, vz = (float(v) for v in b.velocity)
                fh.write(
                    f"{k},{b.name or i},{px!r},{py!r},{pz!r},{vx!r},{vy!r},{vz!r},"
                    f"{stats.result.status.value},{stats.result.iterations},"
                    f"{stats.result.cholesky_updates}\n"
                )
