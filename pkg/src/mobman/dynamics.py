"""Rigid-body terms of the arm: M(q), C(q, qd), G(q) and forward dynamics.

The model follows the energy route.  Each joint drives one body: the slewing
column, the boom, the forearm and the wrist (the short parallelogram link is
treated as part of the wrist's mass budget).  Bodies are modelled as a point
mass at the centre of mass plus a scalar spin inertia about the joint axis;
the slewing term uses the point-mass radius, so the mass matrix splits into
the column inertia and a 3x3 planar block.  A payload point mass rides at the
tool point.

Everything here is SI (kg, m, s, rad); the arm geometry arrives in mm from
the kinematics module and is scaled once at construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SolveFailure, ValidationError
from .kinematics import DEFAULT_DH, DHTable, ToolOffset

GRAVITY = 9.81
_MM = 1e-3


@dataclass(frozen=True)
class LinkInertialParams:
    """Per-body mass properties.

    masses, com_offsets and inertias are 4-tuples for the column, boom,
    forearm and wrist bodies.  com_offsets are measured along each link from
    its joint (for the column: radially from the slew axis), inertias are
    about the respective joint axis.  payload_mass sits at the tool point.
    """

    masses: tuple
    com_offsets: tuple
    inertias: tuple
    payload_mass: float
    gravity: float = GRAVITY
    viscous: tuple | None = None

    def validate(self, prefix: str = "inertia") -> list:
        problems = []
        for name, vals in (("masses", self.masses), ("com_offsets", self.com_offsets),
                           ("inertias", self.inertias)):
            if len(vals) != 4:
                problems.append("%s.%s: expected 4 entries" % (prefix, name))
        for i, m in enumerate(self.masses):
            if m <= 0.0:
                problems.append("%s.masses[%d]: must be > 0" % (prefix, i))
        for i, c in enumerate(self.com_offsets):
            if c < 0.0:
                problems.append("%s.com_offsets[%d]: must be >= 0" % (prefix, i))
        for i, val in enumerate(self.inertias):
            if val <= 0.0:
                problems.append("%s.inertias[%d]: must be > 0" % (prefix, i))
        if self.payload_mass < 0.0:
            problems.append("%s.payload_mass: must be >= 0" % prefix)
        if self.gravity < 0.0:
            problems.append("%s.gravity: must be >= 0" % prefix)
        if self.viscous is not None:
            for i, b in enumerate(self.viscous):
                if b < 0.0:
                    problems.append("%s.viscous[%d]: must be >= 0" % (prefix, i))
        return problems


def default_inertial_params(geometry: DHTable = DEFAULT_DH,
                            total_mass: float = 400.0,
                            payload_mass: float = 20.0,
                            gravity: float = GRAVITY) -> LinkInertialParams:
    """Uniform slender-rod defaults.

    Mass is spread over the structural lengths (column incl. its lateral
    offset, boom, forearm, wrist incl. the parallelogram stub) in proportion
    to length; centres of mass sit mid-link and rod inertias are taken about
    the joint end (m L^2 / 3).
    """
    a1, a2, a3, a4, a5 = (v * _MM for v in geometry.a)
    d1 = geometry.d1 * _MM
    lengths = (d1 + a1, a2, a3, a4 + a5)
    total_len = sum(lengths)
    masses = tuple(total_mass * L / total_len for L in lengths)
    # The column spins about its own axis; use the lateral offset as its
    # effective rod length.  Planar bodies use their link lengths.
    rod = (a1, a2, a3, a5)
    com_offsets = tuple(L / 2.0 for L in rod)
    inertias = tuple(m * L * L / 3.0 for m, L in zip(masses, rod))
    return LinkInertialParams(masses=masses, com_offsets=com_offsets,
                              inertias=inertias, payload_mass=payload_mass,
                              gravity=gravity)


@dataclass
class DynamicsTerms:
    """Snapshot of the equation-of-motion terms at one state."""

    mass: np.ndarray
    coriolis: np.ndarray
    gravity: np.ndarray


class ArmDynamics:
    """Equation-of-motion evaluator bound to one geometry + parameter set."""

    def __init__(self, params: LinkInertialParams | None = None,
                 geometry: DHTable = DEFAULT_DH, tool: ToolOffset | None = None):
        self.geometry = geometry
        self.tool = tool if tool is not None else ToolOffset(0.0)
        self.params = params if params is not None else default_inertial_params(geometry)
        a = geometry.a
        self.a1, self.a2, self.a3, self.a4, self.a5 = (v * _MM for v in a)
        self.d1 = geometry.d1 * _MM
        self.y5p = self.tool.y5p * _MM
        self.m1, self.m2, self.m3, self.m4 = self.params.masses
        self.c1, self.c2, self.c3, self.c4 = self.params.com_offsets
        self.mp = self.params.payload_mass
        self.g = self.params.gravity
        # Spin inertias about each body's own centre of mass (parallel axis).
        self.i1 = self.params.inertias[0]
        self.ic2 = self.params.inertias[1] - self.m2 * self.c2 ** 2
        self.ic3 = self.params.inertias[2] - self.m3 * self.c3 ** 2
        self.ic4 = self.params.inertias[3] - self.m4 * self.c4 ** 2
        for name, val in (("boom", self.ic2), ("forearm", self.ic3),
                          ("wrist", self.ic4)):
            if val < 0.0:
                raise ValidationError(
                    "inertia of %s body is below its point-mass bound" % name)

    # -- mass matrix ------------------------------------------------------

    def mass_matrix(self, q) -> np.ndarray:
        """Symmetric positive-definite inertia matrix (4x4)."""
        c2, s2 = math.cos(q[1]), math.sin(q[1])
        c3, s3 = math.cos(q[2]), math.sin(q[2])
        c4, s4 = math.cos(q[3]), math.sin(q[3])
        a2, a3, a5, y5p = self.a2, self.a3, self.a5, self.y5p
        m2, m3, m4, mp = self.m2, self.m3, self.m4, self.mp
        cm2, cm3, cm4 = self.c2, self.c3, self.c4

        # Slewing radii of the body mass points.
        r2 = self.a1 + cm2 * c2
        r3 = self.a1 + a2 * c2 + cm3 * c3
        r4 = self.a1 + a2 * c2 + a3 * c3 + self.a4 + cm4 * c4
        rp = self.a1 + a2 * c2 + a3 * c3 + self.a4 + a5 * c4 - y5p * s4

        m11 = self.i1 + m2 * r2 * r2 + m3 * r3 * r3 + m4 * r4 * r4 + mp * rp * rp
        m22 = m2 * cm2 ** 2 + (m3 + m4 + mp) * a2 ** 2 + self.ic2
        m33 = m3 * cm3 ** 2 + (m4 + mp) * a3 ** 2 + self.ic3
        m44 = m4 * cm4 ** 2 + mp * (a5 ** 2 + y5p ** 2) + self.ic4
        d23 = math.cos(q[1] - q[2])
        m23 = a2 * (m3 * cm3 + (m4 + mp) * a3) * d23
        d24 = math.cos(q[1] - q[3])
        w24 = math.sin(q[1] - q[3])
        m24 = a2 * (m4 * cm4 * d24 + mp * (a5 * d24 + y5p * w24))
        d34 = math.cos(q[2] - q[3])
        w34 = math.sin(q[2] - q[3])
        m34 = a3 * (m4 * cm4 * d34 + mp * (a5 * d34 + y5p * w34))

        return np.array([
            [m11, 0.0, 0.0, 0.0],
            [0.0, m22, m23, m24],
            [0.0, m23, m33, m34],
            [0.0, m24, m34, m44],
        ])

    def mass_matrix_partials(self, q) -> np.ndarray:
        """dM/dq as a (4, 4, 4) array; the base-yaw slab is identically zero."""
        c2, s2 = math.cos(q[1]), math.sin(q[1])
        c3, s3 = math.cos(q[2]), math.sin(q[2])
        c4, s4 = math.cos(q[3]), math.sin(q[3])
        a2, a3, a5, y5p = self.a2, self.a3, self.a5, self.y5p
        m2, m3, m4, mp = self.m2, self.m3, self.m4, self.mp
        cm2, cm3, cm4 = self.c2, self.c3, self.c4

        r2 = self.a1 + cm2 * c2
        r3 = self.a1 + a2 * c2 + cm3 * c3
        r4 = self.a1 + a2 * c2 + a3 * c3 + self.a4 + cm4 * c4
        rp = self.a1 + a2 * c2 + a3 * c3 + self.a4 + a5 * c4 - y5p * s4

        out = np.zeros((4, 4, 4))

        # d m11
        dm11_2 = -2.0 * s2 * (m2 * r2 * cm2 + a2 * (m3 * r3 + m4 * r4 + mp * rp))
        dm11_3 = -2.0 * s3 * (m3 * r3 * cm3 + a3 * (m4 * r4 + mp * rp))
        dm11_4 = 2.0 * (m4 * r4 * (-cm4 * s4) + mp * rp * (-a5 * s4 - y5p * c4))

        s23 = math.sin(q[1] - q[2])
        k23 = a2 * (m3 * cm3 + (m4 + mp) * a3)
        dm23_2 = -k23 * s23
        dm23_3 = k23 * s23

        s24 = math.sin(q[1] - q[3])
        c24 = math.cos(q[1] - q[3])
        dm24_2 = a2 * (-m4 * cm4 * s24 + mp * (-a5 * s24 + y5p * c24))
        dm24_4 = -dm24_2

        s34 = math.sin(q[2] - q[3])
        c34 = math.cos(q[2] - q[3])
        dm34_3 = a3 * (-m4 * cm4 * s34 + mp * (-a5 * s34 + y5p * c34))
        dm34_4 = -dm34_3

        out[1, 0, 0] = dm11_2
        out[1, 1, 2] = out[1, 2, 1] = dm23_2
        out[1, 1, 3] = out[1, 3, 1] = dm24_2
        out[2, 0, 0] = dm11_3
        out[2, 1, 2] = out[2, 2, 1] = dm23_3
        out[2, 2, 3] = out[2, 3, 2] = dm34_3
        out[3, 0, 0] = dm11_4
        out[3, 1, 3] = out[3, 3, 1] = dm24_4
        out[3, 2, 3] = out[3, 3, 2] = dm34_4
        return out

    def mass_matrix_partials_fd(self, q, step: float = 1e-3, order: int = 4) -> np.ndarray:
        """Finite-difference dM/dq (central 2nd or 4th order); used as a
        cross-check for the closed-form partials."""
        q = np.asarray(q, dtype=float)
        out = np.zeros((4, 4, 4))
        for i in range(4):
            e = np.zeros(4)
            e[i] = 1.0
            if order == 4:
                out[i] = (-self.mass_matrix(q + 2 * step * e)
                          + 8.0 * self.mass_matrix(q + step * e)
                          - 8.0 * self.mass_matrix(q - step * e)
                          + self.mass_matrix(q - 2 * step * e)) / (12.0 * step)
            else:
                out[i] = (self.mass_matrix(q + step * e)
                          - self.mass_matrix(q - step * e)) / (2.0 * step)
        return out

    # -- velocity and gravity terms --------------------------------------

    def coriolis_matrix(self, q, qd, partials: str = "analytic",
                        fd_step: float = 1e-3) -> np.ndarray:
        """Coriolis/centrifugal matrix from the Christoffel symbols of M."""
        if partials == "analytic":
            dm = self.mass_matrix_partials(q)
        elif partials == "fd":
            dm = self.mass_matrix_partials_fd(q, step=fd_step)
        else:
            raise ValueError("partials must be 'analytic' or 'fd'")
        qd = np.asarray(qd, dtype=float)
        # c_kj = sum_i 0.5 (dM_kj/dq_i + dM_ki/dq_j - dM_ij/dq_k) qd_i
        term1 = np.einsum("ikj,i->kj", dm, qd)
        term2 = np.einsum("jki,i->kj", dm, qd)
        term3 = np.einsum("kij,i->kj", dm, qd)
        return 0.5 * (term1 + term2 - term3)

    def gravity_vector(self, q) -> np.ndarray:
        """Generalized gravity torques; the slewing joint sees none."""
        c2 = math.cos(q[1])
        c3 = math.cos(q[2])
        c4, s4 = math.cos(q[3]), math.sin(q[3])
        g = self.g
        g2 = g * c2 * (self.m2 * self.c2 + (self.m3 + self.m4 + self.mp) * self.a2)
        g3 = g * c3 * (self.m3 * self.c3 + (self.m4 + self.mp) * self.a3)
        g4 = g * (c4 * (self.m4 * self.c4 + self.mp * self.a5)
                  - s4 * self.mp * self.y5p)
        return np.array([0.0, g2, g3, g4])

    # -- energies (independent per-body route, used as the test oracle) ---

    def _body_states(self, q, qd):
        """Per planar body: mass, planar COM velocity, slew radius, spin rate,
        spin inertia about the COM."""
        u2p = np.array([-math.sin(q[1]), math.cos(q[1])])
        u3p = np.array([-math.sin(q[2]), math.cos(q[2])])
        u4 = np.array([math.cos(q[3]), math.sin(q[3])])
        u4p = np.array([-math.sin(q[3]), math.cos(q[3])])

        c2, c3, c4, s4 = math.cos(q[1]), math.cos(q[2]), math.cos(q[3]), math.sin(q[3])
        bodies = []
        # boom
        v = self.c2 * qd[1] * u2p
        bodies.append((self.m2, v, self.a1 + self.c2 * c2, qd[1], self.ic2))
        # forearm
        v = self.a2 * qd[1] * u2p + self.c3 * qd[2] * u3p
        bodies.append((self.m3, v, self.a1 + self.a2 * c2 + self.c3 * c3,
                       qd[2], self.ic3))
        # wrist
        v = self.a2 * qd[1] * u2p + self.a3 * qd[2] * u3p + self.c4 * qd[3] * u4p
        bodies.append((self.m4, v,
                       self.a1 + self.a2 * c2 + self.a3 * c3 + self.a4 + self.c4 * c4,
                       qd[3], self.ic4))
        # payload (lever combines the wrist link and the perpendicular tool stub)
        lever = self.a5 * u4p - self.y5p * u4
        v = self.a2 * qd[1] * u2p + self.a3 * qd[2] * u3p + qd[3] * lever
        bodies.append((self.mp, v,
                       self.a1 + self.a2 * c2 + self.a3 * c3 + self.a4
                       + self.a5 * c4 - self.y5p * s4,
                       0.0, 0.0))
        return bodies

    def kinetic_energy(self, q, qd) -> float:
        """Total kinetic energy summed body by body."""
        k = 0.5 * self.i1 * qd[0] ** 2
        for m, v, radius, spin, icom in self._body_states(q, qd):
            k += 0.5 * m * (float(v @ v) + (radius * qd[0]) ** 2)
            k += 0.5 * icom * spin ** 2
        return float(k)

    def potential_energy(self, q) -> float:
        """Gravitational potential, datum at the chassis deck."""
        s2, s3, s4 = math.sin(q[1]), math.sin(q[2]), math.sin(q[3])
        c4 = math.cos(q[3])
        z2 = self.d1 + self.c2 * s2
        z3 = self.d1 + self.a2 * s2 + self.c3 * s3
        z4 = self.d1 + self.a2 * s2 + self.a3 * s3 + self.c4 * s4
        zp = self.d1 + self.a2 * s2 + self.a3 * s3 + self.a5 * s4 + self.y5p * c4
        z1 = 0.5 * self.d1
        return float(self.g * (self.m1 * z1 + self.m2 * z2 + self.m3 * z3
                               + self.m4 * z4 + self.mp * zp))

    # -- dynamics ---------------------------------------------------------

    def terms(self, q, qd) -> DynamicsTerms:
        return DynamicsTerms(mass=self.mass_matrix(q),
                             coriolis=self.coriolis_matrix(q, qd),
                             gravity=self.gravity_vector(q))

    def inverse_dynamics(self, q, qd, qdd) -> np.ndarray:
        """Joint torques that realize the given acceleration."""
        tau = (self.mass_matrix(q) @ np.asarray(qdd, dtype=float)
               + self.coriolis_matrix(q, qd) @ np.asarray(qd, dtype=float)
               + self.gravity_vector(q))
        if self.params.viscous is not None:
            tau = tau + np.asarray(self.params.viscous) * np.asarray(qd)
        return tau

    def forward_dynamics(self, q, qd, tau) -> np.ndarray:
        """Joint accelerations for applied torques tau."""
        qd = np.asarray(qd, dtype=float)
        rhs = (np.asarray(tau, dtype=float)
               - self.coriolis_matrix(q, qd) @ qd
               - self.gravity_vector(q))
        if self.params.viscous is not None:
            rhs = rhs - np.asarray(self.params.viscous) * qd
        m = self.mass_matrix(q)
        if not np.all(np.isfinite(m)):
            raise SolveFailure("mass matrix has non-finite entries")
        try:
            return np.linalg.solve(m, rhs)
        except np.linalg.LinAlgError as exc:
            raise SolveFailure("mass matrix is singular: %s" % exc) from exc
