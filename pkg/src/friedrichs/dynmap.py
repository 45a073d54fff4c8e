"""
The reduced dynamical map in Kraus form and its Choi-matrix certificate.

    rho(t) = A rho A^dag + sum_q w_q B_q rho B_q^dag

Every map of this form is completely positive; the certificate quantifies
how far discretization moves the computed Choi matrix from that ideal and
how well the trace is preserved.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .model import hermitian_basis
from .propagator import AmplitudeTrajectory, ExcitationTrajectory, time_index

__all__ = [
    "KrausSnapshot",
    "ChoiMatrix",
    "CertificationReport",
    "InvalidStateError",
    "snapshot",
    "evolve_density",
    "choi",
    "certify",
]


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class KrausSnapshot:
    t: float
    A: np.ndarray
    kraus: np.ndarray  # (N, n, n), already weighted by sqrt(w_q)

    @property
    def n(self):
        return self.A.shape[0]

    def operators(self):
        return np.concatenate([self.A[None], self.kraus], axis=0)

    def completeness_defect(self):
        ops = self.operators()
        G = np.einsum("kmi,kmj->ij", ops.conj(), ops) - np.eye(self.n)
        return float(np.linalg.norm(G, ord=2))

    def apply(self, X):
        """The map on an arbitrary (not necessarily positive) operator."""
        ops = self.operators()
        return np.einsum("kij,jl,kml->im", ops, X, ops.conj())

    def apply_dual(self, a):
        """Heisenberg picture: ``A^dag a A + sum_q w_q B_q^dag a B_q``."""
        ops = self.operators()
        return np.einsum("kji,jl,klm->im", ops.conj(), a, ops)


def snapshot(traj: AmplitudeTrajectory, exc: ExcitationTrajectory | None, t) -> KrausSnapshot:
    A = traj.samples[time_index(traj, t)]
    n = A.shape[0]
    if exc is None:
        kraus = np.zeros((0, n, n), dtype=complex)
    else:
        kraus = exc.kraus_operators(time_index(exc, t))
    return KrausSnapshot(float(t), A.copy(), kraus)


def _check_density(rho, tol=1e-10):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidStateError("density matrix not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise InvalidStateError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] < -tol:
        raise InvalidStateError("density matrix not positive semidefinite")
    return rho


def evolve_density(rho0, snap: KrausSnapshot) -> np.ndarray:
    rho0 = _check_density(rho0)
    if rho0.shape != snap.A.shape:
        raise InvalidStateError("density matrix dimension does not match the map")
    out = snap.apply(rho0)
    return 0.5 * (out + out.conj().T)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    matrix: np.ndarray
    min_eigenvalue: float
    trace: float

    @property
    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)


def choi(snap: KrausSnapshot) -> ChoiMatrix:
    """``sum_{kl} E_kl (x) Map(E_kl)``, built directly from the Kraus vectors.

    Row index ``(k, i)`` pairs the input unit ``E_kl`` with output row ``i``.
    """
    n = snap.n
    ops = snap.operators()
    # |K>> = sum_k e_k (x) K e_k ; component (k, i) = K[i, k]
    vecs = np.transpose(ops, (0, 2, 1)).reshape(ops.shape[0], n * n)
    C = vecs.T @ vecs.conj()
    C = 0.5 * (C + C.conj().T)
    evals = np.linalg.eigvalsh(C)
    return ChoiMatrix(C, float(evals[0]), float(np.trace(C).real))


@dataclass
class CertificationReport:
    records: list = field(default_factory=list)
    cp_tol: float = 1e-8
    tp_tol: float = 1e-4

    @property
    def passed(self):
        return all(r["passed"] for r in self.records)

    @property
    def failing_times(self):
        return [r["t"] for r in self.records if not r["passed"]]

    @property
    def max_trace_defect(self):
        return max((r["trace_defect"] for r in self.records), default=0.0)

    @property
    def min_choi_eig(self):
        return min((r["choi_min_eig"] for r in self.records), default=0.0)

    def to_json(self):
        doc = {
            "cp_tol": self.cp_tol,
            "tp_tol": self.tp_tol,
            "records": [{k: r[k] for k in ("t", "choi_min_eig", "trace_defect", "norm_defect")}
                        for r in self.records],
            "passed": self.passed,
        }
        return json.dumps(doc, indent=1)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "choi_min_eig", "trace_defect", "norm_defect", "passed"])
            for r in self.records:
                w.writerow([f"{r['t']:.16e}", f"{r['choi_min_eig']:.16e}",
                            f"{r['trace_defect']:.16e}", f"{r['norm_defect']:.16e}",
                            int(r["passed"])])


def certify(traj: AmplitudeTrajectory, exc: ExcitationTrajectory | None, sample_times,
            cp_tol: float = 1e-8, tp_tol: float = 1e-4) -> CertificationReport:
    """CP and TP diagnostics at each sample time.

    The trace defect is ``max |Tr Map(X) - Tr X|`` over the symmetrized matrix
    units ``X``, which span the operator space.
    """
    if cp_tol <= 0 or tp_tol <= 0:
        raise ValueError("tolerances must be positive")
    report = CertificationReport(cp_tol=cp_tol, tp_tol=tp_tol)
    probes = hermitian_basis(traj.n)
    for t in sample_times:
        snap = snapshot(traj, exc, t)
        c = choi(snap)
        td = max(abs(np.trace(snap.apply(X)) - np.trace(X)) for X in probes)
        nd = snap.completeness_defect()
        rec = {"t": float(t), "choi_min_eig": c.min_eigenvalue,
               "trace_defect": float(td), "norm_defect": nd}
        rec["passed"] = c.min_eigenvalue >= -cp_tol and td <= tp_tol
        report.records.append(rec)
    return report
