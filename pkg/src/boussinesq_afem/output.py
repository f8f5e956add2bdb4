"""Convergence CSV and legacy VTK writers.

Both writers are deterministic: identical inputs produce byte-identical
files.  Reals are written with 17 significant digits so a parse-back
recovers them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .adaptivity import ConvergenceRecord
from .config import ProblemConfig
from .mesh import Mesh
from .solver import SolutionState

CSV_HEADER = ("iter,n_elements,n_vertices,ndof,estimator_total,"
              "estimator_ns,estimator_heat,picard_iters,min_h_at_z")


def _fmt(x: float) -> str:
    return format(float(x), ".17e")


def write_convergence_csv(records, path) -> None:
    """One row per adaptive iteration, full-precision scientific notation."""
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    lines = [CSV_HEADER]
    for r in records:
        lines.append(",".join([
            str(r.iteration), str(r.n_elements), str(r.n_vertices),
            str(r.ndof), _fmt(r.estimator_total), _fmt(r.estimator_ns),
            _fmt(r.estimator_heat), str(r.picard_iterations),
            _fmt(r.min_h_at_z),
        ]))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("ascii"))


def read_convergence_csv(path) -> list[ConvergenceRecord]:
    """Parse a convergence CSV back into records (exact round trip)."""
    lines = Path(path).read_text("ascii").strip().split("\n")
    if lines[0] != CSV_HEADER:
        raise ValueError(f"unexpected CSV header: {lines[0]!r}")
    records = []
    for line in lines[1:]:
        it, ne, nv, nd, et, ens, eh, pi, mh = line.split(",")
        records.append(ConvergenceRecord(
            iteration=int(it), n_elements=int(ne), n_vertices=int(nv),
            ndof=int(nd), estimator_total=float(et), estimator_ns=float(ens),
            estimator_heat=float(eh), picard_iterations=int(pi),
            min_h_at_z=float(mh)))
    return records


def _vertex_samples(state: SolutionState, mesh: Mesh) -> dict[str, np.ndarray]:
    """Vertex values of all solution fields.

    Vertex dofs of every supported family are nodal at the vertices, so the
    leading coefficients are the vertex values themselves.
    """
    nv = mesh.n_vertices
    ux = state.u.component(0)[:nv]
    uy = state.u.component(1)[:nv]
    return {
        "velocity": np.column_stack([ux, uy]),
        "pressure": state.p.values[:nv],
        "temperature": state.t.values[:nv],
        "speed": np.hypot(ux, uy),
    }


def write_vtk(mesh: Mesh, state: SolutionState, path) -> None:
    """Legacy ASCII VTK unstructured grid with point data at the vertices."""
    if state.generation != mesh.generation:
        raise ValueError("solution state does not live on this mesh")
    fields = _vertex_samples(state, mesh)
    nv, ne = mesh.n_vertices, mesh.n_elements
    out = []
    out.append("# vtk DataFile Version 3.0")
    out.append("boussinesq-afem solution")
    out.append("ASCII")
    out.append("DATASET UNSTRUCTURED_GRID")
    out.append(f"POINTS {nv} double")
    for x, y in mesh.vertices:
        out.append(f"{_fmt(x)} {_fmt(y)} {_fmt(0.0)}")
    out.append(f"CELLS {ne} {4 * ne}")
    for a, b, c in mesh.elements:
        out.append(f"3 {a} {b} {c}")
    out.append(f"CELL_TYPES {ne}")
    out.extend(["5"] * ne)
    out.append(f"POINT_DATA {nv}")
    out.append("VECTORS velocity double")
    for vx, vy in fields["velocity"]:
        out.append(f"{_fmt(vx)} {_fmt(vy)} {_fmt(0.0)}")
    for name in ("pressure", "temperature", "speed"):
        out.append(f"SCALARS {name} double 1")
        out.append("LOOKUP_TABLE default")
        out.extend(_fmt(v) for v in fields[name])
    Path(path).write_bytes(("\n".join(out) + "\n").encode("ascii"))


@dataclass(frozen=True)
class RunManifest:
    """Resolved configuration and output layout of one experiment run."""

    config: ProblemConfig
    out_dir: Path
    csv_path: Path
    vtk_pattern: str
    version: str

    @classmethod
    def create(cls, cfg: ProblemConfig, out_dir, version: str) -> "RunManifest":
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("ok")
        probe.unlink()
        return cls(cfg, out, out / "convergence.csv",
                   str(out / "solution_{:04d}.vtk"), version)

    def vtk_path(self, iteration: int) -> Path:
        return Path(self.vtk_pattern.format(iteration))

    def write(self) -> Path:
        cfg = self.config
        lines = [
            f"version={self.version}",
            f"domain={cfg.domain}",
            f"element={cfg.element_family}",
            f"nu={_fmt(cfg.nu)}",
            f"kappa={_fmt(cfg.kappa)}",
            f"gx={_fmt(cfg.g[0])}",
            f"gy={_fmt(cfg.g[1])}",
            f"hsource={_fmt(cfg.h_strength)}",
            f"z={_fmt(cfg.z.x)},{_fmt(cfg.z.y)}",
            f"alpha={_fmt(cfg.alpha)}",
            f"picard_tol={_fmt(cfg.picard_tol)}",
            f"picard_max={cfg.picard_max}",
            f"adapt_max={cfg.adapt_max}",
            f"marking_frac={_fmt(cfg.marking_fraction)}",
            f"csv={self.csv_path.name}",
        ]
        path = self.out_dir / "manifest.txt"
        path.write_text("\n".join(lines) + "\n")
        return path
