"""End-to-end reconstruction wrappers shared by the CLI, the experiment
scripts, and the validation suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .extraction import (MeshingResult, default_extraction_params,
                         mesh_elements)
from .fitting import (FitConfig, PoNQElement, default_learning_rate,
                      fit_elements)
from .mesh import TriMesh
from .sampling import (SampleSet, augmented_open_sampling,
                       default_sample_count, sample_surface)


@dataclass
class FitInfo:
    """What a fit needs to remember for meshing defaults."""

    grid_res: int
    bbox_min: np.ndarray
    bbox_max: np.ndarray

    @property
    def grid_spacing(self) -> float:
        return float(np.max(self.bbox_max - self.bbox_min)) / self.grid_res


def fit_sampling(samples: SampleSet, res: int, epochs: int = 400,
                 learning_rate: float | None = None, seed: int = 0
                 ) -> tuple[list[PoNQElement], FitInfo]:
    """Grid-initialized Chamfer fit of `samples` at grid resolution `res`."""
    lo = samples.positions.min(axis=0)
    hi = samples.positions.max(axis=0)
    if learning_rate is None:
        learning_rate = default_learning_rate(lo, hi, res)
    cfg = FitConfig(grid_res=res, epochs=epochs, learning_rate=learning_rate,
                    seed=seed)
    elements, _ = fit_elements(samples, cfg, bbox_min=lo, bbox_max=hi)
    return elements, FitInfo(res, lo, hi)


def mesh_fit(elements: list[PoNQElement], info: FitInfo | None = None,
             h: float | None = None, edge_threshold: float | None = None,
             anisotropy_threshold: float = 0.4,
             open_surface: bool = False) -> MeshingResult:
    """Mesh a fit, deriving the score weight from the fit's grid spacing
    when available."""
    spacing = info.grid_spacing if info is not None else None
    v_star = np.array([e.v_star for e in elements])
    params = default_extraction_params(
        v_star, h=h, edge_threshold=edge_threshold,
        anisotropy_threshold=anisotropy_threshold, grid_spacing=spacing)
    return mesh_elements(elements, params=params, open_surface=open_surface)


def reconstruct(mesh: TriMesh, res: int, epochs: int = 400, seed: int = 0,
                n_samples: int | None = None, open_surface: bool = False,
                boundary_fraction: float = 0.1
                ) -> tuple[MeshingResult, list[PoNQElement], FitInfo]:
    """Sample, fit, and mesh an input surface at grid resolution `res`."""
    count = default_sample_count(res) if n_samples is None else n_samples
    if open_surface:
        samples = augmented_open_sampling(
            mesh, count, max(int(count * boundary_fraction), 1), seed=seed)
    else:
        samples = sample_surface(mesh, count, seed=seed)
    elements, info = fit_sampling(samples, res, epochs=epochs, seed=seed)
    result = mesh_fit(elements, info, open_surface=open_surface)
    return result, elements, info
