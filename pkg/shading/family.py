import numpy as np

from geometry.family import family_scale
from voxel.grid import VoxelSet, solid_cells, grid_shape, CellMembership
from util.exceptions import ShadingException

class ShadedFamily:
    """A family of solids with a shading Y(S) inside each one.

    Shadings are sorted arrays of flat cell indices on the [-1,1]^3 grid of
    cell size `scale`; each is a subset of the cells its solid occupies.
    """

    def __init__(self, solids, shadings, scale, solid_cells_cache=None, check=True):
        solids = list(solids)
        if len(shadings) != len(solids):
            raise ShadingException("one shading per solid is required")
        self.solids = solids
        self.scale = float(scale)
        self.shape = grid_shape(self.scale, (1, 1, 1))
        self._cells = solid_cells_cache
        self.shadings = [np.unique(np.asarray(y, dtype=np.int64)) for y in shadings]
        if check:
            for i, (y, cells) in enumerate(zip(self.shadings, self.cells)):
                if len(y) and not np.all(np.isin(y, cells, assume_unique=True)):
                    raise ShadingException(f"shading {i} is not contained in its solid")

    @property
    def cells(self):
        """Rasterized cells of every solid (computed once)."""
        if self._cells is None:
            self._cells = [solid_cells(s, self.scale) for s in self.solids]
        return self._cells

    @staticmethod
    def full(solids, scale, membership=CellMembership.CENTER):
        """Family shaded by the solids themselves, Y(S) = S."""
        solids = list(solids)
        family_scale(solids)
        cells = [solid_cells(s, scale, membership) for s in solids]
        return ShadedFamily(solids, cells, scale, cells, check=False)

    @staticmethod
    def from_sets(solids, sets):
        """Family from per solid VoxelSets (each must lie in its solid)."""
        sets = list(sets)
        if not sets:
            raise ShadingException("empty family")
        return ShadedFamily(solids, [e.indices() for e in sets], sets[0].scale)

    def __len__(self):
        return len(self.solids)

    def shading_set(self, i) -> VoxelSet:
        return VoxelSet.from_indices(self.shadings[i], self.scale)

    def solid_set(self, i) -> VoxelSet:
        return VoxelSet.from_indices(self.cells[i], self.scale)

    def shading_sizes(self):
        return np.array([len(y) for y in self.shadings], dtype=np.int64)

    def solid_sizes(self):
        return np.array([len(c) for c in self.cells], dtype=np.int64)

    @property
    def mass_cells(self):
        return int(self.shading_sizes().sum())

    @property
    def mass(self):
        """Total shaded volume sum |Y(S)|."""
        return self.mass_cells * self.scale ** 3

    def union(self) -> VoxelSet:
        occ = np.zeros(self.shape, dtype=bool)
        flat = occ.reshape(-1)
        for y in self.shadings:
            flat[y] = True
        return VoxelSet(occ, self.scale)

    def with_shadings(self, shadings):
        """Same solids, new shadings (each must be a subset of the old one)."""
        return ShadedFamily(self.solids, shadings, self.scale, self._cells, check=False)

    def restrict(self, keep: VoxelSet):
        """Y'(S) = Y(S) & keep"""
        mask = keep.occupancy.reshape(-1)
        return self.with_shadings([y[mask[y]] for y in self.shadings])

    def remove(self, drop: VoxelSet):
        """Y'(S) = Y(S) - drop"""
        mask = drop.occupancy.reshape(-1)
        return self.with_shadings([y[~mask[y]] for y in self.shadings])

    def subfamily(self, indices):
        indices = list(indices)
        cells = None if self._cells is None else [self._cells[i] for i in indices]
        return ShadedFamily([self.solids[i] for i in indices],
                            [self.shadings[i] for i in indices], self.scale, cells, check=False)
