//! Geometry of a regular Cartesian grid and its slab decomposition.

use alloc::vec::Vec;
use core::ops::Range;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("at least one worker is required")]
    NoWorkers,
    #[error("grid dimensions must be positive")]
    EmptyGrid,
    #[error("rank {rank} would own {width} cells along axis {axis}, fewer than the ghost width {ghost_width} (or none)")]
    SlabTooThin { rank: usize, axis: usize, width: usize, ghost_width: usize },
}

/// Global grid, physical box and the per-worker slabs along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPartition {
    dims: [usize; 3],
    lo: [f64; 3],
    hi: [f64; 3],
    periodic: [bool; 3],
    ghost_width: usize,
    axis: usize,
    slabs: Vec<Range<usize>>,
}

impl GridPartition {
    /// Splits the longest axis (lowest index on ties) into `workers`
    /// contiguous slabs of near-equal width; the remainder cells go to the
    /// lowest ranks, one each.
    pub fn decompose(
        dims: [usize; 3],
        lo: [f64; 3],
        hi: [f64; 3],
        workers: usize,
        ghost_width: usize,
        periodic: [bool; 3],
    ) -> Result<Self, PartitionError> {
        if workers == 0 {
            return Err(PartitionError::NoWorkers);
        }
        if dims.contains(&0) {
            return Err(PartitionError::EmptyGrid);
        }
        let mut axis = 0;
        for a in 1..3 {
            if dims[a] > dims[axis] {
                axis = a;
            }
        }
        let n = dims[axis];
        let base = n / workers;
        let rem = n % workers;
        let mut slabs = Vec::with_capacity(workers);
        let mut start = 0;
        for rank in 0..workers {
            let width = base + usize::from(rank < rem);
            if width == 0 || width < ghost_width {
                return Err(PartitionError::SlabTooThin { rank, axis, width, ghost_width });
            }
            slabs.push(start..start + width);
            start += width;
        }
        Ok(Self { dims, lo, hi, periodic, ghost_width, axis, slabs })
    }

    /// Unit box `[0, 1]^d` without periodicity, the layout of the
    /// uncoupled benchmark families.
    pub fn unit_box(dims: [usize; 3], workers: usize) -> Result<Self, PartitionError> {
        Self::decompose(dims, [0.0; 3], [1.0; 3], workers, 0, [false; 3])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cells(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn workers(&self) -> usize {
        self.slabs.len()
    }

    pub fn ghost_width(&self) -> usize {
        self.ghost_width
    }

    pub fn periodic(&self) -> [bool; 3] {
        self.periodic
    }

    /// The decomposed axis.
    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn lo(&self) -> [f64; 3] {
        self.lo
    }

    /// Grid spacing. Periodic axes use `(hi - lo) / n` (the point at `hi`
    /// is the image of `lo`); other axes place points on both ends.
    pub fn spacing(&self, axis: usize) -> f64 {
        let n = self.dims[axis];
        let len = self.hi[axis] - self.lo[axis];
        if self.periodic[axis] {
            len / n as f64
        } else if n > 1 {
            len / (n - 1) as f64
        } else {
            0.0
        }
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + i as f64 * self.spacing(axis)
    }

    /// Owned index range of `rank` along each axis.
    pub fn owned(&self, rank: usize) -> [Range<usize>; 3] {
        let mut r = [0..self.dims[0], 0..self.dims[1], 0..self.dims[2]];
        r[self.axis] = self.slabs[rank].clone();
        r
    }

    /// Lower and upper neighbour of `rank` along the decomposed axis, with
    /// periodic wraparound; `None` at a non-periodic boundary.
    pub fn neighbors(&self, rank: usize) -> (Option<usize>, Option<usize>) {
        let w = self.workers();
        let periodic = self.periodic[self.axis];
        let lower = if rank > 0 { Some(rank - 1) } else if periodic { Some(w - 1) } else { None };
        let upper = if rank + 1 < w { Some(rank + 1) } else if periodic { Some(0) } else { None };
        (lower, upper)
    }

    /// Ghost layers per side along `axis`: the ghost width on axes with more
    /// than one cell, zero otherwise.
    pub fn padding(&self, axis: usize) -> usize {
        if self.dims[axis] > 1 {
            self.ghost_width
        } else {
            0
        }
    }

    /// Linear index of a global cell, x fastest.
    pub fn global_index(&self, [i, j, k]: [usize; 3]) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    /// Same geometry split over a different number of workers.
    pub fn with_workers(&self, workers: usize) -> Result<Self, PartitionError> {
        Self::decompose(self.dims, self.lo, self.hi, workers, self.ghost_width, self.periodic)
    }
}
