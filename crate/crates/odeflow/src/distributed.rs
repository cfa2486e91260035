//! Grid state split into slabs, one per worker thread.
//!
//! Each rank stores its slab padded by ghost layers on every axis with more
//! than one cell. Algebra operations touch owned cells only and run rank by
//! rank on a private thread pool; the per-element arithmetic is the shared
//! kernel from `odeflow_core::algebra::kernels`, so the result does not
//! depend on the number of workers. Reductions combine per-rank partials in
//! ascending rank order.

use std::ops::Range;
use std::sync::Arc;

use odeflow_core::algebra::{check_arity, check_component_count, check_tolerance, kernels, nan_max};
use odeflow_core::{AlgebraError, GridPartition, Operand, PartitionError, Pointwise, State, StateVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::transport::{ChannelTransport, Message, Side, Tag, Transport, TransportError};

#[derive(Debug, Error)]
pub enum GridError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("could not start worker threads: {0}")]
    ThreadPool(String),
    #[error("component {component} out of range for a state with {components}")]
    NoSuchComponent { component: usize, components: usize },
    #[error("halo exchange needs a ghost width of at least one cell")]
    NoGhosts,
}

/// Storage geometry of one rank's block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankLayout {
    /// Owned global index range per axis.
    pub owned: [Range<usize>; 3],
    /// Ghost layers on each side, per axis.
    pub pad: [usize; 3],
    /// Extent of the padded block, x fastest.
    pub padded: [usize; 3],
}

impl RankLayout {
    fn new(partition: &GridPartition, rank: usize) -> Self {
        let owned = partition.owned(rank);
        let pad = [0, 1, 2].map(|a| partition.padding(a));
        let padded = [0, 1, 2].map(|a| owned[a].len() + 2 * pad[a]);
        Self { owned, pad, padded }
    }

    pub fn block_len(&self) -> usize {
        self.padded.iter().product()
    }

    pub fn owned_len(&self) -> usize {
        self.owned.iter().map(|r| r.len()).product()
    }

    /// Owned cells in padded block coordinates.
    pub fn owned_padded(&self) -> [Range<usize>; 3] {
        [0, 1, 2].map(|a| self.pad[a]..self.pad[a] + self.owned[a].len())
    }

    pub fn index(&self, [i, j, k]: [usize; 3]) -> usize {
        i + self.padded[0] * (j + self.padded[1] * k)
    }

    /// Buffer ranges of the owned x-rows, in storage order.
    pub fn rows(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        let [ox, oy, oz] = self.owned_padded();
        oz.flat_map(move |k| oy.clone().map(move |j| (j, k))).map(move |(j, k)| {
            let start = self.index([ox.start, j, k]);
            start..start + ox.len()
        })
    }
}

/// Partition, per-rank geometry and the worker pool shared by every state on
/// the same grid.
#[derive(Debug)]
pub struct Layout {
    partition: GridPartition,
    ranks: Vec<RankLayout>,
    pool: Option<rayon::ThreadPool>,
}

impl Layout {
    /// Starts one worker thread per rank when there is more than one rank.
    pub fn new(partition: GridPartition) -> Result<Arc<Self>, GridError> {
        let workers = partition.workers();
        let ranks = (0..workers).map(|r| RankLayout::new(&partition, r)).collect();
        let pool = if workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .thread_name(|i| format!("odeflow-rank-{i}"))
                .build()
                .map_err(|e| GridError::ThreadPool(e.to_string()))?;
            Some(pool)
        } else {
            None
        };
        Ok(Arc::new(Self { partition, ranks, pool }))
    }

    pub fn partition(&self) -> &GridPartition {
        &self.partition
    }

    pub fn workers(&self) -> usize {
        self.ranks.len()
    }

    pub fn rank(&self, rank: usize) -> &RankLayout {
        &self.ranks[rank]
    }

    /// Runs `f` once per rank on that rank's item.
    pub fn for_each_rank<T, F>(&self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        match &self.pool {
            Some(pool) => pool.install(|| items.par_iter_mut().enumerate().for_each(|(r, x)| f(r, x))),
            None => items.iter_mut().enumerate().for_each(|(r, x)| f(r, x)),
        }
    }

    /// Runs `f` once per rank and returns the results in rank order.
    pub fn map_ranks<R, F>(&self, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match &self.pool {
            Some(pool) => pool.install(|| (0..self.ranks.len()).into_par_iter().map(&f).collect()),
            None => (0..self.ranks.len()).map(f).collect(),
        }
    }

    /// Padded block coordinates of the global cell, if `rank` stores it
    /// (owned or ghost, periodic images included).
    pub fn global_of_padded(&self, rank: usize, [i, j, k]: [usize; 3]) -> Option<[usize; 3]> {
        let rl = &self.ranks[rank];
        let dims = self.partition.dims();
        let periodic = self.partition.periodic();
        let mut g = [0; 3];
        for (a, p) in [i, j, k].into_iter().enumerate() {
            if p >= rl.padded[a] {
                return None;
            }
            let x = rl.owned[a].start as isize + p as isize - rl.pad[a] as isize;
            let n = dims[a] as isize;
            g[a] = if (0..n).contains(&x) {
                x as usize
            } else if periodic[a] {
                x.rem_euclid(n) as usize
            } else {
                return None;
            };
        }
        Some(g)
    }

    fn same(a: &Arc<Self>, b: &Arc<Self>) -> bool {
        Arc::ptr_eq(a, b) || a.partition == b.partition
    }
}

/// A `State` on a [`Layout`]: `components` fields, each stored as one padded
/// block per rank.
#[derive(Debug)]
pub struct DistributedState {
    layout: Option<Arc<Layout>>,
    components: usize,
    /// `blocks[rank][component]`
    pub(crate) blocks: Vec<Vec<Vec<f64>>>,
    transport: Option<ChannelTransport>,
}

impl Clone for DistributedState {
    fn clone(&self) -> Self {
        Self { layout: self.layout.clone(), components: self.components, blocks: self.blocks.clone(), transport: None }
    }
}

impl DistributedState {
    pub fn zeros(layout: &Arc<Layout>, components: usize) -> Result<Self, AlgebraError> {
        check_component_count(components)?;
        let blocks = layout.ranks.iter().map(|rl| vec![vec![0.0; rl.block_len()]; components]).collect();
        Ok(Self { layout: Some(layout.clone()), components, blocks, transport: None })
    }

    /// Distributes a globally indexed (x fastest) field; ghosts start at zero.
    pub fn from_global(layout: &Arc<Layout>, global: &StateVector) -> Result<Self, AlgebraError> {
        let mut s = Self::zeros(layout, global.components())?;
        s.scatter(global)?;
        Ok(s)
    }

    pub fn layout(&self) -> Option<&Arc<Layout>> {
        self.layout.as_ref()
    }

    /// Padded storage of one rank and component, ghosts included.
    pub fn block(&self, rank: usize, component: usize) -> &[f64] {
        &self.blocks[rank][component]
    }

    pub fn block_mut(&mut self, rank: usize, component: usize) -> &mut [f64] {
        &mut self.blocks[rank][component]
    }

    /// Owned values in global order, x fastest. Ghost cells are not read.
    pub fn gather(&self) -> StateVector {
        let Some(layout) = &self.layout else {
            return StateVector::empty(self.components);
        };
        let p = &layout.partition;
        let mut out = vec![vec![0.0; p.cells()]; self.components];
        for (r, rl) in layout.ranks.iter().enumerate() {
            let [ox, oy, oz] = rl.owned.clone();
            for (c, dst) in out.iter_mut().enumerate() {
                let src = &self.blocks[r][c];
                let mut rows = rl.rows();
                for k in oz.clone() {
                    for j in oy.clone() {
                        let row = rows.next().expect("row count matches owned extent");
                        let g = p.global_index([ox.start, j, k]);
                        dst[g..g + ox.len()].copy_from_slice(&src[row]);
                    }
                }
            }
        }
        StateVector::from_components(out).expect("gathered components have equal length")
    }

    /// Overwrites the owned cells from a global field; ghosts are untouched.
    pub fn scatter(&mut self, global: &StateVector) -> Result<(), AlgebraError> {
        let layout = self.layout.clone().ok_or(AlgebraError::LayoutMismatch)?;
        if global.components() != self.components {
            return Err(AlgebraError::ComponentMismatch { expected: self.components, found: global.components() });
        }
        let p = &layout.partition;
        if global.len() != p.cells() {
            return Err(AlgebraError::LengthMismatch { expected: p.cells(), found: global.len() });
        }
        for (r, rl) in layout.ranks.iter().enumerate() {
            let [ox, oy, oz] = rl.owned.clone();
            for c in 0..self.components {
                let src = global.component(c);
                let dst = &mut self.blocks[r][c];
                let mut rows = rl.rows();
                for k in oz.clone() {
                    for j in oy.clone() {
                        let row = rows.next().expect("row count matches owned extent");
                        let g = p.global_index([ox.start, j, k]);
                        dst[row].copy_from_slice(&src[g..g + ox.len()]);
                    }
                }
            }
        }
        Ok(())
    }

    /// Fills the ghost cells of the listed components with the current
    /// values of the cells they mirror. Faces along the decomposed axis are
    /// sent to the neighbouring ranks; the other axes are wrapped locally
    /// afterwards over the full padded extent, so edge and corner ghosts are
    /// filled as well. Ghosts at a non-periodic boundary are left alone.
    pub fn halo_exchange(&mut self, components: &[usize]) -> Result<(), GridError> {
        let layout = self.layout.clone().ok_or(AlgebraError::LayoutMismatch)?;
        for &c in components {
            if c >= self.components {
                return Err(GridError::NoSuchComponent { component: c, components: self.components });
            }
        }
        let p = &layout.partition;
        let g = p.ghost_width();
        if g == 0 {
            return Err(GridError::NoGhosts);
        }
        let axis = p.axis();
        if p.padding(axis) > 0 {
            let transport = self.transport.get_or_insert_with(|| ChannelTransport::new(layout.workers()));
            let transport: &ChannelTransport = transport;
            // Phase 1: every rank posts its faces. Sends never block, so the
            // receive phase below can rely on all messages being queued.
            let sent: Vec<Result<(), TransportError>> = layout.map_ranks(|r| {
                let rl = &layout.ranks[r];
                let (lower, upper) = p.neighbors(r);
                let lo = rl.pad[axis];
                let hi = lo + rl.owned[axis].len();
                for &c in components {
                    let block = &self.blocks[r][c];
                    if let Some(n) = lower {
                        let data = pack(block, rl, axis_box(rl, axis, lo..lo + g));
                        transport.send(n, Message { from: r, tag: Tag { component: c, side: Side::Upper }, data })?;
                    }
                    if let Some(n) = upper {
                        let data = pack(block, rl, axis_box(rl, axis, hi - g..hi));
                        transport.send(n, Message { from: r, tag: Tag { component: c, side: Side::Lower }, data })?;
                    }
                }
                Ok(())
            });
            sent.into_iter().collect::<Result<(), _>>()?;

            // Phase 2: every rank receives into its ghost layers.
            let mut results: Vec<(Vec<Vec<f64>>, Result<(), TransportError>)> =
                std::mem::take(&mut self.blocks).into_iter().map(|b| (b, Ok(()))).collect();
            layout.for_each_rank(&mut results, |r, (blocks, status)| {
                let rl = &layout.ranks[r];
                let (lower, upper) = p.neighbors(r);
                let hi = rl.pad[axis] + rl.owned[axis].len();
                let mut run = || -> Result<(), TransportError> {
                    for &c in components {
                        if let Some(n) = lower {
                            let msg = transport.recv(r, n, Tag { component: c, side: Side::Lower })?;
                            unpack(&mut blocks[c], rl, axis_box(rl, axis, 0..g), &msg.data);
                        }
                        if let Some(n) = upper {
                            let msg = transport.recv(r, n, Tag { component: c, side: Side::Upper })?;
                            unpack(&mut blocks[c], rl, axis_box(rl, axis, hi..hi + g), &msg.data);
                        }
                    }
                    Ok(())
                };
                *status = run();
            });
            let mut first_err = None;
            self.blocks = results
                .into_iter()
                .map(|(b, s)| {
                    if let Err(e) = s {
                        first_err.get_or_insert(e);
                    }
                    b
                })
                .collect();
            if let Some(e) = first_err {
                return Err(e.into());
            }
        }

        let periodic = p.periodic();
        let local_axes: Vec<usize> = (0..3).filter(|&a| a != axis && periodic[a] && p.padding(a) > 0).collect();
        if !local_axes.is_empty() {
            layout.for_each_rank(&mut self.blocks, |r, blocks| {
                let rl = &layout.ranks[r];
                for &a in &local_axes {
                    let lo = rl.pad[a];
                    let hi = lo + rl.owned[a].len();
                    for &c in components {
                        let top = pack(&blocks[c], rl, axis_box(rl, a, hi - g..hi));
                        unpack(&mut blocks[c], rl, axis_box(rl, a, 0..g), &top);
                        let bottom = pack(&blocks[c], rl, axis_box(rl, a, lo..lo + g));
                        unpack(&mut blocks[c], rl, axis_box(rl, a, hi..hi + g), &bottom);
                    }
                }
            });
        }
        Ok(())
    }

    fn conforms(&self, other: &Self) -> Result<(), AlgebraError> {
        if other.components != self.components {
            return Err(AlgebraError::ComponentMismatch { expected: self.components, found: other.components });
        }
        match (&self.layout, &other.layout) {
            (Some(a), Some(b)) if Layout::same(a, b) => Ok(()),
            (None, None) => Ok(()),
            _ => Err(AlgebraError::LayoutMismatch),
        }
    }

    /// Per-rank partial results in rank order; empty when there is no layout.
    fn per_rank<R: Send, F: Fn(usize, &RankLayout) -> R + Sync + Send>(&self, f: F) -> Vec<R> {
        match &self.layout {
            Some(layout) => layout.map_ranks(|r| f(r, &layout.ranks[r])),
            None => Vec::new(),
        }
    }
}

/// Padded-coordinate box covering `range` along `axis` and the whole padded
/// extent along the other axes.
fn axis_box(rl: &RankLayout, axis: usize, range: Range<usize>) -> [Range<usize>; 3] {
    let mut b = [0..rl.padded[0], 0..rl.padded[1], 0..rl.padded[2]];
    b[axis] = range;
    b
}

fn pack(block: &[f64], rl: &RankLayout, [bx, by, bz]: [Range<usize>; 3]) -> Vec<f64> {
    let mut out = Vec::with_capacity(bx.len() * by.len() * bz.len());
    for k in bz {
        for j in by.clone() {
            let start = rl.index([bx.start, j, k]);
            out.extend_from_slice(&block[start..start + bx.len()]);
        }
    }
    out
}

fn unpack(block: &mut [f64], rl: &RankLayout, [bx, by, bz]: [Range<usize>; 3], data: &[f64]) {
    let mut chunks = data.chunks_exact(bx.len());
    for k in bz {
        for j in by.clone() {
            let start = rl.index([bx.start, j, k]);
            block[start..start + bx.len()].copy_from_slice(chunks.next().expect("face size matches box"));
        }
    }
}

impl State for DistributedState {
    fn empty(components: usize) -> Self {
        Self { layout: None, components: components.max(1), blocks: Vec::new(), transport: None }
    }

    fn components(&self) -> usize {
        self.components
    }

    fn len(&self) -> usize {
        self.layout.as_ref().map_or(0, |l| l.partition.cells())
    }

    fn resize_like(&mut self, model: &Self) -> Result<(), AlgebraError> {
        if model.components != self.components {
            return Err(AlgebraError::ComponentMismatch { expected: model.components, found: self.components });
        }
        match (&self.layout, &model.layout) {
            (_, None) => Ok(()),
            (Some(a), Some(b)) if Layout::same(a, b) => Ok(()),
            (Some(_), Some(_)) => Err(AlgebraError::LayoutMismatch),
            (None, Some(b)) => {
                *self = Self::zeros(b, self.components)?;
                Ok(())
            }
        }
    }

    fn linear_combination(&mut self, terms: &[(f64, Operand<'_, Self>)]) -> Result<(), AlgebraError> {
        check_arity(terms.len())?;
        for (_, op) in terms {
            if let Operand::State(s) = op {
                self.conforms(s)?;
            }
        }
        let Some(layout) = self.layout.clone() else {
            return Ok(());
        };
        let components = self.components;
        layout.for_each_rank(&mut self.blocks, |r, block| {
            let rl = &layout.ranks[r];
            let mut slices: Vec<(f64, Option<&[f64]>)> = Vec::with_capacity(terms.len());
            for (c, out) in block.iter_mut().enumerate().take(components) {
                for row in rl.rows() {
                    slices.clear();
                    slices.extend(terms.iter().map(|&(coeff, op)| match op {
                        Operand::Output => (coeff, None),
                        Operand::State(s) => (coeff, Some(&s.blocks[r][c][row.clone()])),
                    }));
                    kernels::combine(&mut out[row], &slices);
                }
            }
        });
        Ok(())
    }

    fn norm_inf(&self) -> f64 {
        self.per_rank(|r, rl| {
            self.blocks[r].iter().fold(0.0, |m, b| rl.rows().fold(m, |m, row| nan_max(m, kernels::max_abs(&b[row]))))
        })
        .into_iter()
        .fold(0.0, nan_max)
    }

    fn err_ratio(e: &Self, u_old: &Self, u_new: &Self, atol: f64, rtol: f64) -> Result<f64, AlgebraError> {
        check_tolerance(atol, rtol)?;
        e.conforms(u_old)?;
        e.conforms(u_new)?;
        Ok(e.per_rank(|r, rl| {
            let mut m = 0.0;
            for c in 0..e.components {
                let (eb, ab, bb) = (&e.blocks[r][c], &u_old.blocks[r][c], &u_new.blocks[r][c]);
                for row in rl.rows() {
                    let x = kernels::err_ratio(&eb[row.clone()], &ab[row.clone()], &bb[row], atol, rtol);
                    m = nan_max(m, x);
                }
            }
            m
        })
        .into_iter()
        .fold(0.0, nan_max))
    }

    fn is_finite(&self) -> bool {
        self.per_rank(|r, rl| self.blocks[r].iter().all(|b| rl.rows().all(|row| kernels::all_finite(&b[row]))))
            .into_iter()
            .all(|ok| ok)
    }

    fn copy_from(&mut self, src: &Self) -> Result<(), AlgebraError> {
        self.conforms(src)?;
        let Some(layout) = self.layout.clone() else {
            return Ok(());
        };
        layout.for_each_rank(&mut self.blocks, |r, block| {
            for (dst, s) in block.iter_mut().zip(&src.blocks[r]) {
                for row in layout.ranks[r].rows() {
                    dst[row.clone()].copy_from_slice(&s[row]);
                }
            }
        });
        Ok(())
    }
}

impl Pointwise for DistributedState {
    fn map_from<F>(&mut self, src: &Self, f: F) -> Result<(), AlgebraError>
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        self.conforms(src)?;
        let Some(layout) = self.layout.clone() else {
            return Ok(());
        };
        layout.for_each_rank(&mut self.blocks, |r, block| {
            for (dst, s) in block.iter_mut().zip(&src.blocks[r]) {
                for row in layout.ranks[r].rows() {
                    for (d, &v) in dst[row.clone()].iter_mut().zip(&s[row]) {
                        *d = f(v);
                    }
                }
            }
        });
        Ok(())
    }
}
