//! Gray-Scott on a [`DistributedState`].
//!
//! Every right-hand side evaluation copies the owned cells into a scratch
//! state, refreshes its ghost layers and then applies the stencil rank by
//! rank, so the caller's state is never written.

use std::sync::Arc;

use odeflow_core::models::{grayscott_block, GrayScottParams, GRAY_SCOTT_BOX};
use odeflow_core::{GridPartition, PartitionError, RhsError, State, System};

use crate::distributed::{DistributedState, Layout};

/// Periodic cube `[0, 2.5]^3` split over `workers` slabs with one ghost layer.
pub fn grayscott_partition(dims: [usize; 3], workers: usize) -> Result<GridPartition, PartitionError> {
    GridPartition::decompose(dims, [0.0; 3], [GRAY_SCOTT_BOX; 3], workers, 1, [true; 3])
}

#[derive(Debug, Clone, Default)]
pub struct GrayScott {
    params: GrayScottParams,
    scratch: Option<DistributedState>,
}

impl GrayScott {
    pub fn new(params: GrayScottParams) -> Self {
        Self { params, scratch: None }
    }

    pub fn params(&self) -> &GrayScottParams {
        &self.params
    }

    fn check(layout: &Layout, u: &DistributedState) -> Result<f64, RhsError> {
        let p = layout.partition();
        if u.components() != 2 {
            return Err(RhsError("Gray-Scott needs exactly two components".into()));
        }
        if p.dims().iter().any(|&n| n < 2) || p.periodic() != [true; 3] || p.ghost_width() < 1 {
            return Err(RhsError("Gray-Scott needs a periodic 3D grid with ghost layers".into()));
        }
        let h = p.spacing(0);
        if p.spacing(1) != h || p.spacing(2) != h {
            return Err(RhsError("Gray-Scott needs equal spacing on every axis".into()));
        }
        Ok(1.0 / (h * h))
    }
}

impl System<DistributedState> for GrayScott {
    fn rhs(&mut self, _t: f64, u: &DistributedState, dudt: &mut DistributedState) -> Result<(), RhsError> {
        let layout: Arc<Layout> = u.layout().cloned().ok_or_else(|| RhsError("state has no grid".into()))?;
        let inv_h2 = Self::check(&layout, u)?;
        let reuse = self.scratch.as_ref().and_then(|s| s.layout()).is_some_and(|l| Arc::ptr_eq(l, &layout));
        let scratch = if reuse {
            let s = self.scratch.as_mut().expect("checked above");
            s.copy_from(u)?;
            s
        } else {
            self.scratch.insert(u.clone())
        };
        scratch.halo_exchange(&[0, 1]).map_err(|e| RhsError(e.to_string().into()))?;
        dudt.resize_like(u)?;

        let params = self.params;
        let scratch: &DistributedState = scratch;
        layout.for_each_rank(&mut dudt.blocks, |r, out| {
            let rl = layout.rank(r);
            let (o0, o1) = out.split_at_mut(1);
            grayscott_block(
                &params,
                inv_h2,
                rl.padded,
                rl.owned_padded(),
                &scratch.blocks[r][0],
                &scratch.blocks[r][1],
                &mut o0[0],
                &mut o1[0],
            );
        });
        Ok(())
    }
}
