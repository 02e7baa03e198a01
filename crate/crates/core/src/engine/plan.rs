//! Row-band partitioning of a feature map into memory-bounded blocks.

use crate::error::{Error, Result};

/// One block: a band of output rows (or a run of placements inside one row
/// when a full band does not fit).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    /// Starting input index `b_j` (top-left input position of the block).
    pub start: usize,
    /// Output rows `[row_begin, row_end)`.
    pub row_begin: usize,
    pub row_end: usize,
    /// Output columns `[col_begin, col_end)`.
    pub col_begin: usize,
    pub col_end: usize,
    /// Starting input index `f_jk` of every filter placement in the block,
    /// row-major.
    pub placements: Vec<usize>,
    /// Input positions the block needs resident.
    pub resident: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPlan {
    pub capacity: usize,
    pub out_height: usize,
    pub out_width: usize,
    pub blocks: Vec<Block>,
}

impl BlockPlan {
    /// Every placement, in block order.
    pub fn placements(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks
            .iter()
            .flat_map(|b| b.placements.iter().copied())
    }
}

/// Plans blocks over an `i_h × i_w` map for an `f_h × f_w` window with
/// stride `(s_h, s_w)`, holding at most `eta` input positions per block.
///
/// Placement `(j, k)` starts at `f_jk = j·s_h·i_w + k·s_w`.
pub fn plan_blocks(
    i_w: usize,
    i_h: usize,
    f_w: usize,
    f_h: usize,
    s_w: usize,
    s_h: usize,
    eta: usize,
) -> Result<BlockPlan> {
    if f_w == 0 || f_h == 0 || s_w == 0 || s_h == 0 || f_w > i_w || f_h > i_h {
        return Err(Error::Shape("invalid window geometry".into()));
    }
    if eta < f_w * f_h {
        return Err(Error::Capacity(format!(
            "block capacity {eta} is smaller than one filter window ({f_w}x{f_h})"
        )));
    }
    let out_h = (i_h - f_h) / s_h + 1;
    let out_w = (i_w - f_w) / s_w + 1;
    let rows_resident = |rows: usize| ((rows - 1) * s_h + f_h) * i_w;
    let mut blocks = Vec::new();
    let mut j = 0;
    while j < out_h {
        if rows_resident(1) <= eta {
            // widest band of whole output rows that fits
            let mut r = 1;
            while j + r < out_h && rows_resident(r + 1) <= eta {
                r += 1;
            }
            let placements = (j..j + r)
                .flat_map(|jj| (0..out_w).map(move |k| jj * s_h * i_w + k * s_w))
                .collect();
            blocks.push(Block {
                start: j * s_h * i_w,
                row_begin: j,
                row_end: j + r,
                col_begin: 0,
                col_end: out_w,
                placements,
                resident: rows_resident(r),
            });
            j += r;
        } else {
            // split the row into runs of placements
            let per_run = ((eta / f_h - f_w) / s_w + 1).min(out_w);
            let mut k = 0;
            while k < out_w {
                let end = (k + per_run).min(out_w);
                blocks.push(Block {
                    start: j * s_h * i_w + k * s_w,
                    row_begin: j,
                    row_end: j + 1,
                    col_begin: k,
                    col_end: end,
                    placements: (k..end).map(|kk| j * s_h * i_w + kk * s_w).collect(),
                    resident: ((end - k - 1) * s_w + f_w) * f_h,
                });
                k = end;
            }
            j += 1;
        }
    }
    Ok(BlockPlan {
        capacity: eta,
        out_height: out_h,
        out_width: out_w,
        blocks,
    })
}

/// Default capacity `η` for a memory budget: ciphertexts of
/// `2·N·log2 q` bits with a 3× working-set factor.
pub fn default_capacity(mem_budget_bytes: u64, degree: usize, log2_q: f64) -> usize {
    let ct_bytes = 2.0 * degree as f64 * log2_q / 8.0;
    ((mem_budget_bytes as f64 / (3.0 * ct_bytes)).floor() as usize).max(1)
}
