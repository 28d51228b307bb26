use super::{Patch, PATCH_SIZE};

pub const LBP_BINS: usize = 59;

/// Neighbor offsets `(dr, dc)` clockwise from top-left; the first neighbor
/// supplies the most significant bit.
const NEIGHBORS: [(i32, i32); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
];

const fn transitions(p: u8) -> u32 {
    (p ^ p.rotate_left(1)).count_ones()
}

/// Uniform patterns (at most two circular transitions) get bins 0..58 in
/// increasing pattern order; every other pattern shares bin 58.
const UNIFORM_BINS: [u8; 256] = {
    let mut table = [0u8; 256];
    let mut next = 0u8;
    let mut p = 0;
    while p < 256 {
        if transitions(p as u8) <= 2 {
            table[p] = next;
            next += 1;
        } else {
            table[p] = (LBP_BINS - 1) as u8;
        }
        p += 1;
    }
    assert!(next as usize == LBP_BINS - 1);
    table
};

/// 8-bit pattern at an interior pixel; a bit is set when the neighbor is at
/// least as bright as the center.
pub fn lbp_pattern(patch: &Patch, row: usize, col: usize) -> u8 {
    let center = patch.get(row, col);
    NEIGHBORS.iter().fold(0u8, |acc, &(dr, dc)| {
        let n = patch.get((row as i32 + dr) as usize, (col as i32 + dc) as usize);
        (acc << 1) | u8::from(n >= center)
    })
}

pub fn lbp_bin(pattern: u8) -> usize {
    UNIFORM_BINS[pattern as usize] as usize
}

/// 59-bin uniform LBP histogram over the 14x14 interior (196 votes).
pub fn lbp_descriptor(patch: &Patch) -> [u32; LBP_BINS] {
    let mut hist = [0u32; LBP_BINS];
    for r in 1..PATCH_SIZE - 1 {
        for c in 1..PATCH_SIZE - 1 {
            hist[lbp_bin(lbp_pattern(patch, r, c))] += 1;
        }
    }
    hist
}
