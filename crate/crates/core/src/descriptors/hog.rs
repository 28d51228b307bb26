use super::{Patch, PATCH_SIZE};

pub const HOG_BINS: usize = 36;
const BIN_WIDTH_DEG: f64 = 360.0 / HOG_BINS as f64;

/// Orientation histogram of a patch.
///
/// Gradients use central differences on the 14x14 interior. Each pixel votes
/// its gradient magnitude, split linearly between the two nearest of 36 bin
/// centers (5, 15, ..., 355 degrees), wrapping around the circle.
pub fn hog_descriptor(patch: &Patch) -> [f64; HOG_BINS] {
    let mut hist = [0.0; HOG_BINS];
    for r in 1..PATCH_SIZE - 1 {
        for c in 1..PATCH_SIZE - 1 {
            let gx = 0.5 * (patch.get(r, c + 1) - patch.get(r, c - 1));
            let gy = 0.5 * (patch.get(r + 1, c) - patch.get(r - 1, c));
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let deg = gy.atan2(gx).to_degrees().rem_euclid(360.0);
            let pos = deg / BIN_WIDTH_DEG - 0.5;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo = (lo as i64).rem_euclid(HOG_BINS as i64) as usize;
            let hi = (lo + 1) % HOG_BINS;
            hist[lo] += (1.0 - frac) * mag;
            hist[hi] += frac * mag;
        }
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_patch_has_no_gradient() {
        assert_eq!(hog_descriptor(&Patch::from_fn(|_, _| 0.7)), [0.0; HOG_BINS]);
    }

    #[test]
    fn horizontal_ramp_splits_around_zero_degrees() {
        // Central difference of intensity = column is exactly 1 in x, 0 in y,
        // so every interior pixel votes magnitude 1 at 0 degrees, halfway
        // between the 355 and 5 degree centers.
        let h = hog_descriptor(&Patch::from_fn(|_, c| c as f64));
        assert_eq!(h[0], 98.0);
        assert_eq!(h[35], 98.0);
        assert!(h[1..35].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vertical_ramp_lands_at_ninety_degrees() {
        let h = hog_descriptor(&Patch::from_fn(|r, _| 2.0 * r as f64));
        // gy = 2 everywhere, 90 degrees sits between centers 85 (bin 8) and 95 (bin 9)
        assert!((h[8] - 196.0).abs() < 1e-9 && (h[9] - 196.0).abs() < 1e-9);
    }

    #[test]
    fn bin_center_takes_full_vote() {
        let a = 5f64.to_radians();
        let h = hog_descriptor(&Patch::from_fn(|r, c| {
            c as f64 * a.cos() + r as f64 * a.sin()
        }));
        assert!((h[0] - 196.0).abs() < 1e-9);
        assert!(h[1].abs() < 1e-9 && h[35].abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn soft_binning_conserves_mass(vals in prop::collection::vec(0.0f64..1.0, 256)) {
            let p = Patch::from_fn(|r, c| vals[r * 16 + c]);
            let mut total = 0.0;
            for r in 1..15 {
                for c in 1..15 {
                    let gx = (vals[r * 16 + c + 1] - vals[r * 16 + c - 1]) / 2.0;
                    let gy = (vals[(r + 1) * 16 + c] - vals[(r - 1) * 16 + c]) / 2.0;
                    total += (gx * gx + gy * gy).sqrt();
                }
            }
            let h = hog_descriptor(&p);
            prop_assert!(h.iter().all(|&v| v >= 0.0));
            let sum: f64 = h.iter().sum();
            prop_assert!((sum - total).abs() <= 1e-9 * total.max(1e-300));
        }
    }
}
