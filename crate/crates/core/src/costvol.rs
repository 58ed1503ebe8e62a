//! Correlation cost-volume kernels: the 2D search pattern used for flow and
//! its 1D restriction used for rectified stereo.
//!
//! Scores are mean dot products over feature channels, so magnitudes do not
//! depend on the feature dimension. Comparison features outside the image
//! contribute zero rather than a clamped border value, which avoids spurious
//! maxima at the frame edge.

use crate::error::{Error, Result};
use crate::map::DenseMap;

/// Search pattern of a correlation volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationMode {
    /// Horizontal-only displacements, `2k + 1` channels.
    OneD,
    /// Full window displacements, `(2k + 1)^2` channels.
    TwoD,
}

/// Per-pixel matching scores over a displacement window.
#[derive(Debug, Clone)]
pub struct CostVolume {
    map: DenseMap,
    radius: usize,
    mode: CorrelationMode,
}

impl CostVolume {
    pub fn map(&self) -> &DenseMap {
        &self.map
    }

    pub fn into_map(self) -> DenseMap {
        self.map
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn mode(&self) -> CorrelationMode {
        self.mode
    }

    /// Channel index of a displacement. For 1D volumes `dy` must be 0.
    pub fn channel_of(&self, dx: i64, dy: i64) -> Option<usize> {
        let k = self.radius as i64;
        if dx.abs() > k {
            return None;
        }
        match self.mode {
            CorrelationMode::OneD => (dy == 0).then_some((dx + k) as usize),
            CorrelationMode::TwoD => {
                (dy.abs() <= k).then_some(((dy + k) * (2 * k + 1) + dx + k) as usize)
            }
        }
    }

    /// Score at pixel `(x, y)` for displacement `(dx, dy)`.
    pub fn score(&self, x: usize, y: usize, dx: i64, dy: i64) -> Option<f64> {
        self.channel_of(dx, dy).map(|c| self.map.get(x, y, c))
    }
}

#[inline]
fn mean_dot(f1: &DenseMap, f2: &DenseMap, x: usize, y: usize, qx: i64, qy: i64) -> f64 {
    if qx < 0 || qy < 0 || qx >= f1.width() as i64 || qy >= f1.height() as i64 {
        return 0.0;
    }
    let a = f1.pixel(x, y);
    let b = f2.pixel(qx as usize, qy as usize);
    let mut sum = 0.0;
    for c in 0..f1.channels() {
        sum += a[c] * b[c];
    }
    sum / f1.channels() as f64
}

fn check_inputs(f1: &DenseMap, f2: &DenseMap) -> Result<()> {
    if !f1.same_dims(f2) {
        return Err(Error::ShapeMismatch(format!(
            "correlation inputs differ: {}x{}x{} vs {}x{}x{}",
            f1.height(),
            f1.width(),
            f1.channels(),
            f2.height(),
            f2.width(),
            f2.channels()
        )));
    }
    if f1.channels() == 0 {
        return Err(Error::InvalidArgument("correlation needs feature channels".into()));
    }
    Ok(())
}

/// Full-window correlation: channel for displacement `(dx, dy)` holds the
/// mean feature dot product of `f1` at `p` with `f2` at `p + (dx, dy)`.
pub fn correlation_2d(f1: &DenseMap, f2: &DenseMap, k: usize) -> Result<CostVolume> {
    check_inputs(f1, f2)?;
    let (h, w) = (f1.height(), f1.width());
    let side = 2 * k + 1;
    let mut out = DenseMap::new(h, w, side * side);
    let ik = k as i64;
    for y in 0..h {
        for x in 0..w {
            let mut ch = 0;
            for dy in -ik..=ik {
                for dx in -ik..=ik {
                    let v = mean_dot(f1, f2, x, y, x as i64 + dx, y as i64 + dy);
                    out.set(x, y, ch, v);
                    ch += 1;
                }
            }
        }
    }
    Ok(CostVolume {
        map: out,
        radius: k,
        mode: CorrelationMode::TwoD,
    })
}

/// Horizontal correlation for rectified stereo: the `dy = 0` row of the 2D
/// search, `2k + 1` channels.
pub fn correlation_1d(fl: &DenseMap, fr: &DenseMap, k: usize) -> Result<CostVolume> {
    check_inputs(fl, fr)?;
    let (h, w) = (fl.height(), fl.width());
    let mut out = DenseMap::new(h, w, 2 * k + 1);
    let ik = k as i64;
    for y in 0..h {
        for x in 0..w {
            let mut ch = 0;
            for dx in -ik..=ik {
                let v = mean_dot(fl, fr, x, y, x as i64 + dx, y as i64);
                out.set(x, y, ch, v);
                ch += 1;
            }
        }
    }
    Ok(CostVolume {
        map: out,
        radius: k,
        mode: CorrelationMode::OneD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Triple-loop reference without any shared code with the kernels.
    fn brute_force(f1: &DenseMap, f2: &DenseMap, k: i64, dx: i64, dy: i64) -> DenseMap {
        let (h, w) = (f1.height() as i64, f1.width() as i64);
        assert!(dx.abs() <= k && dy.abs() <= k);
        DenseMap::from_fn(h as usize, w as usize, 1, |x, y, _| {
            let (qx, qy) = (x as i64 + dx, y as i64 + dy);
            if qx < 0 || qy < 0 || qx >= w || qy >= h {
                return 0.0;
            }
            let mut s = 0.0;
            for c in 0..f1.channels() {
                s += f1.get(x, y, c) * f2.get(qx as usize, qy as usize, c);
            }
            s / f1.channels() as f64
        })
    }

    fn pseudo_random(h: usize, w: usize, c: usize, seed: u64) -> DenseMap {
        // Small deterministic LCG; plenty for kernel cross-checks.
        let mut state = seed;
        DenseMap::from_fn(h, w, c, |_, _, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (1u64 << 31) as f64 - 1.0
        })
    }

    #[test]
    fn constant_ones_give_unit_scores_in_interior() {
        let f = DenseMap::constant(6, 6, 3, 1.0);
        let cv = correlation_2d(&f, &f, 1).unwrap();
        for dy in -1..=1 {
            for dx in -1..=1 {
                assert_eq!(cv.score(3, 3, dx, dy).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn radius_zero_is_mean_dot_product() {
        let f1 = pseudo_random(4, 4, 5, 7);
        let f2 = pseudo_random(4, 4, 5, 13);
        let cv = correlation_2d(&f1, &f2, 0).unwrap();
        assert_eq!(cv.map().channels(), 1);
        for y in 0..4 {
            for x in 0..4 {
                let mut s = 0.0;
                for c in 0..5 {
                    s += f1.get(x, y, c) * f2.get(x, y, c);
                }
                assert!((cv.score(x, y, 0, 0).unwrap() - s / 5.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_brute_force_2d() {
        let f1 = pseudo_random(5, 5, 3, 1);
        let f2 = pseudo_random(5, 5, 3, 2);
        let cv = correlation_2d(&f1, &f2, 1).unwrap();
        for dy in -1..=1 {
            for dx in -1..=1 {
                let reference = brute_force(&f1, &f2, 1, dx, dy);
                for y in 0..5 {
                    for x in 0..5 {
                        let got = cv.score(x, y, dx, dy).unwrap();
                        assert!((got - reference.get(x, y, 0)).abs() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn one_d_is_the_zero_row_of_two_d() {
        let f1 = pseudo_random(6, 7, 4, 21);
        let f2 = pseudo_random(6, 7, 4, 22);
        let cv1 = correlation_1d(&f1, &f2, 2).unwrap();
        let cv2 = correlation_2d(&f1, &f2, 2).unwrap();
        assert_eq!(cv1.map().channels(), 5);
        for y in 0..6 {
            for x in 0..7 {
                for dx in -2..=2 {
                    // Bitwise equality: both paths accumulate identically.
                    assert_eq!(cv1.score(x, y, dx, 0), cv2.score(x, y, dx, 0));
                }
            }
        }
    }

    #[test]
    fn constant_inputs_equal_across_channels_1d() {
        let f = DenseMap::constant(4, 8, 2, 0.5);
        let cv = correlation_1d(&f, &f, 2).unwrap();
        for dx in -2..=2 {
            assert_eq!(cv.score(4, 2, dx, 0).unwrap(), 0.25);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = DenseMap::new(4, 4, 2);
        let b = DenseMap::new(4, 5, 2);
        assert!(correlation_2d(&a, &b, 1).is_err());
        let c = DenseMap::new(4, 4, 3);
        assert!(correlation_1d(&a, &c, 1).is_err());
    }
}
