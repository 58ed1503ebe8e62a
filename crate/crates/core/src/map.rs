//! Dense pixel grids and the task-typed views used throughout the crate.
//!
//! A [`DenseMap`] is a row-major, channel-interleaved `H x W x C` grid of
//! `f64` values. It carries images, flow fields, disparity maps, occlusion
//! maps, segmentation posteriors, and validity masks. The typed wrappers
//! ([`FlowField`], [`DisparityMap`], [`OcclusionMask`], [`SegPosterior`],
//! [`ValidityMask`]) validate their task invariants on construction and
//! deref to the underlying map for read access.
//!
//! Coordinate convention: `x` is the column (rightward), `y` the row
//! (downward), pixel centers sit at integer coordinates, and the continuous
//! coordinate `(x, y)` maps directly to array index `(x, y)`.

use crate::error::{Error, Result};

/// Row-major, channel-interleaved dense grid of real values.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DenseMap {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl DenseMap {
    /// Zero-filled map.
    pub fn new(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    /// Map filled with a constant value.
    pub fn constant(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    /// Wraps an existing buffer. The length must equal `height * width * channels`
    /// and every value must be finite.
    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::InvalidArgument(format!(
                "buffer length {} does not match {}x{}x{}",
                data.len(),
                height,
                width,
                channels
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "dense map contains non-finite values".into(),
            ));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Builds a map by evaluating `f(x, y, c)` at every cell.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut m = Self::new(height, width, channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    let v = f(x, y, c);
                    m.set(x, y, c, v);
                }
            }
        }
        m
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    fn offset(&self, x: usize, y: usize, c: usize) -> usize {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.offset(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f64) {
        let i = self.offset(x, y, c);
        self.data[i] = value;
    }

    /// Channel vector at a pixel.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn same_shape(&self, other: &DenseMap) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub fn same_dims(&self, other: &DenseMap) -> bool {
        self.same_shape(other) && self.channels == other.channels
    }

    /// Mean over all cells.
    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Errors unless two maps share height and width.
    pub fn check_same_shape(&self, other: &DenseMap, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )))
        }
    }
}

macro_rules! typed_view {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(DenseMap);

        impl $name {
            pub fn map(&self) -> &DenseMap {
                &self.0
            }

            pub fn into_map(self) -> DenseMap {
                self.0
            }
        }

        impl std::ops::Deref for $name {
            type Target = DenseMap;

            fn deref(&self) -> &DenseMap {
                &self.0
            }
        }

        impl AsRef<DenseMap> for $name {
            fn as_ref(&self) -> &DenseMap {
                &self.0
            }
        }
    };
}

typed_view! {
    /// Two-channel per-pixel displacement `(u, v)` in pixels, `u` rightward
    /// and `v` downward.
    FlowField
}

typed_view! {
    /// Single-channel disparity `d` in pixels. Left-to-right convention:
    /// left pixel `(x, y)` corresponds to right pixel `(x - d, y)`.
    DisparityMap
}

typed_view! {
    /// Single-channel occlusion degree in `[0, 1]`, 1 meaning fully occluded.
    OcclusionMask
}

typed_view! {
    /// Per-pixel posterior probabilities over `C` categories; each pixel's
    /// channel vector sums to 1.
    SegPosterior
}

typed_view! {
    /// Binary mask; 1 marks pixels with ground truth / in-bounds samples.
    ValidityMask
}

impl FlowField {
    pub fn new(map: DenseMap) -> Result<Self> {
        if map.channels() != 2 {
            return Err(Error::InvalidArgument(format!(
                "flow field needs 2 channels, got {}",
                map.channels()
            )));
        }
        Ok(Self(map))
    }

    /// Uniform flow `(u, v)`.
    pub fn constant(height: usize, width: usize, u: f64, v: f64) -> Self {
        Self(DenseMap::from_fn(height, width, 2, |_, _, c| {
            if c == 0 {
                u
            } else {
                v
            }
        }))
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self(DenseMap::new(height, width, 2))
    }

    #[inline]
    pub fn uv(&self, x: usize, y: usize) -> (f64, f64) {
        (self.0.get(x, y, 0), self.0.get(x, y, 1))
    }

    #[inline]
    pub fn set_uv(&mut self, x: usize, y: usize, u: f64, v: f64) {
        self.0.set(x, y, 0, u);
        self.0.set(x, y, 1, v);
    }
}

impl DisparityMap {
    /// Valid disparities must be non-negative; invalid pixels are expected to
    /// hold 0 with a companion [`ValidityMask`].
    pub fn new(map: DenseMap) -> Result<Self> {
        if map.channels() != 1 {
            return Err(Error::InvalidArgument(format!(
                "disparity map needs 1 channel, got {}",
                map.channels()
            )));
        }
        if map.data().iter().any(|&d| d < 0.0) {
            return Err(Error::InvalidArgument(
                "disparity map contains negative values".into(),
            ));
        }
        Ok(Self(map))
    }

    pub fn constant(height: usize, width: usize, d: f64) -> Result<Self> {
        Self::new(DenseMap::constant(height, width, 1, d))
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self(DenseMap::new(height, width, 1))
    }

    #[inline]
    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.0.get(x, y, 0)
    }

    #[inline]
    pub fn set_value(&mut self, x: usize, y: usize, d: f64) {
        self.0.set(x, y, 0, d);
    }
}

impl OcclusionMask {
    pub fn new(map: DenseMap) -> Result<Self> {
        if map.channels() != 1 {
            return Err(Error::InvalidArgument(format!(
                "occlusion mask needs 1 channel, got {}",
                map.channels()
            )));
        }
        if map.data().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidArgument(
                "occlusion values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self(map))
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(DenseMap::constant(height, width, 1, value))
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self(DenseMap::new(height, width, 1))
    }

    #[inline]
    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.0.get(x, y, 0)
    }

    /// Complement mask `1 - O`.
    pub fn complement(&self) -> OcclusionMask {
        let mut m = self.0.clone();
        for v in m.data_mut() {
            *v = 1.0 - *v;
        }
        OcclusionMask(m)
    }
}

impl SegPosterior {
    const SUM_TOL: f64 = 1e-5;

    pub fn new(map: DenseMap) -> Result<Self> {
        if map.channels() == 0 {
            return Err(Error::InvalidArgument(
                "posterior needs at least one category channel".into(),
            ));
        }
        for y in 0..map.height() {
            for x in 0..map.width() {
                let p = map.pixel(x, y);
                if p.iter().any(|&v| v < 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "negative posterior at ({x}, {y})"
                    )));
                }
                let s: f64 = p.iter().sum();
                if (s - 1.0).abs() > Self::SUM_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "posterior at ({x}, {y}) sums to {s}, not 1"
                    )));
                }
            }
        }
        Ok(Self(map))
    }

    pub fn categories(&self) -> usize {
        self.0.channels()
    }
}

impl ValidityMask {
    pub fn new(map: DenseMap) -> Result<Self> {
        if map.channels() != 1 {
            return Err(Error::InvalidArgument(format!(
                "validity mask needs 1 channel, got {}",
                map.channels()
            )));
        }
        if map.data().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidArgument(
                "validity mask must be binary".into(),
            ));
        }
        Ok(Self(map))
    }

    pub fn all_ones(height: usize, width: usize) -> Self {
        Self(DenseMap::constant(height, width, 1, 1.0))
    }

    pub fn all_zeros(height: usize, width: usize) -> Self {
        Self(DenseMap::new(height, width, 1))
    }

    #[inline]
    pub fn is_set(&self, x: usize, y: usize) -> bool {
        self.0.get(x, y, 0) != 0.0
    }

    #[inline]
    pub fn set_flag(&mut self, x: usize, y: usize, flag: bool) {
        self.0.set(x, y, 0, if flag { 1.0 } else { 0.0 });
    }

    /// Number of set pixels.
    pub fn count(&self) -> usize {
        self.0.data().iter().filter(|&&v| v != 0.0).count()
    }

    /// Pixel-wise conjunction.
    pub fn and(&self, other: &ValidityMask) -> Result<ValidityMask> {
        self.0.check_same_shape(&other.0, "validity and")?;
        let mut out = self.clone();
        for (a, b) in out.0.data_mut().iter_mut().zip(other.0.data()) {
            if *b == 0.0 {
                *a = 0.0;
            }
        }
        Ok(out)
    }
}
