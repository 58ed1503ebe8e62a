//! Multi-scale pyramids via 2x2 average pooling.

use crate::error::{Error, Result};
use crate::map::DenseMap;

/// How cell values behave under downsampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PyramidScaling {
    /// Plain average pooling (images, occlusion, posteriors, masks).
    Intensity,
    /// Average pooling followed by a 0.5 factor per level, keeping flow and
    /// disparity in level-local pixel units.
    Displacement,
}

/// Builds `levels` maps; level 0 is the input, each subsequent level halves
/// both dimensions with 2x2 average pooling. Dimensions must stay even at
/// every level that gets pooled.
pub fn build_pyramid(
    m: &DenseMap,
    levels: usize,
    scaling: PyramidScaling,
) -> Result<Vec<DenseMap>> {
    if levels == 0 {
        return Err(Error::InvalidArgument("pyramid needs at least 1 level".into()));
    }
    let mut out = Vec::with_capacity(levels);
    out.push(m.clone());
    for level in 1..levels {
        let prev = &out[level - 1];
        if prev.height() < 2 || prev.width() < 2 || prev.height() % 2 != 0 || prev.width() % 2 != 0
        {
            return Err(Error::InvalidArgument(format!(
                "cannot pool level {} of size {}x{}; {} levels is too deep for {}x{}",
                level - 1,
                prev.height(),
                prev.width(),
                levels,
                m.height(),
                m.width()
            )));
        }
        out.push(downsample_once(prev, scaling));
    }
    Ok(out)
}

fn downsample_once(m: &DenseMap, scaling: PyramidScaling) -> DenseMap {
    let (h, w, c) = (m.height() / 2, m.width() / 2, m.channels());
    let value_scale = match scaling {
        PyramidScaling::Intensity => 1.0,
        PyramidScaling::Displacement => 0.5,
    };
    DenseMap::from_fn(h, w, c, |x, y, ch| {
        let (sx, sy) = (2 * x, 2 * y);
        let sum = m.get(sx, sy, ch)
            + m.get(sx + 1, sy, ch)
            + m.get(sx, sy + 1, ch)
            + m.get(sx + 1, sy + 1, ch);
        sum * 0.25 * value_scale
    })
}
