use crate::align::fit::fit_subset;
use crate::align::CorrespondenceSet;
use crate::camera::Vec3;
use crate::cloud::{centroid, SimilarityST};

/// Consistency constant turning a MAD into a Gaussian standard deviation.
const MAD_TO_SIGMA: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustParams {
    pub min_corr: usize,
    pub mad_k: f64,
    pub iters: usize,
}

impl Default for RobustParams {
    fn default() -> Self {
        Self { min_corr: 10, mad_k: 3.0, iters: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameAlignment {
    pub st: SimilarityST,
    pub centroid_global: Vec3,
    pub inliers: usize,
    pub rms_residual: f64,
    pub degenerate: bool,
    /// Weighted RMS residual of the inlier set after each fit.
    pub rms_history: Vec<f64>,
}

impl FrameAlignment {
    pub fn degenerate() -> Self {
        Self {
            st: SimilarityST::identity(),
            centroid_global: Vec3::zeros(),
            inliers: 0,
            rms_residual: f64::NAN,
            degenerate: true,
            rms_history: Vec::new(),
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    let n = v.len();
    v.sort_by(f64::total_cmp);
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn weighted_rms(corrs: &CorrespondenceSet, active: &[usize], st: &SimilarityST) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for &i in active {
        num += corrs.weights[i] * (st.apply(&corrs.canonical[i]) - corrs.global[i]).norm_squared();
        den += corrs.weights[i];
    }
    (num / den).sqrt()
}

/// Iteratively reweighted fit with MAD outlier rejection.
///
/// A pair is discarded when its residual exceeds
/// `median + mad_k · 1.4826 · MAD`. An absolute floor tied to the spread of
/// the global points keeps exact data from losing pairs to rounding noise.
/// `centroid_global` is the centroid of the transformed canonical points of
/// the whole set.
pub fn robust_fit(corrs: &CorrespondenceSet, params: &RobustParams) -> FrameAlignment {
    if corrs.is_empty() {
        return FrameAlignment::degenerate();
    }
    let spread = {
        let c = centroid(&corrs.global).unwrap_or_default();
        let ms = corrs.global.iter().map(|q| (q - c).norm_squared()).sum::<f64>() / corrs.len() as f64;
        ms.sqrt().max(1e-300)
    };
    let floor = 1e-9 * spread;
    let mut active: Vec<usize> = (0..corrs.len()).collect();
    let mut history = Vec::new();
    let mut round = 0;
    let fit = loop {
        let fit = match fit_subset(corrs, &active) {
            Ok(f) => f,
            Err(_) => {
                let mut out = FrameAlignment::degenerate();
                out.inliers = active.len();
                return out;
            }
        };
        history.push(weighted_rms(corrs, &active, &fit.st));
        if round >= params.iters {
            break fit;
        }
        round += 1;
        let res: Vec<f64> =
            active.iter().map(|&i| (fit.st.apply(&corrs.canonical[i]) - corrs.global[i]).norm()).collect();
        let med = median(&mut res.clone());
        let mad = median(&mut res.iter().map(|r| (r - med).abs()).collect::<Vec<_>>());
        let thresh = (med + params.mad_k * MAD_TO_SIGMA * mad).max(floor);
        let keep: Vec<usize> = active.iter().zip(&res).filter(|(_, r)| **r <= thresh).map(|(i, _)| *i).collect();
        if keep.len() == active.len() || keep.len() < 2 {
            break fit;
        }
        active = keep;
    };
    let transformed: Vec<Vec3> = corrs.canonical.iter().map(|p| fit.st.apply(p)).collect();
    FrameAlignment {
        st: fit.st,
        centroid_global: centroid(&transformed).unwrap_or_default(),
        inliers: active.len(),
        rms_residual: *history.last().unwrap(),
        degenerate: active.len() < params.min_corr || fit.clamped,
        rms_history: history,
    }
}
