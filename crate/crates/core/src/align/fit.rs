use crate::align::CorrespondenceSet;
use crate::camera::Vec3;
use crate::cloud::SimilarityST;
use crate::error::{Error, Result};

/// Smallest scale handed out when the unconstrained optimum is not positive.
pub const MIN_SCALE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleTranslationFit {
    pub st: SimilarityST,
    /// The unconstrained optimum had `s <= 0` and was clamped.
    pub clamped: bool,
}

/// Weighted least squares for `q ≈ s·p + t` over the pairs listed in `active`.
pub(crate) fn fit_subset(corrs: &CorrespondenceSet, active: &[usize]) -> Result<ScaleTranslationFit> {
    if active.len() < 2 {
        return Err(Error::InsufficientPairs { found: active.len(), required: 2 });
    }
    let mut wsum = 0.0;
    let mut psum = Vec3::zeros();
    let mut qsum = Vec3::zeros();
    for &i in active {
        let w = corrs.weights[i];
        wsum += w;
        psum += w * corrs.canonical[i];
        qsum += w * corrs.global[i];
    }
    if !(wsum > 0.0) {
        return Err(Error::InsufficientPairs { found: 0, required: 2 });
    }
    let (pbar, qbar) = (psum / wsum, qsum / wsum);
    let (mut num, mut den) = (0.0, 0.0);
    for &i in active {
        let w = corrs.weights[i];
        let dp = corrs.canonical[i] - pbar;
        num += w * dp.dot(&(corrs.global[i] - qbar));
        den += w * dp.norm_squared();
    }
    // spread below rounding noise of the mean counts as zero
    if den <= wsum * 1e-28 * (1.0 + pbar.norm_squared()) {
        return Err(Error::ZeroSpread);
    }
    let raw = num / den;
    let clamped = !(raw > 0.0);
    let s = if clamped { MIN_SCALE } else { raw };
    Ok(ScaleTranslationFit { st: SimilarityST::new(s, qbar - s * pbar)?, clamped })
}

pub fn fit_scale_translation(corrs: &CorrespondenceSet) -> Result<ScaleTranslationFit> {
    let all: Vec<usize> = (0..corrs.len()).collect();
    fit_subset(corrs, &all)
}

/// `Σ wᵢ‖s·pᵢ + t − qᵢ‖²`.
pub fn weighted_residual(corrs: &CorrespondenceSet, st: &SimilarityST) -> f64 {
    (0..corrs.len()).map(|i| corrs.weights[i] * (st.apply(&corrs.canonical[i]) - corrs.global[i]).norm_squared()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(rng: &mut ChaCha8Rng, n: usize, s: f64, t: Vec3, noise: f64) -> CorrespondenceSet {
        let mut p = Vec::new();
        let mut q = Vec::new();
        let mut w = Vec::new();
        for _ in 0..n {
            let a = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let e = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            p.push(a);
            q.push(s * a + t + noise * e);
            w.push(rng.random_range(0.05..1.0));
        }
        CorrespondenceSet::from_pairs(p, q, w)
    }

    #[test]
    fn identity_pairs() {
        let p: Vec<Vec3> = (0..5).map(|i| Vec3::new(i as f64, (i * i) as f64, 1.0)).collect();
        let c = CorrespondenceSet::from_pairs(p.clone(), p, vec![1.0; 5]);
        let f = fit_scale_translation(&c).unwrap();
        assert!((f.st.scale() - 1.0).abs() < 1e-12);
        assert!(f.st.translation().norm() < 1e-12);
        assert!(!f.clamped);
    }

    #[test]
    fn exact_recovery() {
        let p: Vec<Vec3> = (0..6).map(|i| Vec3::new(i as f64 * 0.3, -(i as f64), 0.5)).collect();
        let q = p.iter().map(|x| 2.0 * x + Vec3::new(1.0, 0.0, 0.0)).collect();
        let f = fit_scale_translation(&CorrespondenceSet::from_pairs(p, q, vec![1.0; 6])).unwrap();
        assert!((f.st.scale() - 2.0).abs() < 1e-12);
        assert!((f.st.translation() - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn errors() {
        let one = CorrespondenceSet::from_pairs(vec![Vec3::zeros()], vec![Vec3::zeros()], vec![1.0]);
        assert!(matches!(fit_scale_translation(&one), Err(Error::InsufficientPairs { .. })));
        let same = CorrespondenceSet::from_pairs(
            vec![Vec3::new(3.0, 1.0, 2.0); 4],
            (0..4).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect(),
            vec![1.0; 4],
        );
        assert!(matches!(fit_scale_translation(&same), Err(Error::ZeroSpread)));
        let zero_w = CorrespondenceSet::from_pairs(
            vec![Vec3::zeros(), Vec3::x()],
            vec![Vec3::zeros(), Vec3::x()],
            vec![0.0, 0.0],
        );
        assert!(matches!(fit_scale_translation(&zero_w), Err(Error::InsufficientPairs { .. })));
    }

    #[test]
    fn reflected_data_is_clamped_and_flagged() {
        let p: Vec<Vec3> = (0..4).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let q = p.iter().map(|x| -x).collect();
        let f = fit_scale_translation(&CorrespondenceSet::from_pairs(p, q, vec![1.0; 4])).unwrap();
        assert!(f.clamped);
        assert!(f.st.scale() > 0.0);
    }

    #[test]
    fn beats_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let c = random_set(&mut rng, 40, 1.7, Vec3::new(0.2, -0.4, 0.9), 0.2);
            let f = fit_scale_translation(&c).unwrap();
            let best = weighted_residual(&c, &f.st);
            // for fixed s the optimal t is the weighted mean offset; scan s densely
            let wsum: f64 = c.weights.iter().sum();
            let mut grid_best = f64::INFINITY;
            for k in 0..=4000 {
                let s = 0.5 + k as f64 * 5e-4;
                let t = (0..c.len()).fold(Vec3::zeros(), |a, i| a + c.weights[i] * (c.global[i] - s * c.canonical[i]))
                    / wsum;
                grid_best = grid_best.min(weighted_residual(&c, &SimilarityST::new(s, t).unwrap()));
            }
            assert!(best <= grid_best + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn noiseless_is_exact(seed in any::<u64>(), s in 0.05f64..20.0, t in prop::array::uniform3(-5.0f64..5.0)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = Vec3::new(t[0], t[1], t[2]);
            let c = random_set(&mut rng, 30, s, t, 0.0);
            let f = fit_scale_translation(&c).unwrap();
            prop_assert!((f.st.scale() - s).abs() <= 1e-9 * s);
            prop_assert!((f.st.translation() - t).norm() <= 1e-9);
        }

        #[test]
        fn order_and_weight_scale_invariant(seed in any::<u64>(), k in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_set(&mut rng, 25, 0.7, Vec3::new(1.0, 2.0, 3.0), 0.3);
            let f = fit_scale_translation(&c).unwrap().st;
            let mut perm: Vec<usize> = (0..c.len()).collect();
            perm.reverse();
            perm.rotate_left(7);
            let shuffled = CorrespondenceSet::from_pairs(
                perm.iter().map(|&i| c.canonical[i]).collect(),
                perm.iter().map(|&i| c.global[i]).collect(),
                perm.iter().map(|&i| c.weights[i] * k).collect(),
            );
            let g = fit_scale_translation(&shuffled).unwrap().st;
            prop_assert!((f.scale() - g.scale()).abs() <= 1e-9 * f.scale());
            prop_assert!((f.translation() - g.translation()).norm() <= 1e-9);
        }
    }
}
