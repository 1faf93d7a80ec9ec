use rayon::prelude::*;
use serde::Serialize;

use super::stats::MeanEstimate;
use crate::error::{Error, Result};
use crate::mobius::sweep_ray;
use crate::model::{ray_geodesic, translate_boundary, translated_axis, word_boundary_point, Model};
use crate::walk::{sample_path, SamplePath, StepDistribution};
use crate::word::{axis_tree, distance_to_ray, ReducedWord, TreeBoundaryPrefix};
use crate::BoundaryPointH;

/// Default widest chordal spread tolerated for a half-plane boundary estimate.
pub const DEFAULT_MAX_WIDTH: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct DriftEstimate {
    pub l_hat: f64,
    pub std_error: f64,
    pub n: usize,
    pub paths: usize,
}

impl DriftEstimate {
    /// From per-path values of `d(x₀, ωₙx₀)`.
    pub fn from_displacements(displacements: &[f64], n: usize) -> Self {
        let rates: Vec<f64> = displacements.iter().map(|d| d / n as f64).collect();
        let e = MeanEstimate::from_samples(&rates);
        DriftEstimate {
            l_hat: e.mean,
            std_error: e.std_error,
            n,
            paths: rates.len(),
        }
    }
}

/// Mean of `d(x₀, ωₙx₀)/n` over `paths` independent paths, generated in
/// parallel on the current rayon pool.
pub fn drift_estimate(model: &Model, mu: &StepDistribution, n: usize, paths: usize, seed: u64) -> DriftEstimate {
    let d: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|i| model.displacement(&sample_path(mu, n, seed, i).prefix(n)))
        .collect();
    DriftEstimate::from_displacements(&d, n)
}

/// Estimate of the limit point `ω₊`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum BoundaryEstimate {
    Tree { prefix: TreeBoundaryPrefix },
    /// `point` is the limit of words extending `prefix`; every `ω_m` of the
    /// final quarter lies over the cylinder of chordal width `width`.
    Plane {
        prefix: ReducedWord,
        point: BoundaryPointH,
        width: f64,
    },
}

impl BoundaryEstimate {
    pub fn prefix(&self) -> &ReducedWord {
        match self {
            BoundaryEstimate::Tree { prefix } => &prefix.letters,
            BoundaryEstimate::Plane { prefix, .. } => prefix,
        }
    }

    pub fn depth(&self) -> usize {
        self.prefix().len()
    }
}

/// Start of the stability window: the final quarter of a path of length `n`.
pub fn final_quarter_start(n: usize) -> usize {
    n - n / 4
}

/// The longest prefix of the final `ω` shared by every `ω_m` in the final
/// quarter of the path. On the half-plane that word is also turned into a
/// boundary point, and the estimate is rejected if its cylinder is wider than
/// `max_width`.
pub fn boundary_estimate(model: &Model, path: &SamplePath, max_width: f64) -> Result<BoundaryEstimate> {
    let n = path.len();
    let depth = path.stable_prefix_len(final_quarter_start(n), n);
    let prefix = path.prefix_of_len(n, depth);
    match model {
        Model::Tree { .. } => {
            if depth == 0 {
                return Err(Error::Unstable("no common prefix over the final quarter".into()));
            }
            Ok(BoundaryEstimate::Tree {
                prefix: TreeBoundaryPrefix::new(prefix),
            })
        }
        Model::HalfPlane { group, .. } => {
            let width = group.cylinder_width(&prefix);
            if !(width <= max_width) {
                return Err(Error::Unstable(format!(
                    "final-quarter spread {width:e} exceeds {max_width:e}"
                )));
            }
            let point = word_boundary_point(group, &prefix)?;
            Ok(BoundaryEstimate::Plane { prefix, point, width })
        }
    }
}

/// `d(ωₙx, γ_{x,ξ}) / n`.
pub fn tracking_stat(model: &Model, path: &SamplePath, n: usize, xi: &BoundaryEstimate) -> Result<f64> {
    let w = path.prefix(n);
    let d = match model {
        Model::Tree { basepoint, .. } => {
            let x_inv = basepoint.inverse();
            let local = &(&x_inv * &w) * basepoint;
            let xi_local = &x_inv * xi.prefix();
            distance_to_ray(&local, &TreeBoundaryPrefix::new(xi_local))? as f64
        }
        Model::HalfPlane { group, basepoint } => {
            let gamma = ray_geodesic(group, *basepoint, xi.prefix())?;
            // d(w·o, γ) = d(o, w⁻¹γ), with both endpoints computed from words.
            let w_inv = w.inverse();
            let to = word_boundary_point(group, &(&w_inv * xi.prefix()))?;
            let from = translate_boundary(group, &w_inv, gamma.from);
            crate::mobius::Geodesic::new(from, to)?.distance_to(*basepoint)
        }
    };
    Ok(d / n as f64)
}

/// `l(ωₙ)/n` together with when loxodromicity set in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LengthLaw {
    pub ratio: f64,
    /// First sampled index after which every sampled `ω_m` was loxodromic.
    pub onset: Option<usize>,
    /// Whether every `ω_m`, not just sampled ones, stayed loxodromic from the
    /// onset through `n`.
    pub never_lost: bool,
}

/// Indices at which loxodromicity is recorded: every index up to 64, then a
/// grid of 256 points.
pub fn onset_grid(n: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (1..=n.min(64)).collect();
    let stride = (n / 256).max(1);
    let mut m = 64 + stride;
    while m < n {
        grid.push(m);
        m += stride;
    }
    if n > 64 {
        grid.push(n);
    }
    grid
}

pub fn length_law_stat(model: &Model, path: &SamplePath, n: usize) -> LengthLaw {
    let ratio = model.translation_length(&path.prefix(n)) / n as f64;
    let grid = onset_grid(n);
    let onset = match grid.iter().rposition(|&m| path.is_identity(m)) {
        None => grid.first().copied(),
        Some(i) => grid.get(i + 1).copied(),
    };
    let never_lost = onset.is_some_and(|m0| (m0..=n).all(|m| !path.is_identity(m)));
    LengthLaw { ratio, onset, never_lost }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxisCheck {
    pub pass: bool,
    pub worst_offset: f64,
    pub samples: usize,
}

/// Checks that `γ_{x,ω₊}(t)` stays within `c` of the axis of `ωₙ` for `t` in
/// `[εLn, (1−ε)Ln]` at unit steps.
pub fn axis_tracking_check(
    model: &Model,
    path: &SamplePath,
    n: usize,
    xi: &BoundaryEstimate,
    epsilon: f64,
    c: f64,
    drift: f64,
) -> Result<AxisCheck> {
    let w = path.prefix(n);
    if !model.is_loxodromic(&w) {
        return Err(Error::NotLoxodromic);
    }
    let t0 = (epsilon * drift * n as f64).ceil().max(0.0);
    let t1 = ((1.0 - epsilon) * drift * n as f64).floor();
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    match model {
        Model::Tree { basepoint, .. } => {
            let x_inv = basepoint.inverse();
            let local = &(&x_inv * &w) * basepoint;
            let xi_local = TreeBoundaryPrefix::new(&x_inv * xi.prefix());
            let axis = axis_tree(&local)?;
            let offsets = axis.ray_offsets(&xi_local);
            if (t1 as usize) > offsets.depth() {
                return Err(Error::PrefixTooShallow {
                    depth: offsets.depth(),
                    needed: t1 as usize,
                });
            }
            let mut t = t0 as usize;
            while (t as f64) <= t1 {
                worst = worst.max(offsets.at(t) as f64);
                samples += 1;
                t += 1;
            }
        }
        Model::HalfPlane { group, basepoint } => {
            let letters = xi.prefix().letters();
            let mut cached: Option<(usize, crate::GeodesicH)> = None;
            let mut failure = None;
            sweep_ray(group, *basepoint, letters, t1, 1.0, |s| {
                if s.t < t0 || failure.is_some() {
                    return;
                }
                if cached.as_ref().map(|(j, _)| *j) != Some(s.tile) {
                    let head = ReducedWord::from_letters(letters[..s.tile].iter().copied());
                    match translated_axis(group, &head.inverse(), &w) {
                        Ok(g) => cached = Some((s.tile, g)),
                        Err(e) => {
                            failure = Some(e);
                            return;
                        }
                    }
                }
                let axis = &cached.as_ref().expect("set above").1;
                worst = worst.max(axis.distance_to(s.tangent.point));
                samples += 1;
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
        }
    }
    Ok(AxisCheck {
        pass: worst <= c,
        worst_offset: worst,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobius::{example_group, BoundaryPoint, HalfSpace, Mobius, SchottkyGenerator, SchottkyGroup};
    use crate::word::word;

    fn tree() -> Model {
        Model::tree(2).unwrap()
    }

    /// `z ↦ 4z` as the single generator of a Schottky group.
    fn dilation_model() -> Model {
        let gen = SchottkyGenerator {
            map: Mobius::new(2.0, 0.0, 0.0, 0.5).unwrap(),
            minus: HalfSpace::Disk { center: 0.0, radius: 0.5 },
            plus: HalfSpace::Outside { center: 0.0, radius: 2.0 },
        };
        Model::half_plane(SchottkyGroup::certify(vec![gen]).unwrap())
    }

    #[test]
    fn point_mass_drift_is_exact() {
        let mu = StepDistribution::point_mass(word("ab"));
        let d = drift_estimate(&tree(), &mu, 100, 3, 1);
        assert_eq!(d.l_hat, 2.0);
        assert_eq!(d.std_error, 0.0);
        let mu = StepDistribution::point_mass(word("a"));
        let d = drift_estimate(&dilation_model(), &mu, 200, 2, 1);
        assert!((d.l_hat - 4f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn uniform_drift_near_one_half() {
        let mu = StepDistribution::uniform_nearest_neighbor(2);
        let d = drift_estimate(&tree(), &mu, 2000, 200, 3);
        assert!((d.l_hat - 0.5).abs() < 4.0 * d.std_error + 2.0 / 2000.0, "{d:?}");
    }

    #[test]
    fn point_mass_boundary_and_tracking() {
        let mu = StepDistribution::point_mass(word("ab"));
        let n = 40;
        let p = sample_path(&mu, n, 0, 0);
        let xi = boundary_estimate(&tree(), &p, DEFAULT_MAX_WIDTH).unwrap();
        assert!(xi.prefix().letters().starts_with(word("ab").pow((n / 2) as i64).letters()));
        assert_eq!(xi.prefix(), &word("ab").pow(30));
        for m in 1..=n / 2 {
            let q = sample_path(&mu, m, 0, 0);
            assert_eq!(tracking_stat(&tree(), &q, m, &xi).unwrap(), 0.0);
        }
        let chk = axis_tracking_check(&tree(), &p, n / 2, &xi, 0.1, 0.5, 2.0).unwrap();
        assert!(chk.pass);
        assert_eq!(chk.worst_offset, 0.0);
        let law = length_law_stat(&tree(), &p, n);
        assert_eq!(law.ratio, 2.0);
        assert_eq!(law.onset, Some(1));
        assert!(law.never_lost);
    }

    #[test]
    fn plane_point_mass_limit_is_the_attracting_point() {
        let mu = StepDistribution::point_mass(word("a"));
        let m = dilation_model();
        let p = sample_path(&mu, 200, 0, 0);
        let xi = boundary_estimate(&m, &p, DEFAULT_MAX_WIDTH).unwrap();
        match xi {
            BoundaryEstimate::Plane { point, .. } => assert!(point.approx_eq(&BoundaryPoint::Infinity, 1e-12)),
            _ => unreachable!(),
        }
        let t = tracking_stat(&m, &p, 100, &xi).unwrap();
        assert!(t < 1e-9);
        let chk = axis_tracking_check(&m, &p, 100, &xi, 0.1, 0.5, 4f64.ln()).unwrap();
        assert!(chk.worst_offset < 1e-9);
        assert!(chk.samples > 100);
    }

    #[test]
    fn onset_and_loss_detection() {
        // a then A: back at the identity at step 2.
        let mu = StepDistribution::new(vec![(word("a"), 0.5), (word("A"), 0.5)]).unwrap();
        let p = sample_path(&mu, 1000, 9, 0);
        let law = length_law_stat(&tree(), &p, 1000);
        if let Some(m0) = law.onset {
            let returns: Vec<usize> = (0..=1000).filter(|&m| p.is_identity(m)).collect();
            assert_eq!(law.never_lost, returns.iter().all(|&m| m < m0));
        }
    }

    #[test]
    fn schottky_estimators_run() {
        let m = Model::half_plane(example_group());
        let mu = StepDistribution::uniform_nearest_neighbor(2);
        let n = 300;
        let p = sample_path(&mu, 2 * n, 4, 0);
        let xi = boundary_estimate(&m, &p, DEFAULT_MAX_WIDTH).unwrap();
        let t = tracking_stat(&m, &p, n, &xi).unwrap();
        assert!((0.0..0.2).contains(&t));
        let drift = m.displacement(&p.prefix(n)) / n as f64;
        let chk = axis_tracking_check(&m, &p, n, &xi, 0.1, 2.0, drift).unwrap();
        assert!(chk.samples > 0);
    }
}
