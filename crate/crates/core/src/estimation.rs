//! Voter formation, Mean Shift mode finding and the three axis estimators.

use nalgebra::{Matrix3, Vector3};
use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::camera::SeedGrid;
use crate::error::AcfError;
use crate::losses::{LabelPrediction, MaskWeights, OffsetField};

/// Seed points shifted by their predicted offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct VoterSet {
    pub points: Vec<Vector3<f64>>,
    pub source_seed: Vec<usize>,
}

impl VoterSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gaussian-kernel Mean Shift parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanShiftConfig {
    pub bandwidth: f64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub merge_radius: f64,
}

impl MeanShiftConfig {
    pub fn with_bandwidth(bandwidth: f64) -> Self {
        Self {
            bandwidth,
            max_iterations: 50,
            convergence_tol: 1e-5,
            merge_radius: bandwidth / 2.0,
        }
    }
}

impl Default for MeanShiftConfig {
    fn default() -> Self {
        Self::with_bandwidth(0.03)
    }
}

/// The three axis encodings: voted endpoints, direct vector, labeled scatter
/// line fit by RANSAC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    Endpoints,
    Vector,
    ScatterLine,
}

/// An estimated directed axis anchored at `origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisEstimate {
    pub origin: Vector3<f64>,
    pub direction: Vector3<f64>,
    pub kind: AxisKind,
}

/// RANSAC parameters for the scatter-line fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    pub iterations: usize,
    pub inlier_threshold: f64,
    pub min_inlier_fraction: f64,
    pub rng_seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            inlier_threshold: 0.005,
            min_inlier_fraction: 0.3,
            rng_seed: 0,
        }
    }
}

/// Shifts every valid seed whose mask weight reaches `threshold` by its
/// predicted offset.
pub fn form_voters(
    seeds: &SeedGrid,
    offsets: &OffsetField,
    mask: &MaskWeights,
    threshold: f64,
) -> Result<VoterSet, AcfError> {
    if offsets.0.len() != seeds.len() || mask.len() != seeds.len() {
        return Err(AcfError::ShapeMismatch(format!(
            "seeds {}, offsets {}, mask {}",
            seeds.len(),
            offsets.0.len(),
            mask.len()
        )));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(AcfError::InvalidSpec("mask threshold must lie in [0,1]".into()));
    }
    let mut points = Vec::new();
    let mut source_seed = Vec::new();
    for (i, seed) in seeds.seeds.iter().enumerate() {
        if let Some(p) = seed.point3d {
            if mask.0[i] >= threshold {
                points.push(p + offsets.0[i]);
                source_seed.push(i);
            }
        }
    }
    if points.is_empty() {
        return Err(AcfError::NoValidSeeds);
    }
    Ok(VoterSet { points, source_seed })
}

fn kde(point: &Vector3<f64>, voters: &[Vector3<f64>], bandwidth: f64) -> f64 {
    let inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    voters.iter().map(|v| (-(point - v).norm_squared() * inv_two_h2).exp()).sum()
}

fn mean_shift_from(
    start: Vector3<f64>,
    voters: &[Vector3<f64>],
    config: &MeanShiftConfig,
) -> Vector3<f64> {
    let inv_two_h2 = 1.0 / (2.0 * config.bandwidth * config.bandwidth);
    let mut x = start;
    for _ in 0..config.max_iterations {
        let mut weight_sum = 0.0;
        let mut mean = Vector3::zeros();
        for v in voters {
            let w = (-(x - v).norm_squared() * inv_two_h2).exp();
            weight_sum += w;
            mean += w * v;
        }
        if weight_sum <= 0.0 {
            break; // numerically isolated start, keep position
        }
        let next = mean / weight_sum;
        let shift = (next - x).norm();
        x = next;
        if shift < config.convergence_tol {
            break;
        }
    }
    x
}

/// Runs Mean Shift from every voter, merges converged points within the merge
/// radius, and returns the mode whose basin captured the most voters. Ties
/// are broken by higher kernel density at the mode, then by lexicographic
/// coordinate order.
pub fn mean_shift_mode(voters: &VoterSet, config: &MeanShiftConfig) -> Result<Vector3<f64>, AcfError> {
    if voters.is_empty() {
        return Err(AcfError::NoValidSeeds);
    }
    if config.bandwidth <= 0.0 || config.convergence_tol <= 0.0 {
        return Err(AcfError::InvalidSpec("bandwidth and tolerance must be positive".into()));
    }
    let mut modes: Vec<(Vector3<f64>, usize)> = Vec::new();
    for start in &voters.points {
        let converged = mean_shift_from(*start, &voters.points, config);
        match modes
            .iter_mut()
            .find(|(center, _)| (*center - converged).norm() <= config.merge_radius)
        {
            Some((_, count)) => *count += 1,
            None => modes.push((converged, 1)),
        }
    }
    let mut best = modes[0];
    let mut best_density = kde(&best.0, &voters.points, config.bandwidth);
    for &candidate in &modes[1..] {
        let density = kde(&candidate.0, &voters.points, config.bandwidth);
        let better = candidate.1 > best.1
            || (candidate.1 == best.1
                && (density > best_density
                    || (density == best_density
                        && lex_less(&candidate.0, &best.0))));
        if better {
            best = candidate;
            best_density = density;
        }
    }
    Ok(best.0)
}

fn lex_less(a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
    for k in 0..3 {
        if a[k] < b[k] {
            return true;
        }
        if a[k] > b[k] {
            return false;
        }
    }
    false
}

/// Keypoint estimation: voter formation followed by Mean Shift mode finding.
pub fn estimate_keypoint(
    seeds: &SeedGrid,
    offsets: &OffsetField,
    mask: &MaskWeights,
    mask_threshold: f64,
    config: &MeanShiftConfig,
) -> Result<Vector3<f64>, AcfError> {
    let voters = form_voters(seeds, offsets, mask, mask_threshold)?;
    mean_shift_mode(&voters, config)
}

/// Endpoint-pair axis estimation: one Mean Shift mode per endpoint channel,
/// axis directed from endpoint 1 to endpoint 2.
pub fn estimate_axis_endpoints(
    seeds: &SeedGrid,
    endpoint_offsets: &[[Vector3<f64>; 2]],
    mask: &MaskWeights,
    mask_threshold: f64,
    config: &MeanShiftConfig,
) -> Result<AxisEstimate, AcfError> {
    let mut endpoints = [Vector3::zeros(), Vector3::zeros()];
    for m in 0..2 {
        let channel = OffsetField(endpoint_offsets.iter().map(|t| t[m]).collect());
        let voters = form_voters(seeds, &channel, mask, mask_threshold)?;
        endpoints[m] = mean_shift_mode(&voters, config)?;
    }
    let link = endpoints[1] - endpoints[0];
    let norm = link.norm();
    if norm < 1e-6 {
        return Err(AcfError::DegenerateAxis(format!("endpoints separated by {norm} m")));
    }
    Ok(AxisEstimate { origin: endpoints[0], direction: link / norm, kind: AxisKind::Endpoints })
}

/// Direct-vector axis estimation: the mask-weighted mean of the per-seed
/// direction predictions, anchored at the caller's keypoint estimate.
pub fn estimate_axis_vector(
    per_seed_vectors: &[Vector3<f64>],
    mask: &MaskWeights,
    origin: Vector3<f64>,
) -> Result<AxisEstimate, AcfError> {
    if per_seed_vectors.len() != mask.len() {
        return Err(AcfError::ShapeMismatch(format!(
            "vectors {}, mask {}",
            per_seed_vectors.len(),
            mask.len()
        )));
    }
    let total: f64 = mask.0.iter().sum();
    if total <= 0.0 {
        return Err(AcfError::EmptyMask);
    }
    let mut mean = Vector3::zeros();
    for (n, &w) in per_seed_vectors.iter().zip(&mask.0) {
        if w > 0.0 {
            mean += w * n;
        }
    }
    mean /= total;
    let norm = mean.norm();
    if norm < 1e-9 {
        return Err(AcfError::DegenerateAxis("weighted mean direction cancelled".into()));
    }
    Ok(AxisEstimate { origin, direction: mean / norm, kind: AxisKind::Vector })
}

fn point_line_distance(p: &Vector3<f64>, origin: &Vector3<f64>, dir: &Vector3<f64>) -> f64 {
    (p - origin).cross(dir).norm()
}

/// Orthogonal least-squares line fit: centroid plus principal direction of the
/// scatter covariance.
fn total_least_squares_line(points: &[Vector3<f64>]) -> (Vector3<f64>, Vector3<f64>) {
    let centroid = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let mut best = 0;
    for k in 1..3 {
        if eig.eigenvalues[k] > eig.eigenvalues[best] {
            best = k;
        }
    }
    let dir = eig.eigenvectors.column(best).into_owned();
    (centroid, dir.normalize())
}

/// Scatter-line axis estimation: RANSAC over two-point line hypotheses, total
/// least-squares refit on the best inlier set, direction sign resolved by
/// majority vote over the closer-endpoint labels of the inliers.
///
/// The sign vote projects each inlier relative to `reference` when given
/// (normally the estimated keypoint), otherwise relative to the fit centroid.
/// A keypoint reference keeps the vote decisive even when all visible voters
/// lie on one side of the axis midpoint.
pub fn estimate_axis_scatterline(
    seeds: &SeedGrid,
    offsets: &OffsetField,
    labels: &LabelPrediction,
    mask: &MaskWeights,
    mask_threshold: f64,
    ransac: &RansacConfig,
    reference: Option<Vector3<f64>>,
) -> Result<AxisEstimate, AcfError> {
    if ransac.iterations < 1 || ransac.inlier_threshold <= 0.0 {
        return Err(AcfError::InvalidSpec("RANSAC needs iterations >= 1, threshold > 0".into()));
    }
    if labels.logits.len() != seeds.len() {
        return Err(AcfError::ShapeMismatch(format!(
            "labels {}, seeds {}",
            labels.logits.len(),
            seeds.len()
        )));
    }
    let voters = form_voters(seeds, offsets, mask, mask_threshold)?;
    if voters.len() < 2 {
        return Err(AcfError::PreconditionViolation("scatter-line fit needs >= 2 voters".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ransac.rng_seed);
    let mut best_inliers: Vec<usize> = Vec::new();
    for _ in 0..ransac.iterations {
        let pick = sample_indices(&mut rng, voters.len(), 2);
        let (a, b) = (voters.points[pick.index(0)], voters.points[pick.index(1)]);
        let dir = b - a;
        let norm = dir.norm();
        if norm < 1e-12 {
            continue;
        }
        let dir = dir / norm;
        let inliers: Vec<usize> = (0..voters.len())
            .filter(|&i| point_line_distance(&voters.points[i], &a, &dir) <= ransac.inlier_threshold)
            .collect();
        if inliers.len() > best_inliers.len() {
            best_inliers = inliers;
        }
    }
    let fraction = best_inliers.len() as f64 / voters.len() as f64;
    if best_inliers.len() < 2 || fraction < ransac.min_inlier_fraction {
        return Err(AcfError::RansacFailure(ransac.min_inlier_fraction));
    }
    let inlier_points: Vec<Vector3<f64>> =
        best_inliers.iter().map(|&i| voters.points[i]).collect();
    let (origin, mut direction) = total_least_squares_line(&inlier_points);
    // Voters labeled closer to endpoint 2 should project further along the
    // direction than those labeled closer to endpoint 1.
    let vote_origin = reference.unwrap_or(origin);
    let mut vote = 0.0;
    for (&i, p) in best_inliers.iter().zip(&inlier_points) {
        let label = if labels.logits[voters.source_seed[i]] > 0.0 { 1.0 } else { -1.0 };
        vote += label * (p - vote_origin).dot(&direction);
    }
    if vote < 0.0 {
        direction = -direction;
    } else if vote == 0.0 {
        // Labels are uninformative; pick a deterministic canonical sign.
        let flip = direction
            .iter()
            .find(|&&c| c != 0.0)
            .map_or(false, |&c| c < 0.0);
        if flip {
            direction = -direction;
        }
    }
    Ok(AxisEstimate { origin, direction, kind: AxisKind::ScatterLine })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{Seed, SeedGrid};
    use approx::assert_relative_eq;
    use nalgebra::Vector2;

    fn grid_from_points(points: &[Vector3<f64>]) -> SeedGrid {
        let seeds = points
            .iter()
            .map(|p| Seed { uv: Vector2::zeros(), depth: p.z, point3d: Some(*p) })
            .collect();
        SeedGrid { n: points.len(), seeds }
    }

    fn ones(n: usize) -> MaskWeights {
        MaskWeights::new(vec![1.0; n]).unwrap()
    }

    #[test]
    fn zero_offsets_keep_seed_points() {
        let points = vec![Vector3::new(0.0, 0.1, 1.0), Vector3::new(0.1, 0.0, 1.1)];
        let grid = grid_from_points(&points);
        let voters = form_voters(
            &grid,
            &OffsetField(vec![Vector3::zeros(); 2]),
            &ones(2),
            0.5,
        )
        .unwrap();
        assert_eq!(voters.points, points);
    }

    #[test]
    fn constructed_offsets_collapse_to_common_target() {
        let points = vec![Vector3::new(0.0, 0.1, 1.0), Vector3::new(0.1, 0.0, 1.1)];
        let target = Vector3::new(0.05, 0.05, 1.05);
        let grid = grid_from_points(&points);
        let offsets = OffsetField(points.iter().map(|p| target - p).collect());
        let voters = form_voters(&grid, &offsets, &ones(2), 0.5).unwrap();
        for v in &voters.points {
            assert_relative_eq!(*v, target, epsilon = 1e-15);
        }
    }

    #[test]
    fn mask_threshold_filters_voters() {
        let points = vec![Vector3::zeros(), Vector3::x()];
        let grid = grid_from_points(&points);
        let mask = MaskWeights::new(vec![0.4, 0.6]).unwrap();
        let voters =
            form_voters(&grid, &OffsetField(vec![Vector3::zeros(); 2]), &mask, 0.5).unwrap();
        assert_eq!(voters.len(), 1);
        assert_eq!(voters.source_seed, vec![1]);
    }

    #[test]
    fn all_seeds_below_threshold_errors() {
        let grid = grid_from_points(&[Vector3::zeros()]);
        let mask = MaskWeights::new(vec![0.1]).unwrap();
        let res = form_voters(&grid, &OffsetField(vec![Vector3::zeros()]), &mask, 0.5);
        assert_eq!(res, Err(AcfError::NoValidSeeds));
    }

    #[test]
    fn mean_shift_single_voter() {
        let v = Vector3::new(0.2, -0.1, 0.9);
        let voters = VoterSet { points: vec![v], source_seed: vec![0] };
        let mode = mean_shift_mode(&voters, &MeanShiftConfig::default()).unwrap();
        assert_relative_eq!(mode, v, epsilon = 1e-12);
    }

    #[test]
    fn mean_shift_symmetric_pair() {
        let c = Vector3::new(0.0, 0.0, 1.0);
        let d = Vector3::new(0.01, 0.0, 0.0);
        let voters = VoterSet { points: vec![c - d, c + d], source_seed: vec![0, 1] };
        let mode = mean_shift_mode(&voters, &MeanShiftConfig::with_bandwidth(0.05)).unwrap();
        assert!((mode - c).norm() < 1e-6);
    }

    #[test]
    fn mean_shift_dense_cluster_beats_outliers() {
        // 40 voters near (0,0,1), 10 outliers near (0,0,2).
        let mut points = Vec::new();
        let mut state = 12345u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.02
        };
        let dense = Vector3::new(0.0, 0.0, 1.0);
        for _ in 0..40 {
            points.push(dense + Vector3::new(next(), next(), next()));
        }
        for _ in 0..10 {
            points.push(Vector3::new(0.0, 0.0, 2.0) + Vector3::new(next(), next(), next()));
        }
        let dense_mean =
            points[..40].iter().sum::<Vector3<f64>>() / 40.0;
        let source_seed = (0..points.len()).collect();
        let voters = VoterSet { points, source_seed };
        let mode = mean_shift_mode(&voters, &MeanShiftConfig::with_bandwidth(0.05)).unwrap();
        assert!((mode - dense_mean).norm() < 0.005, "mode drifted {}", (mode - dense_mean).norm());
    }

    #[test]
    fn keypoint_estimate_exact_on_zero_noise() {
        let points = vec![
            Vector3::new(0.0, 0.1, 1.0),
            Vector3::new(0.1, 0.0, 1.1),
            Vector3::new(-0.1, -0.1, 0.9),
        ];
        let target = Vector3::new(0.02, 0.03, 1.0);
        let grid = grid_from_points(&points);
        let offsets = OffsetField(points.iter().map(|p| target - p).collect());
        let est = estimate_keypoint(&grid, &offsets, &ones(3), 0.5, &MeanShiftConfig::default())
            .unwrap();
        assert!((est - target).norm() < 1e-6);
    }

    fn endpoint_offsets_for(
        points: &[Vector3<f64>],
        e1: Vector3<f64>,
        e2: Vector3<f64>,
    ) -> Vec<[Vector3<f64>; 2]> {
        points.iter().map(|p| [e1 - p, e2 - p]).collect()
    }

    #[test]
    fn endpoints_axis_zero_noise_and_swap_antisymmetry() {
        let points = vec![
            Vector3::new(0.0, 0.1, 1.0),
            Vector3::new(0.1, 0.0, 1.1),
            Vector3::new(-0.1, -0.1, 0.9),
        ];
        let e1 = Vector3::new(0.0, 0.0, 0.95);
        let e2 = Vector3::new(0.0, 0.0, 1.15);
        let grid = grid_from_points(&points);
        let cfg = MeanShiftConfig::default();
        let fwd = estimate_axis_endpoints(
            &grid,
            &endpoint_offsets_for(&points, e1, e2),
            &ones(3),
            0.5,
            &cfg,
        )
        .unwrap();
        assert!((fwd.direction - Vector3::z()).norm() < 1e-9);
        assert!((fwd.origin - e1).norm() < 1e-9);
        let swapped = estimate_axis_endpoints(
            &grid,
            &endpoint_offsets_for(&points, e2, e1),
            &ones(3),
            0.5,
            &cfg,
        )
        .unwrap();
        assert_eq!(swapped.direction, -fwd.direction);
    }

    #[test]
    fn coincident_endpoints_are_degenerate() {
        let points = vec![Vector3::new(0.0, 0.0, 1.0)];
        let e = Vector3::new(0.0, 0.0, 1.1);
        let grid = grid_from_points(&points);
        let res = estimate_axis_endpoints(
            &grid,
            &endpoint_offsets_for(&points, e, e),
            &ones(1),
            0.5,
            &MeanShiftConfig::default(),
        );
        assert!(matches!(res, Err(AcfError::DegenerateAxis(_))));
    }

    #[test]
    fn vector_axis_mean_and_symmetry() {
        let n = Vector3::new(0.0, 0.6, 0.8);
        let est = estimate_axis_vector(&[n, n, n], &ones(3), Vector3::zeros()).unwrap();
        assert_relative_eq!(est.direction, n, epsilon = 1e-12);

        // Symmetric tilt about n cancels to n.
        let eps = 0.01;
        let tangent: Vector3<f64> = Vector3::x();
        let a = (n + eps * tangent).normalize();
        let b = (n - eps * tangent).normalize();
        let est = estimate_axis_vector(&[a, b], &ones(2), Vector3::zeros()).unwrap();
        assert!((est.direction - n).norm() < eps * eps);
    }

    #[test]
    fn antipodal_vectors_are_degenerate() {
        let n = Vector3::z();
        let res = estimate_axis_vector(&[n, -n], &ones(2), Vector3::zeros());
        assert!(matches!(res, Err(AcfError::DegenerateAxis(_))));
    }

    fn scatter_setup(
        along: Vector3<f64>,
        count: usize,
    ) -> (SeedGrid, OffsetField, LabelPrediction, MaskWeights) {
        // Seeds placed anywhere; offsets project each one onto the line
        // through the origin with direction `along`.
        let line_points: Vec<Vector3<f64>> = (0..count)
            .map(|i| along * (i as f64 / (count - 1) as f64 - 0.5) * 0.2)
            .collect();
        let seeds: Vec<Vector3<f64>> = line_points
            .iter()
            .enumerate()
            .map(|(i, p)| p + Vector3::new(0.01 * (i as f64).sin(), 0.01, 1.0))
            .collect();
        let grid = grid_from_points(&seeds);
        let offsets = OffsetField(
            seeds.iter().zip(&line_points).map(|(s, p)| p - s).collect(),
        );
        let logits: Vec<f64> = (0..count)
            .map(|i| if i * 2 >= count { 5.0 } else { -5.0 })
            .collect();
        let labels = LabelPrediction {
            labels_star: logits.iter().map(|&l| (l > 0.0) as u8).collect(),
            logits,
        };
        (grid, offsets, labels, MaskWeights::new(vec![1.0; count]).unwrap())
    }

    #[test]
    fn scatterline_exact_on_collinear_voters() {
        let along = Vector3::new(0.0, 0.6, 0.8);
        let (grid, offsets, labels, mask) = scatter_setup(along, 20);
        let est = estimate_axis_scatterline(
            &grid,
            &offsets,
            &labels,
            &mask,
            0.5,
            &RansacConfig::default(),
            None,
        )
        .unwrap();
        assert!((est.direction - along).norm() < 1e-9);
    }

    #[test]
    fn scatterline_inverted_labels_negate_direction() {
        let along = Vector3::new(0.0, 0.6, 0.8);
        let (grid, offsets, labels, mask) = scatter_setup(along, 20);
        let inverted = LabelPrediction {
            logits: labels.logits.iter().map(|l| -l).collect(),
            labels_star: labels.labels_star.iter().map(|l| 1 - l).collect(),
        };
        let cfg = RansacConfig::default();
        let fwd =
            estimate_axis_scatterline(&grid, &offsets, &labels, &mask, 0.5, &cfg, None).unwrap();
        let rev =
            estimate_axis_scatterline(&grid, &offsets, &inverted, &mask, 0.5, &cfg, None).unwrap();
        assert_eq!(rev.direction, -fwd.direction);
    }

    #[test]
    fn scatterline_determinism() {
        let along = Vector3::x();
        let (grid, offsets, labels, mask) = scatter_setup(along, 15);
        let cfg = RansacConfig { rng_seed: 7, ..RansacConfig::default() };
        let a = estimate_axis_scatterline(&grid, &offsets, &labels, &mask, 0.5, &cfg, None).unwrap();
        let b = estimate_axis_scatterline(&grid, &offsets, &labels, &mask, 0.5, &cfg, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scatterline_needs_two_voters() {
        let points = vec![Vector3::new(0.0, 0.0, 1.0)];
        let grid = grid_from_points(&points);
        let res = estimate_axis_scatterline(
            &grid,
            &OffsetField(vec![Vector3::zeros()]),
            &LabelPrediction { logits: vec![1.0], labels_star: vec![1] },
            &ones(1),
            0.5,
            &RansacConfig::default(),
            None,
        );
        assert!(matches!(res, Err(AcfError::PreconditionViolation(_))));
    }
}
