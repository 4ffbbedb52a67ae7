//! Brute-force verification oracles, kept independent of the implementations
//! they check.

use nalgebra::Vector3;

use crate::association::AssociationCandidate;
use crate::error::AcfError;

/// Evaluates the Gaussian KDE on a regular 3D grid over the voter bounding
/// box padded by two bandwidths, returning the argmax cell center. Purely a
/// verification oracle for Mean Shift.
pub fn brute_force_kde_argmax(
    voters: &[Vector3<f64>],
    bandwidth: f64,
    grid_pitch: f64,
) -> Result<Vector3<f64>, AcfError> {
    if voters.is_empty() {
        return Err(AcfError::NoValidSeeds);
    }
    if bandwidth <= 0.0 || grid_pitch <= 0.0 {
        return Err(AcfError::InvalidSpec("bandwidth and pitch must be positive".into()));
    }
    let mut lo = voters[0];
    let mut hi = voters[0];
    for v in voters {
        for k in 0..3 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    let pad = 2.0 * bandwidth;
    let lo = lo.map(|c| c - pad);
    let hi = hi.map(|c| c + pad);
    let counts: [usize; 3] =
        [0, 1, 2].map(|k| ((hi[k] - lo[k]) / grid_pitch).ceil() as usize + 1);
    let inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    let mut best_point = lo;
    let mut best_density = f64::NEG_INFINITY;
    for i in 0..counts[0] {
        let x = lo.x + (i as f64 + 0.5) * grid_pitch;
        for j in 0..counts[1] {
            let y = lo.y + (j as f64 + 0.5) * grid_pitch;
            for k in 0..counts[2] {
                let z = lo.z + (k as f64 + 0.5) * grid_pitch;
                let cell = Vector3::new(x, y, z);
                let density: f64 = voters
                    .iter()
                    .map(|v| (-(cell - v).norm_squared() * inv_two_h2).exp())
                    .sum();
                if density > best_density {
                    best_density = density;
                    best_point = cell;
                }
            }
        }
    }
    Ok(best_point)
}

/// Exhaustive one-to-one assignment maximizing total score. A verification
/// oracle for the greedy matching; limited to small candidate sets.
pub fn brute_force_assignment(candidates: &[AssociationCandidate]) -> Vec<AssociationCandidate> {
    let mut best: Vec<AssociationCandidate> = Vec::new();
    let mut best_score = 0.0;
    let mut chosen: Vec<AssociationCandidate> = Vec::new();
    search(candidates, 0, &mut chosen, 0.0, &mut best, &mut best_score);
    best
}

fn search(
    candidates: &[AssociationCandidate],
    index: usize,
    chosen: &mut Vec<AssociationCandidate>,
    score: f64,
    best: &mut Vec<AssociationCandidate>,
    best_score: &mut f64,
) {
    if score > *best_score || (score == *best_score && chosen.len() < best.len()) {
        *best_score = score;
        *best = chosen.clone();
    }
    if index >= candidates.len() {
        return;
    }
    // Skip this candidate.
    search(candidates, index + 1, chosen, score, best, best_score);
    // Take it, if both endpoints are still free.
    let c = candidates[index];
    let conflict = chosen.iter().any(|p| {
        p.source == c.source || p.target == c.target || p.source == c.target || p.target == c.source
    });
    if !conflict {
        chosen.push(c);
        search(candidates, index + 1, chosen, score + c.score, best, best_score);
        chosen.pop();
    }
}
