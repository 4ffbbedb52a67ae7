//! Grouping detected parts into object instances with affinity field
//! directions and the part compatibility table.

use nalgebra::Vector2;

use crate::acf::{compatible_pairs, parts_of, ObjectClass, PartClass, PartInstance};
use crate::camera::CameraIntrinsics;
use crate::error::AcfError;
use crate::losses::MaskWeights;

/// Per-seed 2D affinity vectors of one ROI with their mask weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PafField {
    pub vectors: Vec<Vector2<f64>>,
    pub mask: MaskWeights,
}

/// A scored candidate link between two part instances of compatible classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationCandidate {
    pub source: usize,
    pub target: usize,
    pub score: f64,
}

/// A grouped set of part instances, labeled with an object class when the
/// part set pins down exactly one taxonomy row.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectHypothesis {
    pub parts: Vec<usize>,
    pub object_class: Option<ObjectClass>,
}

/// The normalized mask-weighted mean of the affinity vectors over seeds whose
/// weight reaches `threshold`.
pub fn mean_paf_direction(field: &PafField, threshold: f64) -> Result<Vector2<f64>, AcfError> {
    if field.vectors.len() != field.mask.len() {
        return Err(AcfError::ShapeMismatch(format!(
            "paf vectors {}, mask {}",
            field.vectors.len(),
            field.mask.len()
        )));
    }
    let mut mean = Vector2::zeros();
    let mut total = 0.0;
    for (v, &w) in field.vectors.iter().zip(&field.mask.0) {
        if w >= threshold && w > 0.0 {
            mean += w * v;
            total += w;
        }
    }
    if total <= 0.0 {
        return Err(AcfError::EmptyMask);
    }
    mean /= total;
    let norm = mean.norm();
    if norm < 1e-9 {
        return Err(AcfError::DegenerateDirection("mean affinity vector cancelled".into()));
    }
    Ok(mean / norm)
}

/// Cosine similarity between the source's affinity direction and the
/// image-plane direction from the projected source keypoint to the projected
/// target keypoint.
pub fn score_pair(
    source: &PartInstance,
    target: &PartInstance,
    source_paf_dir: Vector2<f64>,
    projector: &CameraIntrinsics,
) -> Result<f64, AcfError> {
    if !compatible_pairs().contains(&(source.part_class, target.part_class)) {
        return Err(AcfError::PreconditionViolation(format!(
            "incompatible part pair {:?} -> {:?}",
            source.part_class, target.part_class
        )));
    }
    let from = projector.project(source.acf.keypoint())?;
    let to = projector.project(target.acf.keypoint())?;
    let link = to - from;
    if link.norm() < 1e-6 {
        return Err(AcfError::DegenerateDirection("projected keypoints coincide".into()));
    }
    Ok(source_paf_dir.normalize().dot(&link.normalize()))
}

/// Labels a part set with an object class only when exactly one taxonomy row
/// carries exactly those parts.
fn classify(parts: &[PartClass]) -> Option<ObjectClass> {
    let mut sorted: Vec<PartClass> = parts.to_vec();
    sorted.sort();
    let matches: Vec<ObjectClass> = ObjectClass::ALL
        .into_iter()
        .filter(|&o| {
            let mut row = parts_of(o);
            row.sort();
            row == sorted
        })
        .collect();
    if matches.len() == 1 {
        Some(matches[0])
    } else {
        None
    }
}

/// Greedy one-to-one assignment over the candidate links, highest score
/// first; unmatched parts become single-part hypotheses.
pub fn assemble_objects(
    parts: &[PartInstance],
    paf_dirs: &[Option<Vector2<f64>>],
    projector: &CameraIntrinsics,
    min_score: f64,
) -> Result<Vec<ObjectHypothesis>, AcfError> {
    if parts.len() != paf_dirs.len() {
        return Err(AcfError::ShapeMismatch(format!(
            "parts {}, paf dirs {}",
            parts.len(),
            paf_dirs.len()
        )));
    }
    let mut candidates = candidate_links(parts, paf_dirs, projector, min_score)?;
    candidates.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(a.source.cmp(&b.source))
            .then(a.target.cmp(&b.target))
    });
    let mut matched = vec![false; parts.len()];
    let mut hypotheses = Vec::new();
    for c in &candidates {
        if matched[c.source] || matched[c.target] {
            continue;
        }
        matched[c.source] = true;
        matched[c.target] = true;
        let classes = [parts[c.source].part_class, parts[c.target].part_class];
        hypotheses.push(ObjectHypothesis {
            parts: vec![c.source, c.target],
            object_class: classify(&classes),
        });
    }
    for (i, part) in parts.iter().enumerate() {
        if !matched[i] {
            hypotheses.push(ObjectHypothesis {
                parts: vec![i],
                object_class: classify(&[part.part_class]),
            });
        }
    }
    Ok(hypotheses)
}

/// All candidate links between compatible class pairs scoring at least
/// `min_score`. Pairs whose projection is degenerate are skipped.
pub fn candidate_links(
    parts: &[PartInstance],
    paf_dirs: &[Option<Vector2<f64>>],
    projector: &CameraIntrinsics,
    min_score: f64,
) -> Result<Vec<AssociationCandidate>, AcfError> {
    let pairs = compatible_pairs();
    let mut candidates = Vec::new();
    for (src_idx, source) in parts.iter().enumerate() {
        let Some(dir) = paf_dirs[src_idx] else { continue };
        for (tgt_idx, target) in parts.iter().enumerate() {
            if src_idx == tgt_idx
                || !pairs.contains(&(source.part_class, target.part_class))
            {
                continue;
            }
            match score_pair(source, target, dir, projector) {
                Ok(score) if score >= min_score => {
                    candidates.push(AssociationCandidate { source: src_idx, target: tgt_idx, score })
                }
                Ok(_) => {}
                Err(AcfError::DegenerateDirection(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(candidates)
}
