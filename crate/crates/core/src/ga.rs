//! Genetic refinement of a genotype against a skeleton image.
//!
//! Fitness is the overlap objective
//!
//! ```text
//!     |G - u|_1 / (|1 - u|_1 * |1 - G|_1)
//! ```
//!
//! where `G` is the target and `u` the rendered candidate, both scaled to
//! `[0, 1]` with 0 for black. Lower is better and 0 is a pixel-exact match.
//!
//! Each epoch keeps the best individual unmutated, fills `reproduce_frac` of
//! the remaining slots with mutated rank-selected survivors, and the rest with
//! crossover children of two rank-selected parents.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_genotype, Axis, Canvas, RasterImage, TableGenotype, CORE_THICKNESS};
use crate::render::{rasterize_skeleton, BorderStyle};
use crate::rng::{seeded, Rng};
use crate::xycut::to_luminance;

/// Relative weights of the three structural operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralOpProbs {
    pub add: f64,
    pub merge: f64,
    pub remove: f64,
}

impl Default for StructuralOpProbs {
    fn default() -> Self {
        Self { add: 0.03, merge: 0.03, remove: 0.03 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructuralOp {
    Add,
    Merge,
    Remove,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub population_size: usize,
    pub elitism: bool,
    /// Share of non-elite slots filled by mutated survivors.
    pub reproduce_frac: f64,
    /// Per-entry probability of a numeric perturbation.
    pub numeric_mutation_prob: f64,
    /// Per-dimension probability that a structural operator fires.
    pub structural_mutation_prob: f64,
    pub structural_op_probs: StructuralOpProbs,
    pub numeric_mutation_sigma: f64,
    pub convergence_epsilon: f64,
    pub convergence_window: usize,
    pub max_epochs: usize,
    /// Zero slots appended to each dimension so "add" has room to act.
    pub headroom: usize,
    pub style: BorderStyle,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population_size: 50,
            elitism: true,
            reproduce_frac: 0.70,
            numeric_mutation_prob: 0.1,
            structural_mutation_prob: 0.1,
            structural_op_probs: StructuralOpProbs::default(),
            numeric_mutation_sigma: 5.0,
            convergence_epsilon: 0.01,
            convergence_window: 3,
            max_epochs: 200,
            headroom: 2,
            style: BorderStyle::blurry(),
            seed: 0,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidParam(format!("{name} = {v} is not in [0, 1]")))
            }
        };
        prob("reproduce_frac", self.reproduce_frac)?;
        prob("numeric_mutation_prob", self.numeric_mutation_prob)?;
        prob("structural_mutation_prob", self.structural_mutation_prob)?;
        let ops = self.structural_op_probs;
        prob("structural add", ops.add)?;
        prob("structural merge", ops.merge)?;
        prob("structural remove", ops.remove)?;
        if self.structural_mutation_prob > 0.0 && ops.add + ops.merge + ops.remove <= 0.0 {
            return Err(Error::InvalidParam("structural op weights sum to zero".into()));
        }
        if self.population_size < 2 {
            return Err(Error::InvalidParam("population_size must be at least 2".into()));
        }
        if self.convergence_window == 0 {
            return Err(Error::InvalidParam("convergence_window must be at least 1".into()));
        }
        if !self.numeric_mutation_sigma.is_finite() || self.numeric_mutation_sigma < 0.0 {
            return Err(Error::InvalidParam("numeric_mutation_sigma must be >= 0".into()));
        }
        if self.convergence_epsilon.is_nan() || self.convergence_epsilon < 0.0 {
            return Err(Error::InvalidParam("convergence_epsilon must be >= 0".into()));
        }
        Ok(())
    }
}

/// Overlap objective; 0 for a perfect match.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FitnessScore(pub f64);

impl FitnessScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Overlap objective on two 8-bit gray buffers of equal length.
pub fn overlap_score(target: &[u8], candidate: &[u8]) -> Result<FitnessScore> {
    if target.len() != candidate.len() {
        return Err(Error::BufferSize { got: candidate.len(), expected: target.len() });
    }
    let target_dark: u64 = target.iter().map(|&g| 255 - g as u64).sum();
    score_with_target_dark(target, target_dark, candidate)
}

fn score_with_target_dark(target: &[u8], target_dark: u64, candidate: &[u8]) -> Result<FitnessScore> {
    if target_dark == 0 {
        return Err(Error::Degenerate("target image is all white"));
    }
    let (mut diff, mut cand_dark) = (0u64, 0u64);
    for (&g, &u) in target.iter().zip(candidate) {
        diff += g.abs_diff(u) as u64;
        cand_dark += 255 - u as u64;
    }
    if cand_dark == 0 {
        return Err(Error::Degenerate("candidate renders all white"));
    }
    // Intensities are in 1/255 units, so one factor of 255 survives.
    Ok(FitnessScore(diff as f64 * 255.0 / (cand_dark as f64 * target_dark as f64)))
}

/// Target image prepared for repeated fitness evaluation.
#[derive(Debug, Clone)]
pub struct FitnessEvaluator {
    target: Vec<u8>,
    target_dark: u64,
    canvas: Canvas,
    style: BorderStyle,
}

impl FitnessEvaluator {
    pub fn new(target: &RasterImage, style: BorderStyle) -> Result<Self> {
        let gray = to_luminance(target)?;
        let canvas = gray.canvas();
        let target = gray.into_pixels();
        let target_dark = target.iter().map(|&g| 255 - g as u64).sum();
        if target_dark == 0 {
            return Err(Error::Degenerate("target image is all white"));
        }
        Ok(Self { target, target_dark, canvas, style })
    }

    pub fn canvas(&self) -> Canvas {
        self.canvas
    }

    /// Scores `candidate`, reusing `buf` for the rendering.
    pub fn evaluate_with(&self, candidate: &TableGenotype, buf: &mut Vec<u8>) -> Result<FitnessScore> {
        validate_genotype(candidate, self.canvas)?;
        rasterize_skeleton(candidate, &self.style, self.canvas, buf);
        score_with_target_dark(&self.target, self.target_dark, buf)
    }

    pub fn evaluate(&self, candidate: &TableGenotype) -> Result<FitnessScore> {
        self.evaluate_with(candidate, &mut Vec::new())
    }
}

/// Renders `candidate` at the target's resolution and scores the overlap.
pub fn fitness(candidate: &TableGenotype, target: &RasterImage, style: &BorderStyle) -> Result<FitnessScore> {
    FitnessEvaluator::new(target, *style)?.evaluate(candidate)
}

/// Gaussian step rounded to whole pixels, never zero.
fn pixel_step(rng: &mut Rng, normal: &Normal<f64>) -> i32 {
    let s = normal.sample(rng).round() as i32;
    if s != 0 {
        s
    } else if rng.gen_bool(0.5) {
        1
    } else {
        -1
    }
}

fn axis_limit(canvas: Canvas, axis: Axis) -> i64 {
    match axis {
        Axis::Horizontal => canvas.height as i64,
        Axis::Vertical => canvas.width as i64,
    }
}

fn fits(g: &TableGenotype, axis: Axis, canvas: Canvas) -> bool {
    g.origin(axis) as i64 + g.span(axis) + CORE_THICKNESS as i64 <= axis_limit(canvas, axis)
}

/// Restores canvas containment along `axis`: pulls the origin back first, and
/// falls back to `parent`'s values for that axis if the extents alone overflow.
fn reclamp_axis(g: &mut TableGenotype, parent: &TableGenotype, axis: Axis, canvas: Canvas) {
    if fits(g, axis, canvas) {
        return;
    }
    let room = axis_limit(canvas, axis) - g.span(axis) - CORE_THICKNESS as i64;
    if room >= 0 {
        let origin = (g.origin(axis) as i64).min(room) as i32;
        match axis {
            Axis::Horizontal => g.origin_y = origin,
            Axis::Vertical => g.origin_x = origin,
        }
    } else {
        match axis {
            Axis::Horizontal => {
                g.origin_y = parent.origin_y;
                g.row_heights = parent.row_heights.clone();
            }
            Axis::Vertical => {
                g.origin_x = parent.origin_x;
                g.col_widths = parent.col_widths.clone();
            }
        }
    }
}

/// Applies one structural operator to an extent list in place.
///
/// `add` splits the largest extent in two and needs a free zero slot; `merge`
/// sums a random adjacent pair; `remove` deletes the smallest extent. Merge
/// and remove leave at least one extent. Positive entries end up compacted to
/// the front. Returns false when the operator cannot act.
pub fn apply_structural_op(extents: &mut Vec<i32>, op: StructuralOp, rng: &mut Rng) -> bool {
    let len = extents.len();
    let mut eff: Vec<i32> = extents.iter().copied().filter(|&e| e > 0).collect();
    let acted = match op {
        StructuralOp::Add => {
            if eff.len() >= len {
                false
            } else {
                let (i, &largest) = eff.iter().enumerate().max_by_key(|&(i, &e)| (e, std::cmp::Reverse(i))).unwrap();
                if largest < 2 {
                    false
                } else {
                    let half = largest / 2;
                    eff[i] = largest - half;
                    eff.insert(i + 1, half);
                    true
                }
            }
        }
        StructuralOp::Merge => {
            if eff.len() < 2 {
                false
            } else {
                let i = rng.gen_range(0..eff.len() - 1);
                eff[i] += eff[i + 1];
                eff.remove(i + 1);
                true
            }
        }
        StructuralOp::Remove => {
            if eff.len() < 2 {
                false
            } else {
                let (i, _) = eff.iter().enumerate().min_by_key(|&(i, &e)| (e, i)).unwrap();
                eff.remove(i);
                true
            }
        }
    };
    if acted {
        eff.resize(len, 0);
        *extents = eff;
    }
    acted
}

fn pick_op(probs: &StructuralOpProbs, rng: &mut Rng) -> StructuralOp {
    let total = probs.add + probs.merge + probs.remove;
    let r = rng.gen::<f64>() * total;
    if r < probs.add {
        StructuralOp::Add
    } else if r < probs.add + probs.merge {
        StructuralOp::Merge
    } else {
        StructuralOp::Remove
    }
}

/// Mutates a valid genotype; the result is always valid for `canvas`.
///
/// Numeric steps apply to the origin and to effective extents only, and
/// extents never drop below 1 px, so cardinality changes come solely from the
/// structural operators.
pub fn mutate_with(g: &TableGenotype, p: &GaParams, canvas: Canvas, rng: &mut Rng) -> TableGenotype {
    let mut child = g.clone();
    let normal = Normal::new(0.0, p.numeric_mutation_sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");

    if rng.gen_bool(p.numeric_mutation_prob) {
        child.origin_x = (child.origin_x + pixel_step(rng, &normal)).max(0);
    }
    if rng.gen_bool(p.numeric_mutation_prob) {
        child.origin_y = (child.origin_y + pixel_step(rng, &normal)).max(0);
    }
    for list in [&mut child.row_heights, &mut child.col_widths] {
        for e in list.iter_mut().filter(|e| **e > 0) {
            if rng.gen_bool(p.numeric_mutation_prob) {
                *e = (*e + pixel_step(rng, &normal)).max(1);
            }
        }
    }
    for axis in [Axis::Horizontal, Axis::Vertical] {
        if rng.gen_bool(p.structural_mutation_prob) {
            let op = pick_op(&p.structural_op_probs, rng);
            let list = match axis {
                Axis::Horizontal => &mut child.row_heights,
                Axis::Vertical => &mut child.col_widths,
            };
            apply_structural_op(list, op, rng);
        }
    }
    for axis in [Axis::Horizontal, Axis::Vertical] {
        reclamp_axis(&mut child, g, axis, canvas);
    }
    child
}

/// Seeded form of [`mutate_with`].
pub fn mutate(g: &TableGenotype, p: &GaParams, canvas: Canvas, seed: u64) -> TableGenotype {
    mutate_with(g, p, canvas, &mut seeded(seed))
}

/// Child takes x origin and columns from `p1`, y origin and rows from `p2`.
pub fn crossover(p1: &TableGenotype, p2: &TableGenotype) -> Result<TableGenotype> {
    if (p1.max_rows, p1.max_cols) != (p2.max_rows, p2.max_cols) {
        return Err(Error::CardinalityMismatch((p1.max_rows, p1.max_cols), (p2.max_rows, p2.max_cols)));
    }
    Ok(TableGenotype {
        max_rows: p2.max_rows,
        max_cols: p1.max_cols,
        origin_x: p1.origin_x,
        origin_y: p2.origin_y,
        row_heights: p2.row_heights.clone(),
        col_widths: p1.col_widths.clone(),
    })
}

/// True when each of the last `window` epoch-to-epoch relative improvements
/// of the best fitness is at most `epsilon`.
pub fn has_converged(history: &[f64], epsilon: f64, window: usize) -> bool {
    if window == 0 || history.len() < window + 1 {
        return false;
    }
    history[history.len() - window - 1..].windows(2).all(|w| {
        let (prev, cur) = (w[0], w[1]);
        let rel = if prev > 0.0 { (prev - cur) / prev } else { 0.0 };
        rel <= epsilon
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveResult {
    pub best: TableGenotype,
    pub best_fitness: FitnessScore,
    /// Best fitness per epoch; entry 0 is the seeded population.
    pub history: Vec<f64>,
    pub converged: bool,
}

impl EvolveResult {
    /// `epoch,best_fitness` CSV.
    pub fn history_csv(&self) -> String {
        let mut s = String::from("epoch,best_fitness\n");
        for (i, f) in self.history.iter().enumerate() {
            s.push_str(&format!("{i},{f:.10e}\n"));
        }
        s
    }
}

/// Index drawn with linear rank weights: rank 0 (best) has weight `n`, the
/// worst has weight 1. `order` lists population indices best first.
fn rank_select(order: &[usize], rng: &mut Rng) -> usize {
    let n = order.len();
    let total = n * (n + 1) / 2;
    let mut r = rng.gen_range(0..total);
    for (rank, &idx) in order.iter().enumerate() {
        let w = n - rank;
        if r < w {
            return idx;
        }
        r -= w;
    }
    order[n - 1]
}

fn evaluate_all(eval: &FitnessEvaluator, pop: &[TableGenotype]) -> Result<Vec<f64>> {
    pop.par_iter().map_init(Vec::new, |buf, g| eval.evaluate_with(g, buf).map(FitnessScore::value)).collect()
}

/// Evolves a population seeded from `initial` against `target`.
pub fn evolve(initial: &TableGenotype, target: &RasterImage, p: &GaParams) -> Result<EvolveResult> {
    p.validate()?;
    let eval = FitnessEvaluator::new(target, p.style)?;
    let canvas = eval.canvas();
    let mut start = initial.clone();
    start.pad_to(
        start.max_rows.max(start.effective_rows() + p.headroom),
        start.max_cols.max(start.effective_cols() + p.headroom),
    );
    validate_genotype(&start, canvas)?;

    let mut rng = seeded(p.seed);
    let mut pop = Vec::with_capacity(p.population_size);
    pop.push(start.clone());
    while pop.len() < p.population_size {
        pop.push(mutate_with(&start, p, canvas, &mut rng));
    }
    let mut scores = evaluate_all(&eval, &pop)?;

    let ranked = |scores: &[f64]| {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        order
    };

    let mut order = ranked(&scores);
    let mut history = vec![scores[order[0]]];
    let mut converged = false;
    for _ in 0..p.max_epochs {
        if has_converged(&history, p.convergence_epsilon, p.convergence_window) {
            converged = true;
            break;
        }
        let mut next = Vec::with_capacity(p.population_size);
        let mut carried = Vec::new();
        if p.elitism {
            next.push(pop[order[0]].clone());
            carried.push(scores[order[0]]);
        }
        let slots = p.population_size - next.len();
        let reproduce = (p.reproduce_frac * slots as f64).round() as usize;
        for _ in 0..reproduce {
            let parent = &pop[rank_select(&order, &mut rng)];
            next.push(mutate_with(parent, p, canvas, &mut rng));
        }
        while next.len() < p.population_size {
            let a = rank_select(&order, &mut rng);
            let b = rank_select(&order, &mut rng);
            next.push(crossover(&pop[a], &pop[b])?);
        }
        let fresh = evaluate_all(&eval, &next[carried.len()..])?;
        carried.extend(fresh);
        pop = next;
        scores = carried;
        order = ranked(&scores);
        history.push(scores[order[0]]);
    }
    if !converged {
        converged = has_converged(&history, p.convergence_epsilon, p.convergence_window);
    }
    let best = pop[order[0]].clone();
    Ok(EvolveResult { best, best_fitness: FitnessScore(scores[order[0]]), history, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{render_skeleton, sample_genotype, TableConfig};
    use proptest::prelude::*;

    /// Literal evaluation of the objective on [0,1]-scaled pixels.
    fn oracle(target: &[f64], cand: &[f64]) -> f64 {
        let l1 = |v: Vec<f64>| v.iter().map(|x| x.abs()).sum::<f64>();
        l1(target.iter().zip(cand).map(|(g, u)| g - u).collect())
            / (l1(cand.iter().map(|u| 1.0 - u).collect()) * l1(target.iter().map(|g| 1.0 - g).collect()))
    }

    #[test]
    fn four_pixel_toy() {
        assert_eq!(oracle(&[0.0, 1.0, 1.0, 1.0], &[1.0, 0.0, 1.0, 1.0]), 2.0);
        let s = overlap_score(&[0, 255, 255, 255], &[255, 0, 255, 255]).unwrap();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn score_matches_oracle_on_gray_buffers() {
        let mut rng = seeded(3);
        for _ in 0..50 {
            let g: Vec<u8> = (0..64).map(|_| rng.gen()).collect();
            let u: Vec<u8> = (0..64).map(|_| rng.gen()).collect();
            let scale = |v: &[u8]| v.iter().map(|&x| x as f64 / 255.0).collect::<Vec<_>>();
            let want = oracle(&scale(&g), &scale(&u));
            let got = overlap_score(&g, &u).unwrap().value();
            assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn degenerate_inputs_error() {
        assert!(matches!(overlap_score(&[0, 255], &[255, 255]), Err(Error::Degenerate(_))));
        assert!(matches!(overlap_score(&[255, 255], &[0, 255]), Err(Error::Degenerate(_))));
        let white = RasterImage::white(Canvas::A4);
        let g = TableGenotype::new(10, 10, vec![50], vec![50]);
        assert!(matches!(fitness(&g, &white, &BorderStyle::blurry()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn exact_rendering_scores_zero() {
        let g = sample_genotype(&TableConfig::base(), Canvas::A4, 4).unwrap();
        for style in [BorderStyle::solid(), BorderStyle::blurry()] {
            let target = render_skeleton(&g, &style, Canvas::A4).unwrap();
            assert_eq!(fitness(&g, &target, &style).unwrap().value(), 0.0);
            let mut shifted = g.clone();
            shifted.origin_x += 1;
            assert!(fitness(&shifted, &target, &style).unwrap().value() > 0.0);
        }
    }

    fn frozen() -> GaParams {
        GaParams { numeric_mutation_prob: 0.0, structural_mutation_prob: 0.0, ..Default::default() }
    }

    #[test]
    fn zero_probabilities_are_identity() {
        let g = TableGenotype::new(30, 30, vec![50, 0, 60], vec![80, 90, 0]);
        for seed in 0..20 {
            assert_eq!(mutate(&g, &frozen(), Canvas::A4, seed), g);
        }
    }

    #[test]
    fn add_column_increments_effective_count() {
        let g = TableGenotype::new(30, 30, vec![50, 60], vec![80, 90, 70, 0, 0]);
        let p = GaParams {
            numeric_mutation_prob: 0.0,
            structural_mutation_prob: 1.0,
            structural_op_probs: StructuralOpProbs { add: 1.0, merge: 0.0, remove: 0.0 },
            ..Default::default()
        };
        for seed in 0..1000 {
            let m = mutate(&g, &p, Canvas::A4, seed);
            assert_eq!(m.effective_cols(), 4);
            assert!(m.col_widths.iter().all(|&w| w >= 0));
            assert_eq!(m.span(Axis::Vertical), g.span(Axis::Vertical));
            assert!(validate_genotype(&m, Canvas::A4).is_ok());
        }
    }

    #[test]
    fn structural_ops_semantics() {
        let mut rng = seeded(0);
        let mut v = vec![30, 80, 50, 0];
        assert!(apply_structural_op(&mut v, StructuralOp::Add, &mut rng));
        assert_eq!(v, vec![30, 40, 40, 50]);
        assert!(!apply_structural_op(&mut v, StructuralOp::Add, &mut rng));
        assert!(apply_structural_op(&mut v, StructuralOp::Remove, &mut rng));
        assert_eq!(v, vec![40, 40, 50, 0]);
        assert!(apply_structural_op(&mut v, StructuralOp::Merge, &mut rng));
        assert_eq!(v.iter().filter(|&&e| e > 0).count(), 2);
        assert_eq!(v.iter().sum::<i32>(), 130);
        let mut one = vec![70, 0];
        assert!(!apply_structural_op(&mut one, StructuralOp::Merge, &mut rng));
        assert!(!apply_structural_op(&mut one, StructuralOp::Remove, &mut rng));
    }

    #[test]
    fn perturbation_frequency_matches_probability() {
        // Origin away from 0 so clamping never hides a perturbation.
        let g = TableGenotype::new(60, 60, vec![50, 60, 70], vec![80, 90, 70]);
        let p = GaParams { structural_mutation_prob: 0.0, ..Default::default() };
        let (mut changed, mut total) = (0usize, 0usize);
        for seed in 0..10_000 {
            let m = mutate(&g, &p, Canvas::A4, seed);
            let before = [g.origin_x, g.origin_y]
                .into_iter()
                .chain(g.row_heights.iter().copied())
                .chain(g.col_widths.iter().copied());
            let after = [m.origin_x, m.origin_y]
                .into_iter()
                .chain(m.row_heights.iter().copied())
                .chain(m.col_widths.iter().copied());
            for (a, b) in before.zip(after) {
                total += 1;
                changed += usize::from(a != b);
            }
        }
        let freq = changed as f64 / total as f64;
        assert!((freq - 0.1).abs() <= 0.01, "frequency {freq}");
    }

    #[test]
    fn crossover_inherits_axes() {
        let p1 = TableGenotype::new(11, 12, vec![10, 20, 30], vec![70, 80, 0]);
        let p2 = TableGenotype::new(21, 22, vec![40, 50, 60], vec![1, 2, 3]);
        let c = crossover(&p1, &p2).unwrap();
        assert_eq!((c.origin_x, c.origin_y), (11, 22));
        assert_eq!(c.col_widths, vec![70, 80, 0]);
        assert_eq!(c.row_heights, vec![40, 50, 60]);
        assert_eq!(crossover(&p1, &p1).unwrap(), p1);
        let p3 = TableGenotype::new(0, 0, vec![10], vec![10]);
        assert!(matches!(crossover(&p1, &p3), Err(Error::CardinalityMismatch(..))));
    }

    #[test]
    fn convergence_rule_on_constructed_history() {
        assert!(has_converged(&[0.40, 0.398, 0.397, 0.396], 0.01, 3));
        assert!(!has_converged(&[0.40, 0.398, 0.397], 0.01, 3));
        assert!(!has_converged(&[0.40, 0.30, 0.298, 0.297], 0.01, 3));
        assert!(has_converged(&[0.0, 0.0, 0.0, 0.0], 0.01, 3));
    }

    #[test]
    fn perfect_initial_converges_immediately() {
        let g = sample_genotype(&TableConfig::base(), Canvas::A4, 8).unwrap();
        let target = render_skeleton(&g, &BorderStyle::blurry(), Canvas::A4).unwrap();
        let r = evolve(&g, &target, &GaParams { seed: 1, population_size: 20, ..Default::default() }).unwrap();
        assert_eq!(r.best_fitness.value(), 0.0);
        assert!(r.converged);
        assert_eq!(r.history, vec![0.0; 4]);
    }

    #[test]
    fn evolve_is_deterministic_and_monotone() {
        let g = sample_genotype(&TableConfig::base(), Canvas::A4, 12).unwrap();
        let target = render_skeleton(&g, &BorderStyle::blurry(), Canvas::A4).unwrap();
        let mut init = g.clone();
        init.origin_x += 6;
        init.row_heights[0] += 5;
        let p = GaParams { seed: 9, population_size: 20, max_epochs: 30, ..Default::default() };
        let a = evolve(&init, &target, &p).unwrap();
        let b = evolve(&init, &target, &p).unwrap();
        assert_eq!(a, b);
        assert!(a.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(a.best_fitness.value() < a.history[0]);
    }

    #[test]
    fn evolve_rejects_white_target() {
        let g = TableGenotype::new(10, 10, vec![50], vec![50]);
        assert!(matches!(evolve(&g, &RasterImage::white(Canvas::A4), &GaParams::default()), Err(Error::Degenerate(_))));
    }

    fn arb_valid() -> impl Strategy<Value = TableGenotype> {
        (0..60i32, 0..60i32, prop::collection::vec(1..90i32, 1..6), prop::collection::vec(1..90i32, 1..6))
            .prop_map(|(x, y, mut h, mut w)| {
                h.resize(7, 0);
                w.resize(7, 0);
                TableGenotype::new(x, y, h, w)
            })
            .prop_filter("fits 400x400", |g| validate_genotype(g, Canvas::new(400, 400)).is_ok())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn mutation_keeps_validity(g in arb_valid(), seed in any::<u64>()) {
            let p = GaParams { numeric_mutation_prob: 0.5, structural_mutation_prob: 0.5, numeric_mutation_sigma: 40.0, ..Default::default() };
            let m = mutate(&g, &p, Canvas::new(400, 400), seed);
            prop_assert!(validate_genotype(&m, Canvas::new(400, 400)).is_ok(), "{:?}", m);
        }

        #[test]
        fn crossover_keeps_validity(a in arb_valid(), b in arb_valid()) {
            let c = crossover(&a, &b).unwrap();
            prop_assert!(validate_genotype(&c, Canvas::new(400, 400)).is_ok());
        }
    }
}
