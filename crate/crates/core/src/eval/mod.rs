//! Model evaluation: lift curves and the legend score that picks a model.
//!
//! A lift curve ranks records by predicted probability and plots the
//! cumulative share of captured target records against the share of the
//! population seen. The ideal reference ramps to full capture at the target
//! prevalence. Model selection multiplies the correctly-predicted share by
//! the mean predicted probability and keeps the larger product.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cumulative-capture curve for one model and target value.
///
/// The curve is integer-backed: `captured[i]` counts target records among
/// the first `i` ranked ones, and the point lists are derived quotients.
/// Both curves run from (0,0) to (1,1) and never decrease.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftCurve {
    pub target: String,
    pub n: u64,
    /// Target records in the truth column.
    pub positives: u64,
    /// `captured[i]` for `i` in `0..=n`; non-decreasing, ends at `positives`.
    pub captured: Vec<u64>,
    /// Model points `(population fraction, captured fraction)`.
    pub points: Vec<(f64, f64)>,
    /// Ideal-model vertices: straight to full capture at the prevalence.
    pub ideal: Vec<(f64, f64)>,
}

fn check_probability(p: f64) -> Result<()> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::Eval(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

fn check_paired(predictions: usize, truths: usize) -> Result<()> {
    if predictions != truths {
        return Err(Error::Eval(format!(
            "{predictions} predictions against {truths} truths"
        )));
    }
    Ok(())
}

/// Builds the lift curve for `target_value`.
///
/// Records are ranked by predicted probability, descending, ties keeping
/// their original order. Errors when lengths differ, a probability leaves
/// [0, 1], or no truth carries the target value (the curve is undefined).
pub fn lift_curve(
    predictions: &[(String, f64)],
    truths: &[String],
    target_value: &str,
) -> Result<LiftCurve> {
    check_paired(predictions.len(), truths.len())?;
    if predictions.is_empty() {
        return Err(Error::Eval("no records to curve".into()));
    }
    for (_, p) in predictions {
        check_probability(*p)?;
    }
    let n = truths.len() as u64;
    let positives = truths.iter().filter(|t| t.as_str() == target_value).count() as u64;
    if positives == 0 {
        return Err(Error::Eval(format!(
            "target value {target_value} never occurs; the curve is undefined"
        )));
    }

    let mut order: Vec<usize> = (0..truths.len()).collect();
    // stable sort: equal probabilities keep original index order
    order.sort_by(|&i, &j| predictions[j].1.total_cmp(&predictions[i].1));

    let mut captured = Vec::with_capacity(truths.len() + 1);
    captured.push(0u64);
    let mut seen = 0u64;
    for &i in &order {
        if truths[i] == target_value {
            seen += 1;
        }
        captured.push(seen);
    }
    debug_assert_eq!(seen, positives);

    let points = captured
        .iter()
        .enumerate()
        .map(|(i, &c)| (i as f64 / n as f64, c as f64 / positives as f64))
        .collect();
    let prevalence = positives as f64 / n as f64;
    let mut ideal = vec![(0.0, 0.0), (prevalence, 1.0), (1.0, 1.0)];
    ideal.dedup();

    Ok(LiftCurve {
        target: target_value.to_string(),
        n,
        positives,
        captured,
        points,
        ideal,
    })
}

impl LiftCurve {
    /// Ideal captured fraction at population fraction `x`.
    pub fn ideal_at(&self, x: f64) -> f64 {
        let prevalence = self.positives as f64 / self.n as f64;
        (x / prevalence).min(1.0)
    }

    /// Model captured fraction at population fraction `x`, interpolating
    /// between grid points.
    pub fn model_at(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let scaled = x * self.n as f64;
        let lo = (scaled.floor() as usize).min(self.captured.len() - 1);
        let hi = (lo + 1).min(self.captured.len() - 1);
        let frac = scaled - lo as f64;
        let (a, b) = (self.captured[lo] as f64, self.captured[hi] as f64);
        (a + (b - a) * frac) / self.positives as f64
    }

    /// Writes `population_fraction,captured_fraction,ideal_fraction` rows,
    /// one per ranked record plus the origin.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["population_fraction", "captured_fraction", "ideal_fraction"])?;
        for &(x, y) in &self.points {
            csv.write_record([x.to_string(), y.to_string(), self.ideal_at(x).to_string()])?;
        }
        csv.flush()?;
        Ok(())
    }

    /// Static SVG: model curve in red, ideal in blue, diagonal baseline
    /// dashed. Output is deterministic for a given curve.
    pub fn to_svg(&self, title: &str) -> String {
        const SIZE: f64 = 520.0;
        const INSET: f64 = 60.0;
        let span = SIZE - 2.0 * INSET;
        let px = |x: f64| INSET + x * span;
        let py = |y: f64| SIZE - INSET - y * span;
        let path_of = |pts: &[(f64, f64)]| {
            let mut d = String::new();
            for (i, &(x, y)) in pts.iter().enumerate() {
                let cmd = if i == 0 { 'M' } else { 'L' };
                let _ = write!(d, "{cmd}{:.1} {:.1} ", px(x), py(y));
            }
            d.trim_end().to_string()
        };

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {SIZE} {SIZE}\" font-family=\"sans-serif\" font-size=\"13\">"
        );
        let _ = writeln!(svg, "  <rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>");
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">{}</text>",
            SIZE / 2.0,
            title
        );
        // frame and tick labels
        let _ = writeln!(
            svg,
            "  <rect x=\"{INSET}\" y=\"{INSET}\" width=\"{span:.1}\" height=\"{span:.1}\" fill=\"none\" stroke=\"#444\"/>"
        );
        for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let _ = writeln!(
                svg,
                "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{tick}</text>",
                px(tick),
                SIZE - INSET + 22.0
            );
            let _ = writeln!(
                svg,
                "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{tick}</text>",
                INSET - 8.0,
                py(tick) + 4.0
            );
        }
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">population fraction</text>",
            SIZE / 2.0,
            SIZE - 14.0
        );
        let _ = writeln!(
            svg,
            "  <text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">captured fraction</text>",
            SIZE / 2.0,
            SIZE / 2.0
        );
        let _ = writeln!(
            svg,
            "  <path d=\"{}\" fill=\"none\" stroke=\"#999\" stroke-dasharray=\"6 4\"/>",
            path_of(&[(0.0, 0.0), (1.0, 1.0)])
        );
        let _ = writeln!(
            svg,
            "  <path d=\"{}\" fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"2\"/>",
            path_of(&self.ideal)
        );
        let _ = writeln!(
            svg,
            "  <path d=\"{}\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\"/>",
            path_of(&self.points)
        );
        let legend_y = INSET + 16.0;
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{legend_y:.1}\" fill=\"#c0392b\">model</text>",
            INSET + 12.0
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" fill=\"#1f5fbf\">ideal</text>",
            INSET + 12.0,
            legend_y + 18.0
        );
        svg.push_str("</svg>\n");
        svg
    }
}

/// The two-number evaluation summary the model choice is based on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiningLegend {
    /// Fraction of records whose predicted class equals the truth.
    pub population_correct: f64,
    /// Mean predicted probability over all records.
    pub mean_predict_probability: f64,
    /// `population_correct * mean_predict_probability`.
    pub score: f64,
}

impl MiningLegend {
    /// Builds a legend from the two rates; the score is their product.
    pub fn from_rates(population_correct: f64, mean_predict_probability: f64) -> Result<MiningLegend> {
        for (name, v) in [
            ("population_correct", population_correct),
            ("mean_predict_probability", mean_predict_probability),
        ] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::Eval(format!("{name} {v} outside [0, 1]")));
            }
        }
        Ok(MiningLegend {
            population_correct,
            mean_predict_probability,
            score: population_correct * mean_predict_probability,
        })
    }
}

/// Computes the legend of a prediction run.
pub fn mining_legend(predictions: &[(String, f64)], truths: &[String]) -> Result<MiningLegend> {
    check_paired(predictions.len(), truths.len())?;
    if predictions.is_empty() {
        return Err(Error::Eval("no records to summarize".into()));
    }
    let mut correct = 0u64;
    let mut prob_sum = 0.0;
    for ((class, p), truth) in predictions.iter().zip(truths) {
        check_probability(*p)?;
        if class == truth {
            correct += 1;
        }
        prob_sum += *p;
    }
    let n = predictions.len() as f64;
    MiningLegend::from_rates(correct as f64 / n, prob_sum / n)
}

/// Outcome of [`compare_models`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection {
    pub a: MiningLegend,
    pub b: MiningLegend,
    /// True when `a` won (including the tie case).
    pub selects_first: bool,
    /// Exact score tie; the first model is kept.
    pub tie: bool,
    /// Absolute score difference.
    pub margin: f64,
}

/// Picks the legend with the larger score. An exact tie keeps the first
/// with the tie flag raised.
pub fn compare_models(a: &MiningLegend, b: &MiningLegend) -> Selection {
    let order = a.score.total_cmp(&b.score);
    Selection {
        a: *a,
        b: *b,
        selects_first: order != std::cmp::Ordering::Less,
        tie: order == std::cmp::Ordering::Equal,
        margin: (a.score - b.score).abs(),
    }
}

impl Selection {
    /// Text table with both legends, both scores, and the decision.
    pub fn render(&self, name_a: &str, name_b: &str) -> String {
        let mut out = render_legend_table(&[(name_a, &self.a), (name_b, &self.b)]);
        let winner = if self.selects_first { name_a } else { name_b };
        if self.tie {
            let _ = writeln!(out, "selected: {winner} (exact tie, first kept)");
        } else {
            let _ = writeln!(out, "selected: {winner} (margin {:.4})", self.margin);
        }
        out
    }
}

/// Legend rows as an aligned text table.
pub fn render_legend_table(entries: &[(&str, &MiningLegend)]) -> String {
    let width = entries
        .iter()
        .map(|(name, _)| name.len())
        .max()
        .unwrap_or(0)
        .max("model".len());
    let mut out = String::new();
    let _ = writeln!(out, "{:width$}  correct  mean prob  score", "model");
    for (name, legend) in entries {
        let _ = writeln!(
            out,
            "{name:width$}  {:7.4}  {:9.4}  {:.4}",
            legend.population_correct, legend.mean_predict_probability, legend.score
        );
    }
    out
}
