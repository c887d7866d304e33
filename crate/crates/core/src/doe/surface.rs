use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{DoeError, ExperimentDesign};
use crate::numerics::{
    f_p_upper, solve_least_squares, t_p_two_sided, DesignMatrix, LeastSquaresSolution,
};

/// One column of the quadratic surface model. Factor indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Term {
    Intercept,
    /// Contrast of block `index + 1` (in ascending label order) against the
    /// first block.
    Block {
        index: usize,
    },
    Linear {
        factor: usize,
    },
    Quadratic {
        factor: usize,
    },
    Interaction {
        a: usize,
        b: usize,
    },
}

impl Term {
    pub fn label(&self, factor_names: &[String]) -> String {
        match *self {
            Term::Intercept => "Mean/interc.".into(),
            Term::Block { index } => format!("Blocks ({index})"),
            Term::Linear { factor } => format!("({}) {} (L)", factor + 1, factor_names[factor]),
            Term::Quadratic { factor } => format!("{} (Q)", factor_names[factor]),
            Term::Interaction { a, b } => format!("{}L by {}L", a + 1, b + 1),
        }
    }

    /// Effects are twice the coded coefficient, except the intercept.
    fn effect_multiplier(&self) -> f64 {
        match self {
            Term::Intercept => 1.0,
            _ => 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub term: Term,
    pub label: String,
    pub effect: f64,
    pub standard_error: f64,
    /// Undefined when the residual variance is zero or has no degrees of freedom.
    pub t: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub label: String,
    pub ss: f64,
    pub df: usize,
    pub ms: Option<f64>,
    pub f: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceFit {
    pub design: ExperimentDesign,
    pub responses: Vec<f64>,
    pub terms: Vec<Term>,
    pub solution: LeastSquaresSolution,
    pub effects: Vec<EffectRow>,
    pub anova: Vec<AnovaRow>,
}

impl SurfaceFit {
    pub fn effect(&self, label: &str) -> Option<&EffectRow> {
        self.effects.iter().find(|e| e.label == label)
    }

    pub fn anova_row(&self, label: &str) -> Option<&AnovaRow> {
        self.anova.iter().find(|r| r.label == label)
    }

    pub fn residual_df(&self) -> usize {
        self.solution.residual_df
    }

    /// Model value at coded levels with every block contrast at zero.
    pub fn predict_coded(&self, coded: &[f64]) -> f64 {
        self.terms
            .iter()
            .zip(&self.solution.coefficients)
            .map(|(term, &b)| {
                b * match *term {
                    Term::Intercept => 1.0,
                    Term::Block { .. } => 0.0,
                    Term::Linear { factor } => coded[factor],
                    Term::Quadratic { factor } => coded[factor] * coded[factor],
                    Term::Interaction { a, b } => coded[a] * coded[b],
                }
            })
            .sum()
    }
}

fn model_terms(n_factors: usize, n_blocks: usize) -> Vec<Term> {
    let mut terms = vec![Term::Intercept];
    terms.extend((1..n_blocks).map(|index| Term::Block { index }));
    for factor in 0..n_factors {
        terms.push(Term::Linear { factor });
        terms.push(Term::Quadratic { factor });
    }
    for a in 0..n_factors {
        for b in a + 1..n_factors {
            terms.push(Term::Interaction { a, b });
        }
    }
    terms
}

fn model_matrix(design: &ExperimentDesign, terms: &[Term]) -> Result<DesignMatrix, DoeError> {
    let blocks = design.blocks();
    let names: Vec<String> = design.factors().iter().map(|f| f.name.clone()).collect();
    let columns = terms
        .iter()
        .map(|term| {
            let values = design
                .runs()
                .iter()
                .map(|r| match *term {
                    Term::Intercept => 1.0,
                    Term::Block { index } => {
                        if r.block == blocks[index] {
                            1.0
                        } else if r.block == blocks[0] {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                    Term::Linear { factor } => r.coded[factor],
                    // raw squares: calibrated to reproduce the published intercept
                    Term::Quadratic { factor } => r.coded[factor] * r.coded[factor],
                    Term::Interaction { a, b } => r.coded[a] * r.coded[b],
                })
                .collect();
            (term.label(&names), values)
        })
        .collect();
    Ok(DesignMatrix::from_columns(columns)?)
}

fn positive(v: f64) -> Option<f64> {
    (v.is_finite() && v > 0.0).then_some(v)
}

/// Fits the full quadratic in coded units with sum-to-zero block contrasts
/// (first block as the −1 level) and fills the effects and ANOVA tables.
/// `responses[i]` belongs to `design.runs()[i]`.
pub fn fit_response_surface(
    design: &ExperimentDesign,
    responses: &[f64],
) -> Result<SurfaceFit, DoeError> {
    if responses.len() != design.n_runs() {
        return Err(DoeError::Design(format!(
            "{} responses for {} runs",
            responses.len(),
            design.n_runs()
        )));
    }
    if let Some(i) = responses.iter().position(|v| !v.is_finite()) {
        return Err(DoeError::Design(format!(
            "response for run {} is not finite",
            design.runs()[i].standard_order
        )));
    }
    let n_blocks = design.blocks().len();
    let terms = model_terms(design.factors().len(), n_blocks);
    let x = model_matrix(design, &terms)?;
    let solution = solve_least_squares(&x, responses)?;
    let df = solution.residual_df;
    // An exact fit (residuals at rounding level) leaves t and F undefined.
    let floor = (64.0 * f64::EPSILON).powi(2) * responses.iter().map(|y| y * y).sum::<f64>();
    let mse = if df > 0 && solution.rss > floor {
        positive(solution.sigma2)
    } else {
        None
    };

    let effects = terms
        .iter()
        .zip(x.labels())
        .zip(solution.coefficients.iter().zip(&solution.covariance_scale))
        .map(|((term, label), (&b, &scale))| {
            let m = term.effect_multiplier();
            let se = mse.map_or(f64::NAN, |s| (scale * s).sqrt());
            let t = mse.map(|_| b / se);
            EffectRow {
                term: *term,
                label: label.clone(),
                effect: m * b,
                standard_error: m * se,
                t,
                p: t.and_then(|t| t_p_two_sided(t, df).ok()),
            }
        })
        .collect();

    let f_row = |label: String, ss: f64, term_df: usize| {
        let ms = ss / term_df as f64;
        let f = mse.map(|e| ms / e);
        AnovaRow {
            label,
            ss,
            df: term_df,
            ms: Some(ms),
            f,
            p: f.and_then(|f| f_p_upper(f, term_df, df).ok()),
        }
    };
    let mut anova = Vec::new();
    if n_blocks > 1 {
        let block_cols: Vec<usize> = terms
            .iter()
            .enumerate()
            .filter(|(_, t)| matches!(t, Term::Block { .. }))
            .map(|(i, _)| i)
            .collect();
        let reduced = solve_least_squares(&x.drop_columns(&block_cols), responses)?;
        let ss = (reduced.rss - solution.rss).max(0.0);
        anova.push(f_row("Blocks".into(), ss, n_blocks - 1));
    }
    for (i, term) in terms.iter().enumerate() {
        if matches!(term, Term::Intercept | Term::Block { .. }) {
            continue;
        }
        // equals t² × error MS
        let b = solution.coefficients[i];
        let ss = b * b / solution.covariance_scale[i];
        anova.push(f_row(x.labels()[i].clone(), ss, 1));
    }
    anova.push(AnovaRow {
        label: "Error".into(),
        ss: solution.rss,
        df,
        ms: (df > 0).then(|| solution.rss / df as f64),
        f: None,
        p: None,
    });
    let mean = responses.iter().sum::<f64>() / responses.len() as f64;
    anova.push(AnovaRow {
        label: "Total SS".into(),
        ss: responses.iter().map(|y| (y - mean) * (y - mean)).sum(),
        df: responses.len() - 1,
        ms: None,
        f: None,
        p: None,
    });

    Ok(SurfaceFit {
        design: design.clone(),
        responses: responses.to_vec(),
        terms,
        solution,
        effects,
        anova,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePrediction {
    pub value: f64,
    pub coded: Vec<f64>,
    /// Some coded level lies outside [−1, 1].
    pub extrapolated: bool,
}

/// Evaluates the fitted surface at natural factor levels, averaging out
/// blocks.
pub fn predict_surface(fit: &SurfaceFit, natural: &[f64]) -> Result<SurfacePrediction, DoeError> {
    let factors = fit.design.factors();
    if natural.len() != factors.len() {
        return Err(DoeError::Design(format!(
            "{} levels given for {} factors",
            natural.len(),
            factors.len()
        )));
    }
    let coded: Vec<f64> = factors
        .iter()
        .zip(natural)
        .map(|(f, &v)| f.to_coded(v))
        .collect();
    Ok(SurfacePrediction {
        value: fit.predict_coded(&coded),
        extrapolated: coded.iter().any(|c| c.abs() > 1.0 + 1e-12),
        coded,
    })
}

fn cell(out: &mut String, v: Option<f64>) {
    match v {
        Some(v) => write!(out, "  {v:>14.6}").unwrap(),
        None => write!(out, "  {:>14}", "").unwrap(),
    }
}

fn label_width<'a>(labels: impl Iterator<Item = &'a String>) -> usize {
    labels.map(|l| l.chars().count()).max().unwrap_or(0).max(6)
}

/// Fixed-width effects table: Factor, Effect, Standard error, t, P.
pub fn render_effects(rows: &[EffectRow], residual_df: usize) -> String {
    let w = label_width(rows.iter().map(|e| &e.label));
    let mut out = format!(
        "{:<w$}  {:>14}  {:>14}  {:>14}  {:>14}\n",
        "Factor",
        "Effect",
        "Standard error",
        format!("t ({residual_df})"),
        "P"
    );
    for e in rows {
        write!(out, "{:<w$}", e.label).unwrap();
        cell(&mut out, Some(e.effect));
        cell(
            &mut out,
            e.standard_error.is_finite().then_some(e.standard_error),
        );
        cell(&mut out, e.t);
        cell(&mut out, e.p);
        out.push('\n');
    }
    out
}

/// Fixed-width ANOVA table: Factor, SS, df, MS, F, P.
pub fn render_anova(rows: &[AnovaRow]) -> String {
    let w = label_width(rows.iter().map(|r| &r.label));
    let mut out = format!(
        "{:<w$}  {:>14}  {:>4}  {:>14}  {:>14}  {:>14}\n",
        "Factor", "SS", "df", "MS", "F", "P"
    );
    for r in rows {
        write!(out, "{:<w$}", r.label).unwrap();
        cell(&mut out, Some(r.ss));
        write!(out, "  {:>4}", r.df).unwrap();
        cell(&mut out, r.ms);
        cell(&mut out, r.f);
        cell(&mut out, r.p);
        out.push('\n');
    }
    out
}
