//! The acceptance experiments. Each reads its parameters from the resolved config, records
//! checks against fixed thresholds and writes CSV tables plus a gnuplot script.

mod aprox;
mod counting;
mod crossover;
mod equidist;
mod excursion;
mod geometry;
mod trace;
mod ubiquity;

use std::sync::Arc;

use quadcusp::catalog;
use quadcusp::conepoints::ConeRegion;
use quadcusp::forms::RatSymForm;
use quadcusp::frame::CuspFrame;
use quadcusp::rational::{parse_rat, Rat};

use crate::output::Ctx;
use crate::HarnessError;

pub use geometry::numeric_odist;

pub(crate) fn dispatch(ctx: &mut Ctx<'_>) -> Result<(), HarnessError> {
    match ctx.cfg.experiment.as_str() {
        "counting" => counting::run(ctx),
        "equidist" => equidist::run(ctx),
        "geometry" => geometry::run(ctx),
        "trace" => trace::run(ctx),
        "aprox" => aprox::run(ctx),
        "crossover" => crossover::run(ctx),
        "excursion" => excursion::run(ctx),
        "ubiquity" => ubiquity::run(ctx),
        other => Err(HarnessError::UnknownExperiment(other.to_string())),
    }
}

/// A catalog name or inline form text.
pub fn load_form(spec: &str) -> Result<RatSymForm, HarnessError> {
    catalog::named(spec).or_else(|_| RatSymForm::parse(spec)).map_err(HarnessError::from)
}

pub(crate) struct Case {
    pub label: String,
    pub form: RatSymForm,
    pub frame: Arc<CuspFrame>,
    pub q_max: i64,
    pub patch: f64,
}

impl Case {
    pub fn region(&self) -> Result<ConeRegion, HarnessError> {
        Ok(ConeRegion::centered_box(self.frame.clone(), self.patch)?)
    }

    /// `Delta = s - 2`, the dimension of the quadric.
    pub fn delta(&self) -> usize {
        self.form.dim() - 2
    }
}

pub(crate) fn cases(ctx: &Ctx<'_>) -> Result<Vec<Case>, HarnessError> {
    let cfg = ctx.cfg;
    cfg.forms
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let form = load_form(spec)?;
            let frame = Arc::new(catalog::standard_frame(&form)?);
            let label = if spec.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') { spec.clone() } else { format!("form{i}") };
            Ok(Case {
                label,
                form,
                frame,
                q_max: cfg.q_max.get(i).copied().unwrap_or(0),
                patch: cfg.patch.get(i).copied().unwrap_or(1.0),
            })
        })
        .collect()
}

pub(crate) fn rats(list: &[String]) -> Result<Vec<Rat>, HarnessError> {
    list.iter().map(|s| parse_rat(s).map_err(HarnessError::from)).collect()
}

pub(crate) fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}
