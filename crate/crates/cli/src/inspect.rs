use std::fmt;

use latentem::ContingencyTable;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Context, Result};
use crate::run::load_table;

/// Table diagnostics. Spectral quantities and inflation bounds refer to the
/// symmetrized table when the input is not symmetric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inspection {
    pub shape: (usize, usize),
    pub is_square: bool,
    pub is_symmetric: Option<bool>,
    pub max_asymmetry: Option<f64>,
    pub mh_deviation: Option<f64>,
    pub min_eigenvalue: Option<f64>,
    pub is_diffusive: Option<bool>,
    pub lambda_nonneg: Option<f64>,
    pub lambda_psd: Option<f64>,
    pub rank_estimate: usize,
    pub mutual_information: f64,
    pub row_margins: Vec<(String, f64)>,
    pub col_margins: Vec<(String, f64)>,
}

pub fn inspect_table(f: &ContingencyTable) -> Result<Inspection> {
    let mut out = Inspection {
        shape: f.dim(),
        is_square: f.is_square(),
        is_symmetric: None,
        max_asymmetry: None,
        mh_deviation: None,
        min_eigenvalue: None,
        is_diffusive: None,
        lambda_nonneg: None,
        lambda_psd: None,
        rank_estimate: f.rank_estimate(),
        mutual_information: f.mutual_information(),
        row_margins: f.row_margins().iter().enumerate().map(|(i, &v)| (f.row_label(i), v)).collect(),
        col_margins: f.col_margins().iter().enumerate().map(|(k, &v)| (f.col_label(k), v)).collect(),
    };
    if f.is_square() {
        let sym = f.symmetrize().context(|| "symmetrize".into())?;
        let spectral = sym.spectral_report().context(|| "spectral report".into())?;
        let bounds = sym.lambda_bounds().context(|| "lambda bounds".into())?;
        out.is_symmetric = Some(f.is_symmetric());
        out.max_asymmetry = Some(f.max_asymmetry().context(|| "asymmetry".into())?);
        out.mh_deviation = Some(f.mh_deviation().context(|| "mh deviation".into())?);
        out.min_eigenvalue = Some(spectral.min_eigenvalue);
        out.is_diffusive = Some(spectral.is_diffusive);
        out.lambda_nonneg = Some(bounds.nonneg);
        out.lambda_psd = Some(bounds.psd);
    }
    Ok(out)
}

pub fn inspect(config: &RunConfig) -> Result<Inspection> {
    inspect_table(&load_table(config)?)
}

fn opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "n/a".to_string(), T::to_string)
}

impl fmt::Display for Inspection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "shape               {} x {}", self.shape.0, self.shape.1)?;
        writeln!(f, "symmetric           {}", opt(&self.is_symmetric))?;
        writeln!(f, "max asymmetry       {}", opt(&self.max_asymmetry))?;
        writeln!(f, "mh deviation        {}", opt(&self.mh_deviation))?;
        writeln!(f, "min eigenvalue      {}", opt(&self.min_eigenvalue))?;
        writeln!(f, "diffusive           {}", opt(&self.is_diffusive))?;
        writeln!(f, "lambda nonneg       {}", opt(&self.lambda_nonneg))?;
        writeln!(f, "lambda psd          {}", opt(&self.lambda_psd))?;
        writeln!(f, "rank estimate       {}", self.rank_estimate)?;
        writeln!(f, "mutual information  {}", self.mutual_information)?;
        writeln!(f, "row margins")?;
        for (label, v) in &self.row_margins {
            writeln!(f, "  {label:?}\t{v}")?;
        }
        writeln!(f, "column margins")?;
        for (label, v) in &self.col_margins {
            writeln!(f, "  {label:?}\t{v}")?;
        }
        Ok(())
    }
}
