//! JSON form of fitted models. Matrices are stored group-major: `a[g]` is
//! the emission column of group `g`, `z[g]` the membership column.

use latentem::{CoLatentModel, LatentModel, NetworkCoModel, NetworkLatentModel, Variant};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Context, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SavedModel {
    Latent {
        rho: Vec<f64>,
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
    },
    CoLatent {
        c: Vec<Vec<f64>>,
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
    },
    Network {
        f: Vec<f64>,
        rho: Vec<f64>,
        z: Vec<Vec<f64>>,
    },
    NetworkCo {
        variant: String,
        c: Vec<Vec<f64>>,
        a: Vec<Vec<f64>>,
    },
}

/// A model of any family, rebuilt from its saved form.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Latent(LatentModel),
    CoLatent(CoLatentModel),
    Network(NetworkLatentModel),
    NetworkCo(NetworkCoModel),
}

impl Model {
    pub fn reconstruct(&self) -> Array2<f64> {
        match self {
            Model::Latent(m) => m.reconstruct(),
            Model::CoLatent(m) => m.reconstruct(),
            Model::Network(m) => m.reconstruct(),
            Model::NetworkCo(m) => m.reconstruct(),
        }
    }

    pub fn to_saved(&self) -> SavedModel {
        match self {
            Model::Latent(m) => SavedModel::Latent {
                rho: m.rho().to_vec(),
                a: columns(m.a()),
                b: columns(m.b()),
            },
            Model::CoLatent(m) => SavedModel::CoLatent {
                c: rows(m.c()),
                a: columns(m.a()),
                b: columns(m.b()),
            },
            Model::Network(m) => SavedModel::Network {
                f: m.f().to_vec(),
                rho: m.rho().to_vec(),
                z: columns(m.z()),
            },
            Model::NetworkCo(m) => SavedModel::NetworkCo {
                variant: m.variant().to_string(),
                c: rows(m.c()),
                a: columns(m.a()),
            },
        }
    }

    pub fn from_saved(saved: &SavedModel) -> Result<Self> {
        let ctx = || "saved model".to_string();
        Ok(match saved {
            SavedModel::Latent { rho, a, b } => Model::Latent(
                LatentModel::new(Array1::from_vec(rho.clone()), from_columns(a)?, from_columns(b)?).context(ctx)?,
            ),
            SavedModel::CoLatent { c, a, b } => {
                Model::CoLatent(CoLatentModel::new(from_rows(c)?, from_columns(a)?, from_columns(b)?).context(ctx)?)
            }
            SavedModel::Network { f, z, .. } => {
                Model::Network(NetworkLatentModel::new(from_columns(z)?, Array1::from_vec(f.clone())).context(ctx)?)
            }
            SavedModel::NetworkCo { variant, c, a } => {
                let variant: Variant = variant
                    .parse()
                    .map_err(|_| CliError::InvalidConfig(format!("unknown variant {variant:?}")))?;
                Model::NetworkCo(NetworkCoModel::new(from_rows(c)?, from_columns(a)?, variant).context(ctx)?)
            }
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_saved())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_saved(&serde_json::from_str(text)?)
    }
}

pub(crate) fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn columns(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.columns().into_iter().map(|c| c.to_vec()).collect()
}

fn from_rows(data: &[Vec<f64>]) -> Result<Array2<f64>> {
    let ncols = data.first().map_or(0, Vec::len);
    if data.iter().any(|r| r.len() != ncols) {
        return Err(CliError::InvalidConfig("ragged matrix in model file".into()));
    }
    let flat: Vec<f64> = data.iter().flatten().copied().collect();
    Array2::from_shape_vec((data.len(), ncols), flat)
        .map_err(|e| CliError::InvalidConfig(format!("bad matrix in model file: {e}")))
}

fn from_columns(data: &[Vec<f64>]) -> Result<Array2<f64>> {
    Ok(from_rows(data)?.reversed_axes().as_standard_layout().into_owned())
}
