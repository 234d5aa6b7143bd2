//! Known structure matrices `Lambda` (tau x T) and the projections through them.
//!
//! Every builder here produces rows that are mutually orthogonal with a
//! common squared norm `c`, so `Lambda Lambda^T = c I` and the pseudo-inverse
//! reduces to `Lambda^T / c`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape_mismatch, Error, Result};
use crate::linalg::{frobenius_norm, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Identity,
    Periodic,
    Trig,
}

/// Realized structure matrix together with its gram constant.
#[derive(Debug, Clone)]
pub struct StructureBasis {
    kind: BasisKind,
    tau: usize,
    horizon: usize,
    gram_constant: f64,
    rows: Arc<Matrix>,
}

impl StructureBasis {
    /// `Lambda = I_T`. Requires `T >= 2`.
    pub fn identity(horizon: usize) -> Result<Self> {
        if horizon < 2 {
            return Err(invalid(format!("horizon must be at least 2, got {horizon}")));
        }
        Ok(Self {
            kind: BasisKind::Identity,
            tau: horizon,
            horizon,
            gram_constant: 1.0,
            rows: Arc::new(Matrix::identity(horizon, horizon)),
        })
    }

    /// `Lambda = (I_tau | ... | I_tau)`, `T / tau` blocks.
    pub fn periodic(tau: usize, horizon: usize) -> Result<Self> {
        if tau == 0 {
            return Err(invalid("period tau must be positive"));
        }
        if horizon < 2 {
            return Err(invalid(format!("horizon must be at least 2, got {horizon}")));
        }
        if !horizon.is_multiple_of(tau) {
            return Err(invalid(format!(
                "periodic basis requires horizon divisible by tau, got horizon {horizon} and tau {tau}"
            )));
        }
        let rows = Matrix::from_fn(tau, horizon, |i, t| if t % tau == i { 1.0 } else { 0.0 });
        Ok(Self {
            kind: BasisKind::Periodic,
            tau,
            horizon,
            gram_constant: (horizon / tau) as f64,
            rows: Arc::new(rows),
        })
    }

    /// Real trigonometric basis with `2 n_freq + 1` rows on the grid `t = 1..=T`:
    /// the constant 1, then `sqrt(2) cos(2 pi n t / T)` and `sqrt(2) sin(2 pi n t / T)`
    /// for `n = 1..=n_freq`.
    pub fn trig(n_freq: usize, horizon: usize) -> Result<Self> {
        if horizon < 2 {
            return Err(invalid(format!("horizon must be at least 2, got {horizon}")));
        }
        if 2 * n_freq >= horizon {
            return Err(invalid(format!(
                "trigonometric basis requires 2 * n_freq < horizon, got n_freq {n_freq} and horizon {horizon}"
            )));
        }
        let tau = 2 * n_freq + 1;
        let mut rows = Matrix::zeros(tau, horizon);
        let t_len = horizon as f64;
        for col in 0..horizon {
            let t = (col + 1) as f64;
            rows[(0, col)] = 1.0;
            for n in 1..=n_freq {
                let angle = 2.0 * PI * (n as f64) * t / t_len;
                rows[(2 * n - 1, col)] = 2f64.sqrt() * angle.cos();
                rows[(2 * n, col)] = 2f64.sqrt() * angle.sin();
            }
        }
        Ok(Self {
            kind: BasisKind::Trig,
            tau,
            horizon,
            gram_constant: t_len,
            rows: Arc::new(rows),
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `c` with `Lambda Lambda^T = c I_tau`.
    pub fn gram_constant(&self) -> f64 {
        self.gram_constant
    }

    /// Number of frequencies for a trigonometric basis.
    pub fn n_freq(&self) -> Option<usize> {
        (self.kind == BasisKind::Trig).then_some((self.tau - 1) / 2)
    }

    /// The `tau x T` matrix `Lambda`.
    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn spec(&self) -> BasisSpec {
        match self.kind {
            BasisKind::Identity => BasisSpec::Identity,
            BasisKind::Periodic => BasisSpec::Periodic { tau: self.tau },
            BasisKind::Trig => BasisSpec::Trig {
                n_freq: (self.tau - 1) / 2,
            },
        }
    }

    /// `||Lambda Lambda^T - c I||_F`.
    pub fn gram_residual(&self) -> f64 {
        let gram = &*self.rows * self.rows.transpose();
        frobenius_norm(&(gram - Matrix::identity(self.tau, self.tau) * self.gram_constant))
    }

    /// `Lambda^+ = Lambda^T / c`, a `T x tau` matrix.
    pub fn pseudo_inverse(&self) -> Matrix {
        self.rows.transpose() / self.gram_constant
    }

    /// `Lambda^+ Lambda`, the orthogonal projector onto the row space (T x T).
    pub fn projector(&self) -> Matrix {
        self.rows.tr_mul(&self.rows) / self.gram_constant
    }

    /// `X~ = X Lambda^+`, a `d x tau` matrix.
    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        if x.ncols() != self.horizon {
            return Err(Error::DimensionMismatch {
                context: "project",
                expected: format!("{} columns", self.horizon),
                actual: format!("{} columns", x.ncols()),
            });
        }
        Ok(match self.kind {
            BasisKind::Identity => x.clone(),
            BasisKind::Periodic => {
                // average the T/tau period blocks
                let mut acc = Matrix::zeros(x.nrows(), self.tau);
                for block in 0..self.horizon / self.tau {
                    acc += x.columns(block * self.tau, self.tau);
                }
                acc / self.gram_constant
            }
            BasisKind::Trig => x * self.rows.transpose() / self.gram_constant,
        })
    }

    /// `A~ Lambda`, a `d x T` matrix.
    pub fn expand(&self, a_tilde: &Matrix) -> Result<Matrix> {
        if a_tilde.ncols() != self.tau {
            return Err(Error::DimensionMismatch {
                context: "expand",
                expected: format!("{} columns", self.tau),
                actual: format!("{} columns", a_tilde.ncols()),
            });
        }
        Ok(match self.kind {
            BasisKind::Identity => a_tilde.clone(),
            BasisKind::Periodic => {
                let mut out = Matrix::zeros(a_tilde.nrows(), self.horizon);
                for block in 0..self.horizon / self.tau {
                    out.columns_mut(block * self.tau, self.tau).copy_from(a_tilde);
                }
                out
            }
            BasisKind::Trig => a_tilde * &*self.rows,
        })
    }

    /// Rejects `x` unless it is `rows x T`.
    pub fn check_series(&self, x: &Matrix, context: &'static str) -> Result<()> {
        if x.ncols() != self.horizon {
            return Err(shape_mismatch(
                context,
                (x.nrows(), self.horizon),
                x.shape(),
            ));
        }
        Ok(())
    }
}

/// Horizon-free description of a basis, e.g. `periodic:12`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BasisSpec {
    Identity,
    Periodic { tau: usize },
    Trig { n_freq: usize },
}

impl BasisSpec {
    pub fn build(&self, horizon: usize) -> Result<StructureBasis> {
        match *self {
            BasisSpec::Identity => StructureBasis::identity(horizon),
            BasisSpec::Periodic { tau } => StructureBasis::periodic(tau, horizon),
            BasisSpec::Trig { n_freq } => StructureBasis::trig(n_freq, horizon),
        }
    }

    /// `tau` this spec yields at the given horizon.
    pub fn tau(&self, horizon: usize) -> usize {
        match *self {
            BasisSpec::Identity => horizon,
            BasisSpec::Periodic { tau } => tau,
            BasisSpec::Trig { n_freq } => 2 * n_freq + 1,
        }
    }
}

impl fmt::Display for BasisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisSpec::Identity => write!(f, "identity"),
            BasisSpec::Periodic { tau } => write!(f, "periodic:{tau}"),
            BasisSpec::Trig { n_freq } => write!(f, "trig:{n_freq}"),
        }
    }
}

impl FromStr for BasisSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let parse_arg = |what: &str| -> Result<usize> {
            arg.ok_or_else(|| invalid(format!("basis '{name}' needs ':{what}'")))?
                .parse::<usize>()
                .map_err(|_| invalid(format!("basis '{s}': {what} must be a nonnegative integer")))
        };
        match name {
            "identity" if arg.is_none() => Ok(BasisSpec::Identity),
            "periodic" => Ok(BasisSpec::Periodic {
                tau: parse_arg("tau")?,
            }),
            "trig" => Ok(BasisSpec::Trig {
                n_freq: parse_arg("n_freq")?,
            }),
            _ => Err(invalid(format!(
                "unknown basis descriptor '{s}' (expected identity, periodic:<tau> or trig:<n_freq>)"
            ))),
        }
    }
}
