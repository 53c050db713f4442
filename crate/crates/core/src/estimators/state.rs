use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::SymMatrix;
use crate::{Error, Result};

/// Everything an estimator remembers between samples.
///
/// The size depends on the dimension only: `d` weights plus a `d x d`
/// matrix, never on how many samples have been seen.
///
/// For the constant-forgetting recursion `p` is `R(t)⁻¹` with
/// `R(t) = (1 - mu) R(t-1) + mu x xᵀ`; for the generalized recursion it is the
/// inverse of the discounted Gram matrix and `mu` is not consulted.
///
/// The snapshot record (JSON when serialized with serde) has the fixed field
/// order `d, t, mu, p0_scale, w_hat, P`, with `P` flattened row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "SnapshotRecord", into = "SnapshotRecord")
)]
pub struct ModelState {
    pub(crate) w_hat: Vec<f64>,
    pub(crate) p: SymMatrix,
    pub(crate) t: u64,
    pub(crate) mu: f64,
    pub(crate) p0_scale: f64,
}

impl ModelState {
    /// `ŵ = 0`, `P = p0_scale * I`, `t = 0`.
    pub fn new(d: usize, mu: f64, p0_scale: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("d", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&mu) {
            return Err(Error::param("mu", "must lie in [0, 1)"));
        }
        if !(p0_scale > 0.0) || !p0_scale.is_finite() {
            return Err(Error::param("p0_scale", "must be finite and > 0"));
        }
        Ok(ModelState {
            w_hat: vec![0.0; d],
            p: SymMatrix::scaled_identity(d, p0_scale),
            t: 0,
            mu,
            p0_scale,
        })
    }

    /// Starts from an arbitrary prior `(ŵ(0), P(0))`. `p0_scale` records the
    /// spectral norm of `P(0)`.
    pub fn with_prior(w0: Vec<f64>, p0: SymMatrix, mu: f64) -> Result<Self> {
        if w0.len() != p0.dim() {
            return Err(Error::DimensionMismatch {
                expected: p0.dim(),
                found: w0.len(),
            });
        }
        if !(0.0..1.0).contains(&mu) {
            return Err(Error::param("mu", "must lie in [0, 1)"));
        }
        p0.cholesky()?;
        let p0_scale = crate::linalg::spectral_norm(&p0);
        Ok(ModelState {
            w_hat: w0,
            p: p0,
            t: 0,
            mu,
            p0_scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.w_hat.len()
    }

    pub fn w_hat(&self) -> &[f64] {
        &self.w_hat
    }

    pub fn p(&self) -> &SymMatrix {
        &self.p
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn p0_scale(&self) -> f64 {
        self.p0_scale
    }

    /// Fixed-width little-endian encoding: `d` and `t` as `u64`, then `mu`,
    /// `p0_scale`, `w_hat` and row-major `P` as `f64`. Length is
    /// `8 * (4 + d + d²)` regardless of `t`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.dim();
        let mut out = Vec::with_capacity(Self::encoded_len(d));
        out.extend_from_slice(&(d as u64).to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        for v in [self.mu, self.p0_scale]
            .iter()
            .chain(&self.w_hat)
            .chain(self.p.as_slice())
        {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let word = |i: usize| -> Result<[u8; 8]> {
            bytes
                .get(8 * i..8 * i + 8)
                .and_then(|b| b.try_into().ok())
                .ok_or(Error::CorruptSnapshot("truncated record"))
        };
        let d = u64::from_le_bytes(word(0)?) as usize;
        if d == 0 || d > 1 << 16 || bytes.len() != Self::encoded_len(d) {
            return Err(Error::CorruptSnapshot("record length does not match d"));
        }
        let t = u64::from_le_bytes(word(1)?);
        let f = |i: usize| word(i).map(f64::from_le_bytes);
        let w_hat = (4..4 + d).map(f).collect::<Result<Vec<_>>>()?;
        let p = (4 + d..4 + d + d * d).map(f).collect::<Result<Vec<_>>>()?;
        ModelState::from_parts(d, t, f(2)?, f(3)?, w_hat, p)
    }

    fn encoded_len(d: usize) -> usize {
        8 * (4 + d + d * d)
    }

    fn from_parts(d: usize, t: u64, mu: f64, p0_scale: f64, w_hat: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if d == 0 || w_hat.len() != d {
            return Err(Error::CorruptSnapshot("w_hat length does not match d"));
        }
        if p.len() != d * d {
            return Err(Error::CorruptSnapshot("P length does not match d*d"));
        }
        if !(0.0..1.0).contains(&mu) || !(p0_scale > 0.0) || !p0_scale.is_finite() {
            return Err(Error::CorruptSnapshot("mu or p0_scale out of range"));
        }
        if w_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::CorruptSnapshot("non-finite weight"));
        }
        let p = SymMatrix::from_row_major(d, p)
            .map_err(|_| Error::CorruptSnapshot("P is not a finite symmetric matrix"))?;
        if p.cholesky().is_err() {
            return Err(Error::CorruptSnapshot("P is not positive definite"));
        }
        Ok(ModelState {
            w_hat,
            p,
            t,
            mu,
            p0_scale,
        })
    }

    /// Smallest eigenvalue of `P`; positive while the state is healthy.
    pub fn p_min_eigenvalue(&self) -> f64 {
        self.p.min_eigenvalue()
    }
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
struct SnapshotRecord {
    d: usize,
    t: u64,
    mu: f64,
    p0_scale: f64,
    w_hat: Vec<f64>,
    #[serde(rename = "P")]
    p: Vec<f64>,
}

#[cfg(feature = "serde")]
impl From<ModelState> for SnapshotRecord {
    fn from(s: ModelState) -> Self {
        SnapshotRecord {
            d: s.w_hat.len(),
            t: s.t,
            mu: s.mu,
            p0_scale: s.p0_scale,
            w_hat: s.w_hat,
            p: s.p.into_vec(),
        }
    }
}

#[cfg(feature = "serde")]
impl TryFrom<SnapshotRecord> for ModelState {
    type Error = Error;

    fn try_from(r: SnapshotRecord) -> Result<Self> {
        ModelState::from_parts(r.d, r.t, r.mu, r.p0_scale, r.w_hat, r.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_matches_definition() {
        let s = ModelState::new(2, 0.01, 1000.0).unwrap();
        assert_eq!(s.w_hat(), &[0.0, 0.0]);
        assert_eq!(s.p(), &SymMatrix::scaled_identity(2, 1000.0));
        assert_eq!(s.t(), 0);
    }

    #[test]
    fn init_rejects_bad_params() {
        assert!(matches!(
            ModelState::new(3, 1.0, 1.0),
            Err(Error::InvalidParameter { name: "mu", .. })
        ));
        assert!(ModelState::new(3, -0.1, 1.0).is_err());
        assert!(ModelState::new(0, 0.1, 1.0).is_err());
        assert!(ModelState::new(2, 0.1, 0.0).is_err());
    }

    #[test]
    fn snapshot_field_order_is_stable() {
        let s = ModelState::new(2, 0.25, 4.0).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"d":2,"t":0,"mu":0.25,"p0_scale":4.0,"w_hat":[0.0,0.0],"P":[4.0,0.0,0.0,4.0]}"#
        );
        let back: ModelState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn corrupted_snapshots_are_rejected() {
        let bad = [
            r#"{"d":2,"t":0,"mu":0.25,"p0_scale":4.0,"w_hat":[0.0],"P":[4.0,0.0,0.0,4.0]}"#,
            r#"{"d":2,"t":0,"mu":0.25,"p0_scale":4.0,"w_hat":[0.0,0.0],"P":[4.0,0.0,0.0]}"#,
            r#"{"d":2,"t":0,"mu":0.25,"p0_scale":4.0,"w_hat":[0.0,0.0],"P":[4.0,1.0,0.0,4.0]}"#,
            r#"{"d":2,"t":0,"mu":0.25,"p0_scale":4.0,"w_hat":[0.0,0.0],"P":[-4.0,0.0,0.0,4.0]}"#,
            r#"{"d":2,"t":0,"mu":1.5,"p0_scale":4.0,"w_hat":[0.0,0.0],"P":[4.0,0.0,0.0,4.0]}"#,
        ];
        for b in bad {
            assert!(serde_json::from_str::<ModelState>(b).is_err(), "{b}");
        }
    }

    #[test]
    fn binary_round_trip_and_length() {
        let mut s = ModelState::new(3, 0.1, 2.0).unwrap();
        s.w_hat = vec![0.1, -2.5, 1e-300];
        s.t = 77;
        let bytes = s.to_bytes();
        assert_eq!(bytes.len(), 8 * (4 + 3 + 9));
        assert_eq!(ModelState::from_bytes(&bytes).unwrap(), s);
        assert!(ModelState::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[16..24].copy_from_slice(&2.0f64.to_le_bytes());
        assert!(ModelState::from_bytes(&bad).is_err());
    }
}
