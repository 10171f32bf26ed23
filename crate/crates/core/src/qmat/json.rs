use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::matrix::CMatrix;
use crate::scalar::Scalar;

/// Wire form `{rows, cols, re: [...], im: [...]}`, row-major.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl<T: Scalar> Serialize for CMatrix<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MatrixJson {
            rows: self.rows(),
            cols: self.cols(),
            re: self.data().iter().map(|z| z.re.to_f64_lossy()).collect(),
            im: self.data().iter().map(|z| z.im.to_f64_lossy()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for CMatrix<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(deserializer)?;
        if raw.re.len() != raw.im.len() {
            return Err(serde::de::Error::custom(format!(
                "re has {} entries but im has {}",
                raw.re.len(),
                raw.im.len()
            )));
        }
        let data = raw.re.iter().zip(&raw.im).map(|(&re, &im)| Complex::new(T::lit(re), T::lit(im))).collect();
        CMatrix::new(raw.rows, raw.cols, data).map_err(serde::de::Error::custom)
    }
}
