//! Canonical text formats for tensors and matrices.
//!
//! Tensor file:
//!
//! ```text
//! {
//!   "dims": [l, m, n],
//!   "slices": [ <slice 1>, ..., <slice n> ]
//! }
//! ```
//!
//! where each slice is an array of `l` rows, each row an array of `m`
//! entries, each entry a two-element array `[re, im]`. Matrix files use
//! `{"dims": [rows, cols], "entries": [<row 1>, ..., <row rows>]}` with the
//! same row and entry encoding. Unknown fields, ragged arrays, dimension
//! disagreements and non-finite numbers are rejected. Numbers are written in
//! shortest round-trip form, so `parse(serialize(T)) == T` bit for bit
//! (negative zero included).

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tensor::Tensor3;

type RawRow = Vec<[f64; 2]>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTensor {
    dims: [usize; 3],
    slices: Vec<Vec<RawRow>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    dims: [usize; 2],
    entries: Vec<RawRow>,
}

fn rows_to_matrix(rows: &[RawRow], r: usize, c: usize, ctx: &str) -> Result<Matrix> {
    if rows.len() != r {
        return Err(Error::DimensionMismatch(format!(
            "{ctx}: expected {r} rows, found {}",
            rows.len()
        )));
    }
    let mut data = Vec::with_capacity(r * c);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != c {
            return Err(Error::DimensionMismatch(format!(
                "{ctx}, row {i}: expected {c} entries, found {}",
                row.len()
            )));
        }
        for (j, &[re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::NonFinite(format!("{ctx}, entry ({i}, {j})")));
            }
            data.push(Complex64::new(re, im));
        }
    }
    Matrix::from_vec(r, c, data)
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::InvalidArgument(format!("malformed document: {e}"))
}

pub fn parse_tensor(text: &str) -> Result<Tensor3> {
    let raw: RawTensor = serde_json::from_str(text).map_err(parse_error)?;
    let [l, m, n] = raw.dims;
    if l == 0 || m == 0 || n == 0 {
        return Err(Error::InvalidShape(format!(
            "dims must be positive, got {:?}",
            raw.dims
        )));
    }
    if raw.slices.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "dims declare {n} slices, found {}",
            raw.slices.len()
        )));
    }
    let slices = raw
        .slices
        .iter()
        .enumerate()
        .map(|(k, rows)| rows_to_matrix(rows, l, m, &format!("slice {k}")))
        .collect::<Result<Vec<_>>>()?;
    Tensor3::from_slices(slices)
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let raw: RawMatrix = serde_json::from_str(text).map_err(parse_error)?;
    let [r, c] = raw.dims;
    if r == 0 || c == 0 {
        return Err(Error::InvalidShape(format!(
            "dims must be positive, got {:?}",
            raw.dims
        )));
    }
    rows_to_matrix(&raw.entries, r, c, "matrix")
}

fn write_number(out: &mut String, x: f64) {
    // serde_json emits the shortest representation that parses back exactly
    out.push_str(&serde_json::to_string(&x).expect("finite float"));
}

fn write_row(out: &mut String, m: &Matrix, i: usize) {
    out.push('[');
    for j in 0..m.cols() {
        if j > 0 {
            out.push_str(", ");
        }
        let z = m[(i, j)];
        out.push('[');
        write_number(out, z.re);
        out.push_str(", ");
        write_number(out, z.im);
        out.push(']');
    }
    out.push(']');
}

/// Canonical tensor file text (one matrix row per line, trailing newline).
pub fn serialize_tensor(t: &Tensor3) -> String {
    let (l, m, n) = t.dims();
    let mut out = String::new();
    let _ = write!(out, "{{\n  \"dims\": [{l}, {m}, {n}],\n  \"slices\": [\n");
    for (k, s) in t.slices().iter().enumerate() {
        out.push_str("    [\n");
        for i in 0..l {
            out.push_str("      ");
            write_row(&mut out, s, i);
            out.push_str(if i + 1 < l { ",\n" } else { "\n" });
        }
        out.push_str(if k + 1 < n { "    ],\n" } else { "    ]\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

/// Canonical matrix file text.
pub fn serialize_matrix(a: &Matrix) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "{{\n  \"dims\": [{}, {}],\n  \"entries\": [\n",
        a.rows(),
        a.cols()
    );
    for i in 0..a.rows() {
        out.push_str("    ");
        write_row(&mut out, a, i);
        out.push_str(if i + 1 < a.rows() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

fn matrix_rows(a: &Matrix) -> Vec<Vec<[f64; 2]>> {
    (0..a.rows())
        .map(|i| a.row(i).into_iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Matrix", 2)?;
        st.serialize_field("dims", &[self.rows(), self.cols()])?;
        st.serialize_field("entries", &matrix_rows(self))?;
        st.end()
    }
}

impl Serialize for Tensor3 {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let (l, m, n) = self.dims();
        let slices: Vec<_> = self.slices().iter().map(matrix_rows).collect();
        let mut st = serializer.serialize_struct("Tensor3", 2)?;
        st.serialize_field("dims", &[l, m, n])?;
        st.serialize_field("slices", &slices)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_matrix, seeded_rng};
    use proptest::prelude::*;

    const EXAMPLE: &str = r#"{"dims": [2, 2, 2], "slices": [
        [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]],
        [[[0, 0], [-1, 0]], [[-1, 0], [0, 0]]]
    ]}"#;

    #[test]
    fn parses_hand_written_example() {
        let t = parse_tensor(EXAMPLE).unwrap();
        assert_eq!(t.dims(), (2, 2, 2));
        assert_eq!(
            t.slice(1),
            &Matrix::from_real_rows(&[&[0.0, -1.0], &[-1.0, 0.0]])
        );
        assert_eq!(t.norm_l1(), 4.0);
    }

    #[test]
    fn serialized_text_is_canonical() {
        let t = parse_tensor(EXAMPLE).unwrap();
        let text = serialize_tensor(&t);
        assert_eq!(serialize_tensor(&parse_tensor(&text).unwrap()), text);
        assert!(text.starts_with("{\n  \"dims\": [2, 2, 2],"));
    }

    #[test]
    fn negative_zero_and_tiny_values_survive() {
        let data = vec![
            Complex64::new(-0.0, 0.0),
            Complex64::new(5e-324, -1e-300),
            Complex64::new(1.0 / 3.0, f64::MAX),
            Complex64::new(-2.5e-17, 0.1),
        ];
        let t = Tensor3::from_slices(vec![Matrix::from_vec(2, 2, data).unwrap()]).unwrap();
        let back = parse_tensor(&serialize_tensor(&t)).unwrap();
        for (a, b) in t.slice(0).data().iter().zip(back.slice(0).data()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(parse_tensor(r#"{"dims": [1, 1, 1], "slices": [[[[1e400, 0]]]]}"#).is_err());
        assert!(parse_tensor(r#"{"dims": [1, 1, 1], "slices": [[[[NaN, 0]]]]}"#).is_err());
        assert!(matches!(
            parse_tensor(r#"{"dims": [1, 1, 2], "slices": [[[[1, 0]]]]}"#),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            parse_tensor(r#"{"dims": [1, 2, 1], "slices": [[[[1, 0]]]]}"#),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(
            parse_tensor(r#"{"dims": [1, 1, 1], "slices": [[[[1, 0]]]], "extra": 1}"#).is_err()
        );
        assert!(matches!(
            parse_tensor(r#"{"dims": [0, 1, 1], "slices": []}"#),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn matrix_round_trip() {
        let mut rng = seeded_rng(2);
        let a = random_matrix(&mut rng, 3, 2);
        assert_eq!(parse_matrix(&serialize_matrix(&a)).unwrap(), a);
        assert!(parse_matrix(r#"{"dims": [1, 2], "entries": [[[1, 0]]]}"#).is_err());
    }

    proptest! {
        #[test]
        fn tensor_round_trip_is_bit_exact(
            l in 1usize..4, m in 1usize..4, n in 1usize..4,
            bits in proptest::collection::vec(any::<u64>(), 2 * 27),
        ) {
            let finite = |b: u64| {
                let x = f64::from_bits(b);
                if x.is_finite() { x } else { (b >> 12) as f64 * 1e-3 }
            };
            let slices = (0..n)
                .map(|k| {
                    let data = (0..l * m)
                        .map(|e| {
                            let idx = 2 * (k * l * m + e);
                            Complex64::new(finite(bits[idx]), finite(bits[idx + 1]))
                        })
                        .collect();
                    Matrix::from_vec(l, m, data).unwrap()
                })
                .collect();
            let t = Tensor3::from_slices(slices).unwrap();
            let back = parse_tensor(&serialize_tensor(&t)).unwrap();
            for (s, b) in t.slices().iter().zip(back.slices()) {
                for (x, y) in s.data().iter().zip(b.data()) {
                    prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
                    prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
                }
            }
        }
    }
}
