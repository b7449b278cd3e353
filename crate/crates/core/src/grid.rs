//! Uniform grids on the box `[-L, L)^d`, real fields on them, quadrature, and
//! the FLD1 file format.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    dims: Vec<usize>,
    half_width: f64,
}

impl GridSpec {
    pub fn new(dims: Vec<usize>, half_width: f64) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidGrid("at least one axis is required".into()));
        }
        for (axis, &n) in dims.iter().enumerate() {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} has {n} points; need a power of two >= 8"
                )));
            }
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width {half_width} must be positive")));
        }
        Ok(Self { dims, half_width })
    }

    /// `n` points per axis in `d` dimensions.
    pub fn cube(d: usize, n: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![n; d], half_width)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_width / self.dims[axis] as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.ndim()).map(|a| self.spacing(a)).collect()
    }

    /// Quadrature weight of every cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.ndim()).map(|a| self.spacing(a)).product()
    }

    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing(axis)
    }

    /// Cell index of the origin on each axis.
    pub fn center(&self) -> Vec<usize> {
        self.dims.iter().map(|n| n / 2).collect()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.ndim()];
        for a in (0..self.ndim().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * self.dims[a + 1];
        }
        strides
    }

    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.ndim()).rev() {
            out[a] = flat % self.dims[a];
            flat /= self.dims[a];
        }
    }

    /// Coordinates of the sample at flat index `flat`.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut idx = vec![0; self.ndim()];
        self.unravel(flat, &mut idx);
        for a in 0..self.ndim() {
            out[a] = self.coord(a, idx[a]);
        }
    }

    /// Squared distance from the origin of sample `flat`.
    pub fn radius_sq(&self, flat: usize) -> f64 {
        let mut x = vec![0.0; self.ndim()];
        self.point(flat, &mut x);
        x.iter().map(|v| v * v).sum()
    }

    /// Flat indices of cells on the outer boundary layer of the box.
    pub fn boundary_indices(&self) -> Vec<usize> {
        let mut idx = vec![0; self.ndim()];
        (0..self.len())
            .filter(|&flat| {
                self.unravel(flat, &mut idx);
                idx.iter().zip(&self.dims).any(|(&i, &n)| i == 0 || i == n - 1)
            })
            .collect()
    }

    pub fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{:?} on L = {} vs {:?} on L = {}",
                self.dims, self.half_width, other.dims, other.half_width
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for values produced by trusted arithmetic.
    pub(crate) fn from_parts(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self::from_parts(grid.clone(), vec![0.0; grid.len()])
    }

    pub fn constant(grid: &GridSpec, value: f64) -> Self {
        Self::from_parts(grid.clone(), vec![value; grid.len()])
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let mut x = vec![0.0; grid.ndim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.point(i, &mut x);
                f(&x)
            })
            .collect();
        Self::new(grid.clone(), values)
    }

    /// Isotropic Gaussian `exp(-|x|^2 / (2 sigma^2))`.
    pub fn gaussian(grid: &GridSpec, sigma: f64) -> Self {
        Self::from_fn(grid, |x| {
            (-x.iter().map(|v| v * v).sum::<f64>() / (2.0 * sigma * sigma)).exp()
        })
        .expect("gaussian samples are finite")
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_parts(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Field) -> Result<Self> {
        self.zip_map(other, |a, b| a + s * b)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `sum f_i^2 * cell volume`.
pub fn l2_norm_sq(f: &Field) -> f64 {
    dot(&f.values, &f.values) * f.grid.cell_volume()
}

pub fn l2_norm(f: &Field) -> f64 {
    l2_norm_sq(f).sqrt()
}

/// Quadrature-weighted pairing of two fields on the same grid.
pub fn inner(f: &Field, g: &Field) -> Result<f64> {
    f.grid.ensure_same(&g.grid)?;
    Ok(dot(&f.values, &g.values) * f.grid.cell_volume())
}

/// Integral of `f` (midpoint rule).
pub fn integral(f: &Field) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.cell_volume()
}

/// Sequential dot product; the fixed summation order keeps reductions reproducible.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldHeader {
    version: u32,
    dims: Vec<usize>,
    half_width: f64,
    dtype: String,
    order: String,
}

pub fn encode_field(f: &Field) -> Vec<u8> {
    let header = FieldHeader {
        version: 1,
        dims: f.grid.dims.clone(),
        half_width: f.grid.half_width,
        dtype: "f64le".into(),
        order: "row-major".into(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.reserve(f.values.len() * 8);
    for v in &f.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<Field> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    let header: FieldHeader =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::Format(format!("bad header: {e}")))?;
    if header.version != 1 {
        return Err(Error::Format(format!("unsupported version {}", header.version)));
    }
    if header.dtype != "f64le" {
        return Err(Error::Format(format!("unsupported dtype {:?}", header.dtype)));
    }
    if header.order != "row-major" {
        return Err(Error::Format(format!("unsupported order {:?}", header.order)));
    }
    let grid =
        GridSpec::new(header.dims, header.half_width).map_err(|e| Error::Format(format!("bad grid in header: {e}")))?;
    let payload = &bytes[nl + 1..];
    let expected = grid.len() * 8;
    if payload.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Field::new(grid, values)
}

pub fn write_field(f: &Field, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_field(f))
}

pub fn read_field(path: impl AsRef<Path>) -> Result<Field> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_field(&bytes)
}

/// Reads a field and checks it lives on `grid`.
pub fn read_field_on(path: impl AsRef<Path>, grid: &GridSpec) -> Result<Field> {
    let f = read_field(path)?;
    grid.ensure_same(f.grid())?;
    Ok(f)
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("no file name")))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(vec![4], 1.0).is_err());
        assert!(GridSpec::new(vec![12], 1.0).is_err());
        assert!(GridSpec::new(vec![16], 0.0).is_err());
        assert!(GridSpec::new(vec![], 1.0).is_err());
        let g = GridSpec::new(vec![8, 16], 2.0).unwrap();
        assert_eq!(g.len(), 128);
        assert_eq!(g.strides(), vec![16, 1]);
        assert_eq!(g.coord(0, 4), 0.0);
        assert_eq!(g.coord(1, 0), -2.0);
    }

    #[test]
    fn norms() {
        let g = GridSpec::cube(1, 8, 1.0).unwrap();
        assert_eq!(l2_norm_sq(&Field::zeros(&g)), 0.0);
        assert!((l2_norm_sq(&Field::constant(&g, 1.0)) - 2.0).abs() < 1e-15);

        let g = GridSpec::cube(1, 4096, 16.0).unwrap();
        let u = Field::from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap();
        assert!((l2_norm_sq(&u) - (PI / 2.0).sqrt()).abs() < 1e-10);
        assert_eq!(inner(&u, &u).unwrap(), l2_norm_sq(&u));
    }

    #[test]
    fn discrete_orthogonality() {
        let g = GridSpec::cube(1, 64, 3.0).unwrap();
        let l = g.half_width();
        let s1 = Field::from_fn(&g, |x| (2.0 * PI * 3.0 * x[0] / (2.0 * l)).sin()).unwrap();
        let s2 = Field::from_fn(&g, |x| (2.0 * PI * 5.0 * x[0] / (2.0 * l)).sin()).unwrap();
        assert!(inner(&s1, &s2).unwrap().abs() < 1e-12);
        // A single cosine mode integrates to L in its square.
        let c = Field::from_fn(&g, |x| (2.0 * PI * 7.0 * x[0] / (2.0 * l)).cos()).unwrap();
        assert!((l2_norm_sq(&c) - l).abs() < 1e-12);
    }

    #[test]
    fn mismatched_inner() {
        let a = Field::zeros(&GridSpec::cube(1, 8, 1.0).unwrap());
        let b = Field::zeros(&GridSpec::cube(1, 16, 1.0).unwrap());
        assert!(matches!(inner(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn non_finite_rejected() {
        let g = GridSpec::cube(1, 8, 1.0).unwrap();
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(Field::new(g, v), Err(Error::NonFinite(3))));
    }

    #[test]
    fn file_round_trip() {
        let g = GridSpec::new(vec![8, 16], 1.5).unwrap();
        let f = Field::from_fn(&g, |x| x[0].sin() * x[1] + 1e-300).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.fld");
        write_field(&f, &path).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.grid(), f.grid());
        let same = back
            .values()
            .iter()
            .zip(f.values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same);
        assert!(read_field_on(&path, &GridSpec::cube(2, 8, 1.5).unwrap()).is_err());
    }

    #[test]
    fn file_errors() {
        let g = GridSpec::cube(1, 8, 1.0).unwrap();
        let bytes = encode_field(&Field::constant(&g, 2.0));
        assert!(matches!(
            decode_field(&bytes[..bytes.len() - 3]),
            Err(Error::Truncated { .. })
        ));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(decode_field(&longer), Err(Error::Format(_))));
        let text = String::from_utf8_lossy(&bytes).replace("f64le", "f32le");
        let mut bad = text.split('\n').next().unwrap().as_bytes().to_vec();
        bad.push(b'\n');
        bad.extend_from_slice(&bytes[bytes.iter().position(|&b| b == b'\n').unwrap() + 1..]);
        assert!(matches!(decode_field(&bad), Err(Error::Format(_))));
        assert!(matches!(decode_field(b"no header"), Err(Error::Format(_))));
    }
}
