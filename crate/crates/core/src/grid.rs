//! Truncated periodic lattice, complex grid functions and the real-space
//! calculus on them: forward/backward differences, the discrete Laplacian,
//! weighted Lebesgue norms and the operator form of the Sobolev norms.
//!
//! The lattice holds `n` points per axis at spacing `h`, covering the
//! periodic box `[-L, L)^d` with `L = n*h/2`. Points are stored in
//! increasing coordinate order starting at `-L`, row-major across axes,
//! so file outputs are bit-reproducible.

use std::io::{Read, Write};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"DNLSGRID";

/// Geometry of the truncated periodic lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeGrid {
    d: usize,
    n: usize,
    h: f64,
}

impl LatticeGrid {
    /// `d` must be 1 or 2, `n` even and at least 4, `h` positive.
    pub fn new(d: usize, n: usize, h: f64) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::InvalidArgument(format!("dimension must be 1 or 2, got {d}")));
        }
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "points per axis must be even and >= 4, got {n}"
            )));
        }
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidArgument(format!("spacing must be positive, got {h}")));
        }
        Ok(Self { d, n, h })
    }

    /// Grid covering `[-L, L)^d` with `n = 2L/h` points per axis.
    pub fn from_half_width(d: usize, half_width: f64, h: f64) -> Result<Self> {
        let n_exact = 2.0 * half_width / h;
        let n = n_exact.round() as usize;
        if (n as f64 - n_exact).abs() > 1e-9 * n_exact.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "2L/h = {n_exact} is not an integer (L = {half_width}, h = {h})"
            )));
        }
        Self::new(d, n, h)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Points per axis.
    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Half-width `L = n*h/2` of the periodic box.
    pub fn half_width(&self) -> f64 {
        self.n as f64 * self.h / 2.0
    }

    /// Total number of lattice points `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^d` of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    /// Physical coordinate along one axis for per-axis index `i`.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width() + i as f64 * self.h
    }

    /// Per-axis indices of a flat row-major index.
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        match self.d {
            1 => [flat, 0],
            _ => [flat / self.n, flat % self.n],
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        match self.d {
            1 => idx[0],
            _ => idx[0] * self.n + idx[1],
        }
    }

    /// Flat index of the neighbour shifted `step` cells along `axis`,
    /// with periodic wraparound.
    pub fn shifted(&self, flat: usize, axis: usize, step: isize) -> usize {
        let mut idx = self.multi_index(flat);
        let n = self.n as isize;
        idx[axis] = ((idx[axis] as isize + step).rem_euclid(n)) as usize;
        self.flat_index(idx)
    }

    /// Physical coordinates of a flat index (second entry unused for d=1).
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let idx = self.multi_index(flat);
        [self.coordinate(idx[0]), if self.d == 2 { self.coordinate(idx[1]) } else { 0.0 }]
    }

    /// Grid refined by `2^r`: same box, spacing divided by `2^r`.
    pub fn refined(&self, r: u32) -> Self {
        Self { d: self.d, n: self.n << r, h: self.h / f64::powi(2.0, r as i32) }
    }
}

/// Complex-valued function on a [`LatticeGrid`]; the discrete unknown.
///
/// Immutable by convention: all operations return fresh values, so
/// instances can be shared freely between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: LatticeGrid,
    values: Vec<C64>,
}

impl GridFunction {
    pub fn new(grid: LatticeGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: LatticeGrid) -> Self {
        Self { grid, values: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    pub fn constant(grid: LatticeGrid, c: C64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    /// Value 1 at the lattice point closest to the origin, 0 elsewhere.
    pub fn delta_at_origin(grid: LatticeGrid) -> Self {
        let mut u = Self::zeros(grid);
        let mid = grid.n / 2;
        let flat = grid.flat_index([mid, if grid.d == 2 { mid } else { 0 }]);
        u.values[flat] = C64::new(1.0, 0.0);
        u
    }

    /// Build from physical coordinates.
    pub fn from_fn(grid: LatticeGrid, mut f: impl FnMut(&[f64]) -> C64) -> Self {
        let values = (0..grid.len())
            .map(|flat| {
                let p = grid.point(flat);
                f(&p[..grid.d])
            })
            .collect();
        Self { grid, values }
    }

    /// Plane wave `exp(i a · xi_k)` with frequency index `k` per axis
    /// (`k` in `-n/2 .. n/2`), i.e. `xi_k = pi k / L`.
    pub fn plane_wave(grid: LatticeGrid, k: [i64; 2]) -> Self {
        let l = grid.half_width();
        let xi: Vec<f64> = (0..grid.d).map(|j| std::f64::consts::PI * k[j] as f64 / l).collect();
        Self::from_fn(grid, |a| {
            let phase: f64 = a.iter().zip(&xi).map(|(ai, xij)| ai * xij).sum();
            C64::from_polar(1.0, phase)
        })
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values =
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Forward difference `(u(a + h e_j) - u(a)) / h` along axis `j`
    /// (1-based per the usual notation), periodic at the box edge.
    pub fn forward_difference(&self, axis: usize) -> Result<Self> {
        self.difference(axis, true)
    }

    /// Backward difference `(u(a) - u(a - h e_j)) / h`.
    pub fn backward_difference(&self, axis: usize) -> Result<Self> {
        self.difference(axis, false)
    }

    fn difference(&self, axis: usize, forward: bool) -> Result<Self> {
        if axis == 0 || axis > self.grid.d {
            return Err(Error::AxisOutOfRange { axis, dim: self.grid.d });
        }
        let ax = axis - 1;
        let inv_h = 1.0 / self.grid.h;
        let mut values = vec![C64::new(0.0, 0.0); self.values.len()];
        for flat in 0..self.values.len() {
            let (hi, lo) = if forward {
                (self.values[self.grid.shifted(flat, ax, 1)], self.values[flat])
            } else {
                (self.values[flat], self.values[self.grid.shifted(flat, ax, -1)])
            };
            values[flat] = (hi - lo) * inv_h;
        }
        Ok(Self { grid: self.grid, values })
    }

    /// Discrete Laplacian: the periodic 2d+1-point stencil
    /// `sum_j (u(a+h e_j) + u(a-h e_j) - 2 u(a)) / h^2`.
    pub fn laplacian(&self) -> Self {
        let inv_h2 = 1.0 / (self.grid.h * self.grid.h);
        let mut values = vec![C64::new(0.0, 0.0); self.values.len()];
        for flat in 0..self.values.len() {
            let mut acc = C64::new(0.0, 0.0);
            for ax in 0..self.grid.d {
                acc += self.values[self.grid.shifted(flat, ax, 1)]
                    + self.values[self.grid.shifted(flat, ax, -1)]
                    - 2.0 * self.values[flat];
            }
            values[flat] = acc * inv_h2;
        }
        Self { grid: self.grid, values }
    }

    /// Weighted Lebesgue norm `(h^d sum |u|^p)^(1/p)`; `sup |u|` for
    /// `p = infinity`. Requires `p >= 1`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidArgument(format!("Lebesgue exponent must be >= 1, got {p}")));
        }
        if p.is_infinite() {
            return Ok(self.values.iter().map(|v| v.norm()).fold(0.0, f64::max));
        }
        let w = self.grid.cell_volume();
        if p == 2.0 {
            let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
            return Ok((w * s).sqrt());
        }
        let s: f64 = self.values.iter().map(|v| v.norm().powf(p)).sum();
        Ok((w * s).powf(1.0 / p))
    }

    /// Mass fraction carried by the outer 10% shell of the box,
    /// `max_j |a_j| >= 0.9 L`. Used to monitor whether the periodic
    /// truncation of the infinite lattice is faithful.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let l = self.grid.half_width();
        let cut = 0.9 * l;
        let mut shell = 0.0;
        let mut total = 0.0;
        for flat in 0..self.values.len() {
            let p = self.grid.point(flat);
            let m = self.values[flat].norm_sqr();
            total += m;
            if p[..self.grid.d].iter().any(|a| a.abs() >= cut) {
                shell += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            shell / total
        }
    }

    /// Inhomogeneous Sobolev norm of integer order via repeated Laplacians:
    /// `(sum_{k<=m} <(-Lap)^k u, u>)^(1/2)`.
    pub fn sobolev_norm_operator(&self, m: u32) -> f64 {
        let mut acc = inner_product(self, self).expect("same grid").re;
        let mut v = self.clone();
        for _ in 0..m {
            v = v.laplacian().scale(C64::new(-1.0, 0.0));
            acc += inner_product(&v, self).expect("same grid").re.max(0.0);
        }
        acc.sqrt()
    }
}

/// Hermitian pairing `<f, g> = h^d sum f(a) conj(g(a))`.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<C64> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    let s: C64 = f.values.iter().zip(&g.values).map(|(&a, &b)| a * b.conj()).sum();
    Ok(s * f.grid.cell_volume())
}

// ---------------------------------------------------------------------------
// Serialization: 32-byte header (magic, d, n, h) then little-endian f64
// pairs (re, im) in row-major order.
// ---------------------------------------------------------------------------

impl GridFunction {
    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.grid.d as u64).to_le_bytes())?;
        w.write_all(&(self.grid.n as u64).to_le_bytes())?;
        w.write_all(&self.grid.h.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        let mut header = [0u8; 32];
        r.read_exact(&mut header)?;
        if &header[0..8] != MAGIC {
            return Err(Error::MalformedFile("bad magic".into()));
        }
        let d = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
        let n = u64::from_le_bytes(header[16..24].try_into().unwrap()) as usize;
        let h = f64::from_le_bytes(header[24..32].try_into().unwrap());
        let grid = LatticeGrid::new(d, n, h)
            .map_err(|e| Error::MalformedFile(format!("bad header: {e}")))?;
        let mut buf = vec![0u8; grid.len() * 16];
        r.read_exact(&mut buf)?;
        let values = buf
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        GridFunction::new(grid, values)
    }

    /// CSV rows `index,a_1[,a_2],re,im`.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        if self.grid.d == 1 {
            writeln!(w, "index,a_1,re,im")?;
        } else {
            writeln!(w, "index,a_1,a_2,re,im")?;
        }
        for flat in 0..self.values.len() {
            let p = self.grid.point(flat);
            let v = self.values[flat];
            if self.grid.d == 1 {
                writeln!(w, "{flat},{:.16e},{:.16e},{:.16e}", p[0], v.re, v.im)?;
            } else {
                writeln!(w, "{flat},{:.16e},{:.16e},{:.16e},{:.16e}", p[0], p[1], v.re, v.im)?;
            }
        }
        Ok(())
    }
}
