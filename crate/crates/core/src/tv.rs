//! Pixel neighborhoods, discrete total variation of the columns of `K`, and
//! the separable quadratic majorizer of the TV penalty.

use ndarray::{Array1, Array2};

use crate::error::{NmfError, Result};

/// Forward-difference neighborhood over a `width x height` image whose
/// pixels are the rows of `K` in row-major order: pixel `(x, y)` is row
/// `y * width + x`, with neighbors `(x+1, y)` and `(x, y+1)` where those
/// exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    neighbors: Vec<Vec<usize>>,
    adjoint: Vec<Vec<usize>>,
}

impl PixelGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of pixels, `width * height`.
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// `N_i`, the pixels whose difference with `i` enters `|∇_i|`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// `N̄_i = { ℓ : i ∈ N_ℓ }`.
    pub fn adjoint_neighbors(&self, i: usize) -> &[usize] {
        &self.adjoint[i]
    }

    /// A `n x 1` chain, the neighborhood used when no image layout is known.
    pub fn chain(n: usize) -> Result<Self> {
        build_grid(n, 1)
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.len() {
            return Err(NmfError::Shape(format!(
                "grid has {} pixels but the factor has {rows} rows",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Builds the forward-difference grid, clipped at the right and bottom
/// borders.
pub fn build_grid(width: usize, height: usize) -> Result<PixelGrid> {
    if width == 0 || height == 0 {
        return Err(NmfError::Invalid(format!(
            "grid must be at least 1x1, got {width}x{height}"
        )));
    }
    let n = width * height;
    let mut neighbors = vec![Vec::with_capacity(2); n];
    let mut adjoint = vec![Vec::with_capacity(2); n];
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            if x + 1 < width {
                neighbors[i].push(i + 1);
            }
            if y + 1 < height {
                neighbors[i].push(i + width);
            }
        }
    }
    for (i, ns) in neighbors.iter().enumerate() {
        for &l in ns {
            adjoint[l].push(i);
        }
    }
    Ok(PixelGrid {
        width,
        height,
        neighbors,
        adjoint,
    })
}

/// `|∇_ik K| = sqrt(ε² + Σ_{ℓ ∈ N_i} (K_ik − K_ℓk)²)`.
pub fn grad_magnitude(k: &Array2<f64>, grid: &PixelGrid, eps_tv: f64) -> Result<Array2<f64>> {
    grid.check_rows(k.nrows())?;
    let eps2 = eps_tv * eps_tv;
    Ok(Array2::from_shape_fn(k.dim(), |(i, c)| {
        let kic = k[[i, c]];
        let s: f64 = grid.neighbors[i].iter().map(|&l| (kic - k[[l, c]]).powi(2)).sum();
        (eps2 + s).sqrt()
    }))
}

fn check_psi(psi: &Array1<f64>, p: usize) -> Result<()> {
    if psi.len() != p {
        return Err(NmfError::Shape(format!("psi has length {}, expected {p}", psi.len())));
    }
    Ok(())
}

/// `TV(K) = Σ_k ψ_k Σ_i |∇_ik K|`.
pub fn tv_penalty(k: &Array2<f64>, grid: &PixelGrid, psi: &Array1<f64>, eps_tv: f64) -> Result<f64> {
    check_psi(psi, k.ncols())?;
    let g = grad_magnitude(k, grid, eps_tv)?;
    Ok(g.columns().into_iter().zip(psi).map(|(col, w)| w * col.sum()).sum())
}

/// Helper matrices of the separable TV majorizer at anchor `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct TvWorkspace {
    pub p: Array2<f64>,
    pub z: Array2<f64>,
    pub grad_mag: Array2<f64>,
}

/// `P_ik = |N_i| / |∇_ik A| + Σ_{ℓ ∈ N̄_i} 1/|∇_ℓk A|` and
/// `Z_ik = (Σ_{ℓ ∈ N_i} (A_ik + A_ℓk) / (2|∇_ik A|) + Σ_{ℓ ∈ N̄_i} (A_ik + A_ℓk) / (2|∇_ℓk A|)) / P_ik`.
///
/// A pixel with no neighbors in either direction has `P = 0`; its `Z` is
/// set to `A` so that it feels no TV force.
pub fn compute_tv_workspace(a: &Array2<f64>, grid: &PixelGrid, eps_tv: f64) -> Result<TvWorkspace> {
    let g = grad_magnitude(a, grid, eps_tv)?;
    let mut p = Array2::zeros(a.dim());
    let mut z = Array2::zeros(a.dim());
    for c in 0..a.ncols() {
        for i in 0..a.nrows() {
            let ai = a[[i, c]];
            let gi = g[[i, c]];
            let mut pw = 0.0;
            let mut zw = 0.0;
            for &l in &grid.neighbors[i] {
                pw += 1.0 / gi;
                zw += (ai + a[[l, c]]) / (2.0 * gi);
            }
            for &l in &grid.adjoint[i] {
                let gl = g[[l, c]];
                pw += 1.0 / gl;
                zw += (ai + a[[l, c]]) / (2.0 * gl);
            }
            p[[i, c]] = pw;
            z[[i, c]] = if pw > 0.0 { zw / pw } else { ai };
        }
    }
    Ok(TvWorkspace { p, z, grad_mag: g })
}

/// The TV majorizer
/// `Q(K, A) = Σ_k ψ_k Σ_i [ε² + Σ_{ℓ ∈ N_i} ((K_ik − K_ℓk)(A_ik − A_ℓk) + (K_ℓk − A_ℓk)² + (K_ik − A_ik)²)] / |∇_ik A|`,
/// which equals `TV(K)` at `K = A` and lies above it everywhere.
pub fn tv_surrogate_value(
    k: &Array2<f64>,
    a: &Array2<f64>,
    grid: &PixelGrid,
    psi: &Array1<f64>,
    eps_tv: f64,
) -> Result<f64> {
    check_same(k, a)?;
    check_psi(psi, k.ncols())?;
    let g = grad_magnitude(a, grid, eps_tv)?;
    let eps2 = eps_tv * eps_tv;
    let mut total = 0.0;
    for c in 0..k.ncols() {
        let mut col = 0.0;
        for i in 0..k.nrows() {
            let (ki, ai) = (k[[i, c]], a[[i, c]]);
            let mut s = eps2;
            for &l in &grid.neighbors[i] {
                let (kl, al) = (k[[l, c]], a[[l, c]]);
                s += (ki - kl) * (ai - al) + (kl - al).powi(2) + (ki - ai).powi(2);
            }
            col += s / g[[i, c]];
        }
        total += psi[c] * col;
    }
    Ok(total)
}

/// Gradient of the TV majorizer in `K`: `2 ψ_k P_ik (K_ik − Z_ik)`.
pub fn tv_surrogate_gradient(
    k: &Array2<f64>,
    a: &Array2<f64>,
    grid: &PixelGrid,
    psi: &Array1<f64>,
    eps_tv: f64,
) -> Result<Array2<f64>> {
    check_same(k, a)?;
    check_psi(psi, k.ncols())?;
    let ws = compute_tv_workspace(a, grid, eps_tv)?;
    Ok(Array2::from_shape_fn(k.dim(), |(i, c)| {
        2.0 * psi[c] * ws.p[[i, c]] * (k[[i, c]] - ws.z[[i, c]])
    }))
}

fn check_same(k: &Array2<f64>, a: &Array2<f64>) -> Result<()> {
    crate::error::check_shape("TV anchor", a.dim(), k.dim())
}
