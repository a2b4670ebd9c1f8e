use std::io::Write;

use faer::Mat;
use rayon::prelude::*;

use super::config::QfedConfig;
use crate::error::{Error, Result};
use crate::patch::{
    default_group_count, extract, kmeans_group, reassemble, Dictionary, PatchGrid, PatchGrouping,
};
use crate::quat::{
    grad1, grad1_adj, grad2, grad2_adj, grad_transfer, nuclear_norm, nuclear_prox_gram,
    real_left_mul, soft_threshold, Fft2, HermitianFactor, QuaternionMatrix,
};

/// ADMM variables. Coefficient blocks are stored in patch order (column `p`
/// belongs to patch `p`); a group's `J_k`, `Z_k`, `Y1_k`, `Y2_k` are the
/// columns listed by the grouping.
#[derive(Clone, Debug)]
pub struct QfedState {
    pub b: QuaternionMatrix,
    pub d: QuaternionMatrix,
    pub e: QuaternionMatrix,
    pub g1: QuaternionMatrix,
    pub g2: QuaternionMatrix,
    pub j: QuaternionMatrix,
    pub z: QuaternionMatrix,
    pub y1: QuaternionMatrix,
    pub y2: QuaternionMatrix,
    pub y3: QuaternionMatrix,
    pub y4: QuaternionMatrix,
    pub y5: QuaternionMatrix,
    pub mu: f64,
    pub iter: usize,
}

/// One ADMM block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    J,
    Z,
    G,
    B,
    D,
    E,
}

impl Block {
    /// Update order within one iteration.
    pub const ORDER: [Block; 6] = [Block::J, Block::Z, Block::G, Block::B, Block::D, Block::E];
}

/// Per-iteration diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// Penalty used during this iteration.
    pub mu: f64,
    /// `max(‖ΔZ‖∞, ‖ΔD‖∞)`.
    pub rel_diff: f64,
    /// `‖I − B − D − E‖_F / ‖I‖_F`.
    pub constraint_residual: f64,
}

#[derive(Clone, Debug)]
pub struct QfedResult {
    pub b: QuaternionMatrix,
    pub d: QuaternionMatrix,
    pub e: QuaternionMatrix,
    /// `L×P` coefficients in patch order.
    pub z: QuaternionMatrix,
    pub grid: PatchGrid,
    pub grouping: PatchGrouping,
    pub iterations: usize,
    pub rel_diff: f64,
    pub constraint_residual: f64,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
}

/// `(I + AᴴA)⁻¹` applied through `I − Aᴴ(I + AAᴴ)⁻¹A`; only the small
/// `d×d` system is factored.
#[derive(Debug)]
struct CoefficientSolver {
    /// `(I + AAᴴ)⁻¹A`.
    k: QuaternionMatrix,
    k_real: Option<Mat<f64>>,
}

impl CoefficientSolver {
    fn new(dict: &Dictionary) -> Result<Self> {
        let w = &QuaternionMatrix::identity(dict.patch_dim()) + &dict.outer_gram();
        let k = HermitianFactor::new(&w)?.solve(dict.atoms())?;
        let k_real = dict
            .is_real()
            .then(|| Mat::from_fn(k.rows(), k.cols(), |r, c| k.get(r, c).a));
        Ok(Self { k, k_real })
    }

    fn solve(&self, dict: &Dictionary, rhs: &QuaternionMatrix) -> Result<QuaternionMatrix> {
        let t = match &self.k_real {
            Some(k) => real_left_mul(k, rhs),
            None => self.k.matmul(rhs),
        };
        let mut z = rhs.clone();
        z.add_scaled(&dict.apply_adjoint(&t)?, -1.0);
        Ok(z)
    }
}

/// Relative constraint residual `‖I − B − D − E‖_F / ‖I‖_F` (absolute when `I = 0`).
fn constraint_residual(i: &QuaternionMatrix, s: &QfedState) -> f64 {
    let r = i
        .zip_map(&s.b, |x, b| x - b)
        .zip_map(&s.d, |x, d| x - d)
        .zip_map(&s.e, |x, e| x - e);
    let n = i.fro_norm();
    if n > 0.0 {
        r.fro_norm() / n
    } else {
        r.fro_norm()
    }
}

/// `⟨Y, X⟩ + μ/2‖X‖²_F`.
fn penalty(y: &QuaternionMatrix, x: &QuaternionMatrix, mu: f64) -> f64 {
    y.real_inner(x) + 0.5 * mu * x.fro_norm().powi(2)
}

fn diff(a: &QuaternionMatrix, b: &QuaternionMatrix) -> QuaternionMatrix {
    a.zip_map(b, |x, y| x - y)
}

/// ADMM solver for one image.
pub struct QfedSolver<'a> {
    cfg: QfedConfig,
    dict: &'a Dictionary,
    image: QuaternionMatrix,
    grid: PatchGrid,
    grouping: PatchGrouping,
    fft: Fft2,
    /// `|h₁|² + |h₂|² + 2`.
    b_denominator: Vec<f64>,
    coeffs: CoefficientSolver,
    state: QfedState,
}

impl<'a> QfedSolver<'a> {
    /// Builds the initial state: `B⁰ = F⁻¹(F(I)/(H + 1))`, `D⁰ = I − B⁰`, all
    /// other variables zero, `μ = μ₀`; groups are clustered from `R(B⁰)`.
    pub fn new(image: &QuaternionMatrix, cfg: &QfedConfig, dict: &'a Dictionary) -> Result<Self> {
        cfg.validate()?;
        if image.is_empty() {
            return Err(Error::InvalidParameter("image is empty".into()));
        }
        if !image.is_finite() {
            return Err(Error::NonFinite {
                iteration: 0,
                what: "input image",
            });
        }
        let side = cfg.patch_side;
        if dict.patch_dim() != side * side {
            return Err(Error::shape(
                format!("dictionary with {} rows", side * side),
                format!("{} rows", dict.patch_dim()),
            ));
        }
        let (m, n) = image.shape();
        let grid = PatchGrid::non_overlapping(m, n, side)?;
        let fft = Fft2::new(m, n);
        let h = grad_transfer(m, n);

        let mut spec = fft.forward(image);
        spec.divide_real(&h.iter().map(|x| x + 1.0).collect::<Vec<_>>());
        let b = fft.inverse(&spec);
        let d = diff(image, &b);

        let patches = extract(&b, &grid)?;
        let k = cfg
            .groups
            .unwrap_or_else(|| default_group_count(grid.patch_count()))
            .min(grid.patch_count());
        let grouping = kmeans_group(&patches, k, cfg.seed)?;

        let l = dict.atom_count();
        let p = grid.patch_count();
        let zeros = || QuaternionMatrix::zeros(m, n);
        let state = QfedState {
            b,
            d,
            e: zeros(),
            g1: zeros(),
            g2: zeros(),
            j: QuaternionMatrix::zeros(l, p),
            z: QuaternionMatrix::zeros(l, p),
            y1: QuaternionMatrix::zeros(l, p),
            y2: QuaternionMatrix::zeros(side * side, p),
            y3: zeros(),
            y4: zeros(),
            y5: zeros(),
            mu: cfg.mu0,
            iter: 0,
        };
        Ok(Self {
            cfg: cfg.clone(),
            dict,
            image: image.clone(),
            grid,
            grouping,
            fft,
            b_denominator: h.iter().map(|x| x + 2.0).collect(),
            coeffs: CoefficientSolver::new(dict)?,
            state,
        })
    }

    pub fn state(&self) -> &QfedState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut QfedState {
        &mut self.state
    }

    pub fn config(&self) -> &QfedConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &PatchGrid {
        &self.grid
    }

    pub fn grouping(&self) -> &PatchGrouping {
        &self.grouping
    }

    fn groups(&self) -> impl Iterator<Item = &[usize]> {
        (0..self.grouping.group_count()).map(|k| self.grouping.members(k))
    }

    /// `J_k = prox_{‖·‖*/μ}(Z_k + Y1_k/μ)` for every group.
    pub fn update_j(&mut self) -> Result<()> {
        let s = &self.state;
        let mut target = s.z.clone();
        target.add_scaled(&s.y1, 1.0 / s.mu);
        let lam = 1.0 / s.mu;
        let groups: Vec<&[usize]> = self.groups().collect();
        let blocks: Vec<QuaternionMatrix> = groups
            .par_iter()
            .map(|cols| nuclear_prox_gram(&target.select_cols(cols), lam))
            .collect::<Result<_>>()?;
        let mut j = QuaternionMatrix::zeros(s.j.rows(), s.j.cols());
        for (cols, block) in groups.iter().zip(&blocks) {
            j.scatter_cols(cols, block);
        }
        self.state.j = j;
        Ok(())
    }

    /// `Z_k = (AᴴA + I)⁻¹(Aᴴ(R(B)_k + Y2_k/μ) + J_k − Y1_k/μ)`. The system is
    /// the same for every group, so all columns are solved at once.
    pub fn update_z(&mut self) -> Result<()> {
        let s = &self.state;
        let mut rb = extract(&s.b, &self.grid)?;
        rb.add_scaled(&s.y2, 1.0 / s.mu);
        let mut rhs = self.dict.apply_adjoint(&rb)?;
        rhs.add_scaled(&s.j, 1.0);
        rhs.add_scaled(&s.y1, -1.0 / s.mu);
        self.state.z = self.coeffs.solve(self.dict, &rhs)?;
        Ok(())
    }

    /// `G₁ = shrink(∇₁B − Y3/μ, α/μ)`, `G₂ = shrink(∇₂B − Y4/μ, α/μ)`.
    pub fn update_g(&mut self) {
        let s = &self.state;
        let tau = self.cfg.alpha / s.mu;
        let mut m1 = grad1(&s.b);
        m1.add_scaled(&s.y3, -1.0 / s.mu);
        let mut m2 = grad2(&s.b);
        m2.add_scaled(&s.y4, -1.0 / s.mu);
        self.state.g1 = soft_threshold(&m1, tau, self.cfg.shrink_mode);
        self.state.g2 = soft_threshold(&m2, tau, self.cfg.shrink_mode);
    }

    /// Right-hand side `R⁻¹(M₃) + ∇₁ᵀM₄ + ∇₂ᵀM₅ + M₆` of the B normal equations.
    pub fn b_rhs(&self) -> Result<QuaternionMatrix> {
        let s = &self.state;
        let inv_mu = 1.0 / s.mu;
        let mut m3 = self.dict.apply(&s.z)?;
        m3.add_scaled(&s.y2, -inv_mu);
        let mut rhs = reassemble(&m3, &self.grid)?;
        let mut m4 = s.g1.clone();
        m4.add_scaled(&s.y3, inv_mu);
        rhs.add_scaled(&grad1_adj(&m4), 1.0);
        let mut m5 = s.g2.clone();
        m5.add_scaled(&s.y4, inv_mu);
        rhs.add_scaled(&grad2_adj(&m5), 1.0);
        let mut m6 = diff(&diff(&self.image, &s.d), &s.e);
        m6.add_scaled(&s.y5, inv_mu);
        rhs.add_scaled(&m6, 1.0);
        Ok(rhs)
    }

    /// `B = F⁻¹(F(rhs)/(|h₁|² + |h₂|² + 2))`. By linearity `F(rhs)` equals the
    /// sum of the four transformed terms, so a single forward FFT suffices.
    pub fn update_b(&mut self) -> Result<()> {
        let mut spec = self.fft.forward(&self.b_rhs()?);
        spec.divide_real(&self.b_denominator);
        self.state.b = self.fft.inverse(&spec);
        Ok(())
    }

    /// `D = shrink(I − B − E + Y5/μ, β/μ)`.
    pub fn update_d(&mut self) {
        let s = &self.state;
        let mut m7 = diff(&diff(&self.image, &s.b), &s.e);
        m7.add_scaled(&s.y5, 1.0 / s.mu);
        self.state.d = soft_threshold(&m7, self.cfg.beta / s.mu, self.cfg.shrink_mode);
    }

    /// `E = μ/(2λ + μ)·(I − D − B + Y5/μ)`.
    pub fn update_e(&mut self) {
        let s = &self.state;
        let mut m8 = diff(&diff(&self.image, &s.d), &s.b);
        m8.add_scaled(&s.y5, 1.0 / s.mu);
        self.state.e = m8.scale(s.mu / (2.0 * self.cfg.lambda + s.mu));
    }

    pub fn update(&mut self, block: Block) -> Result<()> {
        match block {
            Block::J => self.update_j()?,
            Block::Z => self.update_z()?,
            Block::G => self.update_g(),
            Block::B => self.update_b()?,
            Block::D => self.update_d(),
            Block::E => self.update_e(),
        }
        Ok(())
    }

    /// Dual ascent on all multipliers, then `μ = min(μ_max, growth·μ)`.
    pub fn update_multipliers(&mut self) -> Result<()> {
        let az = self.dict.apply(&self.state.z)?;
        let rb = extract(&self.state.b, &self.grid)?;
        let s = &mut self.state;
        let mu = s.mu;
        s.y1.add_scaled(&diff(&s.z, &s.j), mu);
        s.y2.add_scaled(&diff(&rb, &az), mu);
        s.y3.add_scaled(&diff(&s.g1, &grad1(&s.b)), mu);
        s.y4.add_scaled(&diff(&s.g2, &grad2(&s.b)), mu);
        let r5 = diff(&diff(&diff(&self.image, &s.b), &s.d), &s.e);
        s.y5.add_scaled(&r5, mu);
        s.mu = (self.cfg.mu_growth * mu).min(self.cfg.mu_max);
        Ok(())
    }

    fn nuclear_sum(&self) -> Result<f64> {
        let norms: Vec<f64> = self
            .groups()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|cols| nuclear_norm(&self.state.j.select_cols(cols)))
            .collect::<Result<_>>()?;
        Ok(norms.iter().sum())
    }

    fn coupling_terms(&self) -> Result<f64> {
        let s = &self.state;
        let rb = extract(&s.b, &self.grid)?;
        Ok(penalty(&s.y2, &diff(&rb, &self.dict.apply(&s.z)?), s.mu))
    }

    fn gradient_terms(&self) -> f64 {
        let s = &self.state;
        penalty(&s.y3, &diff(&s.g1, &grad1(&s.b)), s.mu)
            + penalty(&s.y4, &diff(&s.g2, &grad2(&s.b)), s.mu)
    }

    fn fidelity_terms(&self) -> f64 {
        let s = &self.state;
        let r = diff(&diff(&diff(&self.image, &s.b), &s.d), &s.e);
        penalty(&s.y5, &r, s.mu)
    }

    /// Terms of the augmented Lagrangian that depend on `block`, with every
    /// other variable held at its current value. The sparsity terms use the
    /// entrywise ℓ1 norm.
    pub fn partial_objective(&self, block: Block) -> Result<f64> {
        let s = &self.state;
        let split = || penalty(&s.y1, &diff(&s.z, &s.j), s.mu);
        Ok(match block {
            Block::J => self.nuclear_sum()? + split(),
            Block::Z => split() + self.coupling_terms()?,
            Block::G => self.cfg.alpha * (s.g1.l1_norm() + s.g2.l1_norm()) + self.gradient_terms(),
            Block::B => self.coupling_terms()? + self.gradient_terms() + self.fidelity_terms(),
            Block::D => self.cfg.beta * s.d.l1_norm() + self.fidelity_terms(),
            Block::E => self.cfg.lambda * s.e.fro_norm().powi(2) + self.fidelity_terms(),
        })
    }

    /// Full augmented Lagrangian.
    pub fn lagrangian(&self) -> Result<f64> {
        let s = &self.state;
        Ok(self.nuclear_sum()?
            + penalty(&s.y1, &diff(&s.z, &s.j), s.mu)
            + self.coupling_terms()?
            + self.cfg.alpha * (s.g1.l1_norm() + s.g2.l1_norm())
            + self.gradient_terms()
            + self.cfg.beta * s.d.l1_norm()
            + self.cfg.lambda * s.e.fro_norm().powi(2)
            + self.fidelity_terms())
    }

    pub fn constraint_residual(&self) -> f64 {
        constraint_residual(&self.image, &self.state)
    }

    /// One full ADMM iteration.
    pub fn step(&mut self) -> Result<IterationRecord> {
        let z_prev = self.state.z.clone();
        let d_prev = self.state.d.clone();
        let mu = self.state.mu;
        for block in Block::ORDER {
            self.update(block)?;
        }
        self.update_multipliers()?;
        self.state.iter += 1;
        let iter = self.state.iter;
        for (m, what) in [
            (&self.state.z, "Z"),
            (&self.state.b, "B"),
            (&self.state.d, "D"),
            (&self.state.e, "E"),
        ] {
            if !m.is_finite() {
                return Err(Error::NonFinite {
                    iteration: iter,
                    what,
                });
            }
        }
        let rel_diff = diff(&self.state.z, &z_prev)
            .max_modulus()
            .max(diff(&self.state.d, &d_prev).max_modulus());
        Ok(IterationRecord {
            iter,
            mu,
            rel_diff,
            constraint_residual: self.constraint_residual(),
        })
    }

    /// Iterates until the stopping rule holds or `max_iter` is reached.
    pub fn run(mut self) -> Result<QfedResult> {
        let mut history = Vec::new();
        let mut converged = false;
        while self.state.iter < self.cfg.max_iter {
            let rec = self.step()?;
            log::debug!(
                "qfed iter {} mu {:.4e} rel_diff {:.3e} residual {:.3e}",
                rec.iter,
                rec.mu,
                rec.rel_diff,
                rec.constraint_residual
            );
            history.push(rec);
            if rec.rel_diff <= self.cfg.tol {
                converged = true;
                break;
            }
        }
        let last = history.last().copied();
        let QfedState { b, d, e, z, .. } = self.state;
        Ok(QfedResult {
            b,
            d,
            e,
            z,
            grid: self.grid,
            grouping: self.grouping,
            iterations: history.len(),
            rel_diff: last.map_or(f64::INFINITY, |r| r.rel_diff),
            constraint_residual: last.map_or(f64::NAN, |r| r.constraint_residual),
            converged,
            history,
        })
    }
}

/// Decomposes `image` into base, detail and noise layers.
pub fn decompose(
    image: &QuaternionMatrix,
    cfg: &QfedConfig,
    dict: &Dictionary,
) -> Result<QfedResult> {
    QfedSolver::new(image, cfg, dict)?.run()
}

/// Writes `iter,mu,rel_diff,constraint_residual` rows with a header line.
pub fn write_trace_csv<W: Write>(history: &[IterationRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "iter,mu,rel_diff,constraint_residual")?;
    for r in history {
        writeln!(
            w,
            "{},{:e},{:e},{:e}",
            r.iter, r.mu, r.rel_diff, r.constraint_residual
        )?;
    }
    Ok(())
}
