//! Open-system dynamics of the wire-mediated axial exchange.
//!
//! Two truncated harmonic modes, the spectroscopy mode `a` and the logic
//! mode `b`, evolve in the rotating frame under
//!
//! ```text
//! H / hbar = omega_ex (a^dag b + a b^dag) + detuning * b^dag b
//! ```
//!
//! with thermal damping on each mode at energy-decay rate `gamma_i` towards
//! occupation `n_bar`:
//!
//! ```text
//! d rho/dt = -i[H, rho] + sum_i gamma_i (n_bar + 1) D[c_i] rho + gamma_i n_bar D[c_i^dag] rho
//! ```
//!
//! Two propagators are provided. [`Propagator::Rk4`] integrates the master
//! equation directly on the density matrix. [`Propagator::Exponential`]
//! builds the vectorized Liouvillian (one block per coherence order, which
//! the generator conserves) and applies its matrix exponential.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::circuit::ExchangeBudget;
use crate::{Error, Result};

/// Default per-mode Fock cutoff.
pub const DEFAULT_N_MAX: usize = 4;

/// Largest population tolerated in the top Fock level of either mode.
pub const TRUNCATION_LIMIT: f64 = 1e-3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Joint density matrix over `|n_S, n_L>`, `0 <= n <= n_max`.
///
/// Basis index is `n_S * (n_max + 1) + n_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    n_max: usize,
    rho: DMatrix<Complex64>,
}

impl TwoModeState {
    pub fn fock(n_max: usize, n_spec: usize, n_logic: usize) -> Result<Self> {
        check_cutoff(n_max)?;
        if n_spec > n_max || n_logic > n_max {
            return Err(Error::domain(
                "Fock state exceeds truncation",
                n_spec.max(n_logic) as f64,
            ));
        }
        let d = (n_max + 1) * (n_max + 1);
        let mut rho = DMatrix::from_element(d, d, ZERO);
        let k = n_spec * (n_max + 1) + n_logic;
        rho[(k, k)] = Complex64::new(1.0, 0.0);
        Ok(Self { n_max, rho })
    }

    /// Product of two truncated, renormalized thermal states.
    pub fn thermal(n_max: usize, n_bar: f64) -> Result<Self> {
        check_cutoff(n_max)?;
        if !(n_bar >= 0.0) {
            return Err(Error::domain("n_bar must be >= 0", n_bar));
        }
        let x = n_bar / (1.0 + n_bar);
        let weights: Vec<f64> = (0..=n_max).map(|n| x.powi(n as i32)).collect();
        let norm: f64 = weights.iter().sum();
        let d = (n_max + 1) * (n_max + 1);
        let mut rho = DMatrix::from_element(d, d, ZERO);
        for s in 0..=n_max {
            for l in 0..=n_max {
                let k = s * (n_max + 1) + l;
                rho[(k, k)] = Complex64::new(weights[s] * weights[l] / (norm * norm), 0.0);
            }
        }
        Ok(Self { n_max, rho })
    }

    /// Wraps an explicit density matrix after validating it.
    pub fn from_density(n_max: usize, rho: DMatrix<Complex64>) -> Result<Self> {
        check_cutoff(n_max)?;
        let d = (n_max + 1) * (n_max + 1);
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::domain("density matrix has the wrong dimension", rho.nrows() as f64));
        }
        let s = Self { n_max, rho };
        s.validate()?;
        Ok(s)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn density(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    fn index(&self, n_spec: usize, n_logic: usize) -> usize {
        n_spec * (self.n_max + 1) + n_logic
    }

    pub fn population(&self, n_spec: usize, n_logic: usize) -> f64 {
        let k = self.index(n_spec, n_logic);
        self.rho[(k, k)].re
    }

    /// Marginal distribution of the logic mode.
    pub fn logic_distribution(&self) -> Vec<f64> {
        (0..=self.n_max)
            .map(|l| (0..=self.n_max).map(|s| self.population(s, l)).sum())
            .collect()
    }

    /// Marginal distribution of the spectroscopy mode.
    pub fn spectroscopy_distribution(&self) -> Vec<f64> {
        (0..=self.n_max)
            .map(|s| (0..=self.n_max).map(|l| self.population(s, l)).sum())
            .collect()
    }

    /// `(<a^dag a>, <b^dag b>)`
    pub fn mean_quanta(&self) -> (f64, f64) {
        let mean = |p: Vec<f64>| p.iter().enumerate().map(|(n, v)| n as f64 * v).sum();
        (
            mean(self.spectroscopy_distribution()),
            mean(self.logic_distribution()),
        )
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// `max |rho - rho^dag|`
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().min()
    }

    /// Largest population in the top Fock level of either mode.
    pub fn edge_population(&self) -> f64 {
        let top = self.n_max;
        let s = self.spectroscopy_distribution()[top];
        let l = self.logic_distribution()[top];
        s.max(l)
    }

    /// Hermitian to 1e-12, unit trace to 1e-9, eigenvalues above -1e-9.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-12 {
            return Err(Error::domain("density matrix is not Hermitian", herm));
        }
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
            return Err(Error::domain("density matrix trace differs from 1", tr.re));
        }
        let min = self.min_eigenvalue();
        if min < -1e-9 {
            return Err(Error::domain("density matrix has a negative eigenvalue", min));
        }
        Ok(())
    }
}

fn check_cutoff(n_max: usize) -> Result<()> {
    if n_max < 2 {
        return Err(Error::domain("truncation n_max must be >= 2", n_max as f64));
    }
    Ok(())
}

/// Rates driving the exchange.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeParams {
    /// rad/s
    pub omega_ex: f64,
    /// Energy-decay rate of the logic mode, 1/s.
    pub gamma_logic: f64,
    /// Energy-decay rate of the spectroscopy mode, 1/s.
    pub gamma_spectroscopy: f64,
    pub n_bar: f64,
    /// Axial-frequency mismatch between the traps, rad/s.
    pub detuning: f64,
}

impl ExchangeParams {
    pub fn ideal(omega_ex: f64) -> Self {
        Self {
            omega_ex,
            gamma_logic: 0.0,
            gamma_spectroscopy: 0.0,
            n_bar: 0.0,
            detuning: 0.0,
        }
    }

    pub fn from_budget(budget: &ExchangeBudget) -> Self {
        Self {
            omega_ex: budget.omega_ex,
            gamma_logic: budget.gamma_logic,
            gamma_spectroscopy: budget.gamma_spectroscopy,
            n_bar: budget.n_bar,
            detuning: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("exchange rate must be >= 0", self.omega_ex),
            ("logic damping must be >= 0", self.gamma_logic),
            ("spectroscopy damping must be >= 0", self.gamma_spectroscopy),
            ("n_bar must be >= 0", self.n_bar),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(what, v));
            }
        }
        if !self.detuning.is_finite() {
            return Err(Error::domain("detuning must be finite", self.detuning));
        }
        Ok(())
    }

    /// Fastest rate in the generator; sets the integration step.
    pub fn max_rate(&self) -> f64 {
        let damp = (self.gamma_logic.max(self.gamma_spectroscopy)) * (self.n_bar + 1.0);
        self.omega_ex.max(self.detuning.abs()).max(damp)
    }

}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Propagator {
    /// Classical fourth-order Runge-Kutta with step
    /// `1 / (resolution * max_rate)`, rounded down to fit the interval.
    Rk4 { resolution: f64 },
    /// Matrix exponential of the Liouvillian.
    Exponential,
}

impl Default for Propagator {
    fn default() -> Self {
        Propagator::Rk4 { resolution: 100.0 }
    }
}

/// A sparse operator: `(row, col, value)` triplets.
type Sparse = Vec<(usize, usize, Complex64)>;

fn lowering(n_max: usize, logic: bool) -> Sparse {
    let side = n_max + 1;
    let mut out = Vec::new();
    for s in 0..side {
        for l in 0..side {
            let col = s * side + l;
            if logic && l > 0 {
                out.push((s * side + l - 1, col, Complex64::new((l as f64).sqrt(), 0.0)));
            } else if !logic && s > 0 {
                out.push(((s - 1) * side + l, col, Complex64::new((s as f64).sqrt(), 0.0)));
            }
        }
    }
    out
}

fn adjoint(op: &Sparse) -> Sparse {
    op.iter().map(|&(r, c, v)| (c, r, v.conj())).collect()
}

fn scaled(op: Sparse, k: f64) -> Sparse {
    op.into_iter().map(|(r, c, v)| (r, c, v * k)).collect()
}

fn dense(op: &Sparse, d: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(d, d, ZERO);
    for &(r, c, v) in op {
        m[(r, c)] += v;
    }
    m
}

/// Hamiltonian and collapse operators for one parameter set.
struct Generator {
    d: usize,
    hamiltonian: DMatrix<Complex64>,
    /// `H - (i/2) sum c^dag c`
    effective: DMatrix<Complex64>,
    jumps: Vec<Sparse>,
}

impl Generator {
    fn new(n_max: usize, p: &ExchangeParams) -> Self {
        let side = n_max + 1;
        let d = side * side;
        let a = lowering(n_max, false);
        let b = lowering(n_max, true);
        let a_dag = dense(&adjoint(&a), d);
        let b_dag = dense(&adjoint(&b), d);
        let a_m = dense(&a, d);
        let b_m = dense(&b, d);
        let ex = Complex64::new(p.omega_ex, 0.0);
        let mut h = (&a_dag * &b_m + &a_m * &b_dag) * ex;
        if p.detuning != 0.0 {
            h += &b_dag * &b_m * Complex64::new(p.detuning, 0.0);
        }

        let mut jumps = Vec::new();
        for (op, gamma) in [(&a, p.gamma_spectroscopy), (&b, p.gamma_logic)] {
            let down = gamma * (p.n_bar + 1.0);
            let up = gamma * p.n_bar;
            if down > 0.0 {
                jumps.push(scaled(op.clone(), down.sqrt()));
            }
            if up > 0.0 {
                jumps.push(scaled(adjoint(op), up.sqrt()));
            }
        }
        let mut effective = h.clone();
        for c in &jumps {
            let cm = dense(c, d);
            effective -= cm.adjoint() * &cm * Complex64::new(0.0, 0.5);
        }
        Self {
            d,
            hamiltonian: h,
            effective,
            jumps,
        }
    }

    fn rhs(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let left = &self.effective * rho;
        // rho H_eff^dag = (H_eff rho)^dag for Hermitian rho
        let mut out = (&left - left.adjoint()) * (-I);
        for c in &self.jumps {
            for &(i, k, v1) in c {
                for &(j, l, v2) in c {
                    out[(i, j)] += v1 * rho[(k, l)] * v2.conj();
                }
            }
        }
        out
    }

    /// Liouvillian restricted to basis pairs `(i, j)` listed in `pairs`, with
    /// `vec(rho)` ordered as `pairs`. Built from the Kronecker form
    /// `-i(H x 1 - 1 x H^T) + sum c x c* - 1/2 (c^dag c x 1 + 1 x (c^dag c)^T)`.
    fn liouvillian_block(&self, pairs: &[(usize, usize)]) -> DMatrix<Complex64> {
        let n = pairs.len();
        let h = &self.hamiltonian;
        let jumps: Vec<DMatrix<Complex64>> = self.jumps.iter().map(|c| dense(c, self.d)).collect();
        let mut decay = DMatrix::from_element(self.d, self.d, ZERO);
        for c in &jumps {
            decay += c.adjoint() * c;
        }
        let mut m = DMatrix::from_element(n, n, ZERO);
        for (row, &(i, j)) in pairs.iter().enumerate() {
            for (col, &(k, l)) in pairs.iter().enumerate() {
                let mut v = ZERO;
                if j == l {
                    v += -I * h[(i, k)] - 0.5 * decay[(i, k)];
                }
                if i == k {
                    v += I * h[(l, j)] - 0.5 * decay[(l, j)];
                }
                for c in &jumps {
                    v += c[(i, k)] * c[(j, l)].conj();
                }
                m[(row, col)] = v;
            }
        }
        m
    }
}

/// Evolves `state` for time `t` with the default RK4 propagator.
pub fn evolve(state: &TwoModeState, params: &ExchangeParams, t: f64) -> Result<TwoModeState> {
    evolve_with(state, params, t, Propagator::default())
}

pub fn evolve_with(
    state: &TwoModeState,
    params: &ExchangeParams,
    t: f64,
    propagator: Propagator,
) -> Result<TwoModeState> {
    params.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain("evolution time must be >= 0", t));
    }
    let rate = params.max_rate();
    if t == 0.0 || rate == 0.0 {
        return Ok(state.clone());
    }
    let generator = Generator::new(state.n_max, params);
    let rho = match propagator {
        Propagator::Rk4 { resolution } => {
            if !(resolution > 0.0) {
                return Err(Error::domain("integrator resolution must be positive", resolution));
            }
            let steps = (t * rate * resolution).ceil().max(1.0) as usize;
            let h = t / steps as f64;
            let half = Complex64::new(0.5 * h, 0.0);
            let full = Complex64::new(h, 0.0);
            let sixth = Complex64::new(h / 6.0, 0.0);
            let two = Complex64::new(2.0, 0.0);
            let mut rho = state.rho.clone();
            for _ in 0..steps {
                let k1 = generator.rhs(&rho);
                let k2 = generator.rhs(&(&rho + &k1 * half));
                let k3 = generator.rhs(&(&rho + &k2 * half));
                let k4 = generator.rhs(&(&rho + &k3 * full));
                rho += (k1 + k2 * two + k3 * two + k4) * sixth;
                check_truncation(state.n_max, &rho)?;
            }
            rho
        }
        Propagator::Exponential => exponential(&generator, state, t)?,
    };
    let out = TwoModeState {
        n_max: state.n_max,
        rho,
    };
    check_truncation(out.n_max, &out.rho)?;
    Ok(out)
}

fn check_truncation(n_max: usize, rho: &DMatrix<Complex64>) -> Result<()> {
    let side = n_max + 1;
    let mut top_s = 0.0;
    let mut top_l = 0.0;
    for x in 0..side {
        let ks = n_max * side + x;
        let kl = x * side + n_max;
        top_s += rho[(ks, ks)].re;
        top_l += rho[(kl, kl)].re;
    }
    let population = f64::max(top_s, top_l);
    if population > TRUNCATION_LIMIT {
        return Err(Error::Truncation {
            n_max,
            population,
            limit: TRUNCATION_LIMIT,
        });
    }
    Ok(())
}

fn exponential(generator: &Generator, state: &TwoModeState, t: f64) -> Result<DMatrix<Complex64>> {
    let side = state.n_max + 1;
    let d = generator.d;
    let quanta = |k: usize| (k / side + k % side) as i64;
    let mut orders: Vec<i64> = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if state.rho[(i, j)] != ZERO {
                let o = quanta(i) - quanta(j);
                if !orders.contains(&o) {
                    orders.push(o);
                }
            }
        }
    }
    let mut out = DMatrix::from_element(d, d, ZERO);
    for order in orders {
        let pairs: Vec<(usize, usize)> = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .filter(|&(i, j)| quanta(i) - quanta(j) == order)
            .collect();
        let block = generator.liouvillian_block(&pairs) * Complex64::new(t, 0.0);
        let prop = block.exp();
        let v = DVector::from_iterator(pairs.len(), pairs.iter().map(|&(i, j)| state.rho[(i, j)]));
        let w = prop * v;
        for (p, &(i, j)) in pairs.iter().enumerate() {
            out[(i, j)] = w[p];
        }
    }
    Ok(out)
}

/// Probability of finding one quantum in the logic mode after a nominal
/// full swap `t = pi / (2 omega_ex)`, starting from `|n_S, n_L> = |1, 0>`.
pub fn swap_fidelity(params: &ExchangeParams) -> Result<f64> {
    swap_fidelity_with(params, DEFAULT_N_MAX, Propagator::default())
}

pub fn swap_fidelity_with(
    params: &ExchangeParams,
    n_max: usize,
    propagator: Propagator,
) -> Result<f64> {
    params.validate()?;
    if !(params.omega_ex > 0.0) {
        return Err(Error::domain("exchange rate must be positive", params.omega_ex));
    }
    let start = TwoModeState::fock(n_max, 1, 0)?;
    let end = evolve_with(&start, params, FRAC_PI_2 / params.omega_ex, propagator)?;
    Ok(end.logic_distribution()[1])
}
