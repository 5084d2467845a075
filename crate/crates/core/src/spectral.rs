//! Closed-form measures, Cauchy transforms and Stieltjes inversion.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::algebra::C64;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_sqrt_ends, ABS_TOL};

/// Highest moment order computed by quadrature.
pub const MAX_MOMENT_ORDER: usize = 16;

/// Atoms closer than this to a support endpoint are folded into the density report.
pub const ENDPOINT_MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub x: f64,
    pub mass: f64,
}

pub type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct AbsolutelyContinuous {
    pub support: (f64, f64),
    pub density: Density,
}

/// An absolutely continuous part on an interval plus finitely many atoms.
#[derive(Clone)]
pub struct SpectralMeasure {
    pub label: String,
    pub params: BTreeMap<String, f64>,
    pub ac: Option<AbsolutelyContinuous>,
    pub atoms: Vec<Atom>,
    pub warnings: Vec<String>,
}

impl fmt::Debug for SpectralMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralMeasure")
            .field("label", &self.label)
            .field("params", &self.params)
            .field("support", &self.ac.as_ref().map(|a| a.support))
            .field("atoms", &self.atoms)
            .field("warnings", &self.warnings)
            .finish()
    }
}

impl SpectralMeasure {
    fn new(
        label: &str,
        params: &[(&str, f64)],
        ac: Option<AbsolutelyContinuous>,
        candidates: &[Atom],
    ) -> Self {
        let mut warnings = Vec::new();
        let mut atoms = Vec::new();
        for a in candidates {
            if a.mass <= 0.0 {
                continue;
            }
            if let Some(ac) = &ac {
                let (lo, hi) = ac.support;
                if (a.x - lo).abs() <= ENDPOINT_MERGE_TOL || (a.x - hi).abs() <= ENDPOINT_MERGE_TOL {
                    warnings.push(format!(
                        "atom at {} with mass {:e} sits on a support endpoint and is merged into the density",
                        a.x, a.mass
                    ));
                    continue;
                }
            }
            atoms.push(*a);
        }
        atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
        SpectralMeasure {
            label: label.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            ac,
            atoms,
            warnings,
        }
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        self.ac.as_ref().map(|a| a.support)
    }

    /// Density at `x`, zero off the support.
    pub fn density(&self, x: f64) -> f64 {
        match &self.ac {
            Some(ac) if x >= ac.support.0 && x <= ac.support.1 => (ac.density)(x),
            _ => 0.0,
        }
    }

    /// `∫ g dμ`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let mut total: f64 = self.atoms.iter().map(|a| a.mass * g(a.x)).sum();
        if let Some(ac) = &self.ac {
            let (lo, hi) = ac.support;
            let d = ac.density.clone();
            total += integrate_sqrt_ends(|x| g(x) * d(x), lo, hi, ABS_TOL)?;
        }
        Ok(total)
    }

    pub fn total_mass(&self) -> Result<f64> {
        self.integrate(|_| 1.0)
    }

    /// `m₀, …, m_k`.
    pub fn moments(&self, k: usize) -> Result<Vec<f64>> {
        if k > MAX_MOMENT_ORDER {
            return Err(Error::Size { what: "moment order", got: k, limit: MAX_MOMENT_ORDER });
        }
        (0..=k).map(|j| self.integrate(|x| x.powi(j as i32))).collect()
    }

    /// Checks unit mass within `1e-8` and density `≥ -1e-12` on a 2001-point grid.
    pub fn validate(&self) -> Result<()> {
        let mass = self.total_mass()?;
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::Numeric(format!("{}: total mass {mass}", self.label)));
        }
        if let Some((lo, hi)) = self.support() {
            for i in 0..=2000 {
                let x = lo + (hi - lo) * i as f64 / 2000.0;
                let d = self.density(x);
                if !(d >= -1e-12) {
                    return Err(Error::Numeric(format!("{}: density {d} at {x}", self.label)));
                }
            }
        }
        Ok(())
    }
}

fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::Domain(format!("{name} = {v} must lie in (0, 1)")));
    }
    Ok(())
}

fn check_t(t: f64, strict: bool) -> Result<()> {
    if !t.is_finite() || t < 0.0 || (strict && t == 0.0) {
        let need = if strict { "positive" } else { "nonnegative" };
        return Err(Error::Domain(format!("t = {t} must be finite and {need}")));
    }
    Ok(())
}

/// Support `[1-2α ∓ 2√(tα(1-α))]` of the free binomial law.
pub fn free_binomial_support(alpha: f64, t: f64) -> (f64, f64) {
    let r = 2.0 * (t * alpha * (1.0 - alpha)).sqrt();
    (1.0 - 2.0 * alpha - r, 1.0 - 2.0 * alpha + r)
}

/// Atom candidates of the free binomial law, masses clamped at zero.
pub fn free_binomial_atoms(alpha: f64, t: f64) -> [Atom; 2] {
    [
        Atom { x: -alpha * (1.0 + t), mass: (1.0 - alpha * (1.0 + t)).max(0.0) },
        Atom { x: (1.0 - alpha) * (1.0 + t), mass: (alpha * (1.0 + t) - t).max(0.0) },
    ]
}

/// Distribution of `X(p°, t)` under `Φ_t` for a projection of state `α`.
pub fn free_binomial_measure(alpha: f64, t: f64) -> Result<SpectralMeasure> {
    check_open_unit("alpha", alpha)?;
    check_t(t, false)?;
    let params = [("alpha", alpha), ("t", t)];
    if t == 0.0 {
        let atoms = [Atom { x: -alpha, mass: 1.0 - alpha }, Atom { x: 1.0 - alpha, mass: alpha }];
        return Ok(SpectralMeasure::new("free-binomial", &params, None, &atoms));
    }
    let c = t * alpha * (1.0 - alpha);
    let g = 1.0 - 2.0 * alpha;
    let density: Density = Arc::new(move |x: f64| {
        let s = (4.0 * c - (g - x) * (g - x)).max(0.0).sqrt();
        if s == 0.0 {
            return 0.0;
        }
        (t + 1.0) * s / (2.0 * PI * (alpha * (1.0 + t) + x) * ((1.0 - alpha) * (1.0 + t) - x))
    });
    let ac = AbsolutelyContinuous { support: free_binomial_support(alpha, t), density };
    Ok(SpectralMeasure::new("free-binomial", &params, Some(ac), &free_binomial_atoms(alpha, t)))
}

/// Distribution of `Y(p°, t)` under `Ψ_t`.
pub fn psi_measure(alpha: f64, t: f64) -> Result<SpectralMeasure> {
    check_open_unit("alpha", alpha)?;
    check_t(t, true)?;
    let params = [("alpha", alpha), ("t", t)];
    let c = t * alpha * (1.0 - alpha);
    let g = 1.0 - 2.0 * alpha;
    if g == 0.0 {
        let r = t.sqrt();
        let density: Density = Arc::new(move |x: f64| 2.0 / (PI * t) * (t - x * x).max(0.0).sqrt());
        let ac = AbsolutelyContinuous { support: (-r, r), density };
        return Ok(SpectralMeasure::new("psi", &params, Some(ac), &[]));
    }
    let density: Density = Arc::new(move |x: f64| {
        let s = (4.0 * c - (x - g) * (x - g)).max(0.0).sqrt();
        if s == 0.0 {
            return 0.0;
        }
        s / (2.0 * PI * (c + g * x))
    });
    let r = 2.0 * c.sqrt();
    let ac = AbsolutelyContinuous { support: (g - r, g + r), density };
    let atom = Atom { x: -c / g, mass: (1.0 - c / (g * g)).max(0.0) };
    Ok(SpectralMeasure::new("psi", &params, Some(ac), &[atom]))
}

/// The two laws of the Ricard field `Z(f, θ)` for a unit vector `f`: the vacuum law and
/// the law under the second state.
pub fn ricard_measures(theta: f64) -> Result<(SpectralMeasure, SpectralMeasure)> {
    check_open_unit("theta", theta)?;
    let params = [("theta", theta)];
    let r = 2.0 * theta.sqrt();
    let d1: Density = Arc::new(move |x: f64| {
        (4.0 * theta - x * x).max(0.0).sqrt() / (2.0 * PI * (1.0 - (1.0 - theta) * x * x))
    });
    let mass = ((1.0 - 2.0 * theta) / (2.0 * (1.0 - theta))).max(0.0);
    let x0 = 1.0 / (1.0 - theta).sqrt();
    let first = SpectralMeasure::new(
        "ricard-vacuum",
        &params,
        Some(AbsolutelyContinuous { support: (-r, r), density: d1 }),
        &[Atom { x: -x0, mass }, Atom { x: x0, mass }],
    );
    let d2: Density = Arc::new(move |x: f64| (4.0 * theta - x * x).max(0.0).sqrt() / (2.0 * PI * theta));
    let second = SpectralMeasure::new(
        "ricard-second",
        &params,
        Some(AbsolutelyContinuous { support: (-r, r), density: d2 }),
        &[],
    );
    Ok((first, second))
}

/// A function on the upper half plane.
#[derive(Clone)]
pub struct CauchyTransform {
    pub label: String,
    g: Arc<dyn Fn(C64) -> C64 + Send + Sync>,
}

impl fmt::Debug for CauchyTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CauchyTransform({})", self.label)
    }
}

// √(z-a)·√(z-b) with principal roots: analytic off [a, b] and ~ z at infinity, which
// puts G on the Herglotz branch throughout the upper half plane.
fn sqrt_pair(z: C64, a: f64, b: f64) -> C64 {
    (z - a).sqrt() * (z - b).sqrt()
}

impl CauchyTransform {
    pub fn from_fn(label: &str, g: impl Fn(C64) -> C64 + Send + Sync + 'static) -> Self {
        CauchyTransform { label: label.to_string(), g: Arc::new(g) }
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        if !(z.im > 0.0) {
            return Err(Error::Domain(format!("Cauchy transform needs Im z > 0, got {z}")));
        }
        Ok((self.g)(z))
    }

    /// `G_{1+t}` of the free binomial law.
    pub fn free_binomial(alpha: f64, t: f64) -> Result<Self> {
        check_open_unit("alpha", alpha)?;
        check_t(t, false)?;
        let (a, b) = free_binomial_support(alpha, t);
        let s = 1.0 + t;
        Ok(Self::from_fn("free-binomial", move |z| {
            let num = (1.0 - 2.0 * alpha) * s - (1.0 - t) * z - s * sqrt_pair(z, a, b);
            num / (2.0 * (alpha * s + z) * ((1.0 - alpha) * s - z))
        }))
    }

    /// Cauchy transform of [`psi_measure`].
    pub fn psi(alpha: f64, t: f64) -> Result<Self> {
        check_open_unit("alpha", alpha)?;
        check_t(t, true)?;
        let c = t * alpha * (1.0 - alpha);
        let g = 1.0 - 2.0 * alpha;
        let r = 2.0 * c.sqrt();
        Ok(Self::from_fn("psi", move |z| ((z + g) - sqrt_pair(z, g - r, g + r)) / (2.0 * (c + g * z))))
    }

    /// Centered semicircle of the given variance.
    pub fn semicircle(variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::Domain(format!("variance {variance} must be positive")));
        }
        let r = 2.0 * variance.sqrt();
        Ok(Self::from_fn("semicircle", move |z| (z - sqrt_pair(z, -r, r)) / (2.0 * variance)))
    }

    pub fn point_mass(x0: f64) -> Self {
        Self::from_fn("point-mass", move |z| 1.0 / (z - x0))
    }

    /// `∫ dμ(x)/(z - x)`, by quadrature.
    pub fn of_measure(m: &SpectralMeasure) -> Self {
        let m = m.clone();
        Self::from_fn("measure", move |z| {
            let re = m.integrate(|x| ((1.0 / (z - x)) as C64).re).unwrap_or(f64::NAN);
            let im = m.integrate(|x| ((1.0 / (z - x)) as C64).im).unwrap_or(f64::NAN);
            C64::new(re, im)
        })
    }
}

/// Default Stieltjes-inversion schedule.
pub const DEFAULT_EPS_SCHEDULE: [f64; 4] = [1e-2, 5e-3, 2.5e-3, 1.25e-3];

/// Extrapolation error above which a sample is reported as not converged.
pub const CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySample {
    pub x: f64,
    pub density: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    pub samples: Vec<DensitySample>,
    pub atoms: Vec<Atom>,
}

// Richardson extrapolation to ε = 0 of values at ε₀, ε₀/2, …, assuming a full power
// series in ε. Returns the extrapolated value and the last correction.
fn richardson(values: &[f64]) -> (f64, f64) {
    let mut row = values.to_vec();
    let mut last_change = f64::INFINITY;
    for j in 1..row.len() {
        let factor = (1u64 << j) as f64;
        let mut next = Vec::with_capacity(row.len() - 1);
        for k in 1..row.len() {
            next.push((factor * row[k] - row[k - 1]) / (factor - 1.0));
        }
        last_change = (next[next.len() - 1] - row[row.len() - 1]).abs();
        row = next;
    }
    if values.len() == 1 {
        last_change = f64::INFINITY;
    }
    (row[row.len() - 1], last_change)
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.len() < 2 {
        return Err(Error::Argument("ε-schedule needs at least two levels".into()));
    }
    for w in schedule.windows(2) {
        if !((w[1] - 0.5 * w[0]).abs() <= 1e-12 * w[0]) {
            return Err(Error::Argument("ε-schedule must halve at each level".into()));
        }
    }
    if !(schedule[0] > 0.0) {
        return Err(Error::Argument("ε-schedule must be positive".into()));
    }
    Ok(())
}

/// `-(1/π) Im G(x + iε)` extrapolated to `ε → 0` at each grid point, plus atoms in the
/// grid's range.
pub fn stieltjes_invert(g: &CauchyTransform, grid: &[f64], schedule: &[f64]) -> Result<Inversion> {
    check_schedule(schedule)?;
    let mut samples = Vec::with_capacity(grid.len());
    for &x in grid {
        let values = schedule
            .iter()
            .map(|&e| g.eval(C64::new(x, e)).map(|v| -v.im / PI))
            .collect::<Result<Vec<_>>>()?;
        let (density, err) = richardson(&values);
        samples.push(DensitySample {
            x,
            density,
            error_estimate: err,
            converged: err.is_finite() && err <= CONVERGENCE_TOL * density.abs().max(1.0),
        });
    }
    let atoms = match (grid.iter().cloned().reduce(f64::min), grid.iter().cloned().reduce(f64::max)) {
        (Some(lo), Some(hi)) if hi > lo => locate_atoms(g, lo, hi)?,
        _ => Vec::new(),
    };
    Ok(Inversion { samples, atoms })
}

const SCAN_POINTS: usize = 20001;
const MASS_EPS: [f64; 3] = [1e-6, 5e-7, 2.5e-7];
const MIN_MASS: f64 = 1e-8;
const PLATEAU_TOL: f64 = 1e-3;

fn golden_max(h: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (h(c), h(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = h(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = h(d);
        }
    }
    0.5 * (a + b)
}

/// Atoms of the measure behind `g` in `[lo, hi]`, located as plateaus of `ε|G(x + iε)|`.
pub fn locate_atoms(g: &CauchyTransform, lo: f64, hi: f64) -> Result<Vec<Atom>> {
    if !(hi > lo) {
        return Err(Error::Argument(format!("empty atom window [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let eps = 2.0 * step;
    let h = |x: f64, e: f64| -> f64 { g.eval(C64::new(x, e)).map(|v| e * v.norm()).unwrap_or(0.0) };
    let scan: Vec<f64> = (0..SCAN_POINTS).map(|i| h(lo + step * i as f64, eps)).collect();
    let mut atoms: Vec<Atom> = Vec::new();
    for i in 0..SCAN_POINTS {
        let left = if i > 0 { scan[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < SCAN_POINTS { scan[i + 1] } else { f64::NEG_INFINITY };
        if !(scan[i] >= left && scan[i] > right && scan[i] > MIN_MASS) {
            continue;
        }
        let mut x = lo + step * i as f64;
        let mut e = eps;
        let mut width = 2.0 * step;
        while e > 1e-10 {
            x = golden_max(|y| h(y, e), x - width, x + width, 80);
            e /= 10.0;
            width = 3.0 * e;
        }
        let masses = MASS_EPS
            .iter()
            .map(|&e| g.eval(C64::new(x, e)).map(|v| -e * v.im))
            .collect::<Result<Vec<_>>>()?;
        let (mass, _) = richardson(&masses);
        let spread = masses.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - masses.iter().cloned().fold(f64::INFINITY, f64::min);
        let plateau = mass > MIN_MASS && spread <= PLATEAU_TOL * mass;
        let inside = x >= lo - step && x <= hi + step;
        if plateau && inside && !atoms.iter().any(|a| (a.x - x).abs() < 1e-6) {
            atoms.push(Atom { x, mass });
        }
    }
    Ok(atoms)
}

fn check_gamma_t(t: f64, strict: bool) -> Result<()> {
    check_t(t, strict)
}

/// `(γ₁, γ₂)` for free products of projections with states `α_i ∈ (0, ½]`.
pub fn gamma_free_product(alphas: &[f64], t: f64) -> Result<(f64, f64)> {
    if alphas.is_empty() {
        return Err(Error::Argument("need at least one projection".into()));
    }
    check_gamma_t(t, false)?;
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 0.5)) {
        return Err(Error::Domain(format!("projection state {a} outside (0, 1/2]")));
    }
    let mut sorted = alphas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    let (last, rest) = sorted.split_last().unwrap();
    let below: f64 = rest.iter().sum();
    let g1 = (1.0 - total * (1.0 + t)).max(0.0);
    let g2 = ((last - below) * (1.0 + t) - t).max(0.0);
    Ok((g1, g2))
}

/// `γ = max{1 - t Σ α_i(1-α_i)/(1-2α_i)², 0}`, zero when some `α_i = ½`.
pub fn gamma_boolean(alphas: &[f64], t: f64) -> Result<f64> {
    if alphas.is_empty() {
        return Err(Error::Argument("need at least one projection".into()));
    }
    check_gamma_t(t, true)?;
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::Domain(format!("projection state {a} outside (0, 1)")));
    }
    if alphas.contains(&0.5) {
        return Ok(0.0);
    }
    let s: f64 = alphas.iter().map(|a| a * (1.0 - a) / ((1.0 - 2.0 * a) * (1.0 - 2.0 * a))).sum();
    Ok((1.0 - t * s).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn masses() {
        for (a, t) in [(0.3, 1.0), (0.3, 0.2), (0.5, 1.0), (0.5, 0.5), (0.2, 3.0), (0.7, 0.4)] {
            free_binomial_measure(a, t).unwrap().validate().unwrap();
        }
        for (a, t) in [(0.3, 0.5), (0.5, 1.0), (0.3, 3.0), (0.8, 0.2)] {
            psi_measure(a, t).unwrap().validate().unwrap();
        }
        for th in [0.25, 0.5, 0.75] {
            let (r1, r2) = ricard_measures(th).unwrap();
            r1.validate().unwrap();
            r2.validate().unwrap();
        }
    }

    #[test]
    fn half_alpha_shapes() {
        let m = free_binomial_measure(0.5, 0.5).unwrap();
        let t: f64 = 0.5;
        for x in [-0.6, -0.1, 0.0, 0.3, 0.65] {
            let want = (t + 1.0) * (t - x * x).sqrt() / (2.0 * PI * (((1.0 + t) / 2.0).powi(2) - x * x));
            assert!(close(m.density(x), want, 1e-14));
        }
        assert_eq!(m.atoms, vec![Atom { x: -0.75, mass: 0.25 }, Atom { x: 0.75, mass: 0.25 }]);
        assert!(free_binomial_measure(0.5, 1.0).unwrap().atoms.is_empty());
        let z = free_binomial_measure(0.3, 0.0).unwrap();
        assert!(z.ac.is_none());
        assert_eq!(z.atoms, vec![Atom { x: -0.3, mass: 0.7 }, Atom { x: 0.7, mass: 0.3 }]);
    }

    #[test]
    fn atom_on_endpoint_is_merged() {
        // 1 - α(1+t) = 0 at α = 0.25, t = 3, with the atom at the support end -1.
        let m = free_binomial_measure(0.25, 3.0).unwrap();
        assert!(m.atoms.iter().all(|a| a.x != -1.0));
        m.validate().unwrap();
        let m = free_binomial_measure(0.3, 1.0 / 0.3 - 1.0 + 1e-13).unwrap();
        assert!(!m.warnings.is_empty() || m.atoms.len() < 2);
    }

    #[test]
    fn second_moments() {
        for (a, t) in [(0.3, 0.2), (0.3, 1.0), (0.5, 3.0)] {
            let m = free_binomial_measure(a, t).unwrap().moments(2).unwrap();
            assert!(close(m[0], 1.0, 1e-9));
            assert!(close(m[1], 0.0, 1e-9));
            assert!(close(m[2], (1.0 + t) * a * (1.0 - a), 1e-9));
        }
        // α = ½: semicircle of radius √t, m₂ = t/4.
        let m = psi_measure(0.5, 2.0).unwrap().moments(4).unwrap();
        assert!(close(m[2], 0.5, 1e-10));
        assert!(close(m[4], 2.0 * 0.25, 1e-10));
        assert!(psi_measure(0.5, 1.0).unwrap().moments(17).is_err());
    }

    #[test]
    fn cauchy_asymptotics_and_t_zero() {
        let z = C64::new(0.0, 1e3);
        for g in [
            CauchyTransform::free_binomial(0.3, 1.0).unwrap(),
            CauchyTransform::psi(0.3, 0.5).unwrap(),
            CauchyTransform::semicircle(1.0).unwrap(),
        ] {
            assert!((g.eval(z).unwrap() - 1.0 / z).norm() < 1e-6);
            for w in [C64::new(0.1, 1e-3), C64::new(-3.0, 0.5), C64::new(2.0, 1e-8)] {
                assert!(g.eval(w).unwrap().im < 0.0);
            }
        }
        let a = 0.3;
        let g = CauchyTransform::free_binomial(a, 0.0).unwrap();
        for w in [C64::new(0.2, 0.1), C64::new(-1.0, 2.0)] {
            let want = (1.0 - a) / (w + a) + a / (w - (1.0 - a));
            assert!((g.eval(w).unwrap() - want).norm() < 1e-12);
        }
        assert!(g.eval(C64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn inversion_of_semicircle_and_point_mass() {
        let g = CauchyTransform::semicircle(1.0).unwrap();
        let grid: Vec<f64> = (0..100).map(|i| -1.6 + 3.2 * i as f64 / 99.0).collect();
        let inv = stieltjes_invert(&g, &grid, &DEFAULT_EPS_SCHEDULE).unwrap();
        for s in &inv.samples {
            let want = (4.0 - s.x * s.x).sqrt() / (2.0 * PI);
            assert!(close(s.density, want, 1e-6), "{s:?}");
            assert!(s.converged);
        }
        assert!(inv.atoms.is_empty());
        let atoms = locate_atoms(&CauchyTransform::point_mass(0.0), -1.0, 1.0).unwrap();
        assert_eq!(atoms.len(), 1);
        assert!(close(atoms[0].x, 0.0, 1e-9) && close(atoms[0].mass, 1.0, 1e-6));
    }

    #[test]
    fn free_binomial_atom_recovery() {
        let g = CauchyTransform::free_binomial(0.3, 0.2).unwrap();
        let atoms = locate_atoms(&g, -2.0, 2.0).unwrap();
        assert_eq!(atoms.len(), 2, "{atoms:?}");
        assert!(close(atoms[0].x, -0.36, 1e-6));
        assert!(close(atoms[0].mass, 0.64, 1e-6));
        assert!(close(atoms[1].x, 0.84, 1e-6));
        assert!(close(atoms[1].mass, 0.16, 1e-6));
    }

    #[test]
    fn gammas() {
        let (g1, g2) = gamma_free_product(&[0.2, 0.2], 1.0).unwrap();
        assert!(close(g1, 0.2, 1e-15) && g2 == 0.0);
        let (g1, g2) = gamma_free_product(&[0.3], 0.2).unwrap();
        let atoms = free_binomial_atoms(0.3, 0.2);
        assert_eq!((g1, g2), (atoms[0].mass, atoms[1].mass));
        assert_eq!(gamma_free_product(&[0.3, 0.4], 50.0).unwrap(), (0.0, 0.0));
        assert!(matches!(gamma_free_product(&[0.6], 1.0), Err(Error::Domain(_))));
        assert_eq!(gamma_boolean(&[0.5, 0.3], 1.0).unwrap(), 0.0);
        assert!(close(gamma_boolean(&[0.3], 0.1).unwrap(), 0.86875, 1e-15));
        assert_eq!(gamma_boolean(&[0.3], 100.0).unwrap(), 0.0);
    }
}
