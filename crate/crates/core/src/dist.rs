//! Univariate delay laws.
//!
//! Link delays are finite mixtures of truncated Gaussians, each term of the form
//! `w * exp(-k (x - c)^2)` restricted to a window `[lo, hi]`. Everything that can be
//! done in closed form (masses, moments, tail moments) is done through the Gaussian
//! error integral. Sums of independent delays leave the closed-form world and are
//! represented on a regular grid (see [`convolve`]).

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("no components given")]
    Empty,
    #[error("every component has a zero-width support window")]
    AllDegenerate,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid component: {0}")]
    InvalidComponent(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("probability {0} outside the admissible range")]
    InvalidProbability(f64),
    #[error("grid needs {points} points, cap is {cap}")]
    GridOverflow { points: usize, cap: usize },
}

fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// `Phi(b) - Phi(a)` without cancellation in either tail.
fn norm_mass(a: f64, b: f64) -> f64 {
    if b <= a {
        0.0
    } else if a >= 0.0 {
        norm_sf(a) - norm_sf(b)
    } else if b <= 0.0 {
        norm_cdf(b) - norm_cdf(a)
    } else {
        1.0 - norm_cdf(a) - norm_sf(b)
    }
}

/// One additive term `weight * exp(-stiffness (x - center)^2)` on `[support_lo, support_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussComponent {
    pub weight: f64,
    pub center: f64,
    pub stiffness: f64,
    pub support_lo: f64,
    pub support_hi: f64,
}

impl GaussComponent {
    pub fn new(
        weight: f64,
        center: f64,
        stiffness: f64,
        support_lo: f64,
        support_hi: f64,
    ) -> Result<Self, DistError> {
        let c = GaussComponent {
            weight,
            center,
            stiffness,
            support_lo,
            support_hi,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), DistError> {
        for (v, name) in [
            (self.weight, "weight"),
            (self.center, "center"),
            (self.stiffness, "stiffness"),
            (self.support_lo, "support_lo"),
            (self.support_hi, "support_hi"),
        ] {
            if !v.is_finite() {
                return Err(DistError::NonFinite(name));
            }
        }
        if self.weight <= 0.0 {
            return Err(DistError::InvalidComponent(format!(
                "weight must be positive, got {}",
                self.weight
            )));
        }
        if self.stiffness <= 0.0 {
            return Err(DistError::InvalidComponent(format!(
                "stiffness must be positive, got {}",
                self.stiffness
            )));
        }
        if self.support_lo > self.support_hi {
            return Err(DistError::InvalidComponent(format!(
                "window [{}, {}] is reversed",
                self.support_lo, self.support_hi
            )));
        }
        Ok(())
    }

    /// Standard deviation of the untruncated Gaussian, `1 / sqrt(2k)`.
    pub fn sigma(&self) -> f64 {
        (2.0 * self.stiffness).sqrt().recip()
    }

    pub fn is_degenerate(&self) -> bool {
        self.support_hi <= self.support_lo
    }

    fn z(&self, x: f64) -> f64 {
        (x - self.center) / self.sigma()
    }

    /// Integral of the unwindowed term over the real line.
    fn scale(&self) -> f64 {
        self.weight * (PI / self.stiffness).sqrt()
    }

    /// Unnormalized moments of order 0, 1, 2 over `[x1, x2]` clipped to the window.
    fn moments_between(&self, x1: f64, x2: f64) -> [f64; 3] {
        let lo = x1.max(self.support_lo);
        let hi = x2.min(self.support_hi);
        if hi <= lo {
            return [0.0; 3];
        }
        let (za, zb) = (self.z(lo), self.z(hi));
        let (pa, pb) = (norm_pdf(za), norm_pdf(zb));
        let m0 = norm_mass(za, zb);
        let m1 = pa - pb;
        let m2 = m0 + za * pa - zb * pb;
        let (c, s, k) = (self.center, self.sigma(), self.scale());
        [
            k * m0,
            k * (c * m0 + s * m1),
            k * (c * c * m0 + 2.0 * c * s * m1 + s * s * m2),
        ]
    }

    /// Unnormalized mass over the window.
    pub fn mass(&self) -> f64 {
        self.moments_between(self.support_lo, self.support_hi)[0]
    }

    fn density(&self, x: f64) -> f64 {
        if x < self.support_lo || x > self.support_hi {
            0.0
        } else {
            let d = x - self.center;
            self.weight * (-self.stiffness * d * d).exp()
        }
    }
}

/// Normalized mixture of windowed Gaussian terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    components: Vec<GaussComponent>,
    norm: f64,
    hull: (f64, f64),
}

impl Mixture {
    pub fn components(&self) -> &[GaussComponent] {
        &self.components
    }

    /// Normalization constant `Z`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Probability carried by each component.
    pub fn component_masses(&self) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.mass() / self.norm)
            .collect()
    }

    fn moments_between(&self, x1: f64, x2: f64) -> [f64; 3] {
        let mut acc = [0.0; 3];
        for c in &self.components {
            let m = c.moments_between(x1, x2);
            for (a, v) in acc.iter_mut().zip(m) {
                *a += v;
            }
        }
        acc.map(|v| v / self.norm)
    }

    fn shifted(&self, by: f64) -> Mixture {
        let components = self
            .components
            .iter()
            .map(|c| GaussComponent {
                center: c.center + by,
                support_lo: c.support_lo + by,
                support_hi: c.support_hi + by,
                ..*c
            })
            .collect();
        Mixture {
            components,
            norm: self.norm,
            hull: (self.hull.0 + by, self.hull.1 + by),
        }
    }
}

/// Piecewise-constant density on cells of width `step` centred at `x0 + i * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gridded {
    x0: f64,
    step: f64,
    density: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Gridded {
    /// Builds a gridded density; the values are rescaled so that `step * sum = 1`.
    pub fn new(x0: f64, step: f64, density: Vec<f64>) -> Result<Self, DistError> {
        if !x0.is_finite() || !step.is_finite() {
            return Err(DistError::NonFinite("grid origin/step"));
        }
        if step <= 0.0 {
            return Err(DistError::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        if density.is_empty() {
            return Err(DistError::InvalidGrid("empty density".into()));
        }
        if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(DistError::InvalidGrid(
                "density values must be finite and non-negative".into(),
            ));
        }
        let total: f64 = density.iter().sum::<f64>() * step;
        if total <= 0.0 {
            return Err(DistError::InvalidGrid("density has zero mass".into()));
        }
        let density: Vec<f64> = density.into_iter().map(|d| d / total).collect();
        let mut cumulative = Vec::with_capacity(density.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for d in &density {
            acc += d * step;
            cumulative.push(acc);
        }
        Ok(Gridded {
            x0,
            step,
            density,
            cumulative,
        })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    fn left_edge(&self) -> f64 {
        self.x0 - 0.5 * self.step
    }

    fn cdf(&self, x: f64) -> f64 {
        let t = (x - self.left_edge()) / self.step;
        if t <= 0.0 {
            return 0.0;
        }
        let n = self.density.len();
        if t >= n as f64 {
            return 1.0;
        }
        let k = t.floor() as usize;
        let frac = t - k as f64;
        (self.cumulative[k] + frac * self.density[k] * self.step).min(1.0)
    }

    fn quantile(&self, q: f64) -> f64 {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let q = q * total;
        // first cell whose right cumulative reaches q
        let k = self.cumulative[1..].partition_point(|&c| c < q);
        let k = k.min(self.density.len() - 1);
        let before = self.cumulative[k];
        let d = self.density[k];
        let left = self.left_edge() + k as f64 * self.step;
        if d <= 0.0 {
            return left;
        }
        (left + (q - before) / d).min(left + self.step)
    }

    fn moments(&self) -> (f64, f64) {
        let h = self.step;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (i, d) in self.density.iter().enumerate() {
            let x = self.x0 + i as f64 * h;
            m1 += x * d * h;
            m2 += (x * x + h * h / 12.0) * d * h;
        }
        (m1, m2)
    }

    fn tail_first_moment(&self, v: f64) -> f64 {
        let h = self.step;
        let mut acc = 0.0;
        for (i, d) in self.density.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            let a = self.left_edge() + i as f64 * h;
            let b = a + h;
            if b <= v {
                continue;
            }
            let a = a.max(v);
            acc += d * (b * b - a * a) / 2.0;
        }
        acc
    }
}

/// A univariate delay law.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Mixture(Mixture),
    PointMass(f64),
    Gridded(Gridded),
}

/// Builds the normalized mixture `sum_j w_j exp(-k_j (x - c_j)^2) 1{lo_j <= x <= hi_j} / Z`.
///
/// Zero-width components carry no mass and are dropped.
pub fn normalize(components: &[GaussComponent]) -> Result<Distribution, DistError> {
    if components.is_empty() {
        return Err(DistError::Empty);
    }
    for c in components {
        c.validate()?;
    }
    let kept: Vec<GaussComponent> = components
        .iter()
        .filter(|c| !c.is_degenerate())
        .copied()
        .collect();
    if kept.is_empty() {
        return Err(DistError::AllDegenerate);
    }
    let norm: f64 = kept.iter().map(GaussComponent::mass).sum();
    if norm.is_nan() || norm <= 0.0 || norm.is_infinite() {
        return Err(DistError::AllDegenerate);
    }
    let kept: Vec<GaussComponent> = kept.into_iter().filter(|c| c.mass() > 0.0).collect();
    let lo = kept
        .iter()
        .map(|c| c.support_lo)
        .fold(f64::INFINITY, f64::min);
    let hi = kept
        .iter()
        .map(|c| c.support_hi)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Distribution::Mixture(Mixture {
        components: kept,
        norm,
        hull: (lo, hi),
    }))
}

impl Distribution {
    pub fn point(value: f64) -> Distribution {
        Distribution::PointMass(value)
    }

    /// Smallest closed interval carrying all the mass.
    pub fn support_hull(&self) -> (f64, f64) {
        match self {
            Distribution::Mixture(m) => m.hull,
            Distribution::PointMass(v) => (*v, *v),
            Distribution::Gridded(g) => {
                let first = g.density.iter().position(|d| *d > 0.0).unwrap_or(0);
                let last = g
                    .density
                    .iter()
                    .rposition(|d| *d > 0.0)
                    .unwrap_or(g.density.len() - 1);
                (
                    g.left_edge() + first as f64 * g.step,
                    g.left_edge() + (last + 1) as f64 * g.step,
                )
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Distribution::Mixture(m) => m.moments_between(m.hull.0, m.hull.1)[1],
            Distribution::PointMass(v) => *v,
            Distribution::Gridded(g) => g.moments().0,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            Distribution::Mixture(m) => m.moments_between(m.hull.0, m.hull.1)[2],
            Distribution::PointMass(v) => v * v,
            Distribution::Gridded(g) => g.moments().1,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Distribution::PointMass(_) => 0.0,
            Distribution::Mixture(m) => {
                // central moments about the mean avoid cancellation for far-from-zero laws
                let mean = self.mean();
                let s = m.shifted(-mean);
                s.moments_between(s.hull.0, s.hull.1)[2].max(0.0)
            }
            Distribution::Gridded(g) => {
                let mean = g.moments().0;
                let h = g.step;
                g.density
                    .iter()
                    .enumerate()
                    .map(|(i, d)| {
                        let dx = g.x0 + i as f64 * h - mean;
                        (dx * dx + h * h / 12.0) * d * h
                    })
                    .sum::<f64>()
                    .max(0.0)
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Mixture(m) => {
                m.components.iter().map(|c| c.density(x)).sum::<f64>() / m.norm
            }
            Distribution::PointMass(_) => 0.0,
            Distribution::Gridded(g) => {
                let t = (x - g.left_edge()) / g.step;
                if t < 0.0 || t >= g.density.len() as f64 {
                    0.0
                } else {
                    g.density[t.floor() as usize]
                }
            }
        }
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Mixture(m) => {
                if x < m.hull.0 {
                    0.0
                } else if x >= m.hull.1 {
                    1.0
                } else {
                    m.moments_between(m.hull.0, x)[0].clamp(0.0, 1.0)
                }
            }
            Distribution::PointMass(v) => {
                if x >= *v {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Gridded(g) => g.cdf(x),
        }
    }

    /// `inf { x : cdf(x) >= q }` for `0 < q < 1`. On a flat stretch of the CDF this is
    /// the left end of the plateau.
    pub fn quantile(&self, q: f64) -> Result<f64, DistError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(DistError::InvalidProbability(q));
        }
        Ok(match self {
            Distribution::PointMass(v) => *v,
            Distribution::Gridded(g) => g.quantile(q),
            Distribution::Mixture(m) => {
                let (mut lo, mut hi) = m.hull;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.cdf(mid) >= q {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
        })
    }

    /// `integral_{v}^{inf} x f(x) dx`.
    fn tail_first_moment(&self, v: f64) -> f64 {
        match self {
            Distribution::Mixture(m) => m.moments_between(v, m.hull.1)[1],
            Distribution::PointMass(p) => {
                if *p >= v {
                    *p
                } else {
                    0.0
                }
            }
            Distribution::Gridded(g) => g.tail_first_moment(v),
        }
    }

    /// Upper-tail conditional expectation `E[X | X >= v_alpha]` with `P(X >= v_alpha) = alpha`.
    pub fn cvar_upper(&self, alpha: f64) -> Result<f64, DistError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(DistError::InvalidProbability(alpha));
        }
        if let Distribution::PointMass(v) = self {
            return Ok(*v);
        }
        if alpha == 1.0 {
            return Ok(self.mean());
        }
        let v = self.quantile(1.0 - alpha)?;
        Ok(self.tail_first_moment(v) / alpha)
    }

    /// Value-at-risk: the threshold `v` with `P(X >= v) = alpha`.
    pub fn value_at_risk(&self, alpha: f64) -> Result<f64, DistError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(DistError::InvalidProbability(alpha));
        }
        if alpha == 1.0 {
            return Ok(self.support_hull().0);
        }
        self.quantile(1.0 - alpha)
    }

    /// `X + by`.
    pub fn shifted(&self, by: f64) -> Distribution {
        match self {
            Distribution::Mixture(m) => Distribution::Mixture(m.shifted(by)),
            Distribution::PointMass(v) => Distribution::PointMass(v + by),
            Distribution::Gridded(g) => Distribution::Gridded(Gridded {
                x0: g.x0 + by,
                ..g.clone()
            }),
        }
    }

    /// Prepares a fast inverse-CDF sampler.
    pub fn sampler(&self) -> Sampler {
        match self {
            Distribution::PointMass(v) => Sampler::Point(*v),
            Distribution::Gridded(g) => Sampler::Grid(g.clone()),
            Distribution::Mixture(m) => {
                let masses = m.component_masses();
                let mut cum = Vec::with_capacity(masses.len());
                let mut acc = 0.0;
                for w in &masses {
                    acc += w;
                    cum.push(acc);
                }
                let parts = m.components.iter().map(TruncatedGauss::new).collect();
                Sampler::Mixture { cum, parts }
            }
        }
    }

    /// One draw. For bulk sampling build a [`Sampler`] once instead.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }

    fn is_gridded(&self) -> Option<f64> {
        match self {
            Distribution::Gridded(g) => Some(g.step),
            _ => None,
        }
    }
}

/// Inverse-CDF sampler for one truncated Gaussian term.
#[derive(Debug, Clone)]
pub struct TruncatedGauss {
    center: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
    upper_tail: bool,
    pa: f64,
    pb: f64,
}

impl TruncatedGauss {
    fn new(c: &GaussComponent) -> Self {
        let sigma = c.sigma();
        let za = (c.support_lo - c.center) / sigma;
        let zb = (c.support_hi - c.center) / sigma;
        // work with survival probabilities when the window sits in the right tail
        let upper_tail = za >= 0.0;
        let (pa, pb) = if upper_tail {
            (norm_sf(za), norm_sf(zb))
        } else {
            (norm_cdf(za), norm_cdf(zb))
        };
        TruncatedGauss {
            center: c.center,
            sigma,
            lo: c.support_lo,
            hi: c.support_hi,
            upper_tail,
            pa,
            pb,
        }
    }

    #[inline]
    fn invert(&self, u: f64) -> f64 {
        let p = self.pa + u * (self.pb - self.pa);
        let z = if self.upper_tail {
            SQRT_2 * erfc_inv(2.0 * p)
        } else {
            -SQRT_2 * erfc_inv(2.0 * p)
        };
        (self.center + self.sigma * z).clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone)]
pub enum Sampler {
    Point(f64),
    Mixture {
        cum: Vec<f64>,
        parts: Vec<TruncatedGauss>,
    },
    Grid(Gridded),
}

impl Sampler {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Point(v) => *v,
            Sampler::Mixture { cum, parts } => {
                let idx = if parts.len() == 1 {
                    0
                } else {
                    let u: f64 = rng.random::<f64>() * cum[cum.len() - 1];
                    cum.partition_point(|&c| c < u).min(parts.len() - 1)
                };
                let u: f64 = rng.random();
                parts[idx].invert(u)
            }
            Sampler::Grid(g) => {
                let u: f64 = rng.random();
                g.quantile(u.max(f64::MIN_POSITIVE))
            }
        }
    }
}

/// Discretization settings for sums and mixtures that leave closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSettings {
    pub step: f64,
    pub max_points: usize,
    /// Coarsen the step instead of failing when `max_points` would be exceeded.
    pub coarsen: bool,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            step: 1e-3,
            max_points: 10_000,
            coarsen: true,
        }
    }
}

/// Cell index range on the lattice `k * step` covering `[lo, hi]`.
fn lattice_range(lo: f64, hi: f64, step: f64) -> (i64, i64) {
    let k_lo = (lo / step + 0.5).floor() as i64;
    let k_hi = (hi / step + 0.5).floor() as i64;
    (k_lo, k_hi.max(k_lo))
}

/// Cell masses of `d` on lattice cells `[k_lo, k_hi]`.
fn discretize(d: &Distribution, step: f64, k_lo: i64, k_hi: i64) -> Vec<f64> {
    let mut prev = d.cdf((k_lo as f64 - 0.5) * step);
    let mut out = Vec::with_capacity((k_hi - k_lo + 1) as usize);
    for k in k_lo..=k_hi {
        let next = if k == k_hi {
            1.0
        } else {
            d.cdf((k as f64 + 0.5) * step)
        };
        out.push((next - prev).max(0.0));
        prev = next;
    }
    // mass below the first edge belongs to the first cell
    if let Some(first) = out.first_mut() {
        *first += d.cdf((k_lo as f64 - 0.5) * step);
    }
    out
}

fn choose_step(
    spans: &[(f64, f64)],
    settings: &GridSettings,
    finest: f64,
) -> Result<f64, DistError> {
    let mut step = finest;
    loop {
        let points: i64 = spans
            .iter()
            .map(|&(lo, hi)| {
                let (a, b) = lattice_range(lo, hi, step);
                b - a + 1
            })
            .sum::<i64>()
            - (spans.len() as i64 - 1);
        if points as usize <= settings.max_points {
            return Ok(step);
        }
        if !settings.coarsen {
            return Err(DistError::GridOverflow {
                points: points as usize,
                cap: settings.max_points,
            });
        }
        let factor = (points as f64 / settings.max_points as f64).ceil().max(2.0);
        log::warn!(
            "grid of {points} points exceeds cap {}; coarsening step {step} by {factor}",
            settings.max_points
        );
        step *= factor;
    }
}

fn linear_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 64 || a.len() * b.len() <= 200_000 {
        let mut out = vec![0.0; n];
        for (i, x) in a.iter().enumerate() {
            if *x == 0.0 {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let size = n.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fa.resize(size, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fb.resize(size, Complex::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    fa.truncate(n);
    fa.into_iter()
        .map(|c| (c.re / size as f64).max(0.0))
        .collect()
}

/// Law of `X + Y` for independent `X ~ a`, `Y ~ b`.
///
/// Point masses shift the other operand; otherwise both operands are binned on the
/// common lattice `k * step` and the cell masses are convolved.
pub fn convolve(
    a: &Distribution,
    b: &Distribution,
    settings: &GridSettings,
) -> Result<Distribution, DistError> {
    match (a, b) {
        (Distribution::PointMass(x), other) | (other, Distribution::PointMass(x)) => {
            return Ok(other.shifted(*x));
        }
        _ => {}
    }
    let finest = [a.is_gridded(), b.is_gridded()]
        .into_iter()
        .flatten()
        .fold(settings.step, f64::max);
    let (ha, hb) = (a.support_hull(), b.support_hull());
    let step = choose_step(&[ha, hb], settings, finest)?;
    let (a0, a1) = lattice_range(ha.0, ha.1, step);
    let (b0, b1) = lattice_range(hb.0, hb.1, step);
    let ma = discretize(a, step, a0, a1);
    let mb = discretize(b, step, b0, b1);
    let masses = linear_convolve(&ma, &mb);
    let density = masses.into_iter().map(|m| m / step).collect();
    Ok(Distribution::Gridded(Gridded::new(
        (a0 + b0) as f64 * step,
        step,
        density,
    )?))
}

/// Sum of several independent delays, left to right.
pub fn convolve_all(
    parts: &[&Distribution],
    settings: &GridSettings,
) -> Result<Distribution, DistError> {
    let mut iter = parts.iter();
    let Some(first) = iter.next() else {
        return Ok(Distribution::PointMass(0.0));
    };
    let mut acc = (*first).clone();
    for d in iter {
        acc = convolve(&acc, d, settings)?;
    }
    Ok(acc)
}

/// Probability mixture `sum_j w_j * law_j`. Weights must be non-negative with positive sum;
/// they are renormalized.
///
/// Closed-form mixtures stay in closed form; anything else is binned on a common grid.
pub fn mix(
    parts: &[(f64, Distribution)],
    settings: &GridSettings,
) -> Result<Distribution, DistError> {
    let parts: Vec<&(f64, Distribution)> = parts.iter().filter(|(w, _)| *w > 0.0).collect();
    if parts.is_empty() {
        return Err(DistError::Empty);
    }
    if parts.iter().any(|(w, _)| !w.is_finite()) {
        return Err(DistError::NonFinite("mixture weight"));
    }
    let total: f64 = parts.iter().map(|(w, _)| w).sum();
    if parts.len() == 1 {
        return Ok(parts[0].1.clone());
    }
    if let Distribution::PointMass(v0) = parts[0].1 {
        if parts
            .iter()
            .all(|(_, d)| matches!(d, Distribution::PointMass(v) if *v == v0))
        {
            return Ok(Distribution::PointMass(v0));
        }
    }
    if parts
        .iter()
        .all(|(_, d)| matches!(d, Distribution::Mixture(_)))
    {
        let mut components = Vec::new();
        for (w, d) in &parts {
            if let Distribution::Mixture(m) = d {
                for c in &m.components {
                    components.push(GaussComponent {
                        weight: c.weight * w / (total * m.norm),
                        ..*c
                    });
                }
            }
        }
        return normalize(&components);
    }
    let finest = parts
        .iter()
        .filter_map(|(_, d)| d.is_gridded())
        .fold(settings.step, f64::max);
    let lo = parts
        .iter()
        .map(|(_, d)| d.support_hull().0)
        .fold(f64::INFINITY, f64::min);
    let hi = parts
        .iter()
        .map(|(_, d)| d.support_hull().1)
        .fold(f64::NEG_INFINITY, f64::max);
    let step = choose_step(&[(lo, hi)], settings, finest)?;
    let (k0, k1) = lattice_range(lo, hi, step);
    let mut masses = vec![0.0; (k1 - k0 + 1) as usize];
    for (w, d) in &parts {
        for (acc, m) in masses.iter_mut().zip(discretize(d, step, k0, k1)) {
            *acc += w / total * m;
        }
    }
    let density = masses.into_iter().map(|m| m / step).collect();
    Ok(Distribution::Gridded(Gridded::new(
        k0 as f64 * step,
        step,
        density,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const K: f64 = 100.0;

    fn comp(w: f64, c: f64, lo: f64, hi: f64) -> GaussComponent {
        GaussComponent::new(w, c, K, lo, hi).unwrap()
    }

    fn ex1_link1_full() -> Distribution {
        normalize(&[comp(2.0, 0.25, 0.0, 0.5), comp(3.0, 1.5, 1.25, 1.75)]).unwrap()
    }

    fn ex3_link1() -> Distribution {
        normalize(&[comp(1.0, 14.0, 13.0, 15.0), comp(1.0, 19.0, 18.0, 20.0)]).unwrap()
    }

    fn ex5_link2() -> Distribution {
        normalize(&[comp(7.0, 5.0, 4.0, 6.0), comp(3.0, 10.0, 9.0, 11.0)]).unwrap()
    }

    /// Composite Simpson over each window; independent of the error-function path.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = if n % 2 == 1 { n + 1 } else { n };
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn symmetric_window_has_median_at_center() {
        let d = normalize(&[comp(1.0, 1.0, 0.75, 1.25)]).unwrap();
        assert!((d.cdf(1.0) - 0.5).abs() < 1e-12);
        assert!((d.quantile(0.5).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(d.cdf(0.75), 0.0);
    }

    #[test]
    fn normalization_matches_quadrature() {
        let d = ex1_link1_full();
        let Distribution::Mixture(m) = &d else {
            panic!()
        };
        let total: f64 = m
            .components()
            .iter()
            .map(|c| simpson(|x| c.density(x), c.support_lo, c.support_hi, 20_000))
            .sum::<f64>()
            / m.norm();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn upper_mode_mass_is_point_six() {
        // Oracle: integrate each term over its window by Simpson, take the ratio.
        let lower = simpson(
            |x| 2.0 * (-K * (x - 0.25f64).powi(2)).exp(),
            0.0,
            0.5,
            20_000,
        );
        let upper = simpson(
            |x| 3.0 * (-K * (x - 1.5f64).powi(2)).exp(),
            1.25,
            1.75,
            20_000,
        );
        let oracle = upper / (lower + upper);
        let d = ex1_link1_full();
        let Distribution::Mixture(m) = &d else {
            panic!()
        };
        let masses = m.component_masses();
        assert!((masses[1] - oracle).abs() < 1e-9);
        assert!((masses[1] - 0.6).abs() < 1e-9);
        assert!((d.cdf(1.0) - 0.4).abs() < 0.005);
    }

    #[test]
    fn practitioner_moments() {
        let d = ex3_link1();
        assert!((d.mean() - 16.5).abs() < 1e-9);
        assert!((d.variance() - 6.255).abs() < 0.01);
        let d = ex5_link2();
        assert!((d.mean() - 6.5).abs() < 1e-9);
        assert!((d.variance() - 5.255).abs() < 0.01);
        let l2 = normalize(&[comp(4.0, 8.0, 7.0, 9.0), comp(1.0, 10.0, 9.0, 11.0)]).unwrap();
        assert!((l2.mean() - 8.4).abs() < 1e-9);
    }

    #[test]
    fn point_mass_basics() {
        let p = Distribution::point(3.0);
        assert_eq!(p.cdf(2.9), 0.0);
        assert_eq!(p.cdf(3.0), 1.0);
        assert_eq!(p.variance(), 0.0);
        assert_eq!(p.quantile(0.3).unwrap(), 3.0);
        assert_eq!(Distribution::point(7.0).cvar_upper(0.1).unwrap(), 7.0);
        assert_eq!(Distribution::point(0.0).mean(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(p.sample(&mut rng), 3.0);
    }

    #[test]
    fn errors_on_bad_input() {
        assert_eq!(normalize(&[]), Err(DistError::Empty));
        let degenerate = GaussComponent::new(1.0, 0.0, K, 0.0, 0.0).unwrap();
        assert_eq!(normalize(&[degenerate]), Err(DistError::AllDegenerate));
        let bad = GaussComponent {
            weight: f64::NAN,
            center: 0.0,
            stiffness: K,
            support_lo: 0.0,
            support_hi: 1.0,
        };
        assert!(matches!(normalize(&[bad]), Err(DistError::NonFinite(_))));
        assert!(GaussComponent::new(1.0, 0.0, K, 1.0, 0.0).is_err());
        assert!(ex3_link1().quantile(1.0).is_err());
        assert!(ex3_link1().cvar_upper(0.0).is_err());
    }

    #[test]
    fn quantile_lands_in_upper_window() {
        let d = ex1_link1_full();
        let q = d.quantile(0.9).unwrap();
        assert!((1.25..=1.75).contains(&q));
        assert!((d.cdf(q) - 0.9).abs() < 1e-9);
        // Monte Carlo empirical quantile
        let s = d.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut xs: Vec<f64> = (0..1_000_000).map(|_| s.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let emp = xs[900_000];
        assert!((emp - q).abs() < 1e-3, "{emp} vs {q}");
    }

    #[test]
    fn quantile_plateau_takes_left_endpoint() {
        let g = Distribution::Gridded(Gridded::new(0.0, 1.0, vec![1.0, 0.0, 1.0]).unwrap());
        assert_eq!(g.quantile(0.5).unwrap(), 0.5);
        let d = ex1_link1_full();
        let q = d.quantile(d.cdf(0.9)).unwrap();
        assert!(q <= 0.5 + 1e-9, "{q}");
    }

    #[test]
    fn cvar_edge_cases() {
        let d = ex3_link1();
        assert!((d.cvar_upper(1.0).unwrap() - d.mean()).abs() < 1e-12);
        // upper half of a two-mode law with equal masses is the upper mode
        assert!((d.cvar_upper(0.5).unwrap() - 19.0).abs() < 1e-6);
    }

    #[test]
    fn sample_mean_matches() {
        let d = ex3_link1();
        let s = d.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let mean = (0..n).map(|_| s.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 16.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn ks_statistic_small() {
        let d = ex1_link1_full();
        let s = d.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let f = d.cdf(*x);
                (f - i as f64 / n as f64)
                    .abs()
                    .max((f - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "{ks}");
    }

    #[test]
    fn tail_sampling_stays_in_window() {
        // window far in the right tail of its Gaussian
        let d = normalize(&[comp(1.0, 0.0, 0.5, 0.6)]).unwrap();
        let s = d.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mean = (0..n).map(|_| s.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((0.5..=0.6).contains(&mean));
        assert!((mean - d.mean()).abs() < 1e-3, "{mean} vs {}", d.mean());
    }

    #[test]
    fn convolve_identity_and_linearity() {
        let g = GridSettings::default();
        let a = ex1_link1_full();
        let z = convolve(&a, &Distribution::point(0.0), &g).unwrap();
        assert!((z.mean() - a.mean()).abs() < 1e-9);
        assert!((z.variance() - a.variance()).abs() < 1e-9);
        let b = normalize(&[comp(1.0, 1.0, 0.5, 1.5)]).unwrap();
        let s = convolve(&a, &b, &g).unwrap();
        assert!(
            (s.mean() - a.mean() - b.mean()).abs() < 1e-6,
            "{}",
            s.mean()
        );
        assert!((s.variance() - a.variance() - b.variance()).abs() < 1e-5);
        let Distribution::Gridded(gr) = &s else {
            panic!()
        };
        let mass: f64 = gr.density().iter().sum::<f64>() * gr.step();
        assert!((mass - 1.0).abs() < 1e-6);
        assert!(gr.step() <= 1e-3);
    }

    #[test]
    fn braess_full_load_path_has_three_modes() {
        let g = GridSettings::default();
        let l = normalize(&[comp(1.0, 0.5, 0.0, 1.0), comp(1.0, 1.5, 1.0, 2.0)]).unwrap();
        let s = convolve(&l, &l, &g).unwrap();
        let m1 = s.cdf(1.5);
        let m2 = s.cdf(2.5) - m1;
        let m3 = 1.0 - s.cdf(2.5);
        assert!((m1 - 0.25).abs() < 1e-3 && (m2 - 0.5).abs() < 1e-3 && (m3 - 0.25).abs() < 1e-3);
        assert!((s.cvar_upper(0.25).unwrap() - 3.0).abs() < 0.05);
    }

    #[test]
    fn grid_cap_coarsens_or_fails() {
        let a = ex3_link1();
        let strict = GridSettings {
            step: 1e-3,
            max_points: 1_000,
            coarsen: false,
        };
        assert!(matches!(
            convolve(&a, &a, &strict),
            Err(DistError::GridOverflow { .. })
        ));
        let loose = GridSettings {
            coarsen: true,
            ..strict
        };
        let s = convolve(&a, &a, &loose).unwrap();
        let Distribution::Gridded(gr) = &s else {
            panic!()
        };
        assert!(gr.density().len() <= 1_000);
        assert!((s.mean() - 33.0).abs() < 1e-3);
    }

    #[test]
    fn mixing_closed_form_and_gridded() {
        let g = GridSettings::default();
        let a = ex1_link1_full();
        let b = normalize(&[comp(1.0, 1.0, 0.75, 1.25)]).unwrap();
        let m = mix(&[(0.3, a.clone()), (0.7, b.clone())], &g).unwrap();
        assert!(matches!(m, Distribution::Mixture(_)));
        assert!((m.mean() - (0.3 * a.mean() + 0.7 * b.mean())).abs() < 1e-12);
        let c = convolve(&a, &b, &g).unwrap();
        let mg = mix(&[(0.5, c.clone()), (0.5, Distribution::point(1.0))], &g).unwrap();
        assert!(matches!(mg, Distribution::Gridded(_)));
        assert!((mg.mean() - (0.5 * c.mean() + 0.5)).abs() < 1e-6);
    }
}
