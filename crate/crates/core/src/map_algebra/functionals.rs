//! Scalar functionals of a disturbance map: mean and mean-square displacement,
//! the rate `ρ`, the displacement correlation kernel `b` and the localisation
//! constant `λ(f, ε)`.

use serde::Serialize;

use super::{check_periods, wrap, Knot, MonotoneMap, Side};
use crate::{Error, Result};

const MEAN_TOL: f64 = 1e-12;

/// `f̃ = f − id` on one piece, as `(length, start value, end value)`.
fn tilde_pieces(f: &MonotoneMap) -> Result<Vec<(f64, f64, f64)>> {
    if !f.is_periodic() {
        return Err(Error::InfinitePeriod);
    }
    Ok(f.pieces()
        .into_iter()
        .map(|(x0, y0, x1, y1)| (x1 - x0, y0 - x0, y1 - x1))
        .collect())
}

/// `∫ f̃` over one period.
pub fn mean_tilde(f: &MonotoneMap) -> Result<f64> {
    Ok(tilde_pieces(f)?.iter().map(|&(l, a, b)| 0.5 * l * (a + b)).sum())
}

/// `∫ f̃²` over one period.
pub fn mean_square_tilde(f: &MonotoneMap) -> Result<f64> {
    Ok(tilde_pieces(f)?
        .iter()
        .map(|&(l, a, b)| l * (a * a + a * b + b * b) / 3.0)
        .sum())
}

fn check_dstar(f: &MonotoneMap) -> Result<()> {
    if f.is_identity() {
        return Err(Error::IdentityMap);
    }
    let m = mean_tilde(f)?;
    if m.abs() > MEAN_TOL * f.period().max(1.0) {
        return Err(Error::NotMeanZero(m));
    }
    Ok(())
}

/// `ρ = 1 / ∫ f̃²`, for mean-zero maps other than the identity.
pub fn rho(f: &MonotoneMap) -> Result<f64> {
    check_dstar(f)?;
    let s = mean_square_tilde(f)?;
    if s <= 0.0 {
        return Err(Error::IdentityMap);
    }
    Ok(1.0 / s)
}

/// `‖f̃‖`, the largest displacement of either modification.
pub fn sup_displacement(f: &MonotoneMap) -> f64 {
    f.knots()
        .iter()
        .fold(0.0, |m, k| m.max((k.y_minus - k.x).abs()).max((k.y_plus - k.x).abs()))
}

/// `‖f − g‖ = sup_x |f⁺(x) − g⁺(x)|`.
pub fn sup_distance(f: &MonotoneMap, g: &MonotoneMap) -> Result<f64> {
    check_periods(f.period(), g.period())?;
    let mut xs: Vec<f64> = f.knots().iter().chain(g.knots()).map(|k| k.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut m: f64 = 0.0;
    for x in xs {
        for side in [Side::Left, Side::Right] {
            m = m.max((f.eval(x, side) - g.eval(x, side)).abs());
        }
    }
    Ok(m)
}

/// Knots of `f` together with the zeros of `f̃` inside its pieces, in `[0, p)`.
fn sign_points(f: &MonotoneMap) -> Vec<f64> {
    let p = f.period();
    let mut pts: Vec<f64> = f.knots().iter().map(|k| k.x).collect();
    for (x0, y0, x1, y1) in f.pieces() {
        let (a, b) = (y0 - x0, y1 - x1);
        if a * b < 0.0 {
            pts.push(wrap(x0 + (x1 - x0) * a / (a - b), p).0);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `∫₀ᵖ f̃(x) f̃(x + a) dx`, or the integral of the absolute product.
///
/// The cells between sign points of both factors carry a product of two
/// linear functions, which two-point Gauss–Legendre integrates exactly using
/// interior nodes only.
fn lag_integral(f: &MonotoneMap, pts: &[f64], a: f64, abs: bool) -> f64 {
    let p = f.period();
    let mut cuts: Vec<f64> = Vec::with_capacity(2 * pts.len());
    cuts.extend_from_slice(pts);
    cuts.extend(pts.iter().map(|&q| wrap(q - a, p).0));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let tilde = |x: f64| f.eval(x, Side::Right) - x;
    let h = 0.5 / 3f64.sqrt();
    let n = cuts.len();
    let mut sum = 0.0;
    for i in 0..n {
        let c0 = cuts[i];
        let c1 = if i + 1 < n { cuts[i + 1] } else { cuts[0] + p };
        let len = c1 - c0;
        if len <= 0.0 {
            continue;
        }
        let mid = 0.5 * (c0 + c1);
        let (x1, x2) = (mid - h * len, mid + h * len);
        let cell = 0.5 * len * (tilde(x1) * tilde(x1 + a) + tilde(x2) * tilde(x2 + a));
        sum += if abs { cell.abs() } else { cell };
    }
    sum
}

/// A continuous function of the lag `a ∈ [0, p]` that is a cubic polynomial
/// between consecutive breaks.
#[derive(Clone, Debug)]
struct PiecewiseCubic {
    breaks: Vec<f64>,
    coefs: Vec<[f64; 4]>,
}

impl PiecewiseCubic {
    /// Interpolate `g` by a cubic on each cell from four equispaced nodes;
    /// exact when `g` is cubic there.
    fn fit(breaks: Vec<f64>, g: impl Fn(f64) -> f64) -> Self {
        let mut coefs = Vec::with_capacity(breaks.len().saturating_sub(1));
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let y: Vec<f64> = (0..4).map(|k| g(a + (b - a) * k as f64 / 3.0)).collect();
            coefs.push([
                y[0],
                0.5 * (-11.0 * y[0] + 18.0 * y[1] - 9.0 * y[2] + 2.0 * y[3]),
                0.5 * (18.0 * y[0] - 45.0 * y[1] + 36.0 * y[2] - 9.0 * y[3]),
                0.5 * (-9.0 * y[0] + 27.0 * y[1] - 27.0 * y[2] + 9.0 * y[3]),
            ]);
        }
        PiecewiseCubic { breaks, coefs }
    }

    fn cell_eval(c: &[f64; 4], s: f64) -> f64 {
        c[0] + s * (c[1] + s * (c[2] + s * c[3]))
    }

    fn eval(&self, a: f64) -> f64 {
        let i = self.breaks.partition_point(|&b| b <= a).clamp(1, self.coefs.len()) - 1;
        let (b0, b1) = (self.breaks[i], self.breaks[i + 1]);
        Self::cell_eval(&self.coefs[i], (a - b0) / (b1 - b0))
    }

    fn max_on(&self, lo: f64, hi: f64) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for (i, c) in self.coefs.iter().enumerate() {
            let (b0, b1) = (self.breaks[i], self.breaks[i + 1]);
            if b1 < lo || b0 > hi {
                continue;
            }
            let w = b1 - b0;
            let s_lo = ((lo - b0) / w).max(0.0);
            let s_hi = ((hi - b0) / w).min(1.0);
            m = m.max(Self::cell_eval(c, s_lo)).max(Self::cell_eval(c, s_hi));
            // stationary points of c1 + 2 c2 s + 3 c3 s²
            let (qa, qb, qc) = (3.0 * c[3], 2.0 * c[2], c[1]);
            let mut roots = Vec::with_capacity(2);
            if qa.abs() > 1e-300 {
                let disc = qb * qb - 4.0 * qa * qc;
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    roots.push((-qb + sq) / (2.0 * qa));
                    roots.push((-qb - sq) / (2.0 * qa));
                }
            } else if qb.abs() > 1e-300 {
                roots.push(-qc / qb);
            }
            for s in roots {
                if s > s_lo && s < s_hi {
                    m = m.max(Self::cell_eval(c, s));
                }
            }
        }
        m
    }
}

/// Lag breaks: all differences of sign points, folded into `[0, p]`.
fn lag_breaks(p: f64, pts: &[f64]) -> Vec<f64> {
    let mut d: Vec<f64> = vec![0.0, p];
    for &u in pts {
        for &v in pts {
            d.push(wrap(u - v, p).0);
        }
    }
    d.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(d.len());
    for x in d {
        if out.last().is_none_or(|&l| x - l > 1e-13 * p) {
            out.push(x);
        }
    }
    // p itself is in the list, so the last break is within tolerance of it
    *out.last_mut().unwrap() = p;
    out
}

/// `b(a) = ρ ∫ f̃(x) f̃(x + a) dx`, the covariance rate of two points at
/// separation `a`.
pub fn kernel_b(f: &MonotoneMap, a: f64) -> Result<f64> {
    let r = rho(f)?;
    let pts = sign_points(f);
    Ok(r * lag_integral(f, &pts, a, false))
}

/// [`kernel_b`] tabulated exactly as a piecewise cubic for fast repeated use.
#[derive(Clone, Debug)]
pub struct KernelB {
    period: f64,
    table: PiecewiseCubic,
}

impl KernelB {
    pub fn new(f: &MonotoneMap) -> Result<Self> {
        let r = rho(f)?;
        let pts = sign_points(f);
        let p = f.period();
        let table = PiecewiseCubic::fit(lag_breaks(p, &pts), |a| r * lag_integral(f, &pts, a, false));
        Ok(KernelB { period: p, table })
    }

    pub fn eval(&self, a: f64) -> f64 {
        self.table.eval(wrap(a, self.period).0)
    }
}

/// Smallest `λ ∈ (0, 1]` with `ρ ∫|f̃(x + a) f̃(x)| dx ≤ λ` for every lag
/// `a ∈ [ελ, p − ελ]`, by 32 bisection steps on `λ`. The returned value is the
/// feasible end of the final bracket.
pub fn localization_lambda(f: &MonotoneMap, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::OutOfRange(format!("eps must lie in (0, 1], got {eps}")));
    }
    let r = rho(f)?;
    let pts = sign_points(f);
    let p = f.period();
    let table = PiecewiseCubic::fit(lag_breaks(p, &pts), |a| r * lag_integral(f, &pts, a, true));
    let feasible = |lam: f64| {
        let (lo, hi) = (eps * lam, p - eps * lam);
        lo > hi || table.max_on(lo, hi) <= lam
    };
    if !feasible(1.0) {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..32 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// A period-1 mean-zero map with its rate and localisation constant.
#[derive(Clone, Debug, Serialize)]
pub struct DisturbanceProfile {
    pub map: MonotoneMap,
    pub rho: f64,
    pub lambda_1: f64,
    pub mean_tilde: f64,
}

impl DisturbanceProfile {
    pub fn new(map: MonotoneMap) -> Result<Self> {
        if map.period() != 1.0 {
            return Err(Error::OutOfRange(format!("disturbance maps have period 1, got {}", map.period())));
        }
        let rho = rho(&map)?;
        let lambda_1 = localization_lambda(&map, 1.0)?;
        let mean_tilde = mean_tilde(&map)?;
        Ok(DisturbanceProfile { map, rho, lambda_1, mean_tilde })
    }
}

/// `f⁺(n + x) = n + (r ∨ x ∧ (1 − r))` on `[0, 1)`.
pub fn rmap(r: f64) -> Result<MonotoneMap> {
    if !(r > 0.0 && r <= 0.5) {
        return Err(Error::OutOfRange(format!("r must lie in (0, 1/2], got {r}")));
    }
    MonotoneMap::new(
        1.0,
        vec![Knot::new(0.0, -r, r), Knot::continuous(r, r), Knot::continuous(1.0 - r, 1.0 - r)],
    )
}

/// The r-map profile, with `ρ = 3/(2r³)` set in closed form.
pub fn make_rmap(r: f64) -> Result<DisturbanceProfile> {
    let mut p = DisturbanceProfile::new(rmap(r)?)?;
    p.rho = 1.5 / (r * r * r);
    Ok(p)
}
