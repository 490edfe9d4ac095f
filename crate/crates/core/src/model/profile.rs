use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::gauss_legendre;

/// Which one-sided limit to take at a discontinuity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A spatial active/reactive power density `x ↦ (p(x), q(x))`.
pub trait Profile: Send + Sync {
    fn eval(&self, x: f64) -> (f64, f64);

    /// One-sided limit at `x`. Profiles that are continuous can keep the
    /// default.
    fn eval_side(&self, x: f64, _side: Side) -> (f64, f64) {
        self.eval(x)
    }

    /// Positions where the density or one of its first two derivatives may
    /// jump. Numerical kernels split or exclude work at these points.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `(∫p, ∫q)` over `[a, b]`.
    fn integral(&self, a: f64, b: f64) -> (f64, f64) {
        integrate_weighted(self, a, b, 32, |_| 1.0)
    }
}

/// Integral of `weight(x)·(p(x), q(x))` over `[a, b]`, split at the
/// profile's breakpoints, with `panels` Gauss-Legendre panels per piece.
pub(crate) fn integrate_weighted<P, W>(profile: &P, a: f64, b: f64, panels: usize, weight: W) -> (f64, f64)
where
    P: Profile + ?Sized,
    W: Fn(f64) -> f64,
{
    if b <= a {
        return (0.0, 0.0);
    }
    let mut cuts = vec![a];
    let mut inner: Vec<f64> = profile
        .breakpoints()
        .into_iter()
        .filter(|&c| c > a && c < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    cuts.extend(inner);
    cuts.push(b);

    let mut total = (0.0, 0.0);
    for piece in cuts.windows(2) {
        let (lo, hi) = (piece[0], piece[1]);
        let step = (hi - lo) / panels as f64;
        for k in 0..panels {
            let pa = lo + k as f64 * step;
            let pb = if k + 1 == panels { hi } else { pa + step };
            total.0 += gauss_legendre(pa, pb, |x| weight(x) * profile.eval(x).0);
            total.1 += gauss_legendre(pa, pb, |x| weight(x) * profile.eval(x).1);
        }
    }
    total
}

/// Constant density block on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub p: f64,
    pub q: f64,
}

impl Segment {
    fn contains(&self, x: f64, side: Option<Side>) -> bool {
        match side {
            None | Some(Side::Right) => self.start <= x && x < self.end,
            Some(Side::Left) => self.start < x && x <= self.end,
        }
    }

    fn overlap(&self, a: f64, b: f64) -> f64 {
        (self.end.min(b) - self.start.max(a)).max(0.0)
    }
}

/// Raised-cosine bump `amp·(1 + cos(π(x − c)/w))/2` on `|x − c| ≤ w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    pub p: f64,
    pub q: f64,
}

impl Bump {
    pub fn shape(&self, x: f64) -> f64 {
        let t = x - self.center;
        if t.abs() > self.half_width {
            0.0
        } else {
            0.5 * (1.0 + (PI * t / self.half_width).cos())
        }
    }

    /// Antiderivative of [`Bump::shape`] with the support clipped.
    fn primitive(&self, x: f64) -> f64 {
        let w = self.half_width;
        let t = (x - self.center).clamp(-w, w);
        0.5 * t + w / (2.0 * PI) * (PI * t / w).sin()
    }

    fn shape_integral(&self, a: f64, b: f64) -> f64 {
        self.primitive(b) - self.primitive(a)
    }
}

/// Sum of piecewise-constant segments and smooth bumps on `[0, L]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerProfile {
    segments: Vec<Segment>,
    bumps: Vec<Bump>,
}

impl PowerProfile {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Validates the blocks against a feeder of length `length`.
    pub fn new(segments: Vec<Segment>, bumps: Vec<Bump>, length: f64) -> Result<Self> {
        for (i, s) in segments.iter().enumerate() {
            let id = i + 1;
            if ![s.start, s.end, s.p, s.q].iter().all(|v| v.is_finite()) {
                return Err(Error::Validation(format!("segment {id} has a non-finite value")));
            }
            if s.start >= s.end {
                return Err(Error::Validation(format!(
                    "segment {id} is empty or reversed: [{}, {})",
                    s.start, s.end
                )));
            }
            if s.start < 0.0 || s.end > length {
                return Err(Error::Validation(format!(
                    "segment {id} [{}, {}) lies outside the feeder [0, {length}]",
                    s.start, s.end
                )));
            }
        }
        for (i, pair) in segments.windows(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            if b.start < a.start {
                return Err(Error::Validation(format!(
                    "segments {} and {} are not ordered by start ({} > {})",
                    i + 1,
                    i + 2,
                    a.start,
                    b.start
                )));
            }
            if b.start < a.end {
                return Err(Error::Validation(format!(
                    "segments {} and {} overlap: [{}, {}) and [{}, {})",
                    i + 1,
                    i + 2,
                    a.start,
                    a.end,
                    b.start,
                    b.end
                )));
            }
        }
        for (i, bump) in bumps.iter().enumerate() {
            let id = i + 1;
            if ![bump.center, bump.half_width, bump.p, bump.q].iter().all(|v| v.is_finite()) {
                return Err(Error::Validation(format!("bump {id} has a non-finite value")));
            }
            if bump.half_width <= 0.0 {
                return Err(Error::Validation(format!("bump {id} needs a positive width")));
            }
            if bump.center - bump.half_width < 0.0 || bump.center + bump.half_width > length {
                return Err(Error::Validation(format!(
                    "bump {id} support [{}, {}] lies outside the feeder [0, {length}]",
                    bump.center - bump.half_width,
                    bump.center + bump.half_width
                )));
            }
        }
        let profile = Self { segments, bumps };
        let (p_end, q_end) = profile.eval(length);
        if p_end != 0.0 || q_end != 0.0 {
            return Err(Error::Validation(format!(
                "the terminal must carry no load, but p(L) = {p_end}, q(L) = {q_end}"
            )));
        }
        Ok(profile)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn bumps(&self) -> &[Bump] {
        &self.bumps
    }

    pub fn is_zero(&self) -> bool {
        self.segments.is_empty() && self.bumps.is_empty()
    }

    fn eval_with(&self, x: f64, side: Option<Side>) -> (f64, f64) {
        let mut p = 0.0;
        let mut q = 0.0;
        for s in self.segments.iter().filter(|s| s.contains(x, side)) {
            p += s.p;
            q += s.q;
        }
        for b in &self.bumps {
            let k = b.shape(x);
            p += b.p * k;
            q += b.q * k;
        }
        (p, q)
    }
}

impl Profile for PowerProfile {
    fn eval(&self, x: f64) -> (f64, f64) {
        self.eval_with(x, None)
    }

    fn eval_side(&self, x: f64, side: Side) -> (f64, f64) {
        self.eval_with(x, Some(side))
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .segments
            .iter()
            .flat_map(|s| [s.start, s.end])
            .chain(
                self.bumps
                    .iter()
                    .flat_map(|b| [b.center - b.half_width, b.center + b.half_width]),
            )
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn integral(&self, a: f64, b: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut q = 0.0;
        for s in &self.segments {
            let len = s.overlap(a, b);
            p += s.p * len;
            q += s.q * len;
        }
        for bump in &self.bumps {
            let area = bump.shape_integral(a, b);
            p += bump.p * area;
            q += bump.q * area;
        }
        (p, q)
    }
}

/// A profile multiplied by a constant factor.
pub struct Scaled<'a> {
    pub inner: &'a dyn Profile,
    pub factor: f64,
}

impl Profile for Scaled<'_> {
    fn eval(&self, x: f64) -> (f64, f64) {
        let (p, q) = self.inner.eval(x);
        (self.factor * p, self.factor * q)
    }

    fn eval_side(&self, x: f64, side: Side) -> (f64, f64) {
        let (p, q) = self.inner.eval_side(x, side);
        (self.factor * p, self.factor * q)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints()
    }

    fn integral(&self, a: f64, b: f64) -> (f64, f64) {
        let (p, q) = self.inner.integral(a, b);
        (self.factor * p, self.factor * q)
    }
}

/// Pointwise sum of several profiles.
pub struct Superposition<'a> {
    pub parts: Vec<&'a dyn Profile>,
}

impl Profile for Superposition<'_> {
    fn eval(&self, x: f64) -> (f64, f64) {
        self.parts.iter().fold((0.0, 0.0), |(p, q), part| {
            let (dp, dq) = part.eval(x);
            (p + dp, q + dq)
        })
    }

    fn eval_side(&self, x: f64, side: Side) -> (f64, f64) {
        self.parts.iter().fold((0.0, 0.0), |(p, q), part| {
            let (dp, dq) = part.eval_side(x, side);
            (p + dp, q + dq)
        })
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.parts.iter().flat_map(|p| p.breakpoints()).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn integral(&self, a: f64, b: f64) -> (f64, f64) {
        self.parts.iter().fold((0.0, 0.0), |(p, q), part| {
            let (dp, dq) = part.integral(a, b);
            (p + dp, q + dq)
        })
    }
}
