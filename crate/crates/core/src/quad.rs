//! Quadrature for the three integrand classes met by the real-matrix density:
//! inverse-square-root endpoint singularities, 3/2-power singularities taken
//! as Hadamard finite parts, and semi-infinite cells.
//!
//! Everything funnels into one globally adaptive Gauss-Legendre driver that
//! works on smooth integrands over finite parameter intervals. Singularities
//! are removed by substitution before the driver sees them:
//!
//! * `|r - e|^{-1/2}` at a finite endpoint: `r = e ± t^2`;
//! * a semi-infinite tail from `s`: `r = s + t/(1-t)` composed with
//!   `t = 1 - u^2`, i.e. `r = s + (1 - u^2)/u^2`, which also absorbs the
//!   slow `r^{-3/2}` decay that a plain `t/(1-t)` map would leave singular.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Gauss-Legendre order used on every segment.
pub const GL_ORDER: usize = 20;

/// Endpoint behaviour of an integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Singularity {
    None,
    /// `|r - e|^{-1/2}`.
    Half,
    /// `|r - e|^{-3/2}`, understood as a finite part.
    ThreeHalf,
}

/// An integration interval with endpoint tags. `upper` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub lower: f64,
    pub upper: f64,
    pub singular_lower: Singularity,
    pub singular_upper: Singularity,
}

impl Cell {
    pub fn new(lower: f64, upper: f64, singular_lower: Singularity, singular_upper: Singularity) -> Result<Self> {
        if !(lower.is_finite() && lower >= 0.0) {
            return Err(Error::invalid(format!(
                "cell lower bound {lower} must be finite and >= 0"
            )));
        }
        if !(upper > lower) {
            return Err(Error::invalid(format!("cell upper bound {upper} must exceed {lower}")));
        }
        if upper.is_infinite() && singular_upper != Singularity::None {
            return Err(Error::invalid("an infinite endpoint cannot carry a singularity tag"));
        }
        if singular_lower == Singularity::ThreeHalf && singular_upper == Singularity::ThreeHalf {
            return Err(Error::invalid("at most one 3/2 singularity per cell"));
        }
        Ok(Self {
            lower,
            upper,
            singular_lower,
            singular_upper,
        })
    }

    /// Plain cell without singular endpoints.
    pub fn regular(lower: f64, upper: f64) -> Result<Self> {
        Self::new(lower, upper, Singularity::None, Singularity::None)
    }

    pub fn is_semi_infinite(&self) -> bool {
        self.upper.is_infinite()
    }

    pub fn has_three_half(&self) -> bool {
        self.singular_lower == Singularity::ThreeHalf || self.singular_upper == Singularity::ThreeHalf
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Relative tolerance, measured against the integral of `|f|`.
    pub tol: f64,
    /// Absolute floor on the error target; useful when the integral is zero.
    pub abs_tol: f64,
    /// Maximum number of bisections of any one segment.
    pub max_depth: u32,
    /// Equal pieces each substituted sub-interval is cut into before
    /// adaptivity starts. Helps integrands with narrow interior features.
    pub initial_segments: usize,
    /// Hard cap on the number of live segments.
    pub max_segments: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            abs_tol: 0.0,
            max_depth: 40,
            initial_segments: 1,
            max_segments: 20_000,
        }
    }
}

impl QuadOptions {
    /// Defaults for finite-part integrals, where the subtraction costs digits.
    pub fn pv() -> Self {
        Self {
            tol: 1e-8,
            ..Self::default()
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_initial_segments(mut self, n: usize) -> Self {
        self.initial_segments = n.max(1);
        self
    }
}

/// Integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1], by
/// Newton iteration on the three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn gl(g: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = gl_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut s = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        s += wi * g(mid + half * xi);
    }
    s * half
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    /// `r = e + t^2`.
    FromLower(f64),
    /// `r = e - t^2`.
    FromUpper(f64),
    /// `r = s + (1 - u^2)/u^2`, `u` in (0, 1].
    Tail(f64),
}

impl Map {
    fn apply(self, t: f64) -> (f64, f64) {
        match self {
            Map::Identity => (t, 1.0),
            Map::FromLower(e) => (e + t * t, 2.0 * t),
            Map::FromUpper(e) => (e - t * t, 2.0 * t),
            Map::Tail(s) => {
                let u2 = t * t;
                (s + (1.0 - u2) / u2, 2.0 / (u2 * t))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    map: Map,
    a: f64,
    b: f64,
}

struct Segment {
    piece: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Global adaptive driver: always bisects the segment with the largest
/// error estimate, until the summed error meets the target.
fn adaptive<F: Fn(f64) -> f64>(f: &F, pieces: &[Piece], opts: &QuadOptions, ctx: &str) -> Result<Estimate> {
    let eval = |piece: &Piece, a: f64, b: f64| -> (f64, f64) {
        let g = |t: f64| {
            let (r, jac) = piece.map.apply(t);
            f(r) * jac
        };
        let whole = gl(&g, a, b);
        let m = 0.5 * (a + b);
        let halves = gl(&g, a, m) + gl(&g, m, b);
        (halves, (whole - halves).abs())
    };

    let mut heap = BinaryHeap::new();
    for (k, piece) in pieces.iter().enumerate() {
        let n = opts.initial_segments.max(1);
        let h = (piece.b - piece.a) / n as f64;
        for s in 0..n {
            let a = piece.a + h * s as f64;
            let b = if s + 1 == n { piece.b } else { a + h };
            let (value, error) = eval(piece, a, b);
            heap.push(Segment {
                piece: k,
                a,
                b,
                value,
                error,
                depth: 0,
            });
        }
    }
    let mut frozen = (0.0, 0.0, 0.0);
    let mut iter = 0usize;
    let totals = |heap: &BinaryHeap<Segment>, frozen: (f64, f64, f64)| {
        heap.iter()
            .fold(frozen, |(v, a, e), s| (v + s.value, a + s.value.abs(), e + s.error))
    };
    let (mut value, mut abs, mut error) = totals(&heap, frozen);

    loop {
        // Running sums drift; refresh them now and then.
        iter += 1;
        if iter.is_multiple_of(128) {
            (value, abs, error) = totals(&heap, frozen);
        }
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::numerical(format!(
                "{ctx}: integrand produced a non-finite value"
            )));
        }
        let target = (opts.tol * abs).max(opts.abs_tol);
        if error <= target {
            (value, abs, error) = totals(&heap, frozen);
            if error <= (opts.tol * abs).max(opts.abs_tol) {
                return Ok(Estimate { value, error });
            }
        }
        let accuracy = |value: f64, error: f64| Error::Accuracy {
            context: ctx.to_string(),
            estimate: value,
            error_bound: error,
        };
        if frozen.2 > target || heap.len() >= opts.max_segments {
            return Err(accuracy(value, error));
        }
        let Some(seg) = heap.pop() else {
            return Err(accuracy(value, error));
        };
        if seg.depth >= opts.max_depth {
            frozen.0 += seg.value;
            frozen.1 += seg.value.abs();
            frozen.2 += seg.error;
            continue;
        }
        value -= seg.value;
        abs -= seg.value.abs();
        error -= seg.error;
        let piece = &pieces[seg.piece];
        let m = 0.5 * (seg.a + seg.b);
        for (a, b) in [(seg.a, m), (m, seg.b)] {
            let (v, e) = eval(piece, a, b);
            value += v;
            abs += v.abs();
            error += e;
            heap.push(Segment {
                piece: seg.piece,
                a,
                b,
                value: v,
                error: e,
                depth: seg.depth + 1,
            });
        }
    }
}

/// Smooth integrand on a finite interval, no substitution.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(format!("finite interval expected, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let pieces = [Piece {
        map: Map::Identity,
        a: lo,
        b: hi,
    }];
    Ok(sign * adaptive(&f, &pieces, opts, "finite interval")?.value)
}

/// Checks numerically that `|f|` decays faster than `1/r` beyond `start`:
/// samples three points a decade apart, starting two decades out to skip
/// the pre-asymptotic region, and requires a log-log slope below `-1.05` on
/// both decades.
pub fn check_decay<F: Fn(f64) -> f64>(f: &F, start: f64) -> Result<()> {
    let r0 = 100.0 * start.max(1.0);
    let vals = [f(r0).abs(), f(10.0 * r0).abs(), f(100.0 * r0).abs()];
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("integrand is not finite in the tail"));
    }
    for w in vals.windows(2) {
        if w[1] == 0.0 {
            continue;
        }
        if w[0] == 0.0 {
            return Err(Error::Accuracy {
                context: "tail decay check: integrand grows from zero".into(),
                estimate: f64::NAN,
                error_bound: f64::INFINITY,
            });
        }
        let slope = (w[1] / w[0]).log10();
        if slope >= -1.05 {
            return Err(Error::Accuracy {
                context: format!("tail decay check: log-log slope {slope:.3} is not below -1.05"),
                estimate: f64::NAN,
                error_bound: f64::INFINITY,
            });
        }
    }
    Ok(())
}

fn pieces_for(cell: &Cell) -> Vec<Piece> {
    let half_lower = cell.singular_lower == Singularity::Half;
    let half_upper = cell.singular_upper == Singularity::Half;
    let lo = cell.lower;
    let mut out = Vec::with_capacity(3);
    let finite_hi = if cell.is_semi_infinite() {
        lo + lo.max(1.0)
    } else {
        cell.upper
    };
    let upper_sing = half_upper && !cell.is_semi_infinite();
    match (half_lower, upper_sing) {
        (false, false) => out.push(Piece {
            map: Map::Identity,
            a: lo,
            b: finite_hi,
        }),
        (true, false) => out.push(Piece {
            map: Map::FromLower(lo),
            a: 0.0,
            b: (finite_hi - lo).sqrt(),
        }),
        (false, true) => out.push(Piece {
            map: Map::FromUpper(finite_hi),
            a: 0.0,
            b: (finite_hi - lo).sqrt(),
        }),
        (true, true) => {
            let m = 0.5 * (lo + finite_hi);
            out.push(Piece {
                map: Map::FromLower(lo),
                a: 0.0,
                b: (m - lo).sqrt(),
            });
            out.push(Piece {
                map: Map::FromUpper(finite_hi),
                a: 0.0,
                b: (finite_hi - m).sqrt(),
            });
        }
    }
    if cell.is_semi_infinite() {
        out.push(Piece {
            map: Map::Tail(finite_hi),
            a: 0.0,
            b: 1.0,
        });
    }
    out
}

/// `∫_cell f(r) dr` for integrands with at most `|r - e|^{-1/2}` endpoint
/// singularities. Semi-infinite cells are accepted when `f` decays faster
/// than `1/r`; this is checked before integrating.
pub fn integrate_sqrt<F: Fn(f64) -> f64>(f: F, cell: &Cell, opts: &QuadOptions) -> Result<f64> {
    integrate_sqrt_estimate(f, cell, opts).map(|e| e.value)
}

/// As [`integrate_sqrt`] but also returns the error bound.
pub fn integrate_sqrt_estimate<F: Fn(f64) -> f64>(f: F, cell: &Cell, opts: &QuadOptions) -> Result<Estimate> {
    if cell.has_three_half() {
        return Err(Error::invalid(
            "integrate_sqrt cannot handle a 3/2 singularity; use integrate_pv32",
        ));
    }
    if cell.is_semi_infinite() {
        check_decay(&f, cell.lower)?;
    }
    let pieces = pieces_for(cell);
    adaptive(&f, &pieces, opts, "integrate_sqrt")
}

/// Finite part of `∫_cell f(r) / |e - r|^{3/2} dr`, where `e` is the endpoint
/// tagged [`Singularity::ThreeHalf`] and `o` the other endpoint:
///
/// `∫ (f(r) - f(e)) / |e - r|^{3/2} dr - 2 f(e) / sqrt|e - o|`
///
/// The boundary term vanishes for `o = ∞`. The same expression is returned
/// whichever side `e` is on; callers apply any orientation sign themselves.
pub fn integrate_pv32<F: Fn(f64) -> f64>(f: F, cell: &Cell, opts: &QuadOptions) -> Result<f64> {
    let (e, o, other_tag) = match (cell.singular_lower, cell.singular_upper) {
        (Singularity::ThreeHalf, t) => (cell.lower, cell.upper, t),
        (t, Singularity::ThreeHalf) => (cell.upper, cell.lower, t),
        _ => return Err(Error::invalid("integrate_pv32 needs a cell with one 3/2 tag")),
    };
    let fe = f(e);
    if !fe.is_finite() {
        return Err(Error::numerical(format!(
            "integrand is not finite at the singular edge {e}"
        )));
    }
    let h = |r: f64| (f(r) - fe) / (e - r).abs().powf(1.5);
    if o.is_infinite() {
        // Subtract f(e) only up to a split point; beyond it the constant
        // part integrates in closed form and the tail sees f alone.
        let s = e + e.abs().max(1.0);
        let near = integrate_sqrt(h, &Cell::new(e, s, Singularity::Half, Singularity::None)?, opts)?;
        let tail = integrate_sqrt(
            |r: f64| f(r) / (r - e).powf(1.5),
            &Cell::regular(s, f64::INFINITY)?,
            opts,
        )?;
        return Ok(near + tail - 2.0 * fe / (s - e).sqrt());
    }
    let sub = if e == cell.lower {
        Cell::new(cell.lower, cell.upper, Singularity::Half, other_tag)?
    } else {
        Cell::new(cell.lower, cell.upper, other_tag, Singularity::Half)?
    };
    let body = integrate_sqrt(h, &sub, opts)?;
    Ok(body - 2.0 * fe / (e - o).abs().sqrt())
}
