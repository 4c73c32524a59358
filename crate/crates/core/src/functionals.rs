//! Test functions `f: R_+ -> R` with `f(0) = 0`, their analytic derivatives,
//! derivative bounds, and finite dictionaries standing in for the smoothness
//! classes `F_m = { f : max_{1<=j<=m+1} ||f^{(j)}||_inf <= 1 }`.
//!
//! Builtin names:
//!
//! | name               | `f(x)`                                   |
//! |--------------------|------------------------------------------|
//! | `identity`         | `x`                                      |
//! | `square`           | `x^2`                                    |
//! | `cube`             | `x^3`                                    |
//! | `log1p`            | `log(1 + x)`                             |
//! | `rational`         | `x / (1 + x)`                            |
//! | `scaled_sine[:w]`  | `sin(w x) / w` (default `w = 1`)         |
//! | `bump[:c,s]`       | `exp(-(x-c)^2 / 2s^2) - exp(-c^2 / 2s^2)` (default `c = 2, s = 0.5`) |
//!
//! Any name may be prefixed by `<a>*` to multiply the function by `a`.

use std::fmt::Write as _;
use std::io::Write;
use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

/// Highest derivative order every builtin provides analytically.
pub const MAX_ORDER: usize = 8;

/// Right end of the default grid used by [`FunctionClassGrid::check`].
pub const GRID_CHECK_UPPER: f64 = 25.0;

#[derive(Debug, Clone, PartialEq)]
enum Form {
    Identity,
    Square,
    Cube,
    Log1p,
    Rational,
    ScaledSine { omega: f64 },
    Bump { center: f64, width: f64 },
    Scaled { factor: f64, inner: Box<Form> },
    Sum(Vec<(f64, Form)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    name: String,
    form: Form,
}

impl TestFunction {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn max_order(&self) -> usize {
        MAX_ORDER
    }

    pub fn value<T: Scalar>(&self, x: T) -> T {
        self.derivative(0, x)
    }

    /// `f^{(order)}(x)`.
    ///
    /// Orders above [`MAX_ORDER`] are still evaluated from the closed forms,
    /// but only orders up to `MAX_ORDER` are covered by the consistency tests.
    pub fn derivative<T: Scalar>(&self, order: usize, x: T) -> T {
        self.form.eval(order, x)
    }

    /// Upper bound on `sup_{0 <= x <= upper} |f^{(order)}(x)|`. Pass
    /// `f64::INFINITY` for a bound on all of `R_+` (infinite for polynomials).
    pub fn derivative_bound(&self, order: usize, upper: f64) -> f64 {
        self.form.bound(order, upper)
    }

    /// `||f'||_Lip = sup |f''|` on `[0, upper]`.
    pub fn lipschitz_derivative(&self, upper: f64) -> f64 {
        self.derivative_bound(2, upper)
    }

    /// `Some(a)` when `f(x) = a x`; such functionals need no eigenvalues.
    pub fn linear_slope(&self) -> Option<f64> {
        self.form.linear_slope()
    }

    /// `a * f`.
    pub fn scaled(&self, factor: f64) -> TestFunction {
        TestFunction {
            name: format!("{factor}*{}", self.name),
            form: Form::Scaled {
                factor,
                inner: Box::new(self.form.clone()),
            },
        }
    }

    /// `sum_i a_i f_i`.
    pub fn linear_combination(terms: &[(f64, &TestFunction)]) -> TestFunction {
        let mut name = String::new();
        for (i, (a, f)) in terms.iter().enumerate() {
            if i > 0 {
                name.push_str(" + ");
            }
            let _ = write!(name, "{a}*{}", f.name);
        }
        TestFunction {
            name,
            form: Form::Sum(terms.iter().map(|(a, f)| (*a, f.form.clone())).collect()),
        }
    }
}

/// Looks up a builtin by name (see the module docs for the grammar).
pub fn builtin(name: &str) -> Result<TestFunction> {
    let trimmed = name.trim();
    if let Some((factor, rest)) = trimmed.split_once('*') {
        let a: f64 = factor
            .trim()
            .parse()
            .map_err(|_| Error::UnknownFunction(name.to_string()))?;
        return Ok(builtin(rest)?.scaled(a));
    }
    let (head, params) = match trimmed.split_once(':') {
        Some((h, p)) => (h, Some(p)),
        None => (trimmed, None),
    };
    let nums = |p: Option<&str>| -> Result<Vec<f64>> {
        p.map(|p| {
            p.split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::UnknownFunction(name.to_string()))
                })
                .collect()
        })
        .unwrap_or_else(|| Ok(Vec::new()))
    };
    let form = match head {
        "identity" => Form::Identity,
        "square" => Form::Square,
        "cube" => Form::Cube,
        "log1p" => Form::Log1p,
        "rational" => Form::Rational,
        "scaled_sine" | "sine" => {
            let p = nums(params)?;
            let omega = *p.first().unwrap_or(&1.0);
            if p.len() > 1 || !(omega.is_finite() && omega > 0.0) {
                return Err(Error::UnknownFunction(name.to_string()));
            }
            Form::ScaledSine { omega }
        }
        "bump" => {
            let p = nums(params)?;
            let (center, width) = match p.as_slice() {
                [] => (2.0, 0.5),
                [c, s] => (*c, *s),
                _ => return Err(Error::UnknownFunction(name.to_string())),
            };
            if !(center.is_finite() && width.is_finite() && width > 0.0) {
                return Err(Error::UnknownFunction(name.to_string()));
            }
            Form::Bump { center, width }
        }
        _ => return Err(Error::UnknownFunction(name.to_string())),
    };
    if params.is_some() && !matches!(form, Form::ScaledSine { .. } | Form::Bump { .. }) {
        return Err(Error::UnknownFunction(name.to_string()));
    }
    Ok(TestFunction {
        name: trimmed.to_string(),
        form,
    })
}

/// `tau_f = sum_j f(lambda_j)`.
pub fn tau_f<T: Scalar>(f: &TestFunction, eigenvalues: &[T]) -> T {
    eigenvalues.iter().map(|&x| f.value(x)).sum()
}

/// Probabilists' Hermite polynomial `He_k(u)`.
fn hermite<T: Scalar>(k: usize, u: T) -> T {
    let mut prev = T::one();
    if k == 0 {
        return prev;
    }
    let mut cur = u;
    for i in 1..k {
        let next = u * cur - T::from_count(i) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `sup_u |He_k(u) exp(-u^2/2)|`, computed once per order by a dense scan
/// followed by golden-section refinement around the maximizer.
fn hermite_envelope(k: usize) -> f64 {
    static CACHE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = CACHE.get_or_init(|| {
        (0..=MAX_ORDER + 4)
            .map(|k| {
                let g = |u: f64| (hermite(k, u) * (-0.5 * u * u).exp()).abs();
                let h = 1e-3;
                let (mut best_u, mut best) = (0.0, g(0.0));
                let mut u = -15.0;
                while u <= 15.0 {
                    let v = g(u);
                    if v > best {
                        best = v;
                        best_u = u;
                    }
                    u += h;
                }
                let (mut lo, mut hi) = (best_u - h, best_u + h);
                let phi = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..100 {
                    let a = hi - phi * (hi - lo);
                    let b = lo + phi * (hi - lo);
                    if g(a) > g(b) {
                        hi = b;
                    } else {
                        lo = a;
                    }
                }
                best.max(g(0.5 * (lo + hi))) * (1.0 + 1e-12)
            })
            .collect()
    });
    table
        .get(k)
        .copied()
        .unwrap_or_else(|| panic!("no Hermite envelope for order {k}"))
}

impl Form {
    fn linear_slope(&self) -> Option<f64> {
        match self {
            Form::Identity => Some(1.0),
            Form::Scaled { factor, inner } => inner.linear_slope().map(|a| a * factor),
            Form::Sum(terms) => terms
                .iter()
                .map(|(c, f)| f.linear_slope().map(|a| a * c))
                .sum(),
            _ => None,
        }
    }

    fn eval<T: Scalar>(&self, j: usize, x: T) -> T {
        let one = T::one();
        match self {
            Form::Identity => match j {
                0 => x,
                1 => one,
                _ => T::zero(),
            },
            Form::Square => match j {
                0 => x * x,
                1 => T::lit(2.0) * x,
                2 => T::lit(2.0),
                _ => T::zero(),
            },
            Form::Cube => match j {
                0 => x * x * x,
                1 => T::lit(3.0) * x * x,
                2 => T::lit(6.0) * x,
                3 => T::lit(6.0),
                _ => T::zero(),
            },
            Form::Log1p => {
                if j == 0 {
                    x.ln_1p()
                } else {
                    let sign = if j % 2 == 1 { one } else { -one };
                    sign * T::lit(factorial(j - 1)) / (one + x).powi(j as i32)
                }
            }
            Form::Rational => {
                if j == 0 {
                    x / (one + x)
                } else {
                    let sign = if j % 2 == 1 { one } else { -one };
                    sign * T::lit(factorial(j)) / (one + x).powi(j as i32 + 1)
                }
            }
            Form::ScaledSine { omega } => {
                let w = T::lit(*omega);
                let phase = T::from_count(j) * T::FRAC_PI_2();
                w.powi(j as i32 - 1) * (w * x + phase).sin()
            }
            Form::Bump { center, width } => {
                let s = T::lit(*width);
                let u = (x - T::lit(*center)) / s;
                let g = (-T::lit(0.5) * u * u).exp();
                if j == 0 {
                    let u0 = T::lit(-center / width);
                    g - (-T::lit(0.5) * u0 * u0).exp()
                } else {
                    let sign = if j % 2 == 0 { one } else { -one };
                    sign * hermite(j, u) * g / s.powi(j as i32)
                }
            }
            Form::Scaled { factor, inner } => T::lit(*factor) * inner.eval(j, x),
            Form::Sum(terms) => terms
                .iter()
                .map(|(a, f)| T::lit(*a) * f.eval(j, x))
                .sum(),
        }
    }

    fn bound(&self, j: usize, upper: f64) -> f64 {
        let a = upper.max(0.0);
        match self {
            Form::Identity => match j {
                0 => a,
                1 => 1.0,
                _ => 0.0,
            },
            Form::Square => match j {
                0 => a * a,
                1 => 2.0 * a,
                2 => 2.0,
                _ => 0.0,
            },
            Form::Cube => match j {
                0 => a * a * a,
                1 => 3.0 * a * a,
                2 => 6.0 * a,
                3 => 6.0,
                _ => 0.0,
            },
            // |f^{(j)}| is decreasing on R_+ for j >= 1.
            Form::Log1p => {
                if j == 0 {
                    a.ln_1p()
                } else {
                    factorial(j - 1)
                }
            }
            Form::Rational => {
                if j == 0 {
                    if a.is_finite() {
                        a / (1.0 + a)
                    } else {
                        1.0
                    }
                } else {
                    factorial(j)
                }
            }
            Form::ScaledSine { omega } => omega.powi(j as i32 - 1),
            Form::Bump { width, .. } => {
                if j == 0 {
                    1.0
                } else {
                    hermite_envelope(j) / width.powi(j as i32)
                }
            }
            Form::Scaled { factor, inner } => factor.abs() * inner.bound(j, upper),
            Form::Sum(terms) => terms.iter().map(|(c, f)| c.abs() * f.bound(j, upper)).sum(),
        }
    }
}

/// A finite list of functions, each with `max_{1<=j<=m+1} ||f^{(j)}||_inf <= 1`.
///
/// The sup-norm over this list lower-bounds the sup-norm over the whole class.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionClassGrid {
    order: usize,
    members: Vec<TestFunction>,
}

impl FunctionClassGrid {
    pub fn new(order: usize, members: Vec<TestFunction>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("grid order m must be >= 1".into()));
        }
        let grid = Self { order, members };
        grid.check()?;
        Ok(grid)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn members(&self) -> &[TestFunction] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Checks `|f^{(j)}(x)| <= 1 + 1e-9` for `j = 1..=m+1` on a uniform grid
    /// over `[0, GRID_CHECK_UPPER]` and `f(0) = 0`.
    pub fn check(&self) -> Result<()> {
        const POINTS: usize = 5001;
        for f in &self.members {
            if f.value(0.0f64).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("{}: f(0) != 0", f.name())));
            }
            for j in 1..=self.order + 1 {
                for i in 0..POINTS {
                    let x = GRID_CHECK_UPPER * i as f64 / (POINTS - 1) as f64;
                    let v = f.derivative(j, x).abs();
                    if v > 1.0 + 1e-9 {
                        return Err(Error::InvalidParameter(format!(
                            "{}: |f^({j})({x})| = {v} exceeds 1",
                            f.name()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Writes `index,order,name` rows; names round-trip through [`builtin`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "order", "name"])?;
        for (i, f) in self.members.iter().enumerate() {
            w.write_record([i.to_string(), self.order.to_string(), f.name().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut order = None;
        let mut members = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let m: usize = rec
                .get(1)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse("grid row without order".into()))?;
            if order.is_some_and(|o| o != m) {
                return Err(Error::Parse("grid rows disagree on order".into()));
            }
            order = Some(m);
            let name = rec
                .get(2)
                .ok_or_else(|| Error::Parse("grid row without name".into()))?;
            members.push(builtin(name)?);
        }
        let order = order.ok_or_else(|| Error::Parse("empty grid".into()))?;
        Self::new(order, members)
    }
}

/// Deterministic dictionary of `count` members of `F_m`: `sin(x)` first, then
/// alternately rescaled sines `a sin(w x)/w` and rescaled Gaussian bumps.
pub fn default_grid(m: usize, count: usize, seed: u64) -> Result<FunctionClassGrid> {
    if m == 0 || count == 0 {
        return Err(Error::InvalidParameter(
            "default_grid needs m >= 1 and count >= 1".into(),
        ));
    }
    let mut rng = seed::rng_from(seed, &[0x67_7269_64]);
    let mut members = vec![builtin("scaled_sine:1")?];
    while members.len() < count {
        let candidate = if members.len() % 2 == 1 {
            let omega: f64 = rng.random_range(0.2..3.0);
            let f = TestFunction {
                name: format!("scaled_sine:{omega}"),
                form: Form::ScaledSine { omega },
            };
            // derivatives of sin(wx)/w are bounded by w^{j-1}, j = 1..=m+1
            let peak = omega.powi(m as i32).max(1.0);
            if peak > 1.0 {
                f.scaled(1.0 / peak)
            } else {
                f
            }
        } else {
            let center: f64 = rng.random_range(0.5..4.0);
            let width: f64 = rng.random_range(0.4..1.5);
            let f = TestFunction {
                name: format!("bump:{center},{width}"),
                form: Form::Bump { center, width },
            };
            let peak = (1..=m + 1)
                .map(|j| f.derivative_bound(j, f64::INFINITY))
                .fold(0.0, f64::max);
            f.scaled(1.0 / peak)
        };
        if members.iter().all(|g| g.name() != candidate.name()) {
            members.push(candidate);
        }
    }
    FunctionClassGrid::new(m, members)
}
