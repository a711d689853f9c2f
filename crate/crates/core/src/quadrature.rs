//! Gauss–Legendre rules, composite and adaptive.

use std::sync::OnceLock;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess followed by Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared 16-point rule.
    pub fn sixteen() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(16))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn points(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.points(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over `panels` equal panels of `[a, b]`.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let width = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + width * p as f64;
                let hi = if p + 1 == panels { b } else { lo + width };
                self.integrate(lo, hi, &mut f)
            })
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive bisection with a 16-point rule, comparing each panel against its
/// two halves. Returns the integral estimate; `tol` is absolute.
pub fn adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, mut f: F) -> f64 {
    let rule = GaussLegendre::sixteen();
    let mut stack = vec![(a, b, rule.integrate(a, b, &mut f), tol, 0u32)];
    let mut total = 0.0;
    while let Some((lo, hi, whole, tol, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, &mut f);
        let right = rule.integrate(mid, hi, &mut f);
        if (left + right - whole).abs() <= tol || depth >= 40 {
            total += left + right;
        } else {
            stack.push((lo, mid, left, 0.5 * tol, depth + 1));
            stack.push((mid, hi, right, 0.5 * tol, depth + 1));
        }
    }
    total
}

/// Panel partition of `[a, b]` with a 16-point Gauss rule on every panel.
///
/// Breakpoints (for example a kink in the integrand) are always panel edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelGrid {
    edges: Vec<f64>,
}

impl PanelGrid {
    /// `panels` equal panels on `[a, b]`, split further at `breakpoints`.
    pub fn new(a: f64, b: f64, panels: usize, breakpoints: &[f64]) -> Self {
        let panels = panels.max(1);
        let mut edges: Vec<f64> = (0..=panels)
            .map(|p| a + (b - a) * p as f64 / panels as f64)
            .collect();
        edges.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
        edges.sort_by(f64::total_cmp);
        edges.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (b - a).abs());
        *edges.last_mut().unwrap() = b;
        PanelGrid { edges }
    }

    pub fn start(&self) -> f64 {
        self.edges[0]
    }

    pub fn end(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let rule = GaussLegendre::sixteen();
        self.edges
            .windows(2)
            .map(|w| rule.integrate(w[0], w[1], &mut f))
            .sum()
    }

    /// Running integrals of `f` and `t f` at every panel edge.
    pub fn moments<F: Fn(f64) -> f64>(&self, f: F) -> Moments<F> {
        let rule = GaussLegendre::sixteen();
        let mut m0 = vec![0.0];
        let mut m1 = vec![0.0];
        for w in self.edges.windows(2) {
            let (a, b) = rule
                .points(w[0], w[1])
                .fold((0.0, 0.0), |(a, b), (x, wt)| {
                    let v = f(x);
                    (a + wt * v, b + wt * x * v)
                });
            m0.push(m0.last().unwrap() + a);
            m1.push(m1.last().unwrap() + b);
        }
        Moments { grid: self.clone(), f, m0, m1 }
    }
}

/// Cumulative zeroth and first moments of a function on a [`PanelGrid`].
pub struct Moments<F> {
    grid: PanelGrid,
    f: F,
    m0: Vec<f64>,
    m1: Vec<f64>,
}

impl<F: Fn(f64) -> f64> Moments<F> {
    /// `(int_a^c f, int_a^c t f)` for `c` inside the grid (clamped otherwise).
    pub fn up_to(&self, c: f64) -> (f64, f64) {
        let edges = &self.grid.edges;
        let c = c.clamp(self.grid.start(), self.grid.end());
        let j = edges.partition_point(|&e| e <= c).clamp(1, edges.len()) - 1;
        if j + 1 == edges.len() || c == edges[j] {
            return (self.m0[j], self.m1[j]);
        }
        let (a, b) = GaussLegendre::sixteen()
            .points(edges[j], c)
            .fold((0.0, 0.0), |(a, b), (x, wt)| {
                let v = (self.f)(x);
                (a + wt * v, b + wt * x * v)
            });
        (self.m0[j] + a, self.m1[j] + b)
    }

    pub fn total(&self) -> (f64, f64) {
        (*self.m0.last().unwrap(), *self.m1.last().unwrap())
    }
}
