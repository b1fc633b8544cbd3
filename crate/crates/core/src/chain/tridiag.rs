use super::{ChainError, Result};

/// Real symmetric tridiagonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

const MAX_QL_SWEEPS: usize = 60;
const MAX_INVERSE_STEPS: usize = 10;
const EXTRA_INVERSE_STEPS: usize = 2;

impl SymTridiagonal {
    /// `off[i]` couples rows `i` and `i + 1`.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len(), "off-diagonal must be one shorter");
        Self { diag, off }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    /// Number of eigenvalues strictly below `shift` (Sturm sequence).
    pub fn count_below(&self, shift: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - shift;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.n() {
            let denom = if q == 0.0 { f64::EPSILON * self.off[i - 1].abs().max(f64::MIN_POSITIVE) } else { q };
            q = self.diag[i] - shift - self.off[i - 1] * self.off[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// All eigenvalues in ascending order, by implicit QL with Wilkinson-type shifts.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.n();
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        for l in 0..n {
            let mut sweeps = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                sweeps += 1;
                if sweeps > MAX_QL_SWEEPS {
                    return Err(ChainError::NoConvergence { index: l });
                }
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
                let mut underflow = false;
                for i in (l..m).rev() {
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if underflow {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
        d.sort_by(f64::total_cmp);
        Ok(d)
    }

    /// Unit eigenvectors for ascending `eigenvalues` by inverse iteration.
    ///
    /// Eigenvalues closer than `cluster_gap` are grouped and their vectors are
    /// re-orthogonalized against earlier members of the group on every step.
    /// `known` supplies exact vectors for some indices.
    pub fn eigenvectors(
        &self,
        eigenvalues: &[f64],
        cluster_gap: f64,
        known: &[(usize, Vec<f64>)],
    ) -> Result<Vec<Vec<f64>>> {
        let n = self.n();
        let scale = self.norm_inf().max(f64::MIN_POSITIVE);
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(eigenvalues.len());
        let mut cluster_start = 0;
        let mut workspace = LuWorkspace::new(n);
        let mut start = StartVectors::new(n);
        for (k, &lambda) in eigenvalues.iter().enumerate() {
            if k > 0 && lambda - eigenvalues[k - 1] > cluster_gap {
                cluster_start = k;
            }
            if let Some((_, v)) = known.iter().find(|(i, _)| *i == k) {
                vectors.push(v.clone());
                continue;
            }
            // Nudge repeated shifts apart so each member sees a distinct factorization.
            let shift = if k > cluster_start {
                let prev = eigenvalues[k - 1];
                lambda.max(prev + 10.0 * f64::EPSILON * scale * ((k - cluster_start) as f64))
            } else {
                lambda
            };
            workspace.factor(self, shift, scale);
            let mut x = start.next();
            let mut converged_steps = 0;
            let threshold = 1.0 / (1e3 * (n as f64).sqrt() * f64::EPSILON * scale);
            for _ in 0..MAX_INVERSE_STEPS {
                orthogonalize(&mut x, &vectors[cluster_start..k]);
                normalize(&mut x);
                workspace.solve(&mut x);
                orthogonalize(&mut x, &vectors[cluster_start..k]);
                let growth = norm2(&x);
                if !growth.is_finite() || growth == 0.0 {
                    return Err(ChainError::NoConvergence { index: k });
                }
                if growth >= threshold {
                    converged_steps += 1;
                    if converged_steps > EXTRA_INVERSE_STEPS {
                        break;
                    }
                }
            }
            if converged_steps == 0 {
                return Err(ChainError::NoConvergence { index: k });
            }
            orthogonalize(&mut x, &vectors[cluster_start..k]);
            normalize(&mut x);
            vectors.push(x);
        }
        Ok(vectors)
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn normalize(x: &mut [f64]) {
    let amax = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if amax > 0.0 {
        x.iter_mut().for_each(|v| *v /= amax);
    }
    let nrm = norm2(x);
    if nrm > 0.0 {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
}

fn orthogonalize(x: &mut [f64], against: &[Vec<f64>]) {
    for q in against {
        let dot: f64 = x.iter().zip(q).map(|(a, b)| a * b).sum();
        x.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
    }
}

/// Deterministic pseudo-random start vectors.
struct StartVectors {
    n: usize,
    state: u64,
}

impl StartVectors {
    fn new(n: usize) -> Self {
        Self {
            n,
            state: 0x9E37_79B9_7F4A_7C15,
        }
    }

    fn next(&mut self) -> Vec<f64> {
        (0..self.n)
            .map(|_| {
                self.state = self
                    .state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((self.state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }
}

/// LU factorization of `T - shift·I` with partial pivoting.
struct LuWorkspace {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl LuWorkspace {
    fn new(n: usize) -> Self {
        Self {
            u0: vec![0.0; n],
            u1: vec![0.0; n],
            u2: vec![0.0; n],
            mult: vec![0.0; n],
            swapped: vec![false; n],
        }
    }

    fn factor(&mut self, t: &SymTridiagonal, shift: f64, scale: f64) {
        let n = t.n();
        let tiny = f64::EPSILON * scale;
        for i in 0..n {
            self.u0[i] = t.diag[i] - shift;
            self.u1[i] = if i + 1 < n { t.off[i] } else { 0.0 };
            self.u2[i] = 0.0;
        }
        for i in 0..n.saturating_sub(1) {
            let sub = t.off[i];
            if self.u0[i].abs() >= sub.abs() {
                if self.u0[i] == 0.0 {
                    self.u0[i] = tiny;
                }
                let m = sub / self.u0[i];
                self.mult[i] = m;
                self.swapped[i] = false;
                self.u0[i + 1] -= m * self.u1[i];
            } else {
                let m = self.u0[i] / sub;
                self.mult[i] = m;
                self.swapped[i] = true;
                let old_u1 = self.u1[i];
                self.u0[i] = sub;
                self.u1[i] = self.u0[i + 1];
                self.u2[i] = self.u1[i + 1];
                self.u0[i + 1] = old_u1 - m * self.u1[i];
                self.u1[i + 1] = -m * self.u2[i];
            }
        }
        for u in &mut self.u0 {
            if u.abs() < tiny {
                *u = if *u < 0.0 { -tiny } else { tiny };
            }
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.mult[i] * b[i];
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            if i + 1 < n {
                acc -= self.u1[i] * b[i + 1];
            }
            if i + 2 < n {
                acc -= self.u2[i] * b[i + 2];
            }
            b[i] = acc / self.u0[i];
        }
    }
}
