use alloc::vec::Vec;

use super::matrix::{Matrix, C64, ZERO};

const MAX_SWEEPS: usize = 64;

/// Spectral decomposition `m = vectors · diag(values) · vectorsᴴ` of a
/// Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl HermEigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Rebuilds `Σ f(λ_i) v_i v_iᴴ`.
    pub fn reassemble(&self, mut f: impl FnMut(f64) -> f64) -> Matrix {
        let n = self.vectors.rows();
        let weights: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::zeros(n, n);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * w;
                if vi == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out.hermitian_part()
    }

    /// Columns of `vectors` whose eigenvalue satisfies `keep`.
    pub fn select(&self, mut keep: impl FnMut(f64) -> bool) -> (Vec<f64>, Matrix) {
        let idx: Vec<usize> = (0..self.values.len()).filter(|&i| keep(self.values[i])).collect();
        let vals = idx.iter().map(|&i| self.values[i]).collect();
        (vals, self.vectors.select_columns(&idx))
    }
}

/// Cyclic complex Jacobi eigensolver. The input is taken to be Hermitian;
/// only its Hermitian part is used.
pub fn herm_eigen(m: &Matrix) -> HermEigen {
    assert!(m.is_square(), "eigendecomposition needs a square matrix");
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = Matrix::identity(n);

    let total: f64 = a.as_slice().iter().map(|z| z.norm_sqr()).sum();
    let floor = total * (f64::EPSILON * f64::EPSILON) * 0.25;

    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off <= floor || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = v.select_columns(&order);
    HermEigen { values, vectors }
}

fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let e = apq / g;
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau >= 0.0 {
        1.0 / (tau + libm::sqrt(1.0 + tau * tau))
    } else {
        -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
    };
    let c = 1.0 / libm::sqrt(1.0 + t * t);
    let s = t * c;

    let upp = C64::new(c, 0.0);
    let upq = C64::new(s, 0.0);
    let uqp = -e.conj() * s;
    let uqq = e.conj() * c;

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * upp + akq * uqp;
        a[(k, q)] = akp * upq + akq * uqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
        a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * upp + vkq * uqp;
        v[(k, q)] = vkp * upq + vkq * uqq;
    }
}
