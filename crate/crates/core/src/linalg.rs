//! Small dense linear-algebra helpers: matrix exponential and Hermitian
//! eigenvalues. Dimensions here stay modest (displacement generators,
//! density-matrix validity checks), so simple robust algorithms suffice.

use ndarray as nd;
use num_complex::Complex64 as C64;

fn one_norm(m: &nd::Array2<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).iter().map(|v| v.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Matrix exponential by scaling-and-squaring with a truncated Taylor series.
/// Accurate to near machine precision for the well-conditioned anti-Hermitian
/// generators used here.
pub fn expm(m: &nd::Array2<C64>) -> nd::Array2<C64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let norm = one_norm(m);
    // Scale so the Taylor argument has norm <= 0.5.
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let a = m.mapv(|v| v / C64::new((1u64 << s) as f64, 0.0));
    let mut result = nd::Array2::<C64>::eye(n);
    let mut term = nd::Array2::<C64>::eye(n);
    // 0.5^k / k! < 1e-18 at k = 17.
    for k in 1..=17 {
        term = term.dot(&a).mapv(|v| v / C64::new(k as f64, 0.0));
        result += &term;
    }
    for _ in 0..s {
        result = result.dot(&result);
    }
    result
}

/// Eigenvalues of a Hermitian matrix via the classical cyclic Jacobi method.
/// Returns eigenvalues in ascending order. Intended for validity checks on
/// matrices up to a few hundred rows.
pub fn hermitian_eigenvalues(m: &nd::Array2<C64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let mut a = m.clone();
    // Symmetrize defensively so tiny non-Hermitian noise cannot stall sweeps.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (a[[i, j]] + a[[j, i]].conj()) * 0.5;
            a[[i, j]] = v;
            a[[j, i]] = v.conj();
        }
        a[[i, i]] = C64::new(a[[i, i]].re, 0.0);
    }
    let scale = (0..n)
        .map(|i| a.row(i).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let tol = 1e-14 * scale;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[[p, q]].norm());
            }
        }
        if off < tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.norm() < tol * 1e-2 {
                    continue;
                }
                // Complex Jacobi rotation zeroing (p,q).
                let app = a[[p, p]].re;
                let aqq = a[[q, q]].re;
                let phase = apq / C64::new(apq.norm(), 0.0);
                let g = apq.norm();
                // Inner rotation: tan(theta) solves t^2 + 2*tau*t - 1 = 0.
                let tau = (aqq - app) / (2.0 * g);
                let t = tau.signum() / (tau.abs() + (tau * tau + 1.0).sqrt());
                let cth = 1.0 / (t * t + 1.0).sqrt();
                let sth = t * cth;
                // Column rotation: col_p' = c*col_p - s*phase*col_q, etc.
                for i in 0..n {
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = aip * cth - aiq * phase.conj() * sth;
                    a[[i, q]] = aip * phase * sth + aiq * cth;
                }
                for j in 0..n {
                    let apj = a[[p, j]];
                    let aqj = a[[q, j]];
                    a[[p, j]] = apj * cth - aqj * phase * sth;
                    a[[q, j]] = apj * phase.conj() * sth + aqj * cth;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[[i, i]].re).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}
