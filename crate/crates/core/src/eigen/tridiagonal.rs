//! Implicit QL iteration for symmetric tridiagonal matrices (the EISPACK
//! `tql2` scheme), with optional accumulation of eigenvector rows.

/// Which rows of the eigenvector matrix to accumulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rows {
    /// All eigenvectors (`n × n`).
    All,
    /// Only the last component of every eigenvector, which is what the
    /// Lanczos residual estimate needs.
    Last,
}

/// Eigen-decomposition of the tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (`off.len() == diag.len() - 1`).
///
/// Returns eigenvalues in ascending order and a row-major block holding
/// the requested rows of the eigenvector matrix, columns permuted to match.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64], rows: Rows) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    assert!(n >= 1 && off.len() + 1 == n);
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let nrows = match rows {
        Rows::All => n,
        Rows::Last => 1,
    };
    let mut z = vec![0.0; nrows * n];
    match rows {
        Rows::All => (0..n).for_each(|i| z[i * n + i] = 1.0),
        Rows::Last => z[n - 1] = 1.0,
    }

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..nrows {
                        let row = &mut z[k * n..(k + 1) * n];
                        let h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = vec![0.0; nrows * n];
    for k in 0..nrows {
        for (dst, &src) in order.iter().enumerate() {
            vectors[k * n + dst] = z[k * n + src];
        }
    }
    (values, vectors)
}
