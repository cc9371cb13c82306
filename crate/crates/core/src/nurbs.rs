//! NURBS surfaces: basis evaluation with second derivatives, refinement and the JSON exchange format.

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShellError};

const KNOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    values: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    pub fn new(values: Vec<f64>, degree: usize) -> Result<Self> {
        if degree < 1 {
            return Err(ShellError::InvalidKnots("degree must be at least 1".into()));
        }
        if values.len() < 2 * (degree + 1) {
            return Err(ShellError::InvalidKnots(format!(
                "{} knots too few for degree {degree}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ShellError::InvalidKnots("non-finite knot".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(ShellError::InvalidKnots("knots must be nondecreasing".into()));
        }
        let n = values.len();
        let first = values[0];
        let last = values[n - 1];
        if values[..=degree].iter().any(|&v| v != first) || values[n - 1 - degree..].iter().any(|&v| v != last) {
            return Err(ShellError::InvalidKnots(format!(
                "end knots must have multiplicity {} (open knot vector)",
                degree + 1
            )));
        }
        if last <= first {
            return Err(ShellError::InvalidKnots("no nonempty knot span".into()));
        }
        for i in degree + 1..n - degree - 1 {
            let m = values.iter().filter(|&&v| v == values[i]).count();
            if m > degree {
                return Err(ShellError::InvalidKnots(format!(
                    "interior knot {} has multiplicity {m} > degree",
                    values[i]
                )));
            }
        }
        Ok(KnotVector { values, degree })
    }

    /// Open knot vector on [0, 1] with `elements` uniform spans and interior multiplicity p − k.
    pub fn uniform(degree: usize, elements: usize, continuity: usize) -> Result<Self> {
        if continuity >= degree {
            return Err(ShellError::InvalidContinuity { continuity, degree });
        }
        let mut v = vec![0.0; degree + 1];
        for i in 1..elements {
            let t = i as f64 / elements as f64;
            v.extend(std::iter::repeat_n(t, degree - continuity));
        }
        v.extend(std::iter::repeat_n(1.0, degree + 1));
        KnotVector::new(v, degree)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_basis(&self) -> usize {
        self.values.len() - self.degree - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.values[self.degree], self.values[self.values.len() - self.degree - 1])
    }

    fn check(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        let tol = KNOT_EPS * (hi - lo).max(1.0);
        if !(t >= lo - tol && t <= hi + tol) {
            return Err(ShellError::Domain { value: t, lo, hi });
        }
        Ok(t.clamp(lo, hi))
    }

    /// Span i with knot[i] <= t < knot[i+1]; the last nonempty span is closed on the right.
    pub fn find_span(&self, t: f64) -> Result<usize> {
        let t = self.check(t)?;
        let n = self.num_basis();
        let p = self.degree;
        if t >= self.values[n] {
            let mut i = n - 1;
            while self.values[i] == self.values[i + 1] {
                i -= 1;
            }
            return Ok(i);
        }
        let (mut lo, mut hi) = (p, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if t < self.values[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(lo)
    }

    /// Span i with knot[i] < t <= knot[i+1]: the element on the left of an interior knot.
    pub fn find_span_left(&self, t: f64) -> Result<usize> {
        let span = self.find_span(t)?;
        let t = self.check(t)?;
        if t == self.values[span] && span > self.degree {
            let mut i = span - 1;
            while self.values[i] == self.values[i + 1] {
                i -= 1;
            }
            return Ok(i);
        }
        Ok(span)
    }

    /// Indices of all nonempty spans.
    pub fn spans(&self) -> Vec<usize> {
        (self.degree..self.num_basis())
            .filter(|&i| self.values[i + 1] > self.values[i])
            .collect()
    }

    /// Spans whose closure contains t.
    pub fn spans_containing(&self, t: f64) -> Result<Vec<usize>> {
        let a = self.find_span_left(t)?;
        let b = self.find_span(t)?;
        Ok(if a == b { vec![a] } else { vec![a, b] })
    }

    pub fn multiplicity(&self, t: f64) -> usize {
        self.values.iter().filter(|&&v| (v - t).abs() <= KNOT_EPS).count()
    }

    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.num_basis())
            .map(|i| self.values[i + 1..=i + p].iter().sum::<f64>() / p as f64)
            .collect()
    }

    /// Nonzero basis functions on `span` and their derivatives up to `nders`:
    /// result[k][j] is the k-th derivative of N_{span-p+j}.
    pub fn basis_ders(&self, span: usize, t: f64, nders: usize) -> Vec<Vec<f64>> {
        let p = self.degree;
        let u = &self.values;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = t - u[span + 1 - j];
            right[j] = u[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = vec![vec![0.0; p + 1]; nders + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=nders.min(p) {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = p as f64;
        for k in 1..=nders.min(p) {
            for v in ders[k].iter_mut() {
                *v *= fac;
            }
            fac *= (p - k) as f64;
        }
        ders
    }

    /// All basis function values at t (dense, length num_basis).
    pub fn basis_all(&self, t: f64) -> Result<Vec<f64>> {
        let span = self.find_span(t)?;
        let d = self.basis_ders(span, t, 0);
        let mut out = vec![0.0; self.num_basis()];
        for j in 0..=self.degree {
            out[span - self.degree + j] = d[0][j];
        }
        Ok(out)
    }
}

/// Rational basis values and parametric derivatives at one point, for the supporting control points.
#[derive(Debug, Clone)]
pub struct SurfaceBasis {
    pub span_u: usize,
    pub span_v: usize,
    /// Net indices (row-major, η fastest) of the supporting control points.
    pub indices: Vec<usize>,
    /// Per supporting point: [R, R_1, R_2, R_11, R_22, R_12].
    pub values: Vec<[f64; 6]>,
}

/// Position and parametric derivatives; second derivatives ordered 11, 22, 12.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceDerivatives {
    pub r: Vector3<f64>,
    pub d1: [Vector3<f64>; 2],
    pub d2: [Vector3<f64>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceJson {
    pub degree_u: usize,
    pub degree_v: usize,
    pub knots_u: Vec<f64>,
    pub knots_v: Vec<f64>,
    pub control_points: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NurbsSurface {
    knots_u: KnotVector,
    knots_v: KnotVector,
    /// Cartesian coordinates and weight, row-major with the η index fastest.
    points: Vec<[f64; 4]>,
}

impl NurbsSurface {
    pub fn new(knots_u: KnotVector, knots_v: KnotVector, points: Vec<[f64; 4]>) -> Result<Self> {
        let (n, m) = (knots_u.num_basis(), knots_v.num_basis());
        if points.len() != n * m {
            return Err(ShellError::InvalidSurface(format!(
                "expected {n}x{m} = {} control points, got {}",
                n * m,
                points.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !(p[3] > 0.0) || p.iter().any(|c| !c.is_finite())) {
            return Err(ShellError::InvalidSurface(format!("invalid control point {p:?}")));
        }
        Ok(NurbsSurface { knots_u, knots_v, points })
    }

    pub fn from_json(json: &SurfaceJson) -> Result<Self> {
        let ku = KnotVector::new(json.knots_u.clone(), json.degree_u)?;
        let kv = KnotVector::new(json.knots_v.clone(), json.degree_v)?;
        NurbsSurface::new(ku, kv, json.control_points.clone())
    }

    pub fn to_json(&self) -> SurfaceJson {
        SurfaceJson {
            degree_u: self.knots_u.degree(),
            degree_v: self.knots_v.degree(),
            knots_u: self.knots_u.values().to_vec(),
            knots_v: self.knots_v.values().to_vec(),
            control_points: self.points.clone(),
        }
    }

    pub fn knots_u(&self) -> &KnotVector {
        &self.knots_u
    }

    pub fn knots_v(&self) -> &KnotVector {
        &self.knots_v
    }

    pub fn points(&self) -> &[[f64; 4]] {
        &self.points
    }

    /// (N, M): number of control points in the ξ and η directions.
    pub fn net_size(&self) -> (usize, usize) {
        (self.knots_u.num_basis(), self.knots_v.num_basis())
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.knots_v.num_basis() + j
    }

    pub fn position(&self, idx: usize) -> Vector3<f64> {
        let p = self.points[idx];
        Vector3::new(p[0], p[1], p[2])
    }

    pub fn basis_derivatives(&self, xi: f64, eta: f64) -> Result<SurfaceBasis> {
        let su = self.knots_u.find_span(xi)?;
        let sv = self.knots_v.find_span(eta)?;
        Ok(self.basis_on_span(su, sv, xi, eta))
    }

    /// Rational basis on a given span pair (one-sided limits at knot lines).
    pub fn basis_on_span(&self, su: usize, sv: usize, xi: f64, eta: f64) -> SurfaceBasis {
        let (p, q) = (self.knots_u.degree(), self.knots_v.degree());
        let nu = self.knots_u.basis_ders(su, xi, 2);
        let nv = self.knots_v.basis_ders(sv, eta, 2);
        let m = self.knots_v.num_basis();
        let count = (p + 1) * (q + 1);
        let mut indices = Vec::with_capacity(count);
        let mut a = Vec::with_capacity(count);
        // W and its derivatives: [W, W1, W2, W11, W22, W12]
        let mut w = [0.0; 6];
        for a_i in 0..=p {
            for b_j in 0..=q {
                let idx = (su - p + a_i) * m + (sv - q + b_j);
                let wt = self.points[idx][3];
                let v = [
                    nu[0][a_i] * nv[0][b_j] * wt,
                    nu[1][a_i] * nv[0][b_j] * wt,
                    nu[0][a_i] * nv[1][b_j] * wt,
                    nu[2][a_i] * nv[0][b_j] * wt,
                    nu[0][a_i] * nv[2][b_j] * wt,
                    nu[1][a_i] * nv[1][b_j] * wt,
                ];
                for k in 0..6 {
                    w[k] += v[k];
                }
                indices.push(idx);
                a.push(v);
            }
        }
        let values = a
            .into_iter()
            .map(|v| {
                let r = v[0] / w[0];
                let r1 = (v[1] - r * w[1]) / w[0];
                let r2 = (v[2] - r * w[2]) / w[0];
                let r11 = (v[3] - 2.0 * r1 * w[1] - r * w[3]) / w[0];
                let r22 = (v[4] - 2.0 * r2 * w[2] - r * w[4]) / w[0];
                let r12 = (v[5] - r1 * w[2] - r2 * w[1] - r * w[5]) / w[0];
                [r, r1, r2, r11, r22, r12]
            })
            .collect();
        SurfaceBasis { span_u: su, span_v: sv, indices, values }
    }

    pub fn surface_point(&self, xi: f64, eta: f64) -> Result<SurfaceDerivatives> {
        let basis = self.basis_derivatives(xi, eta)?;
        Ok(combine(&basis, |idx| self.position(idx)))
    }

    /// Geometry-preserving refinement: degree elevation to `degree` (if given), then uniform
    /// knot insertion for `elements` spans per direction with C^`continuity` at the new knots.
    pub fn refine(
        &self,
        elements_u: usize,
        elements_v: usize,
        degree: Option<usize>,
        continuity: usize,
    ) -> Result<NurbsSurface> {
        if elements_u == 0 || elements_v == 0 {
            return Err(ShellError::InvalidSurface("element count must be positive".into()));
        }
        let pu = degree.unwrap_or(self.knots_u.degree());
        let pv = degree.unwrap_or(self.knots_v.degree());
        for (p, cur) in [(pu, self.knots_u.degree()), (pv, self.knots_v.degree())] {
            if p < cur {
                return Err(ShellError::InvalidSurface(format!(
                    "degree reduction {cur} -> {p} not supported"
                )));
            }
            if continuity >= p {
                return Err(ShellError::InvalidContinuity { continuity, degree: p });
            }
        }
        let mut s = self.clone();
        s = s.elevate_u(pu - s.knots_u.degree())?;
        s = s.transposed().elevate_u(pv - s.knots_v.degree())?.transposed();
        let ins_u = uniform_insertions(&s.knots_u, elements_u, pu - continuity);
        s = s.insert_u(&ins_u)?;
        let ins_v = uniform_insertions(&s.knots_v, elements_v, pv - continuity);
        s = s.transposed().insert_u(&ins_v)?.transposed();
        Ok(s)
    }

    fn transposed(&self) -> NurbsSurface {
        let (n, m) = self.net_size();
        let mut pts = Vec::with_capacity(n * m);
        for j in 0..m {
            for i in 0..n {
                pts.push(self.points[i * m + j]);
            }
        }
        NurbsSurface { knots_u: self.knots_v.clone(), knots_v: self.knots_u.clone(), points: pts }
    }

    /// Homogeneous curves in the ξ direction, one per η index.
    fn columns_homogeneous(&self) -> Vec<Vec<[f64; 4]>> {
        let (n, m) = self.net_size();
        (0..m)
            .map(|j| (0..n).map(|i| to_homogeneous(self.points[i * m + j])).collect())
            .collect()
    }

    fn from_columns(knots_u: KnotVector, knots_v: KnotVector, cols: Vec<Vec<[f64; 4]>>) -> Result<Self> {
        let n = cols[0].len();
        let m = cols.len();
        let mut pts = vec![[0.0; 4]; n * m];
        for (j, col) in cols.iter().enumerate() {
            for (i, pw) in col.iter().enumerate() {
                pts[i * m + j] = from_homogeneous(*pw);
            }
        }
        NurbsSurface::new(knots_u, knots_v, pts)
    }

    fn insert_u(&self, knots: &[f64]) -> Result<NurbsSurface> {
        if knots.is_empty() {
            return Ok(self.clone());
        }
        let mut kv = self.knots_u.clone();
        let mut cols = self.columns_homogeneous();
        for &t in knots {
            let (nkv, _) = insert_knot(&kv, &cols[0], t)?;
            for col in cols.iter_mut() {
                *col = insert_knot(&kv, col, t)?.1;
            }
            kv = nkv;
        }
        NurbsSurface::from_columns(kv, self.knots_v.clone(), cols)
    }

    fn elevate_u(&self, by: usize) -> Result<NurbsSurface> {
        if by == 0 {
            return Ok(self.clone());
        }
        let kv = &self.knots_u;
        let p = kv.degree();
        let np = p + by;
        let mut vals = Vec::new();
        let u = kv.values();
        let mut i = 0;
        while i < u.len() {
            let mut j = i;
            while j < u.len() && u[j] == u[i] {
                j += 1;
            }
            vals.extend(std::iter::repeat_n(u[i], j - i + by));
            i = j;
        }
        let nkv = KnotVector::new(vals, np)?;
        let g = nkv.greville();
        let n_new = nkv.num_basis();
        let mut a = DMatrix::<f64>::zeros(n_new, n_new);
        let mut old_rows = Vec::with_capacity(n_new);
        for (r, &t) in g.iter().enumerate() {
            let row = nkv.basis_all(t)?;
            for c in 0..n_new {
                a[(r, c)] = row[c];
            }
            old_rows.push(kv.basis_all(t)?);
        }
        let lu = a.lu();
        let cols = self.columns_homogeneous();
        let mut new_cols = Vec::with_capacity(cols.len());
        for col in &cols {
            let mut rhs = DMatrix::<f64>::zeros(n_new, 4);
            for r in 0..n_new {
                for (k, pw) in col.iter().enumerate() {
                    for c in 0..4 {
                        rhs[(r, c)] += old_rows[r][k] * pw[c];
                    }
                }
            }
            let sol = lu
                .solve(&rhs)
                .ok_or_else(|| ShellError::InvalidSurface("degree elevation collocation singular".into()))?;
            new_cols.push((0..n_new).map(|r| [sol[(r, 0)], sol[(r, 1)], sol[(r, 2)], sol[(r, 3)]]).collect());
        }
        NurbsSurface::from_columns(nkv, self.knots_v.clone(), new_cols)
    }
}

/// Linear combination of control-point vectors with the basis values and derivatives.
pub fn combine(basis: &SurfaceBasis, point: impl Fn(usize) -> Vector3<f64>) -> SurfaceDerivatives {
    let mut out = SurfaceDerivatives {
        r: Vector3::zeros(),
        d1: [Vector3::zeros(); 2],
        d2: [Vector3::zeros(); 3],
    };
    for (&idx, v) in basis.indices.iter().zip(&basis.values) {
        let p = point(idx);
        out.r += v[0] * p;
        out.d1[0] += v[1] * p;
        out.d1[1] += v[2] * p;
        out.d2[0] += v[3] * p;
        out.d2[1] += v[4] * p;
        out.d2[2] += v[5] * p;
    }
    out
}

fn to_homogeneous(p: [f64; 4]) -> [f64; 4] {
    [p[0] * p[3], p[1] * p[3], p[2] * p[3], p[3]]
}

fn from_homogeneous(p: [f64; 4]) -> [f64; 4] {
    [p[0] / p[3], p[1] / p[3], p[2] / p[3], p[3]]
}

fn uniform_insertions(kv: &KnotVector, elements: usize, target_mult: usize) -> Vec<f64> {
    let (a, b) = kv.domain();
    let mut out = Vec::new();
    for i in 1..elements {
        let t = a + (b - a) * i as f64 / elements as f64;
        let have = kv.multiplicity(t);
        let t = kv
            .values()
            .iter()
            .copied()
            .find(|v| (v - t).abs() <= KNOT_EPS)
            .unwrap_or(t);
        for _ in have..target_mult {
            out.push(t);
        }
    }
    out
}

/// Boehm single knot insertion on a homogeneous control polygon.
fn insert_knot(kv: &KnotVector, pw: &[[f64; 4]], t: f64) -> Result<(KnotVector, Vec<[f64; 4]>)> {
    let p = kv.degree();
    let u = kv.values();
    let k = kv.find_span(t)?;
    let n = pw.len();
    let mut q = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let pt = if i + p <= k {
            pw[i]
        } else if i > k {
            pw[i - 1]
        } else {
            let alpha = (t - u[i]) / (u[i + p] - u[i]);
            let mut r = [0.0; 4];
            for c in 0..4 {
                r[c] = alpha * pw[i][c] + (1.0 - alpha) * pw[i - 1][c];
            }
            r
        };
        q.push(pt);
    }
    let mut vals = u.to_vec();
    vals.insert(k + 1, t);
    Ok((KnotVector::new(vals, p)?, q))
}
